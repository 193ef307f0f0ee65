"""Exception hierarchy and the warning category collected into reports."""


class UrbanDensityError(Exception):
    """Base class for all errors raised by this package."""


class InputError(UrbanDensityError):
    """Bad input file, sidecar, config value, or incompatible grids."""


class AlignmentError(InputError):
    pass


class AnalysisError(UrbanDensityError):
    """A processing stage cannot produce a defined result."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage

    def __str__(self):
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class PipelineWarning(UserWarning):
    """Soft fallback that the pipeline records in the report."""
