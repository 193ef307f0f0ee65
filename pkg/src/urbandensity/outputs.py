"""Write the report, profile CSV, plots and segmentation image to a directory."""

import json
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import InputError
from .pipeline import report_json
from .plots import difference_svg, gradient_svg
from .segmentation import save_segmentation_png

OUTPUT_FILES = ("report.json", "profile.csv", "gradient.svg", "difference.svg", "segmentation.png")


def load_schema(name="report"):
    text = resources.files("urbandensity").joinpath(f"schemas/{name}.schema.json").read_text()
    return json.loads(text)


def validate_report(report):
    """Raise jsonschema.ValidationError if ``report`` breaks the schema."""
    jsonschema.validate(json.loads(report_json(report)), load_schema("report"))


def validate_config(raw):
    """Check a parsed config file; schema violations become InputError."""
    try:
        jsonschema.validate(raw, load_schema("config"))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InputError(f"invalid config at {where}: {exc.message}") from exc


def emit_outputs(result, out_dir):
    """Write every output file for a PipelineResult; returns the paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {name: out / name for name in OUTPUT_FILES}
        paths["report.json"].write_text(report_json(result.report))
        paths["profile.csv"].write_text(result.profile.to_csv())
        minima = tuple(zip(*result.fit.minima_points)) if result.fit.minima_points else None
        paths["gradient.svg"].write_text(
            gradient_svg(result.profile, result.fit, result.metrics_peaks(), minima)
        )
        paths["difference.svg"].write_text(difference_svg(result.residuals, result.regions))
        save_segmentation_png(result.segmentation, paths["segmentation.png"])
    except OSError as exc:
        raise InputError(f"cannot write outputs to {out}: {exc}") from exc
    return paths
