"""Urban density gradients from fused optical and SAR rasters."""

__version__ = "0.1.0"
