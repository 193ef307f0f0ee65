"""Grid data model, raster I/O, normalization and alignment checks.

Supported formats:

* grayscale PNG, 8 or 16 bit (RGB is reduced to luminance), scaled to [0, 1];
* ``.f32`` raw little-endian float32 with a ``.json`` sidecar holding
  ``{"width": int, "height": int, "resolution_m": float}``.

Masks are plain boolean numpy arrays with the grid's shape.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import AlignmentError, InputError

KINDS = ("optical-gray", "sar", "raw-float")

# ITU-R BT.601 luma weights.
LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True, eq=False)
class Grid:
    """Immutable 2-D scalar raster.

    ``values`` has shape (height, width) and is stored as read-only float64.
    ``resolution`` is the pixel size in meters.
    """

    values: np.ndarray
    resolution: float

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 2 or v.size == 0:
            raise InputError(f"grid values must be a non-empty 2-D array, got shape {v.shape}")
        if not (math.isfinite(self.resolution) and self.resolution > 0):
            raise InputError(f"resolution must be > 0, got {self.resolution}")
        bad = np.flatnonzero(~np.isfinite(v.ravel()))
        if bad.size:
            raise InputError(f"non-finite value at index {int(bad[0])}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "resolution", float(self.resolution))

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def shape(self):
        return self.values.shape

    def with_values(self, values):
        """New grid with the same resolution."""
        return Grid(values, self.resolution)


def _read_sidecar(path):
    try:
        meta = json.loads(Path(path).read_text())
        return int(meta["width"]), int(meta["height"]), float(meta["resolution_m"])
    except FileNotFoundError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"corrupt sidecar {path}: {exc}") from exc


def _load_raw(path, resolution):
    sidecar = path.with_suffix(".json")
    if not sidecar.exists():
        raise InputError(f"missing sidecar {sidecar}")
    width, height, res = _read_sidecar(sidecar)
    if width <= 0 or height <= 0:
        raise InputError(f"sidecar dimension must be positive, got {width}x{height}")
    data = np.fromfile(path, dtype="<f4")
    if data.size != width * height or path.stat().st_size != 4 * width * height:
        raise InputError(
            f"sidecar dimension mismatch: {width}x{height} expects {width * height} "
            f"values, file holds {path.stat().st_size / 4:g}"
        )
    bad = np.flatnonzero(~np.isfinite(data))
    if bad.size:
        raise InputError(f"non-finite value at index {int(bad[0])}")
    return Grid(data.astype(np.float64).reshape(height, width), resolution or res)


def _load_png(path, resolution):
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            arr = np.asarray(im)
    except (OSError, SyntaxError, ValueError) as exc:
        raise InputError(f"cannot decode image {path}: {exc}") from exc

    if mode in ("L", "P"):
        if mode == "P":
            raise InputError(f"{path}: palette images are not grayscale rasters")
        values = arr.astype(np.float64) / 255.0
    elif mode.startswith("I;16") or mode == "I":
        # Pillow opens 16-bit grayscale PNG as I;16 (or I on older versions)
        values = arr.astype(np.float64) / 65535.0
    elif mode in ("RGB", "RGBA"):
        values = arr[..., :3].astype(np.float64) @ LUMA / 255.0
    elif mode == "LA":
        values = arr[..., 0].astype(np.float64) / 255.0
    else:
        raise InputError(f"{path}: unsupported image mode {mode}")

    if resolution is None:
        sidecar = path.with_suffix(".json")
        if not sidecar.exists():
            raise InputError(f"{path}: resolution not given and no sidecar {sidecar}")
        w, h, resolution = _read_sidecar(sidecar)
        if (w, h) != (values.shape[1], values.shape[0]):
            raise InputError(
                f"sidecar dimension mismatch: sidecar {w}x{h}, "
                f"image {values.shape[1]}x{values.shape[0]}"
            )
    return Grid(values, resolution)


def load_grid(path, kind="raw-float", resolution=None):
    """Load a grid from disk.

    ``kind`` is one of ``optical-gray``, ``sar`` or ``raw-float``; PNG vs raw
    decoding is chosen from the file suffix. ``resolution`` overrides the
    sidecar value when given.
    """
    if kind not in KINDS:
        raise InputError(f"unknown grid kind {kind!r}, expected one of {KINDS}")
    path = Path(path)
    if not path.exists():
        raise InputError(f"missing file {path}")
    if resolution is not None and not resolution > 0:
        raise InputError(f"resolution must be > 0, got {resolution}")
    if path.suffix.lower() == ".png":
        return _load_png(path, resolution)
    return _load_raw(path, resolution)


def save_grid(grid, path):
    """Write ``grid`` as raw float32 plus a JSON sidecar next to it."""
    path = Path(path)
    grid.values.astype("<f4").tofile(path)
    meta = {"width": grid.width, "height": grid.height, "resolution_m": grid.resolution}
    path.with_suffix(".json").write_text(json.dumps(meta))


def save_png(values, path, resolution=None, bits=8):
    """Write values in [0, 1] as a grayscale PNG (optionally with sidecar)."""
    path = Path(path)
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    if bits == 8:
        Image.fromarray(np.round(v * 255).astype(np.uint8), mode="L").save(path)
    elif bits == 16:
        Image.fromarray(np.round(v * 65535).astype(np.uint16)).save(path)
    else:
        raise ValueError("bits must be 8 or 16")
    if resolution is not None:
        meta = {"width": v.shape[1], "height": v.shape[0], "resolution_m": float(resolution)}
        path.with_suffix(".json").write_text(json.dumps(meta))


def normalize_minmax(grid):
    """Rescale to [0, 1]; a constant grid maps to all zeros."""
    v = grid.values
    lo, hi = v.min(), v.max()
    if hi == lo:
        return grid.with_values(np.zeros_like(v))
    out = (v - lo) / (hi - lo)
    # guard against 1 ulp overshoot
    return grid.with_values(np.clip(out, 0.0, 1.0))


def check_alignment(a, b):
    """Raise AlignmentError unless ``a`` and ``b`` share shape and resolution."""
    if a.shape != b.shape:
        raise AlignmentError(
            f"alignment: dimension mismatch {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    if not math.isclose(a.resolution, b.resolution, rel_tol=1e-6, abs_tol=0.0):
        raise AlignmentError(
            f"alignment: resolution mismatch {a.resolution} m vs {b.resolution} m"
        )
