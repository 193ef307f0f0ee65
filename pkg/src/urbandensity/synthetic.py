"""Synthetic cities with analytic ground truth.

Density follows the exponential model D(r) = D0 * exp(-decay * r) around each
center (r in km), superposed by taking the maximum over centers.

Random numbers come from SplitMix64 used as a counter-based generator:
draw ``i`` of stream ``s`` is ``mix(seed_s + (i + 1) * 0x9E3779B97F4A7C15)``
with the standard SplitMix64 finalizer, where ``seed_s = mix(seed ^ s)``.
Uniforms take the top 53 bits; normals use Box-Muller. Everything is uint64
arithmetic so the bits are identical on every platform.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .raster import Grid

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

# stream ids
DENSITY_NOISE, SAR_SPECKLE = 1, 2

# ordered-dither thresholds in (0, 1)
BAYER_4 = (np.array([[0, 8, 2, 10], [12, 4, 14, 6], [3, 11, 1, 9], [15, 7, 13, 5]]) + 0.5) / 16.0


def _mix(z):
    z = z.copy()
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def splitmix64(seed, n, stream=0):
    """``n`` raw 64-bit outputs of the given stream."""
    with np.errstate(over="ignore"):
        s = np.array([(seed ^ stream) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
        base = _mix(s)[0]
        counter = np.arange(1, n + 1, dtype=np.uint64) * GOLDEN + base
        return _mix(counter)


def uniform(seed, n, stream=0):
    """Uniform doubles in [0, 1)."""
    return (splitmix64(seed, n, stream) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def normal(seed, n, stream=0):
    """Standard normals via Box-Muller on paired uniforms."""
    m = (n + 1) // 2
    u = uniform(seed, 2 * m, stream)
    u1 = 1.0 - u[0::2]  # (0, 1]
    u2 = u[1::2]
    rad = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * m)
    z[0::2] = rad * np.cos(2 * np.pi * u2)
    z[1::2] = rad * np.sin(2 * np.pi * u2)
    return z[:n]


@dataclass(frozen=True)
class Center:
    x: float
    y: float
    d0: float
    decay: float  # per km


@dataclass(frozen=True)
class SyntheticSpec:
    width: int
    height: int
    resolution: float
    centers: tuple
    noise_sigma: float = 0.0
    seed: int = 0
    speckle: float = 0.25
    block_px: int = 4

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InputError("synthetic scene needs positive dimensions")
        if not self.resolution > 0:
            raise InputError("resolution must be > 0")
        if not self.centers:
            raise InputError("synthetic scene needs at least one center")
        cs = tuple(c if isinstance(c, Center) else Center(*c) for c in self.centers)
        for c in cs:
            if not (c.d0 > 0 and c.decay > 0):
                raise InputError(f"center {c} needs d0 > 0 and decay > 0")
        object.__setattr__(self, "centers", cs)
        if self.noise_sigma < 0 or self.speckle < 0:
            raise InputError("noise levels must be >= 0")
        if self.block_px < 3:
            raise InputError("block_px must be >= 3")

    @classmethod
    def from_dict(cls, d):
        try:
            centers = tuple(
                Center(float(c["x"]), float(c["y"]), float(c["d0"]), float(c["decay"]))
                for c in d["centers"]
            )
            return cls(
                width=int(d["width"]),
                height=int(d["height"]),
                resolution=float(d.get("resolution_m", d.get("resolution"))),
                centers=centers,
                noise_sigma=float(d.get("noise_sigma", 0.0)),
                seed=int(d.get("seed", 0)),
                speckle=float(d.get("speckle", 0.25)),
                block_px=int(d.get("block_px", 4)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"invalid synthetic spec: {exc}") from exc

    def to_dict(self):
        return {
            "width": self.width,
            "height": self.height,
            "resolution_m": self.resolution,
            "centers": [
                {"x": c.x, "y": c.y, "d0": c.d0, "decay": c.decay} for c in self.centers
            ],
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
            "speckle": self.speckle,
            "block_px": self.block_px,
            "prng": "splitmix64",
        }


def clean_density(spec):
    """Noise-free max-superposed exponential field."""
    yy, xx = np.mgrid[0:spec.height, 0:spec.width].astype(np.float64)
    out = np.zeros((spec.height, spec.width))
    km = spec.resolution / 1000.0
    for c in spec.centers:
        r_km = np.hypot(xx - c.x, yy - c.y) * km
        np.maximum(out, c.d0 * np.exp(-c.decay * r_km), out=out)
    return out


def generate_density(spec):
    """Clean density plus seeded Gaussian noise, clamped at zero."""
    rho = clean_density(spec)
    if spec.noise_sigma > 0:
        noise = normal(spec.seed, rho.size, DENSITY_NOISE).reshape(rho.shape)
        rho = np.maximum(rho + spec.noise_sigma * noise, 0.0)
    return Grid(rho, spec.resolution)


def generate_scene_pair(spec):
    """Pseudo optical and SAR rasters consistent with the density field.

    SAR is the peak-normalized density times (1 + speckle * N(0, 1)),
    clipped to [0, 1]. Optical is a block texture: each block carries a
    bright building footprint when the local normalized density exceeds its
    4x4 Bayer threshold, so built blocks are spread evenly and edge density
    tracks true density.
    """
    rho = generate_density(spec).values
    peak = max(c.d0 for c in spec.centers)
    dn = np.clip(rho / peak, 0.0, 1.0)

    n = dn.size
    speck = normal(spec.seed, n, SAR_SPECKLE).reshape(dn.shape)
    sar = np.clip(dn * (1.0 + spec.speckle * speck), 0.0, 1.0)

    b = spec.block_px
    by = np.arange(spec.height) // b
    bx = np.arange(spec.width) // b
    nby, nbx = by[-1] + 1, bx[-1] + 1
    cy = np.minimum(np.arange(nby) * b + b // 2, spec.height - 1)
    cx = np.minimum(np.arange(nbx) * b + b // 2, spec.width - 1)
    block_dens = dn[np.ix_(cy, cx)]
    thresh = BAYER_4[np.ix_(np.arange(nby) % 4, np.arange(nbx) % 4)]
    built = block_dens > thresh
    # footprint covers the block except a 1-pixel street on two sides
    inner = ((np.arange(spec.height) % b) < b - 1)[:, None] & ((np.arange(spec.width) % b) < b - 1)[None, :]
    optical = np.where(built[np.ix_(by, bx)] & inner, 0.85, 0.15)
    return Grid(optical, spec.resolution), Grid(sar, spec.resolution)


def ground_truth(spec):
    """JSON-ready description of the generating model."""
    out = spec.to_dict()
    out["model"] = "max_i d0_i * exp(-decay_i * r_i_km)"
    return out


def write_ground_truth(spec, path):
    with open(path, "w") as fh:
        json.dump(ground_truth(spec), fh, indent=2, sort_keys=True)

