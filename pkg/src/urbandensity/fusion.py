"""Optical edge density, SAR fusion and non-local means denoising.

All kernels replicate edge pixels at the borders.
"""

import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import InputError, PipelineWarning
from .raster import check_alignment, normalize_minmax

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T


@dataclass(frozen=True)
class FusionConfig:
    blur_sigma: float = 8.0
    w_optical: float = 1.0
    w_sar: float = 1.0
    nlm_patch: int = 7
    nlm_search: int = 21
    nlm_strength: float = 0.1
    # noise level subtracted from patch distances; 0 keeps the plain weighting
    nlm_sigma: float = 0.0

    def __post_init__(self):
        if not self.blur_sigma > 0:
            raise InputError(f"blur_sigma must be > 0, got {self.blur_sigma}")
        if self.w_optical < 0 or self.w_sar < 0 or self.w_optical + self.w_sar <= 0:
            raise InputError("fusion weights must be >= 0 with a positive sum")
        for name in ("nlm_patch", "nlm_search"):
            n = getattr(self, name)
            if int(n) != n or n < 3 or n % 2 == 0:
                raise InputError(f"{name} must be an odd integer >= 3, got {n}")
        if not self.nlm_strength > 0:
            raise InputError(f"nlm_strength must be > 0, got {self.nlm_strength}")
        if self.nlm_sigma < 0:
            raise InputError(f"nlm_sigma must be >= 0, got {self.nlm_sigma}")

    def to_dict(self):
        return asdict(self)


def sobel_magnitude(grid):
    """Gradient magnitude sqrt(Gx^2 + Gy^2) from the 3x3 Sobel pair."""
    v = grid.values
    if v.shape[0] < 3 or v.shape[1] < 3:
        raise InputError(f"sobel needs at least 3x3, got {grid.width}x{grid.height}")
    p = np.pad(v, 1, mode="edge")
    h, w = v.shape
    gx = np.zeros_like(v)
    gy = np.zeros_like(v)
    for i in range(3):
        for j in range(3):
            win = p[i:i + h, j:j + w]
            if SOBEL_X[i, j]:
                gx += SOBEL_X[i, j] * win
            if SOBEL_Y[i, j]:
                gy += SOBEL_Y[i, j] * win
    return grid.with_values(np.hypot(gx, gy))


def gaussian_kernel(sigma):
    """1-D Gaussian truncated at 3 sigma, normalized to sum 1."""
    radius = int(3.0 * sigma + 0.5)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(values, sigma):
    k = gaussian_kernel(sigma)
    out = correlate1d(np.asarray(values, dtype=np.float64), k, axis=0, mode="nearest")
    return correlate1d(out, k, axis=1, mode="nearest")


def edge_density(edges, cfg=FusionConfig()):
    """Blur an edge map into a continuous field and rescale it to [0, 1]."""
    blurred = edges.with_values(gaussian_blur(edges.values, cfg.blur_sigma))
    return normalize_minmax(blurred)


def combine(edge_dens, sar_norm, cfg=FusionConfig()):
    """Weighted per-pixel sum of optical edge density and normalized SAR."""
    check_alignment(edge_dens, sar_norm)
    return edge_dens.with_values(cfg.w_optical * edge_dens.values + cfg.w_sar * sar_norm.values)


def _box_sum(a, k):
    """Sums over every k x k window of ``a`` (valid region only)."""
    c = np.zeros((a.shape[0] + 1, a.shape[1] + 1))
    np.cumsum(a, axis=0, out=c[1:, 1:])
    np.cumsum(c[1:, 1:], axis=1, out=c[1:, 1:])
    return c[k:, k:] - c[:-k, k:] - c[k:, :-k] + c[:-k, :-k]


def nlm_denoise(grid, cfg=FusionConfig()):
    """Non-local means with mean squared patch distances.

    Weight of a candidate pixel q for pixel p is
    ``exp(-max(d2 - 2 * sigma**2, 0) / h**2)`` where d2 is the mean squared
    difference of the patches around p and q and ``h = strength * range``.
    Runtime grows with ``nlm_search ** 2``; that window is the main cost knob.
    """
    v = grid.values
    h_img, w_img = v.shape
    if h_img < cfg.nlm_search or w_img < cfg.nlm_search:
        warnings.warn(
            f"grid {w_img}x{h_img} smaller than NLM search window {cfg.nlm_search}; "
            "denoising skipped",
            PipelineWarning,
            stacklevel=2,
        )
        return grid.with_values(v)
    lo, hi = v.min(), v.max()
    if hi == lo:
        return grid.with_values(v)

    # distances are measured in units of the value range so that h never
    # underflows on grids with a tiny spread
    scale = hi - lo
    h2 = cfg.nlm_strength ** 2
    with np.errstate(over="ignore"):
        noise2 = 2.0 * (cfg.nlm_sigma / scale) ** 2
    pr = cfg.nlm_patch // 2
    sr = cfg.nlm_search // 2
    pad = sr + pr
    p = np.pad(v, pad, mode="edge")
    pn = (p - lo) / scale
    # patch-extended reference region around every output pixel
    ref = pn[sr:sr + h_img + 2 * pr, sr:sr + w_img + 2 * pr]
    area = float(cfg.nlm_patch ** 2)

    num = np.zeros_like(v)
    den = np.zeros_like(v)
    for dy in range(-sr, sr + 1):
        for dx in range(-sr, sr + 1):
            ys, xs = sr + dy, sr + dx
            diff = ref - pn[ys:ys + h_img + 2 * pr, xs:xs + w_img + 2 * pr]
            d2 = _box_sum(diff * diff, cfg.nlm_patch) / area
            wgt = np.exp(-np.maximum(d2 - noise2, 0.0) / h2)
            num += wgt * p[ys + pr:ys + pr + h_img, xs + pr:xs + pr + w_img]
            den += wgt
    out = num / den
    return grid.with_values(np.clip(out, lo, hi))


def fuse(optical, sar, cfg=FusionConfig(), denoise=True):
    """Optical + SAR grids to the combined density field."""
    check_alignment(optical, sar)
    dens = edge_density(sobel_magnitude(normalize_minmax(optical)), cfg)
    rho = combine(dens, normalize_minmax(sar), cfg)
    return nlm_denoise(rho, cfg) if denoise else rho

