"""Density-distance profile, gradient fit, effective distance and peaks."""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AnalysisError, PipelineWarning

MONOCENTRIC = "monocentric"
POLYCENTRIC = "polycentric"


@dataclass(frozen=True, eq=False)
class DensityProfile:
    """Mean urban density per 1-pixel distance bin; empty bins are omitted."""

    bin_index: np.ndarray
    bin_distance_km: np.ndarray
    mean_density: np.ndarray
    pixel_count: np.ndarray
    q25: np.ndarray
    q75: np.ndarray
    resolution: float

    def __len__(self):
        return int(self.bin_index.size)

    def to_csv(self):
        lines = ["distance_km,mean_density,count,q25,q75"]
        for row in zip(self.bin_distance_km, self.mean_density, self.pixel_count,
                       self.q25, self.q75):
            d, m, n, a, b = row
            lines.append(f"{d!r},{m!r},{int(n)},{a!r},{b!r}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GradientFit:
    alpha: float
    beta: float
    r_squared: float
    minima_points: tuple = ()

    def predict(self, d_km):
        return self.beta + self.alpha * np.asarray(d_km, dtype=np.float64)


@dataclass(frozen=True)
class Peak:
    index: int
    distance_km: float
    density: float
    prominence: float


@dataclass(frozen=True)
class GradientMetrics:
    alpha: float
    beta: float
    r_squared: float
    ld_km: float
    rho_target: float
    peaks: tuple
    morphology: str
    minima_fallback: bool = False
    no_distinct_peak: bool = False

    def to_dict(self):
        return {
            "alpha_per_km": self.alpha,
            "beta": self.beta,
            "r_squared": self.r_squared,
            "ld_km": self.ld_km,
            "rho_target": self.rho_target,
            "peaks": [
                {"distance_km": p.distance_km, "density": p.density,
                 "prominence": p.prominence, "bin": p.index}
                for p in self.peaks
            ],
            "n_peaks": len(self.peaks),
            "morphology": self.morphology,
            "minima_fallback": self.minima_fallback,
            "no_distinct_peak": self.no_distinct_peak,
        }


# -- distance transform ------------------------------------------------------

def _column_distances(mask):
    """Per-column distance (in rows) to the nearest True pixel; inf if none."""
    h, w = mask.shape
    inf = np.inf
    fwd = np.full((h, w), inf)
    last = np.full(w, -inf)
    for y in range(h):
        last = np.where(mask[y], y, last)
        fwd[y] = y - last
    out = fwd
    nxt = np.full(w, inf)
    for y in range(h - 1, -1, -1):
        nxt = np.where(mask[y], y, nxt)
        np.minimum(out[y], nxt - y, out=out[y])
    return out


def _envelope_row(f, xs):
    """Squared-distance transform of one row with sample costs ``f``.

    Lower envelope of parabolas (Felzenszwalb & Huttenlocher); only finite
    samples take part. Returns min_q (x - q)^2 + f[q] for every x in ``xs``.
    """
    qs = np.flatnonzero(np.isfinite(f))
    if qs.size == 0:
        return np.full(xs.size, np.inf)
    fq = f[qs].tolist()
    ql = qs.tolist()
    v = [ql[0]]
    fv = [fq[0]]
    z = [-math.inf]
    for q, fqq in zip(ql[1:], fq[1:]):
        base = fqq + q * q
        while True:
            s = (base - (fv[-1] + v[-1] * v[-1])) / (2 * q - 2 * v[-1])
            if s <= z[-1]:
                v.pop()
                fv.pop()
                z.pop()
            else:
                break
        v.append(q)
        fv.append(fqq)
        z.append(s)
    z_arr = np.array(z[1:])
    k = np.searchsorted(z_arr, xs, side="right")
    va = np.array(v, dtype=np.float64)[k]
    fa = np.array(fv)[k]
    return (xs - va) ** 2 + fa


def distance_transform(centers):
    """Exact Euclidean distance (pixels) from every pixel to the nearest center.

    Two separable passes: nearest center per column, then the parabola lower
    envelope along each row over squared distances.
    """
    mask = np.asarray(centers, dtype=bool)
    if not mask.any():
        raise AnalysisError("empty center mask", stage="distance")
    col = _column_distances(mask)
    g2 = col * col
    xs = np.arange(mask.shape[1], dtype=np.float64)
    out = np.empty(mask.shape)
    for y in range(mask.shape[0]):
        out[y] = _envelope_row(g2[y], xs)
    return np.sqrt(out)


# -- profile -------------------------------------------------------------------

def extract_profile(dist, rho, urban, resolution):
    """Bin urban pixels by floor(distance) and summarize each bin.

    Bin d holds pixels with d <= D < d + 1; distances are reported in km.
    """
    dist = np.asarray(getattr(dist, "values", dist), dtype=np.float64)
    rho = np.asarray(getattr(rho, "values", rho), dtype=np.float64)
    urban = np.asarray(urban, dtype=bool)
    if not urban.any():
        raise AnalysisError("empty urban mask", stage="profile")
    d = np.floor(dist[urban]).astype(np.int64)
    r = rho[urban]

    order = np.lexsort((r, d))
    d, r = d[order], r[order]
    bins, start, count = np.unique(d, return_index=True, return_counts=True)
    sums = np.add.reduceat(r, start)
    mean = sums / count

    def quantile(q):
        pos = q * (count - 1)
        lo = np.floor(pos).astype(np.int64)
        hi = np.minimum(lo + 1, count - 1)
        frac = pos - lo
        return r[start + lo] * (1 - frac) + r[start + hi] * frac

    return DensityProfile(
        bin_index=bins,
        bin_distance_km=bins * resolution / 1000.0,
        mean_density=mean,
        pixel_count=count,
        q25=quantile(0.25),
        q75=quantile(0.75),
        resolution=float(resolution),
    )


# -- regression ----------------------------------------------------------------

def local_minima(values, window=5):
    """Interior indices that are the strict minimum of their window."""
    v = np.asarray(values, dtype=np.float64)
    half = window // 2
    out = []
    for i in range(1, v.size - 1):
        lo, hi = max(0, i - half), min(v.size, i + half + 1)
        others = np.concatenate([v[lo:i], v[i + 1:hi]])
        if (v[i] < others).all():
            out.append(i)
    return np.array(out, dtype=np.int64)


def find_local_minima(profile, window=5):
    """Profile points used for the regression and whether the fallback fired.

    Fewer than two minima means every profile point is used instead.
    """
    if len(profile) < 3:
        raise AnalysisError(f"profile has {len(profile)} bins, need at least 3", stage="minima")
    idx = local_minima(profile.mean_density, window)
    fallback = idx.size < 2
    if fallback:
        idx = np.arange(len(profile))
    return profile.bin_distance_km[idx], profile.mean_density[idx], fallback


def fit_gradient(d_km, rho):
    """Ordinary least squares line rho = beta + alpha * d."""
    d = np.asarray(d_km, dtype=np.float64)
    y = np.asarray(rho, dtype=np.float64)
    if d.size < 2 or d.size != y.size:
        raise AnalysisError("degenerate regression: need at least 2 points", stage="fit")
    dm, ym = d.mean(), y.mean()
    dd = d - dm
    sxx = float(dd @ dd)
    if sxx == 0.0:
        raise AnalysisError("degenerate regression: all distances identical", stage="fit")
    alpha = float(dd @ (y - ym)) / sxx
    beta = float(ym - alpha * dm)
    resid = y - (beta + alpha * d)
    sst = float(((y - ym) ** 2).sum())
    r2 = 1.0 if sst == 0.0 else 1.0 - float(resid @ resid) / sst
    return GradientFit(alpha, beta, r2, tuple(zip(d.tolist(), y.tolist())))


def compute_ld(fit, rho_target):
    """Distance (km) where the fitted line reaches ``rho_target``."""
    if fit.alpha == 0:
        raise AnalysisError("flat gradient, LD undefined", stage="ld")
    ld = (rho_target - fit.beta) / fit.alpha
    if ld < 0:
        warnings.warn(
            f"negative LD {ld:.4g} km: fitted line is below target at the center",
            PipelineWarning,
        )
    return ld


# -- peaks -----------------------------------------------------------------------

def _nearest_higher(cands, values):
    """For each candidate, the nearest earlier candidate with a larger value."""
    out = {}
    stack = []
    for i in cands:
        while stack and values[stack[-1]] <= values[i]:
            stack.pop()
        out[i] = stack[-1] if stack else None
        stack.append(i)
    return out


def peak_prominences(values):
    """Peaks of a radial profile and their prominences.

    Interior peaks are strict local maxima. The profile is even about the
    center (distance 0), so bin 0 is a peak when it exceeds bin 1. Each side's
    base is the lowest value between the peak and the nearest higher peak,
    stopping at the profile ends; prominence is the height above the higher
    of the two bases (for bin 0 both bases coincide by symmetry).
    """
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    if n < 2:
        return []
    cands = [i for i in range(1, n - 1) if v[i] > v[i - 1] and v[i] > v[i + 1]]
    if v[0] > v[1]:
        cands.insert(0, 0)
    left = _nearest_higher(cands, v)
    right = _nearest_higher(cands[::-1], v)
    result = []
    for i in cands:
        hi = right[i] if right[i] is not None else n - 1
        right_base = v[i:hi + 1].min()
        if i == 0:
            left_base = right_base
        else:
            lo = left[i] if left[i] is not None else 0
            left_base = v[lo:i + 1].min()
        result.append((i, float(v[i] - max(left_base, right_base))))
    return result


def detect_peaks(profile, prominence_factor=0.02):
    """Peaks whose prominence exceeds ``prominence_factor`` times the data range."""
    v = np.asarray(profile.mean_density, dtype=np.float64)
    thresh = prominence_factor * (v.max() - v.min())
    return tuple(
        Peak(i, float(profile.bin_distance_km[i]), float(v[i]), prom)
        for i, prom in peak_prominences(v)
        if prom > thresh
    )


def classify_morphology(peaks):
    """(morphology, no_distinct_peak flag)."""
    if len(peaks) >= 2:
        return POLYCENTRIC, False
    return MONOCENTRIC, len(peaks) == 0
