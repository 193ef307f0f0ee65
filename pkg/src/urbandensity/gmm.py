"""Three-component Gaussian mixture thresholding of the combined histogram.

EM runs over bin centers weighted by counts, with a deterministic
percentile initialization, so repeated fits are bit-identical.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import AnalysisError, PipelineWarning

TAU_CENTER = 1.4
GMM_INTERSECTION = "gmm-intersection"
QUANTILE_FALLBACK = "quantile-fallback"


class GmmCollapse(AnalysisError):
    """EM lost a component; callers fall back to quantile thresholds."""


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def bin_width(self):
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def total(self):
        return int(self.counts.sum())

    def quantile(self, q):
        """Quantile of the binned data, linear within bins."""
        cum = np.concatenate([[0.0], np.cumsum(self.counts, dtype=np.float64)])
        return float(np.interp(q * cum[-1], cum, self.bin_edges))


@dataclass(frozen=True)
class GmmParams:
    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    log_likelihood: float
    n_iter: int = 0
    converged: bool = False
    ll_history: tuple = field(default=(), repr=False)

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)[..., None]
        z = (x - self.means) / self.stds
        comp = self.weights * np.exp(-0.5 * z * z) / (self.stds * math.sqrt(2 * math.pi))
        return comp.sum(axis=-1)

    def to_dict(self):
        return {
            "weights": [float(v) for v in self.weights],
            "means": [float(v) for v in self.means],
            "stds": [float(v) for v in self.stds],
            "log_likelihood": float(self.log_likelihood),
            "iterations": int(self.n_iter),
            "converged": bool(self.converged),
        }


@dataclass(frozen=True)
class Thresholds:
    tau_water: float
    tau_urban: float
    tau_center: float = TAU_CENTER
    provenance: str = GMM_INTERSECTION

    def to_dict(self):
        return {
            "tau_water": float(self.tau_water),
            "tau_urban": float(self.tau_urban),
            "tau_center": float(self.tau_center),
            "provenance": self.provenance,
        }


def build_histogram(values, bins=256):
    """Equal-width histogram over [min, max]; the max lands in the last bin."""
    v = np.asarray(getattr(values, "values", values), dtype=np.float64).ravel()
    if v.size == 0:
        raise AnalysisError("empty input", stage="histogram")
    if bins < 8:
        raise AnalysisError(f"need at least 8 bins, got {bins}", stage="histogram")
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        raise AnalysisError("degenerate histogram: constant image", stage="histogram")
    counts, edges = np.histogram(v, bins=int(bins), range=(lo, hi))
    return Histogram(edges, counts.astype(np.int64))


def _weighted_percentile(x, w, q):
    cum = np.cumsum(w)
    idx = np.searchsorted(cum, q * cum[-1], side="left")
    return float(x[min(idx, x.size - 1)])


def _log_components(x, weights, means, stds):
    z = (x[:, None] - means) / stds
    return np.log(weights) - np.log(stds) - 0.5 * math.log(2 * math.pi) - 0.5 * z * z


def _logsumexp(a):
    m = a.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(a - m).sum(axis=1, keepdims=True)))[:, 0]


def fit_gmm_em(hist, max_iter=500, tol=1e-8, min_weight=1e-6):
    """Fit three Gaussians to a histogram by EM.

    Means start at the 10/50/90 percentiles, weights at 1/3 and stds at a
    third of the data std. Stds never drop below the bin width. Raises
    :class:`GmmCollapse` when a component loses essentially all mass.
    """
    x = hist.centers
    c = hist.counts.astype(np.float64)
    nz = c > 0
    if nz.sum() < 3:
        raise AnalysisError("fewer than 3 nonempty histogram bins", stage="gmm")
    x, c = x[nz], c[nz]
    n = c.sum()
    floor = hist.bin_width

    means = np.array([_weighted_percentile(x, c, q) for q in (0.1, 0.5, 0.9)])
    mu = (c * x).sum() / n
    data_std = math.sqrt((c * (x - mu) ** 2).sum() / n)
    stds = np.full(3, max(data_std / 3.0, floor))
    weights = np.full(3, 1.0 / 3.0)

    history = []
    converged = False
    ll = -math.inf
    it = 0
    for it in range(1, max_iter + 1):
        logp = _log_components(x, weights, means, stds)
        norm = _logsumexp(logp)
        ll_new = float((c * norm).sum())
        history.append(ll_new)
        if abs(ll_new - ll) < tol:
            ll = ll_new
            converged = True
            break
        ll = ll_new

        resp = np.exp(logp - norm[:, None]) * c[:, None]
        nk = resp.sum(axis=0)
        if (nk / n < min_weight).any():
            raise GmmCollapse("EM collapse: a component lost all responsibility", stage="gmm")
        weights = nk / n
        means = (resp * x[:, None]).sum(axis=0) / nk
        var = (resp * (x[:, None] - means) ** 2).sum(axis=0) / nk
        stds = np.maximum(np.sqrt(var), floor)

    order = np.argsort(means, kind="stable")
    means, stds, weights = means[order], stds[order], weights[order]
    if np.any(np.diff(means) <= 0):
        raise GmmCollapse("EM collapse: coincident component means", stage="gmm")
    weights = weights / weights.sum()
    return GmmParams(weights, means, stds, ll, it, converged, tuple(history))


def pair_intersection(w1, m1, s1, w2, m2, s2):
    """Point in (m1, m2) where w1*N(x; m1, s1) == w2*N(x; m2, s2), or None."""
    a = 0.5 / s2**2 - 0.5 / s1**2
    b = m1 / s1**2 - m2 / s2**2
    c = (m2**2 / (2 * s2**2) - m1**2 / (2 * s1**2)
         + math.log(w1 / s1) - math.log(w2 / s2))

    def logratio(x):
        return a * x * x + b * x + c

    roots = []
    scale = max(abs(b), abs(c), 1.0)
    if abs(a) <= 1e-14 * scale:
        if b != 0:
            roots.append(-c / b)
    else:
        disc = b * b - 4 * a * c
        if disc >= 0:
            sq = math.sqrt(disc)
            q = -0.5 * (b + math.copysign(sq, b))
            if q != 0:
                roots.extend([q / a, c / q])
            else:
                roots.append(-b / (2 * a))
    inside = sorted(r for r in roots if m1 < r < m2)
    # the crossing where component 1 hands over to component 2
    for r in inside:
        if 2 * a * r + b <= 0:
            return float(r)
    if inside:
        return float(inside[0])

    lo, hi = m1, m2
    flo, fhi = logratio(lo), logratio(hi)
    if not (flo > 0 > fhi):
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = logratio(mid)
        if fm > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def find_intersections(params):
    """Intersections between components (1, 2) and (2, 3); None when absent."""
    w, m, s = params.weights, params.means, params.stds
    return tuple(
        pair_intersection(w[i], m[i], s[i], w[i + 1], m[i + 1], s[i + 1]) for i in range(2)
    )


def derive_thresholds(params, hist, tau_center=TAU_CENTER):
    """Water/urban thresholds from the GMM, with p25/p75 fallbacks.

    ``params`` may be None (collapsed fit), in which case both thresholds
    come from histogram quantiles.
    """
    if params is None:
        water, urban = None, None
    else:
        water, urban = find_intersections(params)
    provenance = GMM_INTERSECTION
    if water is None:
        water = hist.quantile(0.25)
        provenance = QUANTILE_FALLBACK
        warnings.warn("no water/terrain intersection; using 25th percentile", PipelineWarning)
    if urban is None:
        urban = hist.quantile(0.75)
        provenance = QUANTILE_FALLBACK
        warnings.warn("no terrain/urban intersection; using 75th percentile", PipelineWarning)
    if water > urban:
        warnings.warn(
            f"tau_water {water:.6g} above tau_urban {urban:.6g}; swapped", PipelineWarning
        )
        water, urban = urban, water
    if water == urban:
        urban = math.nextafter(urban, math.inf)
    return Thresholds(float(water), float(urban), float(tau_center), provenance)
