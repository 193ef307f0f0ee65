"""Uniform / variation regions along the residual (observed - fit) series.

K-means on standardized residual features gives per-bin labels; labels are
turned into contiguous distance runs, small runs are merged away, and the
candidate k in 1..3 with the most regions (then the lowest pooled
variance) wins.
"""

from dataclasses import dataclass

import numpy as np

from .errors import AnalysisError

UNIFORM = "uniform"
VARIATION = "variation"

MIN_FRACTION = 0.05
UNIFORM_RATIO = 0.7
MAX_REGIONS = 3


@dataclass(frozen=True, eq=False)
class ResidualSeries:
    distance_km: np.ndarray
    residual: np.ndarray

    def __len__(self):
        return int(self.residual.size)


@dataclass(frozen=True)
class Region:
    start: int  # first bin, inclusive
    stop: int  # last bin, exclusive
    start_km: float
    end_km: float
    label: str
    std: float
    fraction: float

    def to_dict(self):
        return {
            "start_km": self.start_km,
            "end_km": self.end_km,
            "start_bin": self.start,
            "stop_bin": self.stop,
            "label": self.label,
            "std": self.std,
            "fraction": self.fraction,
        }


@dataclass(frozen=True)
class RegionSet:
    regions: tuple
    overall_std: float
    k_selected: int

    def to_dict(self):
        return {
            "k_selected": self.k_selected,
            "overall_std": self.overall_std,
            "regions": [r.to_dict() for r in self.regions],
        }


def compute_residuals(profile, fit):
    d = np.asarray(profile.bin_distance_km, dtype=np.float64)
    return ResidualSeries(d, np.asarray(profile.mean_density) - (fit.beta + fit.alpha * d))


def _standardize(col):
    sd = col.std()
    if sd == 0:
        return np.zeros_like(col)
    return (col - col.mean()) / sd


def build_features(series):
    """Columns: residual, forward-difference gradient, and both shifted by +1 bin.

    The last gradient and the first shifted entries repeat their neighbors.
    Each column is standardized (constant columns become zeros).
    """
    r = np.asarray(getattr(series, "residual", series), dtype=np.float64)
    if r.size < 4:
        raise AnalysisError(f"residual series too short ({r.size} bins, need 4)", stage="regions")
    grad = np.empty_like(r)
    grad[:-1] = np.diff(r)
    grad[-1] = grad[-2]
    r_shift = np.concatenate([r[:1], r[:-1]])
    g_shift = np.concatenate([grad[:1], grad[:-1]])
    raw = np.column_stack([r, grad, r_shift, g_shift])
    return np.column_stack([_standardize(raw[:, j]) for j in range(4)])


# -- k-means -----------------------------------------------------------------

def _farthest_point_init(x, k):
    idx = [0]
    d2 = ((x - x[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(d2))
        idx.append(nxt)
        d2 = np.minimum(d2, ((x - x[nxt]) ** 2).sum(axis=1))
    return x[idx].copy()


def kmeans(x, k, max_iter=100):
    """Deterministic Lloyd iterations.

    Returns (labels, centroids, objective history). An emptied cluster keeps
    its previous centroid.
    """
    x = np.asarray(x, dtype=np.float64)
    cent = _farthest_point_init(x, k)
    labels = None
    history = []
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - cent[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(x.shape[0]), new].sum()))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for j in range(k):
            members = labels == j
            if members.any():
                cent[j] = x[members].mean(axis=0)
    return labels, cent, history


# -- contiguous regions --------------------------------------------------------

def label_runs(labels):
    """[start, stop) bounds of maximal runs of equal labels."""
    labels = np.asarray(labels)
    cuts = np.flatnonzero(labels[1:] != labels[:-1]) + 1
    edges = np.concatenate([[0], cuts, [labels.size]])
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def _sse(r, seg):
    part = r[seg[0]:seg[1]]
    return float(((part - part.mean()) ** 2).sum())


def merge_small(bounds, r, min_fraction=MIN_FRACTION):
    """Remove regions holding less than ``min_fraction`` of the bins.

    Adjacent small runs are first pooled into one region. Whatever is still
    too small joins the neighbor whose mean residual is closest.
    """
    n = r.size
    limit = min_fraction * n

    pooled = []
    for seg in bounds:
        if pooled and seg[1] - seg[0] < limit and pooled[-1][2]:
            a, _, _ = pooled.pop()
            pooled.append((a, seg[1], True))
        else:
            pooled.append((seg[0], seg[1], seg[1] - seg[0] < limit))
    segs = [(a, b) for a, b, _ in pooled]

    while len(segs) > 1:
        sizes = [b - a for a, b in segs]
        i = int(np.argmin(sizes))
        if sizes[i] >= limit:
            break
        mean_i = r[segs[i][0]:segs[i][1]].mean()
        jumps = []
        for j in (i - 1, i + 1):
            if 0 <= j < len(segs):
                jumps.append((abs(mean_i - r[segs[j][0]:segs[j][1]].mean()), j))
        _, j = min(jumps)
        a, b = min(i, j), max(i, j)
        segs[a:b + 1] = [(segs[a][0], segs[b][1])]
    return segs


def cap_regions(segs, r, max_regions=MAX_REGIONS):
    """Merge adjacent pairs with the least pooled-SSE increase until few enough."""
    segs = list(segs)
    while len(segs) > max_regions:
        costs = []
        for i in range(len(segs) - 1):
            merged = (segs[i][0], segs[i + 1][1])
            costs.append(_sse(r, merged) - _sse(r, segs[i]) - _sse(r, segs[i + 1]))
        i = int(np.argmin(costs))
        segs[i:i + 2] = [(segs[i][0], segs[i + 1][1])]
    return segs


def pooled_variance(segs, r):
    return sum(_sse(r, s) for s in segs) / r.size


def _make_regions(segs, series):
    d = series.distance_km
    n = len(series)
    out = []
    for i, (a, b) in enumerate(segs):
        end = d[segs[i + 1][0]] if i + 1 < len(segs) else d[-1]
        out.append(Region(a, b, float(d[a]), float(end), VARIATION, 0.0, (b - a) / n))
    return out


def segment_regions(features, series, ks=(1, 2, 3)):
    """Pick the best contiguous segmentation over k in ``ks``.

    Candidates are compared by region count (more wins), then by pooled
    within-region residual variance (lower wins), then by smaller k.
    """
    r = np.asarray(series.residual, dtype=np.float64)
    best = None
    for k in ks:
        if k > r.size:
            continue
        labels, _, _ = kmeans(features, k)
        segs = merge_small(label_runs(labels), r)
        segs = cap_regions(segs, r)
        score = (len(segs), -pooled_variance(segs, r))
        if best is None or score > best[0]:
            best = (score, k, segs)
    _, k, segs = best
    return RegionSet(tuple(_make_regions(segs, series)), float(r.std()), k)


def label_regions(region_set, series):
    """Uniform iff the region's residual std is below 0.7 x the overall std.

    A series with zero overall spread is uniform throughout.
    """
    r = np.asarray(series.residual, dtype=np.float64)
    overall = float(r.std())
    out = []
    for reg in region_set.regions:
        sd = float(r[reg.start:reg.stop].std())
        uniform = sd < UNIFORM_RATIO * overall or overall == 0.0
        out.append(Region(reg.start, reg.stop, reg.start_km, reg.end_km,
                          UNIFORM if uniform else VARIATION, sd, reg.fraction))
    return RegionSet(tuple(out), overall, region_set.k_selected)


def analyze_regions(profile, fit):
    series = compute_residuals(profile, fit)
    regions = label_regions(segment_regions(build_features(series), series), series)
    return series, regions
