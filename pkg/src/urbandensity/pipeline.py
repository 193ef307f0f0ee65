"""End-to-end analysis: rasters in, metrics report out."""

import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AnalysisError, InputError, PipelineWarning
from .fusion import FusionConfig, combine, edge_density, nlm_denoise, sobel_magnitude
from .gmm import TAU_CENTER, GmmCollapse, build_histogram, derive_thresholds, fit_gmm_em
from .gradient import (
    GradientMetrics,
    classify_morphology,
    compute_ld,
    detect_peaks,
    distance_transform,
    extract_profile,
    find_local_minima,
    fit_gradient,
)
from .raster import check_alignment, load_grid, normalize_minmax
from .regions import analyze_regions
from .segmentation import segment

REPORT_SCHEMA_VERSION = "1.0"


@dataclass(frozen=True)
class PipelineConfig:
    optical: str = None
    sar: str = None
    resolution_m: float = None
    fusion: FusionConfig = field(default_factory=FusionConfig)
    histogram_bins: int = 256
    min_component_px: int = 100
    tau_center: float = TAU_CENTER
    prominence_factor: float = 0.02
    minima_window: int = 5
    rho_target: object = "profile-min"  # or a float (absolute target density)
    out_dir: str = None

    def __post_init__(self):
        if self.histogram_bins < 8:
            raise InputError("histogram_bins must be >= 8")
        if self.min_component_px < 1:
            raise InputError("min_component_px must be >= 1")
        if self.prominence_factor < 0:
            raise InputError("prominence_factor must be >= 0")
        if self.minima_window < 3:
            raise InputError("minima_window must be >= 3")
        if self.rho_target != "profile-min" and not isinstance(self.rho_target, (int, float)):
            raise InputError(f"rho_target must be 'profile-min' or a number, got {self.rho_target!r}")

    @classmethod
    def from_dict(cls, d, **overrides):
        """Build from a parsed config JSON; ``overrides`` win over file values."""
        d = {**d, **{k: v for k, v in overrides.items() if v is not None}}
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        try:
            fusion = d.get("fusion", {})
            if not isinstance(fusion, FusionConfig):
                fusion = FusionConfig(**fusion)
            rho_target = d.get("rho_target", "profile-min")
            if isinstance(rho_target, dict):
                rho_target = float(rho_target["absolute"])
            return cls(**{**d, "fusion": fusion, "rho_target": rho_target})
        except (TypeError, KeyError, ValueError) as exc:
            raise InputError(f"invalid config: {exc}") from exc

    def to_dict(self):
        d = asdict(self)
        del d["out_dir"]
        d["fusion"] = self.fusion.to_dict()
        if self.rho_target != "profile-min":
            d["rho_target"] = {"absolute": float(self.rho_target)}
        return d


@dataclass
class PipelineResult:
    """Everything a run produced, for output writers and tests."""

    report: dict
    rho: object = None
    segmentation: object = None
    distance: np.ndarray = None
    profile: object = None
    fit: object = None
    residuals: object = None
    regions: object = None
    gmm: object = None
    histogram: object = None
    metrics: object = None

    def metrics_peaks(self):
        return self.metrics.peaks if self.metrics is not None else ()


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except InputError:
        raise
    except AnalysisError as exc:
        if exc.stage is None:
            exc.stage = name
        raise
    except (ValueError, FloatingPointError) as exc:
        raise AnalysisError(str(exc), stage=name) from exc


def analyze_grids(optical, sar, cfg=PipelineConfig()):
    """Run every stage on in-memory grids and return a PipelineResult."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", PipelineWarning)
        result = _analyze(optical, sar, cfg)
    msgs = []
    for w in caught:
        if issubclass(w.category, PipelineWarning) and str(w.message) not in msgs:
            msgs.append(str(w.message))
    result.report["warnings"] = msgs
    return result


def _analyze(optical, sar, cfg):
    check_alignment(optical, sar)
    fcfg = cfg.fusion
    res = optical.resolution

    edges = _stage("sobel", sobel_magnitude, normalize_minmax(optical))
    dens = _stage("edge_density", edge_density, edges, fcfg)
    rho = _stage("combine", combine, dens, normalize_minmax(sar), fcfg)
    rho = _stage("nlm", nlm_denoise, rho, fcfg)

    hist = _stage("histogram", build_histogram, rho, cfg.histogram_bins)
    try:
        gmm = fit_gmm_em(hist)
    except GmmCollapse as exc:
        warnings.warn(f"{exc}; using quantile thresholds", PipelineWarning)
        gmm = None
    except AnalysisError as exc:
        exc.stage = exc.stage or "gmm"
        raise
    th = derive_thresholds(gmm, hist, cfg.tau_center)

    seg = _stage("segmentation", segment, rho, th, cfg.min_component_px)
    dist = _stage("distance", distance_transform, seg.centers)
    profile = _stage("profile", extract_profile, dist, rho, seg.urban_final, res)
    d_min, rho_min, fallback = _stage("minima", find_local_minima, profile, cfg.minima_window)
    if fallback:
        warnings.warn("fewer than 2 local minima; regression uses all profile points",
                      PipelineWarning)
    fit = _stage("fit", fit_gradient, d_min, rho_min)
    if cfg.rho_target == "profile-min":
        rho_target = float(profile.mean_density.min())
    else:
        rho_target = float(cfg.rho_target)
    ld = _stage("ld", compute_ld, fit, rho_target)
    peaks = _stage("peaks", detect_peaks, profile, cfg.prominence_factor)
    morph, no_peak = classify_morphology(peaks)
    if no_peak:
        warnings.warn("no distinct peak in the density profile", PipelineWarning)
    metrics = GradientMetrics(fit.alpha, fit.beta, fit.r_squared, ld, rho_target,
                              peaks, morph, fallback, no_peak)
    residuals, regions = _stage("regions", analyze_regions, profile, fit)

    counts = seg.class_counts()
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "tool": {"name": "urbandensity", "version": __version__},
        "input": {"width": optical.width, "height": optical.height, "resolution_m": res},
        "config": cfg.to_dict(),
        "thresholds": th.to_dict(),
        "gmm": None if gmm is None else gmm.to_dict(),
        "segmentation": {
            "class_counts": counts,
            "urban_initial_px": int(seg.urban_initial.sum()),
            "urban_refined_px": int(seg.urban_refined.sum()),
            "urban_final_px": int(seg.urban_final.sum()),
            "center_px": int(seg.centers.sum()),
            "component_count": seg.n_components,
        },
        "profile": {
            "n_bins": len(profile),
            "max_distance_km": float(profile.bin_distance_km[-1]),
            "urban_mean_density": float(rho.values[seg.urban_final].mean()),
        },
        "metrics": metrics.to_dict(),
        "regions": regions.to_dict(),
        "warnings": [],
    }
    return PipelineResult(report, rho, seg, dist, profile, fit, residuals, regions, gmm, hist,
                          metrics)


def run_pipeline(cfg):
    """Load the configured inputs and analyze them."""
    if not cfg.optical or not cfg.sar:
        raise InputError("both optical and sar inputs are required")
    optical = load_grid(cfg.optical, "optical-gray", cfg.resolution_m)
    sar = load_grid(cfg.sar, "sar", cfg.resolution_m)
    return analyze_grids(optical, sar, cfg)


def report_json(report):
    """Canonical serialization: sorted keys, fixed float repr."""
    return json.dumps(_jsonable(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if not np.isfinite(v):
            return None
        return v
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def load_config(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise InputError(f"missing config file {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc}") from exc

