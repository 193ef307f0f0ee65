"""Synthetic fixtures shared by the pipeline and acceptance tests."""

import numpy as np

from urbandensity.synthetic import Center, SyntheticSpec

# one center; peak density 2.0 so the fused field tops out well above 1.4
MONO = SyntheticSpec(512, 512, 10.0, (Center(256, 256, 2.0, 0.8),), seed=0)

# three separated centers of unequal strength; equal ones would all exceed
# the center threshold and collapse onto distance 0
POLY = SyntheticSpec(
    512, 512, 10.0,
    (Center(150, 170, 2.0, 1.0), Center(370, 150, 1.2, 1.0), Center(290, 410, 1.1, 1.0)),
    seed=0,
)

SMALL = SyntheticSpec(256, 256, 10.0, (Center(128, 128, 2.0, 1.5),), noise_sigma=0.02, seed=4)

FIXTURES = {"mono": MONO, "poly": POLY, "small": SMALL}

CHANGEPOINT = 100
N_BINS = 250
BIN_KM = 0.02  # changepoint at 2 km


def two_phase(kind="alternating", n=N_BINS, change=CHANGEPOINT, seed=0):
    """Calm residuals (within +-0.01) before ``change``, +-0.5 oscillation after."""
    rng = np.random.default_rng(seed)
    calm = rng.uniform(-0.01, 0.01, change)
    k = np.arange(n - change)
    if kind == "alternating":
        osc = 0.5 * (-1.0) ** k
    elif kind == "sine":
        osc = 0.5 * np.sin(2 * np.pi * k / 6)
    else:
        osc = rng.uniform(-0.5, 0.5, n - change)
    return np.concatenate([calm, osc])
