import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from oracles import brute_close_unbounded, brute_dilate, flood_fill_components
from urbandensity.errors import AnalysisError
from urbandensity.gmm import Thresholds
from urbandensity.segmentation import (
    TERRAIN, URBAN, WATER, classify, close, dilate, filter_components, identify_centers,
    refine_urban_mask, save_segmentation_png, segment,
)

TH = Thresholds(0.51, 1.02, 1.4)
masks = arrays(np.bool_, st.tuples(st.integers(1, 20), st.integers(1, 20)))


@pytest.mark.parametrize("rho, cls", [(0.3, WATER), (0.7, TERRAIN), (1.02, URBAN), (0.51, TERRAIN),
                                      (1.5, URBAN), (0.5099, WATER)])
def test_classify_examples(rho, cls):
    assert classify(np.array([[rho]]), TH)[0, 0] == cls


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (6, 7), elements=st.floats(0, 2)))
def test_classify_partitions(rho):
    c = classify(rho, TH)
    counts = [(c == k).sum() for k in (WATER, TERRAIN, URBAN)]
    assert sum(counts) == rho.size


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (6, 7), elements=st.floats(0, 2)), st.floats(0.6, 1.9), st.floats(0, 0.5))
def test_raising_urban_threshold_shrinks_urban(rho, tu, delta):
    lo = classify(rho, Thresholds(0.5, tu)) == URBAN
    hi = classify(rho, Thresholds(0.5, tu + delta)) == URBAN
    assert not (hi & ~lo).any()


def test_refine_single_pixel():
    m = np.zeros((9, 9), dtype=bool)
    m[4, 4] = True
    out = refine_urban_mask(m)
    expected = np.zeros((9, 9), dtype=bool)
    expected[2:7, 2:7] = True
    assert np.array_equal(dilate(m), expected)
    assert np.array_equal(out, expected)


def test_refine_empty():
    assert not refine_urban_mask(np.zeros((8, 8), dtype=bool)).any()


@settings(max_examples=60, deadline=None)
@given(masks)
def test_dilate_matches_brute(m):
    assert np.array_equal(dilate(m), brute_dilate(m, 2))


@settings(max_examples=60, deadline=None)
@given(masks)
def test_close_matches_unbounded_brute(m):
    assert np.array_equal(close(m), brute_close_unbounded(m, 2))


@settings(max_examples=60, deadline=None)
@given(masks)
def test_morphology_extensive_and_idempotent(m):
    d = dilate(m)
    c = close(m)
    r = refine_urban_mask(m)
    assert not (m & ~d).any()
    assert not (m & ~c).any()
    assert not (m & ~r).any()
    assert np.array_equal(close(c), c)


def blob(mask, y, x, h, w):
    mask[y:y + h, x:x + w] = True


def test_filter_components_big_and_small():
    m = np.zeros((40, 40), dtype=bool)
    blob(m, 2, 2, 10, 15)  # 150 px
    blob(m, 25, 25, 4, 5)  # 20 px
    out, n = filter_components(m)
    assert n == 1
    assert out.sum() == 150 and out[2, 2] and not out[25, 25]
    assert sorted(flood_fill_components(m)) == [20, 150]


def test_filter_components_boundary_and_diagonal():
    m = np.zeros((30, 30), dtype=bool)
    blob(m, 0, 0, 10, 10)  # exactly 100
    out, n = filter_components(m)
    assert n == 1 and out.sum() == 100
    # two 50-px blocks touching at a corner form one 8-connected component
    d = np.zeros((30, 30), dtype=bool)
    blob(d, 0, 0, 5, 10)
    blob(d, 5, 10, 5, 10)
    out, n = filter_components(d)
    assert n == 1 and out.sum() == 100


def test_filter_components_empty():
    out, n = filter_components(np.zeros((5, 5), dtype=bool))
    assert n == 0 and not out.any()


@settings(max_examples=60, deadline=None)
@given(masks, st.integers(1, 30))
def test_filter_components_flood_fill_recount(m, min_px):
    out, n = filter_components(m, min_px)
    areas = flood_fill_components(out)
    assert len(areas) == n
    assert all(a >= min_px for a in areas)
    assert sum(a for a in flood_fill_components(m) if a >= min_px) == out.sum()


def test_centers_strict_and_conjunctive():
    rho = np.array([[1.5, 1.5, 1.4, 1.41]])
    final = np.array([[True, False, True, True]])
    c = identify_centers(rho, final, TH)
    assert c.tolist() == [[True, False, False, True]]


def test_no_centers_is_an_error():
    with pytest.raises(AnalysisError, match="no urban centers"):
        identify_centers(np.full((3, 3), 1.4), np.ones((3, 3), dtype=bool), TH)


def make_scene():
    rho = np.full((40, 40), 0.7)
    rho[:5] = 0.2
    rho[10:30, 10:30] = 1.2
    rho[18:22, 18:22] = 1.6
    rho[35, 35] = 1.2  # isolated speck, filtered
    return rho


def test_segment_invariants():
    seg = segment(make_scene(), TH)
    assert not (seg.urban_initial & ~seg.urban_refined).any()
    assert not (seg.centers & ~seg.urban_final).any()
    assert not seg.urban_final[35, 35]
    assert all(a >= 100 for a in flood_fill_components(seg.urban_final))
    assert sum(seg.class_counts().values()) == 1600
    assert seg.centers.sum() == 16


def test_segment_everything_filtered():
    rho = np.full((20, 20), 0.7)
    rho[5, 5] = 1.6
    with pytest.raises(AnalysisError, match="no urban area"):
        segment(rho, TH)


def test_segmentation_png(tmp_path):
    seg = segment(make_scene(), TH)
    save_segmentation_png(seg, tmp_path / "s.png")
    img = np.array(Image.open(tmp_path / "s.png"))
    assert img.shape == (40, 40)
    assert img[20, 20] == 4 and img[0, 0] == WATER and img[35, 35] == 0
    assert img[12, 12] == URBAN
