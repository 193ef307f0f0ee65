import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from urbandensity.errors import AlignmentError, InputError
from urbandensity.raster import Grid, check_alignment, load_grid, normalize_minmax, save_grid

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def write_raw(tmp_path, values, w, h, res, name="g.f32"):
    path = tmp_path / name
    np.asarray(values, dtype="<f4").tofile(path)
    path.with_suffix(".json").write_text(json.dumps({"width": w, "height": h, "resolution_m": res}))
    return path


def test_load_png_8bit_scaling(tmp_path):
    path = tmp_path / "a.png"
    Image.fromarray(np.array([[0, 255], [128, 64]], dtype=np.uint8), mode="L").save(path)
    g = load_grid(path, "optical-gray", resolution=10)
    np.testing.assert_array_equal(g.values.ravel(), [0.0, 1.0, 128 / 255, 64 / 255])
    assert g.resolution == 10


def test_load_png_16bit_scaling(tmp_path):
    path = tmp_path / "b.png"
    Image.fromarray(np.array([[0, 65535], [32768, 1]], dtype=np.uint16)).save(path)
    g = load_grid(path, "sar", resolution=5)
    np.testing.assert_allclose(g.values.ravel(), [0.0, 1.0, 32768 / 65535, 1 / 65535])


def test_load_png_rgb_uses_luminance(tmp_path):
    path = tmp_path / "c.png"
    rgb = np.zeros((1, 3, 3), dtype=np.uint8)
    rgb[0, 0] = (255, 0, 0)
    rgb[0, 1] = (0, 255, 0)
    rgb[0, 2] = (0, 0, 255)
    Image.fromarray(rgb, mode="RGB").save(path)
    g = load_grid(path, "optical-gray", resolution=1)
    np.testing.assert_allclose(g.values.ravel(), [0.299, 0.587, 0.114])


def test_png_resolution_from_sidecar(tmp_path):
    path = tmp_path / "d.png"
    Image.fromarray(np.zeros((2, 3), dtype=np.uint8), mode="L").save(path)
    path.with_suffix(".json").write_text(json.dumps({"width": 3, "height": 2, "resolution_m": 20}))
    assert load_grid(path, "optical-gray").resolution == 20


def test_png_without_resolution_fails(tmp_path):
    path = tmp_path / "e.png"
    Image.fromarray(np.zeros((2, 2), dtype=np.uint8), mode="L").save(path)
    with pytest.raises(InputError, match="resolution"):
        load_grid(path, "optical-gray")


def test_load_raw_float(tmp_path):
    path = write_raw(tmp_path, np.arange(9), 3, 3, 5)
    g = load_grid(path, "raw-float")
    assert (g.width, g.height, g.resolution) == (3, 3, 5.0)
    np.testing.assert_array_equal(g.values, np.arange(9).reshape(3, 3))


def test_raw_nan_reports_index(tmp_path):
    vals = np.zeros(9)
    vals[4] = np.nan
    path = write_raw(tmp_path, vals, 3, 3, 5)
    with pytest.raises(InputError, match="non-finite value at index 4"):
        load_grid(path, "raw-float")


def test_raw_sidecar_dimension_mismatch(tmp_path):
    path = write_raw(tmp_path, np.zeros(9), 4, 3, 5)
    with pytest.raises(InputError, match="dimension mismatch"):
        load_grid(path)


def test_missing_file(tmp_path):
    with pytest.raises(InputError, match="missing file"):
        load_grid(tmp_path / "nope.f32")


def test_corrupt_png(tmp_path):
    path = tmp_path / "bad.png"
    path.write_bytes(b"\x89PNG\r\n\x1a\nnot really")
    with pytest.raises(InputError):
        load_grid(path, resolution=1)


def test_corrupt_sidecar(tmp_path):
    path = write_raw(tmp_path, np.zeros(4), 2, 2, 1)
    path.with_suffix(".json").write_text("{width: 2")
    with pytest.raises(InputError, match="corrupt sidecar"):
        load_grid(path)


def test_grid_rejects_bad_resolution():
    with pytest.raises(InputError):
        Grid(np.zeros((2, 2)), 0.0)


def test_grid_is_immutable():
    g = Grid(np.zeros((2, 2)), 1.0)
    with pytest.raises(ValueError):
        g.values[0, 0] = 1.0


@settings(max_examples=50, deadline=None)
@given(arrays(np.float32, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(width=32, allow_nan=False, allow_infinity=False)))
def test_raw_round_trip_is_bit_exact(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("rt") / "g.f32"
    g = Grid(values.astype(np.float64), 7.5)
    save_grid(g, path)
    back = load_grid(path)
    assert back.resolution == 7.5
    assert back.values.astype("<f4").tobytes() == values.astype("<f4").tobytes()


@pytest.mark.parametrize("vals, expected", [
    ([0, 5, 10], [0.0, 0.5, 1.0]),
    ([7, 7, 7], [0.0, 0.0, 0.0]),
    ([0, 1], [0.0, 1.0]),
])
def test_normalize_examples(vals, expected):
    g = Grid(np.array([vals], dtype=float), 1.0)
    np.testing.assert_array_equal(normalize_minmax(g).values.ravel(), expected)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)), elements=finite))
def test_normalize_range_and_idempotence(values):
    g = Grid(values, 1.0)
    n1 = normalize_minmax(g)
    assert n1.values.min() >= 0.0 and n1.values.max() <= 1.0
    n2 = normalize_minmax(n1)
    np.testing.assert_allclose(n2.values, n1.values, rtol=0, atol=1e-12)


def test_check_alignment():
    a = Grid(np.zeros((3, 3)), 5.0)
    check_alignment(a, Grid(np.ones((3, 3)), 5.0))
    check_alignment(a, Grid(np.ones((3, 3)), 5.0 * (1 + 1e-8)))
    with pytest.raises(AlignmentError, match="dimension"):
        check_alignment(a, Grid(np.zeros((4, 3)), 5.0))
    with pytest.raises(AlignmentError, match="resolution"):
        check_alignment(a, Grid(np.zeros((3, 3)), 10.0))
