import numpy as np
import pytest

from ofqr.errors import DegenerateImage, ShapeMismatch
from ofqr.qr import decode, encode, otsu_threshold, sample_grid
from ofqr.qr.sampling import cell_means


def test_otsu_two_levels():
    v = np.array([0.1] * 30 + [0.9] * 70)
    t = otsu_threshold(v)
    assert 0.1 < t < 0.9


def test_otsu_matches_exhaustive_search(rng):
    v = np.concatenate([rng.normal(0.2, 0.05, 60), rng.normal(0.7, 0.1, 40)])
    s = np.sort(v)
    best, best_t = -1.0, None
    for i in range(1, s.size):
        a, b = s[:i], s[i:]
        score = i * (s.size - i) * (a.mean() - b.mean()) ** 2
        if score > best:
            best, best_t = score, 0.5 * (s[i - 1] + s[i])
    assert otsu_threshold(v) == pytest.approx(best_t, abs=1e-15)


def test_otsu_degenerate():
    with pytest.raises(DegenerateImage):
        otsu_threshold(np.full(10, 0.3))


@pytest.mark.parametrize("scale", [1, 2, 3])
def test_integer_upsampling_roundtrip(scale):
    grid = encode("sample me")
    img = np.kron(np.where(grid, 0.0, 1.0), np.ones((scale, scale)))
    assert np.array_equal(sample_grid(img), grid)


def test_non_integer_resolution():
    # 64 pixels over 29 modules, the default sensor raster
    from ofqr.optics import Geometry, object_on_sensor

    grid = encode("HELLO")
    img = object_on_sensor(grid, Geometry())
    assert np.array_equal(sample_grid(img), grid)
    assert decode(sample_grid(img)) == "HELLO"


def test_low_contrast_offset():
    grid = encode("contrast")
    img = 0.4 + 0.05 * np.where(grid, 0.0, 1.0)
    assert np.array_equal(sample_grid(img), grid)


def test_cell_means_box():
    img = np.zeros((10, 10))
    img[2:8, 2:8] = np.arange(36).reshape(6, 6)
    means = cell_means(img, modules=3, box=(2, 2, 8, 8))
    expect = np.arange(36).reshape(6, 6).reshape(3, 2, 3, 2).mean(axis=(1, 3))
    assert np.allclose(means, expect)


def test_too_coarse_image():
    with pytest.raises(ShapeMismatch):
        cell_means(np.zeros((20, 20)))
    with pytest.raises(ShapeMismatch):
        cell_means(np.zeros(20))
