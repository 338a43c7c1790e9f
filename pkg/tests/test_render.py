import numpy as np
import pytest

from parafatou.maps import PolynomialMap1D
from parafatou.render import CAP, colorize, param_curve, petal_counts, pixel_centres, render

CUBIC = PolynomialMap1D((1, 1, 1))


def test_pixel_centres_orientation():
    zs = pixel_centres((-1, -1, 1, 1), 4, 2)
    assert zs.shape == (2, 4)
    assert zs[0, 0] == complex(-0.75, 0.5) and zs[1, 3] == complex(0.75, -0.5)


def test_single_pixel_at_origin():
    counts = petal_counts(CUBIC, (-1, -1, 1, 1), 1, 1)
    assert counts.shape == (1, 1) and counts[0, 0] == 0


def test_negative_axis_enters_petal():
    # points on the negative real axis are attracted to 0 along the petal
    counts = petal_counts(CUBIC, (-0.5, -0.01, -0.1, 0.01), 8, 1)[0]
    assert np.all((counts > 0) & (counts < CAP))
    # farther points need more steps
    assert np.all(np.diff(counts) <= 0)


def test_positive_axis_escapes():
    counts = petal_counts(CUBIC, (0.5, -0.01, 1.0, 0.01), 4, 1)[0]
    assert np.all(counts == -1)


def test_colorize_special_classes():
    img = colorize(np.array([[-1, 0, CAP]]))
    assert img.shape == (1, 3, 3) and img.dtype == np.uint8
    assert not np.array_equal(img[0, 0], img[0, 2])


def test_render_deterministic():
    a = render(CUBIC, "petal", (-1, -1, 1, 1), 24, 16)
    b = render(CUBIC, "petal", (-1, -1, 1, 1), 24, 16)
    assert a.shape == (16, 24, 3) and np.array_equal(a, b)


def test_param_curve_inside_petal():
    pts = param_curve(CUBIC, rays=3, points=10)
    assert len(pts) > 0 and np.all(np.abs(pts) < 0.2)


def test_render_rejects_bad_input():
    with pytest.raises(ValueError):
        render(CUBIC, "nope", (-1, -1, 1, 1), 2, 2)
    with pytest.raises(ValueError):
        pixel_centres((1, -1, -1, 1), 2, 2)
