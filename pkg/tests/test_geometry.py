import math

import numpy as np
import pytest

from regobs.errors import GeometryError
from regobs.geometry import Box, box_from_bounds, interval, rectangle, unit_square
from regobs.quadrature import adaptive_quad, box_quad, composite_gauss, composite_gauss_box


def test_box_properties():
    b = rectangle((0.25, 0.75), (0.0, 0.5))
    assert b.dim == 2
    assert b.lengths == pytest.approx((0.5, 0.5))
    assert b.center == pytest.approx((0.5, 0.25))
    assert b.measure == pytest.approx(0.25)
    assert unit_square().contains_box(b)
    assert not b.contains_box(unit_square())


def test_open_and_closed_membership():
    b = interval(0.0, 1.0)
    assert b.contains_point((0.0,))
    assert not b.contains_point((0.0,), open_=True)
    assert b.on_boundary((1.0,))
    assert not b.on_boundary((0.5,))


@pytest.mark.parametrize("bounds", [[[1.0, 0.0]], [[0.0, 0.0]], [[0, 1], [0, 1], [0, 1]]])
def test_bad_bounds_rejected(bounds):
    with pytest.raises(GeometryError):
        box_from_bounds(bounds)


def test_overlap_detection():
    assert interval(0, 0.5).overlaps(interval(0.4, 1.0))
    assert not interval(0, 0.4).overlaps(interval(0.5, 1.0))


def test_json_round_trip():
    b = rectangle((0.1, 0.9), (0.2, 0.3))
    assert box_from_bounds(b.to_json()) == b


def test_quadrature_helpers_agree():
    f = lambda x: np.sin(7 * x) ** 2 * np.exp(-x)
    ref = adaptive_quad(lambda x: math.sin(7 * x) ** 2 * math.exp(-x), 0.0, 2.0)
    assert composite_gauss(f, 0.0, 2.0, tol=1e-13) == pytest.approx(ref, abs=1e-11)


def test_box_quadrature_2d():
    box = rectangle((0.0, 1.0), (0.0, 2.0))
    exact = 2.0 * (1.0 / 3.0)
    assert box_quad(lambda x, y: x * x, box) == pytest.approx(exact, abs=1e-11)
    val = composite_gauss_box(lambda p: p[:, 0] ** 2, box, tol=1e-13)
    assert float(np.squeeze(val)) == pytest.approx(exact, abs=1e-11)
