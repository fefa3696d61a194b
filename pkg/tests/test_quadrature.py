import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from calorix.quadrature import (
    composite_gauss,
    gauss_hermite,
    gauss_legendre,
    gamma_half_integer,
    graded_edges_toward,
    periodic_trapezoid,
    unit_sphere_area,
)


def test_gauss_legendre_monomials():
    x, w = gauss_legendre(6, 0.0, 1.0)
    # frozen antiderivative values on [0, 1]
    for k, exact in [(0, 1.0), (1, 0.5), (5, 1.0 / 6.0), (11, 1.0 / 12.0)]:
        assert abs(float(np.sum(w * x**k)) - exact) < 1e-15


def test_gauss_legendre_interval_shift():
    x, w = gauss_legendre(8, -2.0, 3.0)
    assert abs(float(np.sum(w)) - 5.0) < 1e-13
    assert x.min() > -2.0 and x.max() < 3.0


def test_periodic_trapezoid_trig():
    th, w = periodic_trapezoid(32)
    assert abs(float(np.sum(w)) - 2.0 * math.pi) < 1e-14
    # exact for trig polynomials below the aliasing order
    assert abs(float(np.sum(w * np.cos(th) ** 2)) - math.pi) < 1e-13
    assert abs(float(np.sum(w * np.sin(5 * th) * np.cos(3 * th)))) < 1e-13


def test_gauss_hermite_moments():
    u, w = gauss_hermite(20)
    assert abs(float(np.sum(w)) - math.sqrt(math.pi)) < 1e-13
    assert abs(float(np.sum(w * u**2)) - math.sqrt(math.pi) / 2.0) < 1e-13


def test_composite_gauss_matches_single_panel():
    edges = np.linspace(0.0, 1.0, 5)
    x, w = composite_gauss(edges, 10)
    assert x.shape == (40,)
    f = np.exp(x)
    assert abs(float(np.sum(w * f)) - (math.e - 1.0)) < 1e-14


def test_graded_edges_cluster_toward_center():
    edges = graded_edges_toward(0.0, 1.0, 6)
    gaps = np.diff(np.sort(edges))
    assert gaps.min() > 0.0
    # geometric refinement toward the target point
    assert gaps.min() < 0.05 * gaps.max()


def test_gamma_half_integer_values():
    assert gamma_half_integer(1) == pytest.approx(math.sqrt(math.pi))
    assert gamma_half_integer(2) == 1.0
    assert gamma_half_integer(3) == pytest.approx(math.sqrt(math.pi) / 2.0)
    assert gamma_half_integer(7) == pytest.approx(math.gamma(3.5))


def test_unit_sphere_area():
    assert unit_sphere_area(2) == pytest.approx(2.0 * math.pi)
    assert unit_sphere_area(3) == pytest.approx(4.0 * math.pi)
    assert unit_sphere_area(4) == pytest.approx(2.0 * math.pi**2)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=8))
def test_gauss_legendre_exact_on_polynomials(coeffs):
    # an m-point rule integrates degree <= 2m-1 exactly
    m = 6
    x, w = gauss_legendre(m, 0.0, 1.0)
    quad = float(np.sum(w * np.polyval(coeffs, x)))
    exact = float(np.polyval(np.polyint(np.array(coeffs)), 1.0))
    assert abs(quad - exact) < 1e-12 * max(1.0, sum(abs(c) for c in coeffs))
