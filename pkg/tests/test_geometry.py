import math

import numpy as np
import pytest

import calorix as cx
from calorix import SpaceTimePoint
from calorix.errors import (
    DimensionMismatch,
    InvalidResolution,
    OffsetTooLarge,
)

# perimeter of the (2, 1) ellipse, frozen from the arithmetic-geometric
# series and confirmed by direct arc-length quadrature
ELLIPSE_PERIMETER = 9.688448220547675


# -- cross-sections ---------------------------------------------------------

def test_disk_radius_constant(disk):
    dirs = np.array([[1.0, 0.0], [0.0, 1.0], [-0.6, 0.8]])
    assert np.allclose(disk.radius(dirs), 1.0)


def test_ellipse_radius_extremes(ellipse):
    lo, hi = ellipse.radius_extremes()
    assert lo == pytest.approx(1.0)
    assert hi == pytest.approx(2.0)


def test_star_requires_positive_radius():
    with pytest.raises(ValueError):
        cx.CrossSection.star(1.0, (1.2,))


def test_star_with_zero_wobble_is_disk(disk, I2):
    star = cx.CrossSection.star(1.0)
    m1 = cx.build_mesh(disk, I2, 1.0, 32, 8, 8)
    m2 = cx.build_mesh(star, I2, 1.0, 32, 8, 8)
    assert np.allclose(m1.bpoints, m2.bpoints)
    assert np.allclose(m1.bnormals, m2.bnormals)
    assert np.allclose(m1.bweights, m2.bweights)


# -- boundary measures ------------------------------------------------------

def test_disk_boundary_measures(disk_mesh_I):
    assert float(np.sum(disk_mesh_I.bweights)) == pytest.approx(
        2.0 * math.pi, rel=1e-13)
    assert float(np.sum(disk_mesh_I.cap_weights)) == pytest.approx(
        math.pi, rel=1e-13)
    assert float(np.sum(disk_mesh_I.lateral_weights())) == pytest.approx(
        2.0 * math.pi * 1.0, rel=1e-13)


def test_ellipse_perimeter_series_oracle(ellipse_mesh_I):
    assert float(np.sum(ellipse_mesh_I.bweights)) == pytest.approx(
        ELLIPSE_PERIMETER, rel=1e-12)


def test_cap_rule_integrates_polynomial(disk_mesh_I):
    # integral of x^2 + y^2 over the unit disk is pi/2
    pts = disk_mesh_I.cap_points
    val = float(np.sum(disk_mesh_I.cap_weights * np.sum(pts**2, axis=1)))
    assert val == pytest.approx(math.pi / 2.0, rel=1e-13)


def test_sphere_measures(ball_mesh):
    assert float(np.sum(ball_mesh.bweights)) == pytest.approx(
        4.0 * math.pi, rel=1e-12)
    assert float(np.sum(ball_mesh.cap_weights)) == pytest.approx(
        4.0 * math.pi / 3.0, rel=1e-12)


def test_sphere_rule_spectral_on_smooth(I3):
    # integral of exp(z) over the unit sphere is 4 pi sinh(1)
    exact = 4.0 * math.pi * math.sinh(1.0)
    vals = {}
    for m in (32, 64):
        mesh = cx.build_mesh(cx.CrossSection.ball(1.0), I3, 1.0, m, 4, 4)
        vals[m] = float(np.sum(mesh.bweights * np.exp(mesh.bpoints[:, 2])))
    assert abs(vals[64] - exact) < 1e-12
    assert abs(vals[32] - vals[64]) / abs(vals[64]) < 1e-6


def test_ellipsoid_area_converges(I3):
    cs = cx.CrossSection.ellipsoid(1.5, 1.0, 0.75)
    areas = {}
    for m in (48, 96, 144):
        mesh = cx.build_mesh(cs, I3, 1.0, m, 4, 4)
        areas[m] = float(np.sum(mesh.bweights))
    assert abs(areas[48] - areas[96]) / areas[96] < 1e-6
    assert abs(areas[96] - areas[144]) / areas[144] < 1e-13


# -- frames -----------------------------------------------------------------

def test_ellipse_normals_match_implicit_gradient(ellipse_mesh_I):
    pts = ellipse_mesh_I.bpoints
    nrm = ellipse_mesh_I.bnormals
    grad = np.stack([2.0 * pts[:, 0] / 4.0, 2.0 * pts[:, 1]], axis=1)
    grad /= np.linalg.norm(grad, axis=1, keepdims=True)
    # stored normals point inward
    assert np.allclose(nrm, -grad, atol=1e-12)
    assert np.allclose(np.linalg.norm(nrm, axis=1), 1.0, atol=1e-14)


def test_ellipsoid_normals_match_implicit_gradient(I3):
    cs = cx.CrossSection.ellipsoid(1.5, 1.0, 0.75)
    mesh = cx.build_mesh(cs, I3, 1.0, 24, 4, 4)
    pts, nrm = mesh.bpoints, mesh.bnormals
    axes = np.array([1.5, 1.0, 0.75])
    grad = 2.0 * pts / axes[None, :]**2
    grad /= np.linalg.norm(grad, axis=1, keepdims=True)
    assert np.allclose(nrm, -grad, atol=1e-12)


def test_conormals_are_matrix_times_normal(disk_mesh_B, B2):
    assert np.allclose(disk_mesh_B.bconormals,
                       disk_mesh_B.bnormals @ B2.a.T, atol=1e-14)


def test_arc_jacobian_matches_finite_difference(ellipse):
    h = 1e-6
    for phi in (0.3, 1.2, 4.0):
        p0 = ellipse.boundary_frame(np.array([phi - h]))[0][0]
        p1 = ellipse.boundary_frame(np.array([phi + h]))[0][0]
        speed = float(np.linalg.norm(p1 - p0) / (2.0 * h))
        jac = float(ellipse.boundary_frame(np.array([phi]))[1][0])
        assert jac == pytest.approx(speed, rel=1e-8)


# -- mesh structure ---------------------------------------------------------

def test_time_rule_is_open_interval(disk_mesh_I):
    assert disk_mesh_I.tnodes.min() > 0.0
    assert disk_mesh_I.tnodes.max() < disk_mesh_I.T
    assert float(np.sum(disk_mesh_I.tweights)) == pytest.approx(1.0)


def test_region_nodes_times(disk_mesh_I):
    _, t2, _ = disk_mesh_I.region_nodes("sigma2")
    _, t1, _ = disk_mesh_I.region_nodes("sigma1")
    assert np.all(t2 == 0.0)
    assert np.all(t1 == disk_mesh_I.T)
    with pytest.raises(ValueError):
        disk_mesh_I.region_nodes("sigma9")


def test_lateral_index_round_trip(disk_mesh_I):
    K = disk_mesh_I.tnodes.shape[0]
    flat = 5 * K + 3
    assert disk_mesh_I.lateral_index(flat) == (5, 3)


def test_locate_classifications(disk_mesh_I):
    inside = disk_mesh_I.locate((np.array([0.2, 0.1]), 0.5))
    assert inside.kind == "interior"
    outside = disk_mesh_I.locate((np.array([1.5, 0.0]), 0.5))
    assert outside.kind == "exterior"
    wall = disk_mesh_I.locate((np.array([1.0, 0.0]), 0.5))
    assert wall.kind == "boundary" and wall.region == "sigma3"
    bottom = disk_mesh_I.locate((np.array([0.2, 0.1]), 0.0))
    assert bottom.kind == "boundary" and bottom.region == "sigma2"
    top = disk_mesh_I.locate((np.array([0.2, 0.1]), disk_mesh_I.T))
    assert top.kind == "boundary" and top.region == "sigma1"
    before = disk_mesh_I.locate((np.array([0.2, 0.1]), -0.5))
    assert before.kind == "exterior"


def test_offset_point_moves_along_normal(disk_mesh_I):
    K = disk_mesh_I.tnodes.shape[0]
    flat = 7 * K + 10
    b, _ = disk_mesh_I.lateral_index(flat)
    inner = disk_mesh_I.offset_point(flat, 0.01)
    outer = disk_mesh_I.offset_point(flat, -0.01)
    assert disk_mesh_I.locate(inner).kind == "interior"
    assert disk_mesh_I.locate(outer).kind == "exterior"
    with pytest.raises(OffsetTooLarge):
        disk_mesh_I.offset_point(flat, 10.0)


def test_build_mesh_guards(disk, C3, I2):
    with pytest.raises(DimensionMismatch):
        cx.build_mesh(disk, C3, 1.0, 16, 8, 8)
    with pytest.raises(InvalidResolution):
        cx.build_mesh(disk, I2, 1.0, 1, 8, 8)
    with pytest.raises(InvalidResolution):
        cx.build_mesh(disk, I2, -1.0, 16, 8, 8)


def test_fingerprint_tracks_inputs(disk, I2):
    m1 = cx.build_mesh(disk, I2, 1.0, 16, 8, 8)
    m2 = cx.build_mesh(disk, I2, 1.0, 16, 8, 8)
    m3 = cx.build_mesh(disk, I2, 1.0, 24, 8, 8)
    assert m1.fingerprint() == m2.fingerprint()
    assert m1.fingerprint() != m3.fingerprint()


def test_mesh_to_csv(tmp_path, disk_mesh_I):
    path = tmp_path / "mesh.csv"
    cx.mesh_to_csv(disk_mesh_I, path)
    text = path.read_text()
    assert text.count("\n") > disk_mesh_I.n_boundary
    assert text.splitlines()[0].startswith("region")
