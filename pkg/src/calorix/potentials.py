"""Parabolic layer potentials on the cylinder boundary and their jump probes.

The lateral (double, single, conormal-of-single) potentials integrate a
density against kernels built from the fundamental solution.  For densities
with a closed-form generator the time integral is computed with the
exponential substitution u = <A^-1(x-y), (x-y)> / (4 (t-s)), which turns the
sharply peaked profile (t-s)^(-p) exp(-u) into a smooth integrand on a log
grid; targets closer to the lateral boundary than a few angular spacings
additionally get a graded angular rule centered at the nearest boundary
point.  Sample-only densities fall back to the plain tensor rule of the
mesh, which is accurate for targets well separated from the boundary.

Adjoint (star) variants integrate against the time-reversed kernel; they are
computed directly, and tests compare them with the forward operators on a
time-reflected cylinder.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import SpaceTimePoint, fundamental_solution, conormal_kernel_source
from .errors import CornerTooClose, DimensionMismatch, DimensionTooSmall, TargetOnBoundary
from .quadrature import (
    composite_gauss,
    gauss_hermite,
    gauss_legendre,
    graded_edges_toward,
    periodic_trapezoid,
    unit_sphere_area,
)

_U_CAP = 45.0  # exp(-45) ~ 3e-20: truncation point of the substituted time integral
_GH_POINTS = 22
_NEAR_FACTOR = 3.0


@dataclass
class DensityField:
    """Density on one boundary region: samples at the region's nodes plus an
    optional closed-form generator (points, times, normals) -> values used for
    resampling on refined rules."""

    region: str
    values: np.ndarray
    generator: object = None

    @classmethod
    def from_function(cls, mesh, region, fn):
        pts, ts, _ = mesh.region_nodes(region)
        normals = mesh.lateral_normals() if region == "sigma3" else None
        vals = np.asarray(fn(pts, ts, normals), dtype=float)
        return cls(region, vals, fn)

    @classmethod
    def constant(cls, mesh, region, value=1.0):
        value = float(value)
        return cls.from_function(mesh, region, lambda p, t, nu: np.full(p.shape[0], value))

    @classmethod
    def from_values(cls, mesh, region, values):
        pts, _, _ = mesh.region_nodes(region)
        vals = np.asarray(values, dtype=float)
        if vals.shape[0] != pts.shape[0]:
            raise DimensionMismatch("value count does not match the region's node count")
        return cls(region, vals, None)


class CaloricExponentialField:
    """u(x,t) = exp(<x, xi> + sign t <A xi, xi>); H-caloric for sign +1,
    adjoint-caloric for sign -1."""

    def __init__(self, A, xi, sign=+1):
        self.A = A
        self.xi = np.asarray(xi, dtype=float).reshape(-1)
        self.sign = int(sign)
        self.rate = float(self.xi @ A.a @ self.xi)

    def value(self, points, times):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        times = np.asarray(times, dtype=float)
        return np.exp(points @ self.xi + self.sign * times * self.rate)

    def conormal(self, points, times, normals):
        # <A nu, grad u> = <nu, A xi> u
        slope = np.atleast_2d(np.asarray(normals, dtype=float)) @ (self.A.a @ self.xi)
        return slope * self.value(points, times)


class TranslatedKernelField:
    """Caloric field from a shifted fundamental solution.

    adjoint=False: u(x,t) = G(x - x0, t - t0) with t0 < 0, solves H u = 0 on
    the cylinder.  adjoint=True: u(x,t) = G(x0 - x, t0 - t) with t0 > T,
    solves H* u = 0.
    """

    def __init__(self, A, source_x, source_t, adjoint=False):
        self.A = A
        self.x0 = np.asarray(source_x, dtype=float).reshape(-1)
        self.t0 = float(source_t)
        self.adjoint = bool(adjoint)

    def _tau(self, times):
        return (self.t0 - times) if self.adjoint else (times - self.t0)

    def value(self, points, times):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        times = np.asarray(times, dtype=float)
        return fundamental_solution(self.A, points - self.x0[None, :], self._tau(times))

    def conormal(self, points, times, normals):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        normals = np.atleast_2d(np.asarray(normals, dtype=float))
        times = np.asarray(times, dtype=float)
        z = points - self.x0[None, :]
        tau = self._tau(times)
        # G is even in its space argument, so the x-gradient ignores the
        # time orientation: d/dnubar = -<nu, x - x0> / (2 tau) G either way.
        proj = np.einsum("ij,ij->i", normals, z)
        return -proj / (2.0 * tau) * self.value(points, times)


@dataclass
class JumpProbeReport:
    """Two-sided limit study of a lateral potential at one boundary node."""

    kind: str
    node_index: int
    x0: np.ndarray
    t0: float
    offsets: np.ndarray
    interior_values: np.ndarray
    exterior_values: np.ndarray
    interior_limit: float
    exterior_limit: float
    jump_estimate: float
    predicted_jump: float

    @property
    def error(self):
        return abs(self.jump_estimate - self.predicted_jump)

    @property
    def relative_error(self):
        scale = max(abs(self.predicted_jump), 1e-30)
        return self.error / scale

    def to_rows(self):
        rows = []
        for h, vi, ve in zip(self.offsets, self.interior_values, self.exterior_values):
            rows.append([self.node_index, h, vi, ve, "", "", ""])
        rows.append(
            [self.node_index, 0.0, self.interior_limit, self.exterior_limit,
             self.jump_estimate, self.predicted_jump, self.error]
        )
        return rows


def richardson(values, ratio=2.0):
    """Limit of a sequence sampled at steps h, h/ratio, h/ratio^2, ...
    assuming a smooth expansion in h."""
    table = [float(v) for v in values]
    k = 1
    while len(table) > 1:
        fac = ratio**k
        table = [(fac * b - a) / (fac - 1.0) for a, b in zip(table[:-1], table[1:])]
        k += 1
    return table[0]


# ---------------------------------------------------------------------------
# lateral engine


def _kernel_exponent(kind, n):
    if kind == "single":
        return n / 2.0
    return 1.0 + n / 2.0  # double layer and conormal-of-single


def _geometry_factor(kind, x, pts, normals, nu_fixed):
    if kind == "single":
        return np.ones(pts.shape[0])
    diff = x[None, :] - pts
    if kind == "double":
        return 0.5 * np.einsum("ij,ij->i", normals, diff)
    if kind == "conormal_fixed":
        return -0.5 * diff @ nu_fixed
    raise ValueError(f"unknown kernel kind {kind!r}")


def _near_boundary_rule(cs, x, m_angular, depth=None):
    """Graded composite Gauss rule in the boundary parameter, refined toward
    the boundary point nearest to x (planar sections only)."""
    coarse = max(512, 4 * m_angular)
    phis, _ = periodic_trapezoid(coarse)
    pts, _, _ = cs.boundary_frame(phis)
    d2 = np.sum((pts - x[None, :]) ** 2, axis=1)
    i0 = int(np.argmin(d2))
    lo = phis[i0] - 2.0 * math.pi / coarse
    hi = phis[i0] + 2.0 * math.pi / coarse

    def dist2(phi):
        p, _, _ = cs.boundary_frame(np.array([phi]))
        return float(np.sum((p[0] - x) ** 2))

    # golden-section polish of the nearest parameter
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = dist2(c), dist2(d)
    for _ in range(48):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = dist2(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = dist2(d)
    phi_star = 0.5 * (a + b)
    dist = math.sqrt(min(fc, fd))

    if depth is None:
        scale = max(dist, 1e-9) / max(cs.radius_extremes()[1], 1e-12)
        depth = int(min(48, max(8, math.ceil(math.log2(math.pi / max(scale, 1e-12))) + 1)))
    edges = graded_edges_toward(phi_star, math.pi, depth)
    npts = max(8, m_angular // 12)
    nodes, wgl = composite_gauss(edges, npts)
    bp, jac, inward = cs.boundary_frame(nodes)
    return bp, wgl * jac, inward, depth


def _barycentric_matrix(nodes, times):
    """Rows: evaluation times; columns: interpolation nodes.  Row j holds the
    barycentric Lagrange weights that map nodal samples to a value at
    times[j].  Exact node hits degenerate to a unit row."""
    nodes = np.asarray(nodes, dtype=float)
    d = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(d, 1.0)
    logs = np.sum(np.log(np.abs(d)), axis=1)
    signs = np.prod(np.sign(d), axis=1)
    w = signs * np.exp(-(logs - logs.min()))
    diff = times[:, None] - nodes[None, :]
    hit_rows, hit_cols = np.nonzero(diff == 0.0)
    diff[hit_rows, hit_cols] = 1.0
    m = w[None, :] / diff
    m /= m.sum(axis=1, keepdims=True)
    if hit_rows.size:
        m[hit_rows, :] = 0.0
        m[hit_rows, hit_cols] = 1.0
    return m


def _lateral_generator(mesh, A, phi, x, t, kind, nu_fixed, star, rule):
    """Weighted boundary sum with the substituted time integral.

    rule = (points, weights, normals) overrides the boundary quadrature.
    """
    n = A.n
    T = mesh.T
    tau_hi = (T - t) if star else t
    if tau_hi <= 0.0:
        return 0.0
    tau_lo = max(-t, 0.0) if star else max(t - T, 0.0)

    if rule is None:
        pts, wts, normals = mesh.bpoints, mesh.bweights, mesh.bnormals
    else:
        pts, wts, normals = rule

    q = A.qform_inv(x[None, :] - pts)
    qmin = float(q.min())
    scale = max(mesh.diameter, 1.0)
    if qmin <= (1e-12 * scale) ** 2:
        raise TargetOnBoundary("lateral potential evaluated on the boundary itself")
    u0 = q / (4.0 * tau_hi)
    u0min = float(u0.min())
    if u0min >= _U_CAP:
        return 0.0  # kernel dead at this separation
    v_max = math.log(_U_CAP / u0min)
    if tau_lo > 0.0:
        v_max = min(v_max, math.log(tau_hi / tau_lo))
    if v_max <= 0.0:
        return 0.0

    panels = max(4, int(math.ceil(v_max)))
    vnodes, vw = composite_gauss(np.linspace(0.0, v_max, panels + 1), 10)
    tau_v = tau_hi * np.exp(-vnodes)
    times = (t + tau_v) if star else (t - tau_v)

    p = _kernel_exponent(kind, n)
    with np.errstate(under="ignore"):
        profile = np.exp((p - 1.0) * vnodes[None, :] - u0[:, None] * np.exp(vnodes)[None, :])

    npts, nv = pts.shape[0], vnodes.shape[0]
    if phi.generator is not None:
        flat_pts = np.repeat(pts, nv, axis=0)
        flat_nrm = np.repeat(normals, nv, axis=0)
        flat_t = np.tile(times, npts)
        dens = np.asarray(phi.generator(flat_pts, flat_t, flat_nrm), dtype=float).reshape(npts, nv)
    else:
        # nodal samples carry no angular generator, so the boundary rule is
        # the mesh's own; interpolate in time along each boundary fibre
        interp = _barycentric_matrix(mesh.tnodes, times)
        dens = phi.values.reshape(npts, mesh.tnodes.shape[0]) @ interp.T

    inner = tau_hi ** (1.0 - p) * (profile * dens) @ vw
    geom = _geometry_factor(kind, x, pts, normals, nu_fixed)
    pref = (4.0 * math.pi) ** (-n / 2.0) / math.sqrt(A.det)
    return float(pref * np.sum(wts * geom * inner))


def _lateral_potential(mesh, A, phi, target, kind, nu_fixed=None, star=False, rule=None):
    if phi.region != "sigma3":
        raise DimensionMismatch("lateral potentials need a density on sigma3")
    x, t = (target.x, target.t) if isinstance(target, SpaceTimePoint) else target
    x = np.asarray(x, dtype=float).reshape(-1)
    t = float(t)
    if rule is None and phi.generator is not None and mesh.cs.n == 2:
        if mesh.distance_to_wall(x) < _NEAR_FACTOR * mesh.boundary_spacing:
            bp, bw, bn, _ = _near_boundary_rule(mesh.cs, x, mesh.m_angular)
            rule = (bp, bw, bn)
    return _lateral_generator(mesh, A, phi, x, t, kind, nu_fixed, star, rule)


# ---------------------------------------------------------------------------
# public lateral operators


def double_layer(mesh, A, phi, target):
    """Double layer: integral over sigma3 of phi times the source-conormal
    derivative of G; zero once causality empties the time window."""
    return _lateral_potential(mesh, A, phi, target, "double")


def single_layer(mesh, A, phi, target):
    """Single layer: integral over sigma3 of phi times G."""
    return _lateral_potential(mesh, A, phi, target, "single")


def double_layer_star(mesh, A, phi, target):
    """Adjoint double layer (time-reversed kernel, conormal at the node)."""
    return _lateral_potential(mesh, A, phi, target, "double", star=True)


def single_layer_star(mesh, A, phi, target):
    """Adjoint single layer."""
    return _lateral_potential(mesh, A, phi, target, "single", star=True)


def conormal_derivative_single_layer(mesh, A, phi, node_index, h, rule=None):
    """Conormal derivative of the single layer at lateral node i, offset h.

    The derivative direction is frozen at the node (conormal A nu(x0)); the
    evaluation point is x0 + h nu(x0) at the node's time.
    """
    b, k = mesh.lateral_index(int(node_index))
    x0 = mesh.bpoints[b]
    nu = mesh.bnormals[b]
    t0 = float(mesh.tnodes[k])
    x = x0 + float(h) * nu
    return _lateral_potential(mesh, A, phi, (x, t0), "conormal_fixed", nu_fixed=nu, rule=rule)


# ---------------------------------------------------------------------------
# cap potentials


def _cap_value(mesh, A, phi, target, star):
    x, t = (target.x, target.t) if isinstance(target, SpaceTimePoint) else target
    x = np.asarray(x, dtype=float).reshape(-1)
    t = float(t)
    T = mesh.T
    w = (T - t) if star else t
    if w <= 0.0:
        return 0.0
    sample_t = T if star else 0.0

    if phi.generator is not None and mesh.radial_gap(x) < 0.0:
        clearance = mesh.distance_to_wall(x)
        if 12.0 * math.sqrt(w * A.eig_max) <= clearance:
            # Gaussian fits inside the cross-section: tensor Gauss-Hermite
            u, wu = gauss_hermite(_GH_POINTS)
            grids = np.meshgrid(*([u] * A.n), indexing="ij")
            uu = np.stack([g.reshape(-1) for g in grids], axis=-1)
            wwt = wu
            for _ in range(A.n - 1):
                wwt = np.multiply.outer(wwt, wu)
            pts = x[None, :] + 2.0 * math.sqrt(w) * (uu @ A.chol.T)
            vals = np.asarray(
                phi.generator(pts, np.full(pts.shape[0], sample_t), None), dtype=float
            )
            return float(np.sum(wwt.reshape(-1) * vals) / math.pi ** (A.n / 2.0))

    g = fundamental_solution(A, x[None, :] - mesh.cap_points, w)
    return float(np.sum(mesh.cap_weights * phi.values * g))


def cap_potential(mesh, A, phi, target):
    """Potential of a bottom-cap density: integral over Omega of
    phi(y) G(x - y, t).  Converges to phi(x) as t -> 0+ for smooth phi."""
    if phi.region != "sigma2":
        raise DimensionMismatch("cap_potential needs a density on sigma2")
    return _cap_value(mesh, A, phi, target, star=False)


def cap_potential_star(mesh, A, phi, target):
    """Top-cap potential with the reversed kernel: integral over Omega of
    phi(y) G(y - x, T - s); converges to phi(x) as s -> T-."""
    if phi.region != "sigma1":
        raise DimensionMismatch("cap_potential_star needs a density on sigma1")
    return _cap_value(mesh, A, phi, target, star=True)


# ---------------------------------------------------------------------------
# identities


def partition_identity(mesh, A, target):
    """Double layer of 1 plus cap potential of 1.

    Equals 1 at interior points of the cylinder and 0 outside its closure;
    the target must stay off the boundary.
    """
    loc = mesh.locate(target)
    if loc.kind == "boundary":
        raise TargetOnBoundary("partition identity is not classical on the boundary")
    ones_lateral = DensityField.constant(mesh, "sigma3", 1.0)
    ones_cap = DensityField.constant(mesh, "sigma2", 1.0)
    return double_layer(mesh, A, ones_lateral, target) + cap_potential(mesh, A, ones_cap, target)


def stokes_check(mesh, A, u_field, target, which="H"):
    """Discrepancy of the boundary representation of a caloric field.

    which='H': double layer of u minus single layer of du/d(conormal) plus
    the bottom-cap potential of u(., 0), compared against u at interior
    targets and 0 at exterior targets (target time inside (0, T), where the
    absent top-cap term vanishes).  which='H*' mirrors this with the adjoint
    operators and the top cap.
    """
    if which not in ("H", "H*"):
        raise ValueError("which must be 'H' or 'H*'")
    x, t = (target.x, target.t) if isinstance(target, SpaceTimePoint) else target
    x = np.asarray(x, dtype=float).reshape(-1)
    t = float(t)
    star = which == "H*"

    trace = DensityField.from_function(
        mesh, "sigma3", lambda p, s, nu: u_field.value(p, s)
    )
    flux = DensityField.from_function(
        mesh, "sigma3", lambda p, s, nu: u_field.conormal(p, s, nu)
    )
    cap_region = "sigma1" if star else "sigma2"
    cap_trace = DensityField.from_function(
        mesh, cap_region, lambda p, s, nu: u_field.value(p, s)
    )

    if star:
        val = (double_layer_star(mesh, A, trace, (x, t))
               - single_layer_star(mesh, A, flux, (x, t))
               + cap_potential_star(mesh, A, cap_trace, (x, t)))
    else:
        val = (double_layer(mesh, A, trace, (x, t))
               - single_layer(mesh, A, flux, (x, t))
               + cap_potential(mesh, A, cap_trace, (x, t)))

    loc = mesh.locate((x, t))
    if loc.kind == "boundary":
        raise TargetOnBoundary("representation check needs an off-boundary target")
    if loc.kind == "interior":
        return abs(val - float(u_field.value(x[None, :], np.array([t]))[0]))
    return abs(val)


def elliptic_gauss_identity(cs, A, x, m_polar=64, m_azimuth=128):
    """Surface integral of minus the elliptic conormal kernel over the
    cross-section boundary (n >= 3).

    Equals 1 for x inside, 0 outside, and 1/2 on the surface, where the
    weakly singular integrand is handled by a polar rule centred at x.
    """
    if cs.n < 3:
        raise DimensionTooSmall("the surface identity needs n >= 3")
    if cs.n != A.n:
        raise DimensionMismatch("cross-section and operator dimensions differ")
    x = np.asarray(x, dtype=float).reshape(-1)
    omega = unit_sphere_area(cs.n)
    rmin, rmax = cs.radius_extremes()

    r = float(np.linalg.norm(x))
    gap = (r - float(cs.radius(x / r))) if r > 0 else -rmin
    on_surface = abs(gap) <= 1e-9 * rmax

    if on_surface:
        u0 = x / r
        pick = int(np.argmin(np.abs(u0)))
        e = np.zeros(3)
        e[pick] = 1.0
        e1 = e - (e @ u0) * u0
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(u0, e1)
        gam, wg = gauss_legendre(m_polar, 0.0, math.pi)
        psi, wp = periodic_trapezoid(m_azimuth)
        cg, sg = np.cos(gam)[:, None], np.sin(gam)[:, None]
        dirs = (cg[..., None] * u0[None, None, :]
                + sg[..., None] * (np.cos(psi)[None, :, None] * e1[None, None, :]
                                   + np.sin(psi)[None, :, None] * e2[None, None, :]))
        sphere_w = (wg * np.sin(gam))[:, None] * wp[None, :]
        dirs = dirs.reshape(-1, 3)
        sphere_w = sphere_w.reshape(-1)
    else:
        from .geometry import _sphere_rule

        dirs, sphere_w = _sphere_rule(m_azimuth)

    pts, jac, inward = cs.sphere_frame(dirs)
    diff = x[None, :] - pts
    q = A.qform_inv(diff)
    num = np.einsum("ij,ij->i", inward, diff)
    integrand = num / (omega * math.sqrt(A.det) * q ** (cs.n / 2.0))
    return float(np.sum(sphere_w * jac * integrand))


# ---------------------------------------------------------------------------
# jump probes


def jump_probe(mesh, A, phi, node_index, kind="double", levels=9, h0_factor=0.05,
               richardson_levels=4):
    """Approach a lateral node from both sides and extrapolate the limits.

    Offsets are h0 * 2^-k along the interior normal with h0 = h0_factor times
    the domain diameter.  The two-sided difference of the Richardson limits
    estimates the density jump: +phi for the double layer, -phi for the
    conormal derivative of the single layer.  Nodes with times within 10% of
    the corners are rejected.
    """
    if kind not in ("double", "conormal_single"):
        raise ValueError("kind must be 'double' or 'conormal_single'")
    if phi.generator is None:
        raise ValueError("jump probes need a density with a closed-form generator")
    b, k = mesh.lateral_index(int(node_index))
    t0 = float(mesh.tnodes[k])
    if not (0.1 * mesh.T < t0 < 0.9 * mesh.T):
        raise CornerTooClose(f"node time {t0} within 10% of the cylinder corners")
    x0 = mesh.bpoints[b]
    nu = mesh.bnormals[b]

    h0 = h0_factor * mesh.diameter
    offsets = h0 * 0.5 ** np.arange(levels)

    rule = None
    if mesh.cs.n == 2:
        # one graded rule deep enough for the smallest offset, reused at every
        # level so the h-expansion seen by the extrapolation stays smooth
        probe = x0 + offsets[-1] * nu
        scale = max(offsets[-1], 1e-9) / max(mesh.cs.radius_extremes()[1], 1e-12)
        depth = int(min(48, max(8, math.ceil(math.log2(math.pi / scale)) + 1)))
        bp, bw, bn, _ = _near_boundary_rule(mesh.cs, probe, mesh.m_angular, depth=depth)
        rule = (bp, bw, bn)

    def value_at(h):
        if kind == "double":
            return _lateral_potential(mesh, A, phi, (x0 + h * nu, t0), "double", rule=rule)
        return conormal_derivative_single_layer(mesh, A, phi, node_index, h, rule=rule)

    vin = np.array([value_at(+h) for h in offsets])
    vex = np.array([value_at(-h) for h in offsets])
    li = richardson(vin[-richardson_levels:])
    le = richardson(vex[-richardson_levels:])

    phi0 = float(np.asarray(phi.generator(x0[None, :], np.array([t0]), nu[None, :]))[0])
    predicted = phi0 if kind == "double" else -phi0
    return JumpProbeReport(
        kind=kind,
        node_index=int(node_index),
        x0=x0.copy(),
        t0=t0,
        offsets=offsets,
        interior_values=vin,
        exterior_values=vex,
        interior_limit=li,
        exterior_limit=le,
        jump_estimate=li - le,
        predicted_jump=predicted,
    )
