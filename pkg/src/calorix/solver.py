"""Least-squares fitting of Dirichlet boundary data by caloric polynomials.

The approximant is a combination of exact polynomial solutions, so only the
boundary misfit is minimized; no volume discretization of the operator is
involved.  Fits use the quadrature-weighted discrete norm of the mesh, a
quadrature approximation to the L2 norm of the parabolic boundary.
"""

import math
import time

import numpy as np

from .core import SpaceTimePoint
from .errors import DegenerateData, RegionMismatch
from .polynomials import caloric_poly, enumerate_basis

_PARITY_REGIONS = {"v": ("sigma2", "sigma3"), "w": ("sigma1", "sigma3")}


def parity_regions(parity):
    """Dirichlet regions by parity: bottom cap + wall for the forward
    operator ('v'), top cap + wall for the adjoint ('w')."""
    try:
        return _PARITY_REGIONS[parity]
    except KeyError:
        raise RegionMismatch(f"parity must be 'v' or 'w', got {parity!r}") from None


class BoundaryData:
    """Dirichlet data sampled at the quadrature nodes of a parity's regions.

    generator: optional (points, times) -> values, needed to resample on a
    different mesh.  exact: optional field with .value(points, times) used for
    interior error reporting when the data is the trace of a known solution.
    """

    def __init__(self, parity, values, generator=None, exact=None, tag="data"):
        self.parity = parity
        self.values = dict(values)
        self.generator = generator
        self.exact = exact
        self.tag = tag
        expected = set(parity_regions(parity))
        if set(self.values) != expected:
            raise RegionMismatch(
                f"data regions {sorted(self.values)} do not match parity "
                f"{parity!r} regions {sorted(expected)}")
        for region, vals in self.values.items():
            arr = np.asarray(vals, dtype=float)
            if not np.all(np.isfinite(arr)):
                raise DegenerateData(f"non-finite data on {region}")
            self.values[region] = arr

    @classmethod
    def from_function(cls, mesh, parity, fn, exact=None, tag="closed-form"):
        vals = {}
        for region in parity_regions(parity):
            pts, ts, _ = mesh.region_nodes(region)
            vals[region] = np.asarray(fn(pts, ts), dtype=float)
        return cls(parity, vals, generator=fn, exact=exact, tag=tag)

    @classmethod
    def from_field(cls, mesh, parity, field, tag="field"):
        """Trace of a space-time field exposing .value(points, times)."""
        return cls.from_function(mesh, parity, field.value, exact=field, tag=tag)

    @classmethod
    def from_values(cls, mesh, parity, values, tag="samples"):
        out = {}
        for region in parity_regions(parity):
            pts, _, _ = mesh.region_nodes(region)
            arr = np.asarray(values[region], dtype=float)
            if arr.shape[0] != pts.shape[0]:
                raise DegenerateData(
                    f"{region}: {arr.shape[0]} samples for {pts.shape[0]} nodes")
            out[region] = arr
        return cls(parity, out, generator=None, tag=tag)

    def concatenated(self, mesh):
        return np.concatenate(
            [self.values[r] for r in parity_regions(self.parity)])


class TrefftzSystem:
    """Assembled design matrix plus the node data needed to form right-hand
    sides: rows are sqrt(weight)-scaled node evaluations, columns are
    caloric polynomials divided by their recorded scale."""

    def __init__(self, matrix, alphas, scales, points, times, weights, parity):
        self.matrix = matrix
        self.alphas = alphas
        self.scales = scales
        self.points = points
        self.times = times
        self.weights = weights
        self.parity = parity

    @property
    def sqrt_weights(self):
        return np.sqrt(self.weights)

    def columns_for_degree(self, degree):
        # graded-lex enumeration puts all lower degrees first, so a nested
        # subspace is a leading block of columns
        count = sum(1 for a in self.alphas if a.degree <= degree)
        return count


def assemble_system(mesh, A, parity, degree):
    """Design matrix for |alpha| <= degree on the parity's Dirichlet regions.

    Entry (i, k) = sqrt(w_i) v_k(node_i) / s_k with s_k = max(1, column
    2-norm); scales are recorded so coefficients can be mapped back to the
    raw basis.
    """
    regions = parity_regions(parity)
    pts = np.concatenate([mesh.region_nodes(r)[0] for r in regions])
    ts = np.concatenate([mesh.region_nodes(r)[1] for r in regions])
    wts = np.concatenate([mesh.region_nodes(r)[2] for r in regions])
    if not np.any(wts > 0.0):
        raise DegenerateData("all quadrature weights vanish")
    sq = np.sqrt(wts)

    alphas = enumerate_basis(A.n, degree)
    matrix = np.empty((pts.shape[0], len(alphas)))
    scales = np.empty(len(alphas))
    for k, alpha in enumerate(alphas):
        col = sq * caloric_poly(A, alpha, parity).evaluate(pts, ts)
        norm = float(np.linalg.norm(col))
        scales[k] = max(1.0, norm)
        matrix[:, k] = col / scales[k]
    return TrefftzSystem(matrix, alphas, scales, pts, ts, wts, parity)


class CaloricApproximant:
    """Result of one least-squares fit: coefficients of the scaled basis in
    graded-lex order plus diagnostics."""

    def __init__(self, parity, degree, n, alphas, coefficients, column_scales,
                 residual, rank, cond, mesh_fingerprint):
        self.parity = parity
        self.degree = degree
        self.n = n
        self.alphas = alphas
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.column_scales = np.asarray(column_scales, dtype=float)
        self.residual = float(residual)
        self.rank = int(rank)
        self.cond = float(cond)
        self.mesh_fingerprint = mesh_fingerprint

    def raw_coefficients(self):
        """Coefficients against the unscaled caloric polynomials."""
        return self.coefficients / self.column_scales

    def to_json_dict(self):
        return {
            "parity": self.parity,
            "degree": self.degree,
            "n": self.n,
            "alphas": [list(a.alpha) for a in self.alphas],
            "coefficients": self.coefficients.tolist(),
            "column_scales": self.column_scales.tolist(),
            "residual": self.residual,
            "rank": self.rank,
            "cond": self.cond,
            "mesh_fingerprint": self.mesh_fingerprint,
        }


def _svd_solve(matrix, rhs, rcond):
    u, sing, vt = np.linalg.svd(matrix, full_matrices=False)
    if sing[0] == 0.0:
        return np.zeros(matrix.shape[1]), 0, np.inf
    keep = sing >= rcond * sing[0]
    coeff = vt[keep].T @ ((u[:, keep].T @ rhs) / sing[keep])
    rank = int(np.count_nonzero(keep))
    cond = float(sing[0] / sing[keep][-1])
    return coeff, rank, cond


def solve_dirichlet(mesh, A, parity, degree, data, rcond=1e-12, system=None):
    """Weighted least-squares fit of boundary data by caloric polynomials.

    Minimizes sum_i w_i (sum_k c_k v_k(node_i)/s_k - f_i)^2 by truncated
    singular value decomposition; rcond is the relative cutoff.  The
    residual is the weighted misfit norm over the weighted data norm
    (absolute when the data norm vanishes).
    """
    if not 0.0 < rcond < 1.0:
        raise ValueError("rcond must lie in (0, 1)")
    if data.parity != parity:
        raise RegionMismatch(
            f"data parity {data.parity!r} does not match solve parity {parity!r}")
    if system is None:
        system = assemble_system(mesh, A, parity, degree)
    ncols = system.columns_for_degree(degree)
    matrix = system.matrix[:, :ncols]
    rhs = system.sqrt_weights * data.concatenated(mesh)

    coeff, rank, cond = _svd_solve(matrix, rhs, rcond)
    misfit = float(np.linalg.norm(matrix @ coeff - rhs))
    norm = float(np.linalg.norm(rhs))
    residual = misfit / norm if norm > 0.0 else misfit
    return CaloricApproximant(parity, degree, A.n, system.alphas[:ncols],
                              coeff, system.scales[:ncols], residual, rank,
                              cond, mesh.fingerprint())


def evaluate_solution(approx, A, points, times=None):
    """Evaluate the approximant: sum over k of c_k / s_k v_k(x, t).

    Accepts (points, times) arrays or a list of SpaceTimePoint.
    """
    if times is None:
        pts = np.array([p.x for p in points], dtype=float)
        ts = np.array([p.t for p in points], dtype=float)
    else:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ts = np.asarray(times, dtype=float)
    out = np.zeros(pts.shape[0])
    raw = approx.raw_coefficients()
    for k, alpha in enumerate(approx.alphas):
        if raw[k] == 0.0:
            continue
        out += raw[k] * caloric_poly(A, alpha, approx.parity).evaluate(pts, ts)
    return out


class StudyReport:
    """Residual-decay record over a sequence of basis degrees."""

    def __init__(self, parity, degrees, residuals, ranks, conds,
                 interior_max_errors, seconds, mesh_fingerprint, tag,
                 exploratory):
        self.parity = parity
        self.degrees = list(degrees)
        self.residuals = list(residuals)
        self.ranks = list(ranks)
        self.conds = list(conds)
        self.interior_max_errors = list(interior_max_errors)
        self.seconds = list(seconds)
        self.mesh_fingerprint = mesh_fingerprint
        self.tag = tag
        self.exploratory = bool(exploratory)
        lengths = {len(self.degrees), len(self.residuals), len(self.ranks),
                   len(self.conds), len(self.interior_max_errors),
                   len(self.seconds)}
        if len(lengths) != 1:
            raise ValueError("study columns must share one length")

    def to_csv_rows(self):
        rows = [["degree", "residual", "rank", "cond", "interior_max_err",
                 "seconds"]]
        for i, deg in enumerate(self.degrees):
            err = self.interior_max_errors[i]
            rows.append([deg, self.residuals[i], self.ranks[i], self.conds[i],
                         "" if err is None else err, self.seconds[i]])
        return rows

    def to_json_dict(self):
        return {
            "parity": self.parity,
            "tag": self.tag,
            "exploratory": self.exploratory,
            "mesh_fingerprint": self.mesh_fingerprint,
            "degrees": self.degrees,
            "residuals": self.residuals,
            "ranks": self.ranks,
            "conds": self.conds,
            "interior_max_errors": self.interior_max_errors,
            "seconds": self.seconds,
        }


def interior_probe_grid(mesh, n_radial=5, n_angular=5, n_time=5):
    """Deterministic interior probe points: radial fractions x directions x
    times, clear of the boundary."""
    fracs = np.linspace(0.1, 0.9, n_radial)
    times = np.linspace(0.1, 0.9, n_time) * mesh.T
    if mesh.n == 2:
        angles = 2.0 * np.pi * np.arange(n_angular) / n_angular
        dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    else:
        # golden-spiral directions: even coverage without a pole cluster
        idx = np.arange(n_angular) + 0.5
        cosom = 1.0 - 2.0 * idx / n_angular
        sinom = np.sqrt(1.0 - cosom**2)
        az = np.pi * (1.0 + math.sqrt(5.0)) * idx
        dirs = np.stack([sinom * np.cos(az), sinom * np.sin(az), cosom], axis=1)
    rho = mesh.cs.radius(dirs)
    pts, ts = [], []
    for f in fracs:
        for t in times:
            pts.append(f * rho[:, None] * dirs)
            ts.append(np.full(dirs.shape[0], t))
    return np.concatenate(pts), np.concatenate(ts)


def completeness_study(mesh, A, parity, data, degrees, rcond=1e-12,
                       probe_points=None, probe_times=None):
    """solve_dirichlet per degree on one shared system; nested least squares
    makes the residual sequence non-increasing.

    Interior max errors are reported when the data carries an exact field;
    n=2 runs are flagged exploratory (the density theory is stated for
    higher dimensions).
    """
    degrees = list(degrees)
    if any(b <= a for a, b in zip(degrees, degrees[1:])):
        raise ValueError("degrees must be strictly increasing")
    system = assemble_system(mesh, A, parity, degrees[-1])
    if data.exact is not None and probe_points is None:
        probe_points, probe_times = interior_probe_grid(mesh)

    residuals, ranks, conds, errors, seconds = [], [], [], [], []
    for deg in degrees:
        start = time.perf_counter()
        approx = solve_dirichlet(mesh, A, parity, deg, data, rcond=rcond,
                                 system=system)
        residuals.append(approx.residual)
        ranks.append(approx.rank)
        conds.append(approx.cond)
        if data.exact is not None:
            vals = evaluate_solution(approx, A, probe_points, probe_times)
            ref = np.asarray(data.exact.value(probe_points, probe_times),
                             dtype=float)
            errors.append(float(np.max(np.abs(vals - ref))))
        else:
            errors.append(None)
        seconds.append(time.perf_counter() - start)
    return StudyReport(parity, degrees, residuals, ranks, conds, errors,
                       seconds, mesh.fingerprint(), data.tag,
                       exploratory=(A.n == 2))


class CrossValidation:
    """Coarse-mesh coefficients re-scored on a finer mesh."""

    def __init__(self, degree, coarse_residual, fine_residual):
        self.degree = degree
        self.coarse_residual = float(coarse_residual)
        self.fine_residual = float(fine_residual)

    @property
    def ratio(self):
        if self.coarse_residual == 0.0:
            return 1.0 if self.fine_residual == 0.0 else np.inf
        return self.fine_residual / self.coarse_residual

    @property
    def flagged(self):
        return self.fine_residual > 2.0 * self.coarse_residual + 1e-14

    def to_json_dict(self):
        return {
            "degree": self.degree,
            "coarse_residual": self.coarse_residual,
            "fine_residual": self.fine_residual,
            "ratio": float(self.ratio),
            "flagged": bool(self.flagged),
        }


def cross_validate(coarse_mesh, fine_mesh, A, parity, degree, data,
                   rcond=1e-12):
    """Guard against quadrature artifacts: fit on the coarse mesh, then
    re-evaluate the same approximant's residual against the data resampled
    on the finer mesh.  Needs a data generator."""
    if data.generator is None:
        raise DegenerateData("cross validation needs resamplable data")
    approx = solve_dirichlet(coarse_mesh, A, parity, degree, data, rcond=rcond)

    fine_data = BoundaryData.from_function(fine_mesh, parity, data.generator,
                                           exact=data.exact, tag=data.tag)
    regions = parity_regions(parity)
    pts = np.concatenate([fine_mesh.region_nodes(r)[0] for r in regions])
    ts = np.concatenate([fine_mesh.region_nodes(r)[1] for r in regions])
    wts = np.concatenate([fine_mesh.region_nodes(r)[2] for r in regions])
    f = fine_data.concatenated(fine_mesh)
    misfit = evaluate_solution(approx, A, pts, ts) - f
    num = math.sqrt(float(np.sum(wts * misfit**2)))
    den = math.sqrt(float(np.sum(wts * f**2)))
    fine_res = num / den if den > 0.0 else num
    return CrossValidation(degree, approx.residual, fine_res)
