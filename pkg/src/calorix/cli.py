"""Config-driven command line front end.

Each invocation runs one task against a JSON config, writes CSV/JSON
artifacts, prints a summary table, and exits 0 only if every assertion of
the task passed (1 on a failed assertion, 2 on an invalid config).
"""

import argparse
import csv
import datetime
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from jsonschema import Draft202012Validator

from . import __version__
from .core import (
    caloric_exponential,
    conormal_kernel_source,
    fundamental_solution,
    make_coefficients,
    SpaceTimePoint,
)
from .errors import CalorixError, ConfigInvalid, TaskFailed
from .geometry import CrossSection, build_mesh
from .polynomials import caloric_poly, enumerate_basis, moment_identity_check
from .potentials import (
    CaloricExponentialField,
    DensityField,
    elliptic_gauss_identity,
    jump_probe,
    partition_identity,
    stokes_check,
)
from .solver import (
    BoundaryData,
    completeness_study,
    cross_validate,
    solve_dirichlet,
)

# ---------------------------------------------------------------------------
# config schema

_MATRIX_SCHEMA = {
    "type": "array",
    "items": {"type": "array", "items": {"type": "number"}},
}

_DATA_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["caloric-poly", "caloric-exponential",
                          "abs-coordinate", "values-file"]},
        "alpha": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "xi": {"type": "array", "items": {"type": "number"}},
        "index": {"type": "integer", "minimum": 0},
        "path": {"type": "string"},
    },
}

_TASK_SCHEMAS = {
    "verify-kernels": {
        "probes": {"type": "integer", "minimum": 1},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
    },
    "verify-jumps": {
        "probes": {"type": "integer", "minimum": 1},
        "kinds": {"type": "array",
                  "items": {"enum": ["double", "conormal_single"]}},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
    },
    "verify-identities": {
        "interior_probes": {"type": "integer", "minimum": 1},
        "exterior_probes": {"type": "integer", "minimum": 1},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "surface_tolerance": {"type": "number", "exclusiveMinimum": 0},
    },
    "poly-table": {
        "max_degree": {"type": "integer", "minimum": 0},
    },
    "solve": {
        "degree": {"type": "integer", "minimum": 0},
        "rcond": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "data": _DATA_SCHEMA,
        "max_residual": {"type": "number", "exclusiveMinimum": 0},
    },
    "completeness": {
        "degrees": {"type": "array", "minItems": 1,
                    "items": {"type": "integer", "minimum": 0}},
        "rcond": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "data": _DATA_SCHEMA,
        "cross_validate": {"type": "boolean"},
        "final_max_residual": {"type": "number", "exclusiveMinimum": 0},
    },
}

_GEOMETRY_PARAMS = {
    "disk": {"radius": {"type": "number", "exclusiveMinimum": 0}},
    "ellipse": {"a": {"type": "number", "exclusiveMinimum": 0},
                "b": {"type": "number", "exclusiveMinimum": 0}},
    "star": {"r0": {"type": "number", "exclusiveMinimum": 0},
             "cos3": {"type": "number"}},
    "ball": {"radius": {"type": "number", "exclusiveMinimum": 0}},
    "ellipsoid": {"a": {"type": "number", "exclusiveMinimum": 0},
                  "b": {"type": "number", "exclusiveMinimum": 0},
                  "c": {"type": "number", "exclusiveMinimum": 0}},
}

_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["operator", "geometry", "mesh", "task"],
    "properties": {
        "operator": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n", "matrix"],
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "matrix": _MATRIX_SCHEMA,
                "parity": {"enum": ["v", "w"]},
            },
        },
        "geometry": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "params", "T"],
            "properties": {
                "kind": {"enum": sorted(_GEOMETRY_PARAMS)},
                "params": {"type": "object"},
                "T": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "mesh": {
            "type": "object",
            "additionalProperties": False,
            "required": ["m_angular", "m_time", "m_radial"],
            "properties": {
                "m_angular": {"type": "integer", "minimum": 4},
                "m_time": {"type": "integer", "minimum": 2},
                "m_radial": {"type": "integer", "minimum": 2},
            },
        },
        "task": {
            "type": "object",
            "required": ["name"],
            "properties": {"name": {"enum": sorted(_TASK_SCHEMAS)}},
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string"},
                "formats": {"type": "array",
                            "items": {"enum": ["csv", "json"]}},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
    },
}


def _schema_errors(schema, instance):
    validator = Draft202012Validator(schema)
    return sorted(validator.iter_errors(instance), key=lambda e: list(e.path))


def validate_config(config):
    """Raise ConfigInvalid on any schema violation; returns nothing."""
    errors = _schema_errors(_CONFIG_SCHEMA, config)
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.path) or "<root>"
        raise ConfigInvalid(f"{where}: {e.message}")

    task = config["task"]
    name = task["name"]
    task_schema = {
        "type": "object",
        "additionalProperties": False,
        "required": ["name"],
        "properties": {"name": {"const": name}, **_TASK_SCHEMAS[name]},
    }
    errors = _schema_errors(task_schema, task)
    if errors:
        raise ConfigInvalid(f"task/{name}: {errors[0].message}")

    geom = config["geometry"]
    params_schema = {
        "type": "object",
        "additionalProperties": False,
        "required": sorted(_GEOMETRY_PARAMS[geom["kind"]]),
        "properties": _GEOMETRY_PARAMS[geom["kind"]],
    }
    errors = _schema_errors(params_schema, geom["params"])
    if errors:
        raise ConfigInvalid(f"geometry/params: {errors[0].message}")

    n = config["operator"]["n"]
    matrix = config["operator"]["matrix"]
    if len(matrix) != n or any(len(row) != n for row in matrix):
        raise ConfigInvalid(f"operator/matrix: expected a {n}x{n} matrix")
    kind_dim = 2 if geom["kind"] in ("disk", "ellipse", "star") else 3
    if n != kind_dim:
        raise ConfigInvalid(
            f"geometry/{geom['kind']}: needs n={kind_dim}, operator has n={n}")


def _build_cross_section(geom):
    kind, p = geom["kind"], geom["params"]
    if kind == "disk":
        return CrossSection.disk(p["radius"])
    if kind == "ellipse":
        return CrossSection.ellipse(p["a"], p["b"])
    if kind == "star":
        return CrossSection.star(p["r0"], (0.0, 0.0, p.get("cos3", 0.0)))
    if kind == "ball":
        return CrossSection.ball(p["radius"])
    return CrossSection.ellipsoid(p["a"], p["b"], p["c"])


class RunContext:
    """Validated config turned into live objects."""

    def __init__(self, config, config_dir, out_dir, threads):
        validate_config(config)
        self.config = config
        self.config_dir = config_dir
        self.out_dir = out_dir
        self.threads = max(1, threads)
        try:
            self.A = make_coefficients(config["operator"]["n"],
                                       config["operator"]["matrix"])
            self.cs = _build_cross_section(config["geometry"])
        except (CalorixError, ValueError) as exc:
            raise ConfigInvalid(str(exc)) from exc
        self.parity = config["operator"].get("parity", "v")
        self.T = float(config["geometry"]["T"])
        mesh_cfg = config["mesh"]
        try:
            self.mesh = build_mesh(self.cs, self.A, self.T,
                                   mesh_cfg["m_angular"], mesh_cfg["m_time"],
                                   mesh_cfg["m_radial"])
        except CalorixError as exc:
            raise ConfigInvalid(str(exc)) from exc
        self.seed = int(config.get("seed", 0))
        self.rng = np.random.default_rng(self.seed)
        self.formats = config.get("output", {}).get("formats", ["csv", "json"])

    @property
    def task_cfg(self):
        return self.config["task"]

    def parallel_map(self, fn, items):
        items = list(items)
        if self.threads == 1 or len(items) < 2:
            return [fn(it) for it in items]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# report writing

def _fmt_cell(value):
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def write_csv(path, rows, header_comment_lines):
    """Header comments, then the table; '%.17g' floats, LF endings.

    The first comment line carries the timestamp and is the only
    run-dependent byte in the file.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_comment_lines:
            fh.write("# " + line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        for row in rows:
            writer.writerow([_fmt_cell(c) for c in row])


def _canonical_config(config):
    return json.dumps(config, sort_keys=True, separators=(",", ":"))


class Reporter:
    """Collects tables and assertions for one run, then writes artifacts."""

    def __init__(self, ctx, task_name):
        self.ctx = ctx
        self.task_name = task_name
        self.tables = {}
        self.assertions = []
        self.extra_json = {}

    def add_table(self, name, rows):
        self.tables[name] = rows

    def check(self, name, passed, detail):
        self.assertions.append(
            {"name": name, "passed": bool(passed), "detail": detail})

    def finish(self):
        os.makedirs(self.ctx.out_dir, exist_ok=True)
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
        comments = [
            f"calorix {__version__} {self.task_name} {stamp}",
            f"config {_canonical_config(self.ctx.config)}",
        ]
        written = []
        if "csv" in self.ctx.formats:
            for name, rows in self.tables.items():
                path = os.path.join(self.ctx.out_dir, f"{name}.csv")
                write_csv(path, rows, comments)
                written.append(path)
        summary = {
            "version": __version__,
            "task": self.task_name,
            "seed": self.ctx.seed,
            "config": self.ctx.config,
            "assertions": self.assertions,
            **self.extra_json,
        }
        if "json" in self.ctx.formats:
            path = os.path.join(self.ctx.out_dir, "summary.json")
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(summary, fh, indent=2, sort_keys=True)
                fh.write("\n")
            written.append(path)

        width = max((len(a["name"]) for a in self.assertions), default=4)
        print(f"task {self.task_name}: {len(self.assertions)} checks")
        for a in self.assertions:
            status = "pass" if a["passed"] else "FAIL"
            print(f"  {a['name']:<{width}}  {status}  {a['detail']}")
        for path in written:
            print(f"  wrote {path}")
        failing = [a for a in self.assertions if not a["passed"]]
        if failing:
            raise TaskFailed(f"{failing[0]['name']}: {failing[0]['detail']}")


# ---------------------------------------------------------------------------
# shared probe helpers

def _interior_points(ctx, count, frac_range=(0.15, 0.8)):
    out = []
    for _ in range(count):
        d = ctx.rng.normal(size=ctx.A.n)
        d /= np.linalg.norm(d)
        frac = ctx.rng.uniform(*frac_range)
        out.append(frac * float(ctx.cs.radius(d[None, :])[0]) * d)
    return out

def _exterior_points(ctx, count):
    out = []
    for _ in range(count):
        d = ctx.rng.normal(size=ctx.A.n)
        d /= np.linalg.norm(d)
        frac = ctx.rng.uniform(1.3, 1.8)
        out.append(frac * float(ctx.cs.radius(d[None, :])[0]) * d)
    return out


def _fd_step(scale=1.0):
    return scale * float(np.finfo(float).eps) ** 0.25


# ---------------------------------------------------------------------------
# tasks

def _task_verify_kernels(ctx):
    """Finite-difference checks that the kernel and its companions satisfy
    the defining differential identities, plus the unit-mass property."""
    rep = Reporter(ctx, "verify-kernels")
    cfg = ctx.task_cfg
    probes = cfg.get("probes", 10)
    tol = cfg.get("tolerance", 1e-5)
    A, n = ctx.A, ctx.A.n
    rows = [["probe", "check", "value", "reference", "error"]]

    def heat_residual(z, tau, adjoint=False):
        h = _fd_step()
        lap = 0.0
        for i in range(n):
            for j in range(n):
                a = A.a[i, j]
                if a == 0.0:
                    continue
                ei = np.zeros(n); ei[i] = h
                ej = np.zeros(n); ej[j] = h
                val = (fundamental_solution(A, z + ei + ej, tau)
                       - fundamental_solution(A, z + ei - ej, tau)
                       - fundamental_solution(A, z - ei + ej, tau)
                       + fundamental_solution(A, z - ei - ej, tau))
                lap += a * val / (4.0 * h * h)
        dt = (fundamental_solution(A, z, tau + h)
              - fundamental_solution(A, z, tau - h)) / (2.0 * h)
        sign = 1.0 if adjoint else -1.0
        return lap + sign * dt

    errs = {"heat-pde": [], "conormal-kernel": [], "exp-pde": [], "mass": []}
    for k in range(probes):
        z = ctx.rng.normal(size=n) * 0.8
        tau = ctx.rng.uniform(0.3, 1.0)
        g = float(fundamental_solution(A, z, tau))
        r = float(heat_residual(z, tau))
        err = abs(r) / max(abs(g), 1.0)
        errs["heat-pde"].append(err)
        rows.append([k, "heat-pde", r, 0.0, err])

        nu = ctx.rng.normal(size=n); nu /= np.linalg.norm(nu)
        x = z + ctx.rng.normal(size=n)
        h = _fd_step()
        step = h * (A.a @ nu)
        fd = (float(fundamental_solution(A, x - (z + step), tau))
              - float(fundamental_solution(A, x - (z - step), tau))) / (2.0 * h)
        ker = float(conormal_kernel_source(A, x[None, :], z[None, :],
                                           nu[None, :], tau)[0])
        err = abs(fd - ker) / max(abs(ker), 1.0)
        errs["conormal-kernel"].append(err)
        rows.append([k, "conormal-kernel", ker, fd, err])

        xi = ctx.rng.normal(size=n) * 0.5
        pt = SpaceTimePoint(z, tau)
        h = _fd_step()
        lap = 0.0
        for i in range(n):
            for j in range(n):
                a = A.a[i, j]
                if a == 0.0:
                    continue
                ei = np.zeros(n); ei[i] = h
                ej = np.zeros(n); ej[j] = h
                lap += a * (
                    caloric_exponential(A, SpaceTimePoint(z + ei + ej, tau), xi)
                    - caloric_exponential(A, SpaceTimePoint(z + ei - ej, tau), xi)
                    - caloric_exponential(A, SpaceTimePoint(z - ei + ej, tau), xi)
                    + caloric_exponential(A, SpaceTimePoint(z - ei - ej, tau), xi)
                ) / (4.0 * h * h)
        dt = (caloric_exponential(A, SpaceTimePoint(z, tau + h), xi)
              - caloric_exponential(A, SpaceTimePoint(z, tau - h), xi)) / (2.0 * h)
        r = lap - dt
        err = abs(r) / max(abs(caloric_exponential(A, pt, xi)), 1.0)
        errs["exp-pde"].append(err)
        rows.append([k, "exp-pde", r, 0.0, err])

        # unit mass = moment identity at the zero multi-index
        err = moment_identity_check(A, (0,) * n, (z, tau),
                                    resolution=80 if n <= 2 else 48)
        errs["mass"].append(err)
        rows.append([k, "mass", "", 1.0, err])

    # vanishing for non-positive time offsets: exact, not finite-difference
    z = ctx.rng.normal(size=n)
    dead = max(abs(float(fundamental_solution(A, z, tau)))
               for tau in (0.0, -0.5))
    rows.append(["-", "dead-window", dead, 0.0, dead])

    rep.add_table("kernels", rows)
    for name, es in errs.items():
        worst = max(es)
        rep.check(name, worst < tol, f"max relative residual {worst:.3e} (tol {tol:g})")
    rep.check("vanishes-nonpositive-time", dead == 0.0, f"max |G| at tau<=0 is {dead:g}")
    rep.finish()


def _task_verify_jumps(ctx):
    rep = Reporter(ctx, "verify-jumps")
    cfg = ctx.task_cfg
    if ctx.A.n != 2:
        raise ConfigInvalid("verify-jumps runs on planar cross-sections (n=2)")
    probes = cfg.get("probes", 10)
    kinds = cfg.get("kinds", ["double", "conormal_single"])
    tol = cfg.get("tolerance", 1e-2)
    mesh, A = ctx.mesh, ctx.A

    def random_density():
        c = ctx.rng.normal(size=7)
        def gen(p, t, nu):
            th = np.arctan2(p[:, 1], p[:, 0])
            ang = (c[0] + c[1] * np.cos(th) + c[2] * np.sin(th)
                   + c[3] * np.cos(2 * th) + c[4] * np.sin(2 * th))
            return ang * (1.0 + c[5] * t + c[6] * t * t)
        return DensityField.from_function(mesh, "sigma3", gen)

    K = mesh.tnodes.shape[0]
    time_ok = np.nonzero((mesh.tnodes > 0.1 * mesh.T)
                         & (mesh.tnodes < 0.9 * mesh.T))[0]

    jobs = []
    attempts = 0
    while len(jobs) < probes and attempts < 50 * probes:
        attempts += 1
        phi = random_density()
        b = int(ctx.rng.integers(0, mesh.n_boundary))
        k = int(time_ok[ctx.rng.integers(0, time_ok.size)])
        node = b * K + k
        # relative error needs a non-small density value at the node
        if abs(phi.values[node]) < 0.2 * float(np.max(np.abs(phi.values))):
            continue
        jobs.append((phi, node))
    rows = [["probe", "kind", "jump", "predicted", "relative_error"]]

    def run(job_kind):
        (phi, node), kind = job_kind
        return jump_probe(mesh, A, phi, node, kind)

    worst = {k: 0.0 for k in kinds}
    results = ctx.parallel_map(run, [(j, k) for j in jobs for k in kinds])
    for i, r in enumerate(results):
        kind = kinds[i % len(kinds)]
        rows.append([i // len(kinds), kind, r.jump_estimate, r.predicted_jump,
                     r.relative_error])
        worst[kind] = max(worst[kind], r.relative_error)

    rep.add_table("jumps", rows)
    for kind in kinds:
        rep.check(f"jump-{kind}", worst[kind] <= tol,
                  f"max relative error {worst[kind]:.3e} over {len(jobs)} probes (tol {tol:g})")
    rep.finish()


def _task_verify_identities(ctx):
    rep = Reporter(ctx, "verify-identities")
    cfg = ctx.task_cfg
    n_int = cfg.get("interior_probes", 20)
    n_ext = cfg.get("exterior_probes", 20)
    tol = cfg.get("tolerance", 1e-6)
    surf_tol = cfg.get("surface_tolerance", 1e-3)
    mesh, A, cs = ctx.mesh, ctx.A, ctx.cs
    rows = [["identity", "class", "x", "t", "value", "expected", "error"]]

    def fmt_x(x):
        return " ".join("%.17g" % c for c in x)

    ints = [(x, ctx.rng.uniform(0.1, 0.9) * ctx.T)
            for x in _interior_points(ctx, n_int)]
    exts = [(x, ctx.rng.uniform(0.1, 0.9) * ctx.T)
            for x in _exterior_points(ctx, n_ext)]

    def part(job):
        x, t = job
        return partition_identity(mesh, A, (x, t))

    vals_i = ctx.parallel_map(part, ints)
    vals_e = ctx.parallel_map(part, exts)
    worst_pi = max(abs(v - 1.0) for v in vals_i)
    worst_pe = max(abs(v) for v in vals_e)
    for (x, t), v in zip(ints, vals_i):
        rows.append(["partition", "interior", fmt_x(x), t, v, 1.0, abs(v - 1.0)])
    for (x, t), v in zip(exts, vals_e):
        rows.append(["partition", "exterior", fmt_x(x), t, v, 0.0, abs(v)])
    rep.check("partition-interior", worst_pi < tol,
              f"max |value-1| = {worst_pi:.3e} (tol {tol:g})")
    rep.check("partition-exterior", worst_pe < tol,
              f"max |value| = {worst_pe:.3e} (tol {tol:g})")

    xi = ctx.rng.normal(size=A.n) * 0.5
    for which, sign in (("H", +1), ("H*", -1)):
        fld = CaloricExponentialField(A, xi, sign=sign)
        vi = ctx.parallel_map(lambda j: stokes_check(mesh, A, fld, j, which), ints)
        ve = ctx.parallel_map(lambda j: stokes_check(mesh, A, fld, j, which), exts)
        for (x, t), v in zip(ints, vi):
            rows.append([f"representation-{which}", "interior", fmt_x(x), t, v, 0.0, v])
        for (x, t), v in zip(exts, ve):
            rows.append([f"representation-{which}", "exterior", fmt_x(x), t, v, 0.0, v])
        worst = max(max(vi), max(ve))
        rep.check(f"representation-{which}", worst < tol,
                  f"max discrepancy {worst:.3e} (tol {tol:g})")

    if A.n >= 3:
        wi = we = ws = 0.0
        for x, _ in ints:
            wi = max(wi, abs(elliptic_gauss_identity(cs, A, x) - 1.0))
        for x, _ in exts:
            we = max(we, abs(elliptic_gauss_identity(cs, A, x)))
        for _ in range(n_int):
            d = ctx.rng.normal(size=A.n); d /= np.linalg.norm(d)
            xs = float(cs.radius(d[None, :])[0]) * d
            v = elliptic_gauss_identity(cs, A, xs)
            ws = max(ws, abs(v - 0.5))
            rows.append(["elliptic-gauss", "surface", fmt_x(xs), "", v, 0.5,
                         abs(v - 0.5)])
        rep.check("elliptic-interior", wi < tol, f"max |value-1| = {wi:.3e}")
        rep.check("elliptic-exterior", we < tol, f"max |value| = {we:.3e}")
        rep.check("elliptic-surface", ws < surf_tol,
                  f"max |value-1/2| = {ws:.3e} (tol {surf_tol:g})")

    rep.add_table("identities", rows)
    rep.finish()


def _task_poly_table(ctx):
    rep = Reporter(ctx, "poly-table")
    cfg = ctx.task_cfg
    max_degree = cfg.get("max_degree", 4)
    parity = ctx.parity
    A = ctx.A
    rows = [["alpha", "degree", "terms", "polynomial"]]
    entries = []
    for alpha in enumerate_basis(A.n, max_degree):
        p = caloric_poly(A, alpha, parity)
        rows.append([" ".join(str(a) for a in alpha.alpha), alpha.degree,
                     len(p.terms), str(p)])
        entries.append(p.to_json_dict())
    rep.add_table("polynomials", rows)
    rep.extra_json["polynomials"] = entries
    count = len(entries)
    expected = math.comb(A.n + max_degree, A.n)
    rep.check("basis-count", count == expected,
              f"{count} polynomials (expected {expected})")
    rep.finish()


def _load_boundary_data(ctx, spec):
    kind = spec["kind"]
    mesh, A, parity = ctx.mesh, ctx.A, ctx.parity
    if kind == "caloric-poly":
        alpha = tuple(spec.get("alpha", [0] * A.n))
        if len(alpha) != A.n:
            raise ConfigInvalid("data/alpha length must equal operator n")
        p = caloric_poly(A, alpha, parity)

        class _PolyField:
            def value(self, pts, ts):
                return p.evaluate(pts, ts)

        return BoundaryData.from_field(mesh, parity, _PolyField(),
                                       tag=f"caloric-poly {alpha}")
    if kind == "caloric-exponential":
        xi = np.asarray(spec.get("xi", [0.3] * A.n), dtype=float)
        if xi.shape[0] != A.n:
            raise ConfigInvalid("data/xi length must equal operator n")
        sign = +1 if parity == "v" else -1
        fld = CaloricExponentialField(A, xi, sign=sign)
        return BoundaryData.from_field(mesh, parity, fld,
                                       tag=f"caloric-exponential {xi.tolist()}")
    if kind == "abs-coordinate":
        idx = spec.get("index", 0)
        if idx >= A.n:
            raise ConfigInvalid("data/index out of range")
        return BoundaryData.from_function(
            mesh, parity, lambda p, t: np.abs(p[:, idx]),
            tag=f"abs-coordinate {idx}")
    path = spec.get("path")
    if path is None:
        raise ConfigInvalid("values-file data needs a path")
    full = os.path.join(ctx.config_dir, path)
    try:
        with open(full, encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"values file {full}: {exc}") from exc
    try:
        return BoundaryData.from_values(mesh, parity, payload, tag="values-file")
    except (CalorixError, KeyError) as exc:
        raise ConfigInvalid(f"values file {full}: {exc}") from exc


def _task_solve(ctx):
    rep = Reporter(ctx, "solve")
    cfg = ctx.task_cfg
    degree = cfg.get("degree", 6)
    rcond = cfg.get("rcond", 1e-12)
    spec = cfg.get("data", {"kind": "caloric-exponential"})
    data = _load_boundary_data(ctx, spec)

    approx = solve_dirichlet(ctx.mesh, ctx.A, ctx.parity, degree, data,
                             rcond=rcond)
    rows = [["degree", "residual", "rank", "cond", "columns"],
            [approx.degree, approx.residual, approx.rank, approx.cond,
             len(approx.alphas)]]
    rep.add_table("solve", rows)
    rep.extra_json["approximant"] = approx.to_json_dict()

    rep.check("residual-finite", math.isfinite(approx.residual),
              f"residual {approx.residual:.6e}")
    if spec["kind"] == "caloric-poly":
        alpha = tuple(spec.get("alpha", [0] * ctx.A.n))
        if degree >= sum(alpha):
            rep.check("reproduction", approx.residual < 1e-9,
                      f"residual {approx.residual:.3e} for in-space data (tol 1e-09)")
    if "max_residual" in cfg:
        rep.check("max-residual", approx.residual <= cfg["max_residual"],
                  f"residual {approx.residual:.6e} (tol {cfg['max_residual']:g})")
    rep.finish()


def _task_completeness(ctx):
    rep = Reporter(ctx, "completeness")
    cfg = ctx.task_cfg
    degrees = cfg.get("degrees", list(range(0, 13, 2)))
    rcond = cfg.get("rcond", 1e-12)
    spec = cfg.get("data", {"kind": "caloric-exponential"})
    data = _load_boundary_data(ctx, spec)

    try:
        report = completeness_study(ctx.mesh, ctx.A, ctx.parity, data, degrees,
                                    rcond=rcond)
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from exc

    # the study table drops the timing column so that the CSV body is a
    # pure function of config + seed
    rows = [["degree", "residual", "rank", "cond", "interior_max_err"]]
    for r in report.to_csv_rows()[1:]:
        rows.append(r[:-1])
    rep.add_table("study", rows)
    rep.extra_json["study"] = report.to_json_dict()

    slack = 1e-12
    mono = all(b <= a + slack for a, b in
               zip(report.residuals, report.residuals[1:]))
    rep.check("monotone-residuals", mono,
              "non-increasing over degrees " + repr(report.degrees))
    if report.exploratory:
        rep.check("exploratory-label", True,
                  "n=2 study: density theory is stated for higher dimensions; "
                  "results are exploratory")
    if "final_max_residual" in cfg:
        rep.check("final-residual",
                  report.residuals[-1] <= cfg["final_max_residual"],
                  f"residual({report.degrees[-1]}) = {report.residuals[-1]:.6e} "
                  f"(tol {cfg['final_max_residual']:g})")
    if cfg.get("cross_validate", False):
        m = ctx.config["mesh"]
        fine = build_mesh(ctx.cs, ctx.A, ctx.T, 2 * m["m_angular"],
                          2 * m["m_time"], 2 * m["m_radial"])
        cv = cross_validate(ctx.mesh, fine, ctx.A, ctx.parity, degrees[-1],
                            data, rcond=rcond)
        rep.extra_json["cross_validation"] = cv.to_json_dict()
        rep.check("cross-consistent", not cv.flagged,
                  f"fine/coarse residual ratio {cv.ratio:.3f}")
    rep.finish()


TASKS = {
    "verify-kernels": _task_verify_kernels,
    "verify-jumps": _task_verify_jumps,
    "verify-identities": _task_verify_identities,
    "poly-table": _task_poly_table,
    "solve": _task_solve,
    "completeness": _task_completeness,
}

_TASK_SUMMARIES = {
    "verify-kernels": ("finite-difference and quadrature checks of the "
                       "kernel: both parabolic equations, the conormal "
                       "kernel, unit mass, vanishing at non-positive times"),
    "verify-jumps": ("two-sided boundary limits of the double layer and of "
                     "the conormal derivative of the single layer against "
                     "the predicted density jumps"),
    "verify-identities": ("partition of unity by the double layer plus cap "
                          "potential, interior/exterior representation of "
                          "caloric fields, and (n=3) the elliptic boundary "
                          "integral taking values 1, 1/2, 0"),
    "poly-table": "exact polynomial solutions of both parabolic equations",
    "solve": ("one weighted least-squares fit of Dirichlet boundary data "
              "by polynomial solutions"),
    "completeness": ("residual decay of least-squares fits over increasing "
                     "polynomial degree, with optional cross-validation on "
                     "a finer mesh"),
}

_TASK_PARAMS = {
    "verify-kernels": "probes (int), tolerance (float)",
    "verify-jumps": "probes (int), kinds (subset of double, conormal_single), "
                    "tolerance (float); planar sections only",
    "verify-identities": "interior_probes, exterior_probes, tolerance, "
                         "surface_tolerance",
    "poly-table": "max_degree (int); parity from the operator block",
    "solve": "degree, rcond, data (caloric-poly | caloric-exponential | "
             "abs-coordinate | values-file), max_residual (optional)",
    "completeness": "degrees (increasing ints), rcond, data, "
                    "cross_validate (bool), final_max_residual (optional)",
}


def list_tasks():
    """Stable catalog of tasks: (name, what it verifies, parameters)."""
    return [(name, _TASK_SUMMARIES[name], _TASK_PARAMS[name])
            for name in sorted(TASKS)]


def _print_task_list():
    for name, summary, params in list_tasks():
        print(name)
        print(f"    {summary}")
        print(f"    parameters: {params}")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="calorix",
        description="Verification suites and least-squares studies for an "
                    "anisotropic heat operator on finite cylinders.")
    parser.add_argument("task", help="task name from the config, or "
                                     "'list-tasks' for the catalog")
    parser.add_argument("--config", help="path to a JSON experiment config")
    parser.add_argument("--out", help="output directory (default: the "
                                      "config's output block, else 'out')")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: CALORIX_THREADS or 1)")
    args = parser.parse_args(argv)

    if args.task == "list-tasks":
        _print_task_list()
        return 0

    try:
        if args.task not in TASKS:
            raise ConfigInvalid(
                f"unknown task {args.task!r}; run 'calorix list-tasks'")
        if args.config is None:
            raise ConfigInvalid("--config is required")
        try:
            with open(args.config, encoding="utf-8") as fh:
                config = json.load(fh)
        except OSError as exc:
            raise ConfigInvalid(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"config is not valid JSON: {exc}") from exc
        if not isinstance(config, dict):
            raise ConfigInvalid("config must be a JSON object")
        if config.get("task", {}).get("name") != args.task:
            raise ConfigInvalid(
                f"config task {config.get('task', {}).get('name')!r} does not "
                f"match requested task {args.task!r}")

        config_dir = os.path.dirname(os.path.abspath(args.config))
        if args.out is not None:
            out_dir = args.out
        else:
            rel = config.get("output", {}).get("directory", "out")
            out_dir = os.path.join(config_dir, rel)
        if args.threads is not None:
            threads = args.threads
        else:
            threads = int(os.environ.get("CALORIX_THREADS", "1"))

        ctx = RunContext(config, config_dir, out_dir, threads)
        TASKS[args.task](ctx)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TaskFailed as exc:
        print(f"task failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
