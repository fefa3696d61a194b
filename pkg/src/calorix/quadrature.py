"""Small quadrature and special-value helpers used across the package.

Everything here is plain numpy; rules are returned as (nodes, weights)
pairs ready for a dot product.
"""

import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=128)
def _leggauss(m):
    x, w = np.polynomial.legendre.leggauss(int(m))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(m, a=0.0, b=1.0):
    """Gauss-Legendre rule with m nodes mapped to the interval (a, b)."""
    x, w = _leggauss(int(m))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def periodic_trapezoid(m, period=2.0 * math.pi):
    """Equally spaced rule on [0, period); spectrally accurate for periodic smooth integrands."""
    m = int(m)
    nodes = np.arange(m) * (period / m)
    weights = np.full(m, period / m)
    return nodes, weights


def gauss_hermite(m):
    """Gauss-Hermite rule for the weight exp(-u^2) on the real line."""
    return np.polynomial.hermite.hermgauss(int(m))


def composite_gauss(edges, npts):
    """Gauss-Legendre rule with npts nodes on each panel delimited by ``edges``."""
    edges = np.asarray(edges, dtype=float)
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        x, w = gauss_legendre(npts, a, b)
        xs.append(x)
        ws.append(w)
    if not xs:
        return np.empty(0), np.empty(0)
    return np.concatenate(xs), np.concatenate(ws)


def graded_edges_toward(center, half_width, depth):
    """Panel edges on [center - half_width, center + half_width] geometrically
    refined toward ``center``; depth controls the smallest panel size."""
    offs = half_width * 0.5 ** np.arange(depth + 1)
    left = center - offs
    right = (center + offs)[::-1]
    return np.concatenate([left, right])


def gamma_half_integer(twice_z):
    """Gamma(z) for z = twice_z / 2 with twice_z a positive integer.

    Only half-integer arguments are needed for unit-sphere areas; this keeps
    the core free of special-function dependencies.
    """
    k = int(twice_z)
    if k <= 0 or k != twice_z:
        raise ValueError("argument must be a positive integer (twice the half-integer)")
    if k % 2 == 0:
        return float(math.factorial(k // 2 - 1))
    # Gamma(1/2) = sqrt(pi), then Gamma(z + 1) = z Gamma(z)
    val = math.sqrt(math.pi)
    z = 0.5
    while z < k / 2:
        val *= z
        z += 1.0
    return val


def unit_sphere_area(n):
    """Surface area of the unit sphere in R^n: 2 pi^(n/2) / Gamma(n/2)."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return 2.0 * math.pi ** (n / 2.0) / gamma_half_integer(n)
