"""Quadrature rules on the reference triangle and graded rules on segments."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def collapsed_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Conical product rule with ``n*n`` points, collapsed at barycentric vertex 0.

    Returns barycentric coordinates (npts, 3) and weights summing to 1/2 (the
    reference triangle area).  Points avoid the vertices, and the Jacobian of the
    collapse vanishes at vertex 0, which removes 1/r singularities located there.
    """
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    u, v = np.meshgrid(x, x, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    u, v, wu, wv = u.ravel(), v.ravel(), wu.ravel(), wv.ravel()
    # vertex 0 at v = 0; edge between vertices 1 and 2 at v = 1
    l1 = v * (1.0 - u)
    l2 = v * u
    l0 = 1.0 - l1 - l2
    bary = np.column_stack([l0, l1, l2])
    weights = wu * wv * v
    return bary, weights


def triangle_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Rule exact for polynomials of the given total degree."""
    n = max(1, (order + 2) // 2)
    return collapsed_rule(n)


def graded_segment_rule(length: float, panels: int = 12, gauss: int = 6, exponent: float = 3.0):
    """Composite Gauss rule on [0, length] with panel breaks clustered at 0.

    Breakpoints are ``length * (i / panels) ** exponent``.  Suitable for
    integrands behaving like ``r ** s`` with s > -1 near r = 0.
    """
    if length <= 0:
        return np.zeros(0), np.zeros(0)
    x, w = np.polynomial.legendre.leggauss(gauss)
    br = length * (np.arange(panels + 1) / panels) ** exponent
    a, b = br[:-1], br[1:]
    nodes = 0.5 * (b - a)[:, None] * (x[None] + 1.0) + a[:, None]
    weights = 0.5 * (b - a)[:, None] * w[None]
    return nodes.ravel(), weights.ravel()


def graded_breaks(nodes_t: np.ndarray, panels_first: int = 12, exponent: float = 3.0) -> np.ndarray:
    """Insert graded breakpoints inside the first interval of a sorted node list."""
    t0, t1 = nodes_t[0], nodes_t[1]
    extra = t0 + (t1 - t0) * (np.arange(1, panels_first) / panels_first) ** exponent
    return np.sort(np.concatenate([nodes_t, extra]))
