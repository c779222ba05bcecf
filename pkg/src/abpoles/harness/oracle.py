"""Reference Bessel zeros and disk spectra, computed without special-function libraries.

The zeros of ``J_nu`` are the zeros of the entire series

    S_nu(x) = sum_k (-x^2/4)^k / (k! (nu+1)_k)

(``J_nu = (x/2)^nu S_nu / Gamma(nu+1)``), which is summed in 50-digit decimal
arithmetic so that cancellation between large terms costs nothing.  Zeros are
bracketed on a fine grid and refined by bisection.
"""
from __future__ import annotations

import math
from decimal import Decimal, localcontext

ZERO_TOL = 1e-12
_PREC = 50


def _series(nu: float, x: float) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = _PREC
        q = -(Decimal(x) * Decimal(x)) / 4
        a = Decimal(nu) + 1
        term = Decimal(1)
        total = term
        k = 0
        tiny = Decimal(10) ** (-(_PREC - 5))
        while True:
            k += 1
            term = term * q / (k * (a + k - 1))
            total += term
            if k > 10 and abs(term) < tiny * max(abs(total), Decimal(1)):
                break
        return total


def bessel_reduced(nu: float, x: float) -> float:
    """``S_nu(x) = Gamma(nu+1) (2/x)^nu J_nu(x)``; same zeros as ``J_nu`` for x > 0."""
    return float(_series(nu, x))


def bessel_j(nu: float, x: float) -> float:
    """``J_nu(x)`` for ``x >= 0`` from the series."""
    if x == 0:
        return 1.0 if nu == 0 else 0.0
    return float(_series(nu, x)) * (0.5 * x) ** nu / math.gamma(nu + 1.0)


def _bisect(nu, a, b, fa, tol):
    while b - a > tol:
        c = 0.5 * (a + b)
        fc = _series(nu, c)
        if fc == 0:
            return c
        if (fc > 0) == (fa > 0):
            a, fa = c, fc
        else:
            b = c
    return 0.5 * (a + b)


def bessel_zeros(nu: float, count: int, tol: float = ZERO_TOL) -> list[float]:
    """First ``count`` positive zeros of ``J_nu``, absolute accuracy ``tol``."""
    if nu <= 0:
        raise ValueError("order must be positive")
    if count < 1:
        return []
    # zeros are separated by more than 2.5 and j_{nu,1} > nu
    step = 0.05
    x = max(nu, step)
    fx = _series(nu, x)
    out: list[float] = []
    while len(out) < count:
        y = x + step
        fy = _series(nu, y)
        if fy == 0:
            out.append(y)
            y += 1e-9
            fy = _series(nu, y)
        elif (fx > 0) != (fy > 0):
            out.append(_bisect(nu, x, y, fx, tol))
        x, fx = y, fy
    return out[:count]


def disk_eigenvalue(rho: float, index: int = 1) -> float:
    """Lowest Aharonov-Bohm Dirichlet eigenvalue of the unit disk with a centred pole.

    ``index`` counts zeros of the smallest order ``min(rho, 1 - rho)`` (mode with
    angular number closest to ``-rho``).
    """
    r = rho % 1.0
    nu = min(r, 1.0 - r)
    if nu == 0:
        raise ValueError("integer circulation has no Aharonov-Bohm singularity")
    return bessel_zeros(nu, index)[-1] ** 2
