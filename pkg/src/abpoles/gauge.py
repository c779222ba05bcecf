"""Aharonov-Bohm potentials and the branch-cut phases that gauge them away.

With ``Theta`` from :func:`theta_total`, ``u = exp(i Theta) (v + i w)`` maps the
magnetic problem to the real two-field crack problem, and
``(i grad + A) u = i exp(i Theta) (grad v + i grad w)`` off the cracks.
"""
from __future__ import annotations

import math

import numpy as np

from .geometry import TWO_PI, PoleConfig

CUT_TOL = 1e-13


def _pts(x):
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, 2), x.shape[:-1]


def vector_potential(b, rho: float, x):
    """``rho * (-(x2 - b2), x1 - b1) / |x - b|^2``; rejects evaluation at the pole."""
    p, shape = _pts(x)
    d = p - np.asarray(b, dtype=float)[None]
    r2 = np.sum(d * d, axis=1)
    if np.any(r2 == 0.0):
        raise ValueError("vector potential evaluated at its pole")
    out = rho * np.column_stack([-d[:, 1], d[:, 0]]) / r2[:, None]
    return out.reshape(shape + (2,))


def multi_potential(config: PoleConfig, x, eps: float | None = None):
    """Sum of the single-pole potentials at the poles ``eps * a_j``."""
    e = config.eps if eps is None else eps
    p, shape = _pts(x)
    out = np.zeros_like(p)
    if e == 0:
        return vector_potential(np.zeros(2), config.total_rho, p).reshape(shape + (2,))
    for b, pole in zip(config.positions(e), config.poles):
        out += vector_potential(b, pole.rho, p)
    return out.reshape(shape + (2,))


def theta_pole(b, alpha: float, x):
    """Angle about ``b`` after rotating by ``alpha``, valued in [0, 2pi).

    ``theta(b + r(cos t, sin t)) = alpha + t`` for ``t`` in [-alpha, 2pi - alpha).
    The cut is the ray from ``b`` in direction ``(cos alpha, -sin alpha)``.
    """
    p, shape = _pts(x)
    d = p - np.asarray(b, dtype=float)[None]
    if np.any((d[:, 0] == 0) & (d[:, 1] == 0)):
        raise ValueError("phase evaluated at its pole")
    th = np.mod(np.arctan2(d[:, 1], d[:, 0]) + alpha, TWO_PI)
    on_cut = (th < CUT_TOL) | (th > TWO_PI - CUT_TOL)
    if np.any(on_cut):
        raise ValueError("phase evaluated on its cut; classify the side first")
    return th.reshape(shape) if shape else float(th[0])


def theta_total(config: PoleConfig, eps: float, x):
    """Gauge phase ``Theta_eps = sum_j rho_j theta_j`` with every cut along the crack of pole j.

    For ``eps > 0`` the phase of pole ``j`` is ``theta_pole(eps a_j, pi - alpha_j, .)``;
    for ``eps = 0`` all phases are centred at the origin, which reproduces
    ``theta_j(cos t, sin t) = t - alpha_j + pi (1 - 2 [t >= alpha_j + pi])``.
    """
    p, shape = _pts(x)
    out = np.zeros(len(p))
    pos = config.positions(eps) if eps > 0 else np.zeros((config.k, 2))
    for b, pole in zip(pos, config.poles):
        out += pole.rho * theta_pole(b, math.pi - pole.alpha, p)
    return out.reshape(shape) if shape else float(out[0])


def theta_grad_fd(config: PoleConfig, eps: float, x, step: float | None = None):
    """Central-difference gradient of ``theta_total``, step adapted to the distance to the cracks."""
    p, shape = _pts(x)
    if step is None:
        pos = config.positions(eps) if eps > 0 else np.zeros((1, 2))
        dpole = np.min(np.linalg.norm(p[:, None] - pos[None], axis=2), axis=1)
        dcrack = np.full(len(p), np.inf)
        for pole in config.poles:
            u = pole.direction
            t = p @ u
            dline = np.abs(p[:, 0] * u[1] - p[:, 1] * u[0])
            on = t <= eps * pole.r
            dtip = np.linalg.norm(p - (eps * pole.r) * u[None], axis=1)
            dcrack = np.minimum(dcrack, np.where(on, dline, dtip))
        h = 1e-5 * np.minimum(dpole, dcrack)
    else:
        h = np.full(len(p), step)
    g = np.empty_like(p)
    for k in range(2):
        e = np.zeros(2)
        e[k] = 1.0
        tp = theta_total(config, eps, p + h[:, None] * e)
        tm = theta_total(config, eps, p - h[:, None] * e)
        g[:, k] = np.asarray(tp - tm) / (2 * h)
    return g.reshape(shape + (2,))


def lambda_constant(config: PoleConfig) -> float:
    """Phase constant ``pi/2 - sum_j rho_j alpha_j`` used by the K-real normalization."""
    return math.pi / 2 - float(np.dot(config.rhos, config.alphas))


def gauge_copies(mesh, config: PoleConfig, eps: float, tau: float = 0.5) -> np.ndarray:
    """``Theta_eps`` at every DOF copy of a crack mesh, on the copy's own side.

    Each phase is evaluated at the node itself; for nodes lying on a cut the
    branch (0 or 2pi) is read off a sample point inside an incident triangle
    (``tau`` of the way to its centroid).  Copies located at a pole get 0.
    """
    x = mesh.nodes
    side = mesh.side_points(tau)
    pos = config.positions(eps) if eps > 0 else np.zeros((config.k, 2))
    at_pole = np.min(np.linalg.norm(x[:, None] - pos[None], axis=2), axis=1) < 1e-14
    out = np.zeros(mesh.n_dofs)
    for b, pole in zip(pos, config.poles):
        alpha = math.pi - pole.alpha
        d = x - b
        r = np.linalg.norm(d, axis=1)
        th = np.mod(np.arctan2(d[:, 1], d[:, 0]) + alpha, TWO_PI)
        # rounding of on-crack nodes is relative to |x|, so the angular slack grows near b
        tol = 1e-9 * (1.0 + np.linalg.norm(b) / np.maximum(r, 1e-300))
        on = (th < tol) | (th > TWO_PI - tol)
        ds = side[on] - b
        ts = np.mod(np.arctan2(ds[:, 1], ds[:, 0]) + alpha, TWO_PI)
        th[on] = np.where(ts > math.pi, TWO_PI, 0.0)
        out += pole.rho * th
    out[at_pole] = 0.0
    return out
