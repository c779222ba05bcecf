"""Pure numpy element kernels; used when the compiled extension is unavailable."""
from __future__ import annotations

import numpy as np


def _geometry(P):
    d1 = P[:, 1] - P[:, 0]
    d2 = P[:, 2] - P[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    g = np.empty((len(P), 3, 2))
    g[:, 1, 0], g[:, 1, 1] = d2[:, 1] / det, -d2[:, 0] / det
    g[:, 2, 0], g[:, 2, 1] = -d1[:, 1] / det, d1[:, 0] / det
    g[:, 0] = -g[:, 1] - g[:, 2]
    return 0.5 * det, g


def p1_elements(P):
    """Laplace stiffness and consistent mass element matrices, each (nt, 3, 3)."""
    P = np.ascontiguousarray(P, dtype=float)
    area, g = _geometry(P)
    K = area[:, None, None] * np.einsum("nik,njk->nij", g, g)
    base = (np.ones((3, 3)) + np.eye(3)) / 12.0
    M = area[:, None, None] * base[None]
    return K, M


def _potential(x, poles, rho):
    A = np.zeros_like(x)
    for b, r in zip(poles, rho):
        d0 = x[..., 0] - b[0]
        d1 = x[..., 1] - b[1]
        q = r / (d0 * d0 + d1 * d1)
        A[..., 0] -= q * d1
        A[..., 1] += q * d0
    return A


def magnetic_elements(P, poles, rho, pole_local, qb, qw, sb, sw):
    """Element matrices of the magnetic form for P1 basis functions.

    Entry (a, b) integrates (i grad N_b + A N_b) . conj(i grad N_a + A N_a).
    Triangles with ``pole_local >= 0`` have a pole at that local vertex and use
    the collapsed rule ``(sb, sw)`` with the collapse placed at the pole.
    Returns real and imaginary parts, each (nt, 3, 3).
    """
    P = np.ascontiguousarray(P, dtype=float)
    poles = np.asarray(poles, dtype=float).reshape(-1, 2)
    rho = np.asarray(rho, dtype=float)
    area, g = _geometry(P)
    nt = len(P)
    Kr = np.empty((nt, 3, 3))
    Ki = np.empty((nt, 3, 3))
    groups = [(np.flatnonzero(pole_local < 0), qb, qw)]
    for p in range(3):
        perm = np.empty(3, dtype=int)
        perm[p], perm[(p + 1) % 3], perm[(p + 2) % 3] = 0, 1, 2
        groups.append((np.flatnonzero(pole_local == p), sb[:, perm], sw))
    for idx, bary, w in groups:
        if len(idx) == 0:
            continue
        x = np.einsum("qi,nik->nqk", bary, P[idx])
        A = _potential(x, poles, rho)
        gi = g[idx]
        AdotG = np.einsum("nqk,nbk->nqb", A, gi)  # A . grad N_b at each point
        A2 = np.sum(A * A, axis=2)
        wa = (2.0 * area[idx])[:, None] * w[None]
        lap = np.einsum("nik,njk->nij", gi, gi) * area[idx][:, None, None]
        mag = np.einsum("nq,qa,qb->nab", wa * A2, bary, bary)
        Kr[idx] = lap + 0.5 * (mag + np.transpose(mag, (0, 2, 1)))
        t = np.einsum("nq,qa,nqb->nab", wa, bary, AdotG)
        Ki[idx] = t - np.transpose(t, (0, 2, 1))
    return Kr, Ki
