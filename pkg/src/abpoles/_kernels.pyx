# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled element kernels (same interface as ``_kernels_py``)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _grads(double[:, :, ::1] P, Py_ssize_t n, double* area, double g[3][2]) noexcept nogil:
    cdef double d10 = P[n, 1, 0] - P[n, 0, 0]
    cdef double d11 = P[n, 1, 1] - P[n, 0, 1]
    cdef double d20 = P[n, 2, 0] - P[n, 0, 0]
    cdef double d21 = P[n, 2, 1] - P[n, 0, 1]
    cdef double det = d10 * d21 - d11 * d20
    g[1][0] = d21 / det
    g[1][1] = -d20 / det
    g[2][0] = -d11 / det
    g[2][1] = d10 / det
    g[0][0] = -g[1][0] - g[2][0]
    g[0][1] = -g[1][1] - g[2][1]
    area[0] = 0.5 * det


def p1_elements(P_in):
    cdef double[:, :, ::1] P = np.ascontiguousarray(P_in, dtype=np.float64)
    cdef Py_ssize_t nt = P.shape[0], n
    cdef int a, b
    K_arr = np.empty((nt, 3, 3))
    M_arr = np.empty((nt, 3, 3))
    cdef double[:, :, ::1] K = K_arr
    cdef double[:, :, ::1] M = M_arr
    cdef double g[3][2]
    cdef double area
    with nogil:
        for n in range(nt):
            _grads(P, n, &area, g)
            for a in range(3):
                for b in range(3):
                    K[n, a, b] = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1])
                    M[n, a, b] = area * (2.0 if a == b else 1.0) / 12.0
    return K_arr, M_arr


def magnetic_elements(P_in, poles_in, rho_in, pole_local_in, qb_in, qw_in, sb_in, sw_in):
    cdef double[:, :, ::1] P = np.ascontiguousarray(P_in, dtype=np.float64)
    cdef double[:, ::1] poles = np.ascontiguousarray(np.asarray(poles_in, dtype=np.float64).reshape(-1, 2))
    cdef double[::1] rho = np.ascontiguousarray(rho_in, dtype=np.float64)
    cdef long[::1] pole_local = np.ascontiguousarray(pole_local_in, dtype=np.int64)
    cdef double[:, ::1] qb = np.ascontiguousarray(qb_in, dtype=np.float64)
    cdef double[::1] qw = np.ascontiguousarray(qw_in, dtype=np.float64)
    cdef double[:, ::1] sb = np.ascontiguousarray(sb_in, dtype=np.float64)
    cdef double[::1] sw = np.ascontiguousarray(sw_in, dtype=np.float64)
    cdef Py_ssize_t nt = P.shape[0], n, q, nq, j
    cdef Py_ssize_t npole = poles.shape[0]
    cdef int a, b, p
    Kr_arr = np.empty((nt, 3, 3))
    Ki_arr = np.empty((nt, 3, 3))
    cdef double[:, :, ::1] Kr = Kr_arr
    cdef double[:, :, ::1] Ki = Ki_arr
    cdef double g[3][2]
    cdef double lam[3]
    cdef double AG[3]
    cdef double area, x0, x1, A0, A1, d0, d1, s, w, A2
    with nogil:
        for n in range(nt):
            _grads(P, n, &area, g)
            for a in range(3):
                for b in range(3):
                    Kr[n, a, b] = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1])
                    Ki[n, a, b] = 0.0
            p = pole_local[n]
            nq = qw.shape[0] if p < 0 else sw.shape[0]
            for q in range(nq):
                if p < 0:
                    lam[0] = qb[q, 0]
                    lam[1] = qb[q, 1]
                    lam[2] = qb[q, 2]
                    w = 2.0 * area * qw[q]
                else:
                    lam[p] = sb[q, 0]
                    lam[(p + 1) % 3] = sb[q, 1]
                    lam[(p + 2) % 3] = sb[q, 2]
                    w = 2.0 * area * sw[q]
                x0 = lam[0] * P[n, 0, 0] + lam[1] * P[n, 1, 0] + lam[2] * P[n, 2, 0]
                x1 = lam[0] * P[n, 0, 1] + lam[1] * P[n, 1, 1] + lam[2] * P[n, 2, 1]
                A0 = 0.0
                A1 = 0.0
                for j in range(npole):
                    d0 = x0 - poles[j, 0]
                    d1 = x1 - poles[j, 1]
                    s = rho[j] / (d0 * d0 + d1 * d1)
                    A0 -= s * d1
                    A1 += s * d0
                A2 = A0 * A0 + A1 * A1
                for b in range(3):
                    AG[b] = A0 * g[b][0] + A1 * g[b][1]
                for a in range(3):
                    for b in range(3):
                        Kr[n, a, b] += w * A2 * lam[a] * lam[b]
                        Ki[n, a, b] += w * (lam[a] * AG[b] - lam[b] * AG[a])
    return Kr_arr, Ki_arr
