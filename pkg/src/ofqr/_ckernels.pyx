# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_kernels_py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, M_PI

cnp.import_array()


def transfer_block(const double[::1] sx, const double[::1] sy,
                   const double[::1] ex, const double[::1] ey,
                   const double[::1] ez, const double[::1] area):
    cdef Py_ssize_t n_pix = sx.shape[0], n_em = ex.shape[0]
    cdef Py_ssize_t i, j
    out = np.empty((n_pix, n_em), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double[::1] scale = np.empty(n_em, dtype=np.float64)
    cdef double[::1] ez2 = np.empty(n_em, dtype=np.float64)
    cdef double dx, dy, d2, px, py
    for j in range(n_em):
        ez2[j] = ez[j] * ez[j]
        scale[j] = area[j] * ez2[j] / M_PI
    for i in range(n_pix):
        px = sx[i]
        py = sy[i]
        for j in range(n_em):
            dx = px - ex[j]
            dy = py - ey[j]
            d2 = dx * dx + dy * dy + ez2[j]
            o[i, j] = scale[j] / (d2 * d2)
    return out


def jacobi_sweep(double[:, ::1] work, double[:, ::1] v, double tol):
    cdef Py_ssize_t n = work.shape[0], m = work.shape[1], nv = v.shape[1]
    cdef Py_ssize_t p, q, i
    cdef double alpha, beta, gamma, off, max_off = 0.0
    cdef double zeta, t, c, s, a, b
    for p in range(n - 1):
        for q in range(p + 1, n):
            alpha = 0.0
            beta = 0.0
            gamma = 0.0
            for i in range(m):
                a = work[p, i]
                b = work[q, i]
                alpha += a * a
                beta += b * b
                gamma += a * b
            if alpha == 0.0 or beta == 0.0:
                continue
            off = fabs(gamma) / sqrt(alpha * beta)
            if off > max_off:
                max_off = off
            if off <= tol:
                continue
            zeta = (beta - alpha) / (2.0 * gamma)
            t = (1.0 if zeta >= 0 else -1.0) / (fabs(zeta) + sqrt(1.0 + zeta * zeta))
            c = 1.0 / sqrt(1.0 + t * t)
            s = c * t
            for i in range(m):
                a = work[p, i]
                b = work[q, i]
                work[p, i] = c * a - s * b
                work[q, i] = s * a + c * b
            for i in range(nv):
                a = v[p, i]
                b = v[q, i]
                v[p, i] = c * a - s * b
                v[q, i] = s * a + c * b
    return max_off


def im2col(const double[:, :, :, :] xpad, int k, int stride, int ho, int wo):
    cdef Py_ssize_t b = xpad.shape[0], c = xpad.shape[1]
    cdef Py_ssize_t ib, ic, ki, kj, r, s, row, col
    out = np.empty((c * k * k, b * ho * wo), dtype=np.float64)
    cdef double[:, ::1] o = out
    for ic in range(c):
        for ki in range(k):
            for kj in range(k):
                row = (ic * k + ki) * k + kj
                for ib in range(b):
                    for r in range(ho):
                        col = (ib * ho + r) * wo
                        for s in range(wo):
                            o[row, col + s] = xpad[ib, ic, r * stride + ki, s * stride + kj]
    return out


def col2im(const double[:, ::1] cols, int b, int c, int hp, int wp, int k,
           int stride, int ho, int wo):
    cdef Py_ssize_t ib, ic, ki, kj, r, s, row, col
    out = np.zeros((b, c, hp, wp), dtype=np.float64)
    cdef double[:, :, :, ::1] o = out
    for ic in range(c):
        for ki in range(k):
            for kj in range(k):
                row = (ic * k + ki) * k + kj
                for ib in range(b):
                    for r in range(ho):
                        col = (ib * ho + r) * wo
                        for s in range(wo):
                            o[ib, ic, r * stride + ki, s * stride + kj] += cols[row, col + s]
    return out
