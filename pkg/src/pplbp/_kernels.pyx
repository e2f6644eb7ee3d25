# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: stencil matvec, Jacobi PCG and riu2 LBP encoding."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, floor

from ._fallback import ConvergenceError, neighbor_offsets, margin

cnp.import_array()


cdef void _matvec(const double[:, ::1] x, const double[:, ::1] wx, const double[:, ::1] wy,
                  double[:, ::1] y) noexcept nogil:
    cdef Py_ssize_t m = x.shape[0], l = x.shape[1], i, j
    cdef double f
    for i in range(m):
        for j in range(l):
            y[i, j] = x[i, j]
    for i in range(m - 1):
        for j in range(l):
            f = wx[i, j] * (x[i, j] - x[i + 1, j])
            y[i, j] += f
            y[i + 1, j] -= f
    for i in range(m):
        for j in range(l - 1):
            f = wy[i, j] * (x[i, j] - x[i, j + 1])
            y[i, j] += f
            y[i, j + 1] -= f


cdef double _dot(const double[:, ::1] a, const double[:, ::1] b) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double s = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            s += a[i, j] * b[i, j]
    return s


def stencil_matvec(x, wx, wy):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(np.asarray(xv))
    _matvec(xv, np.ascontiguousarray(wx, dtype=np.float64),
            np.ascontiguousarray(wy, dtype=np.float64), out)
    return out


def pcg(wx_, wy_, diag_, b_, x0_, double tol, int max_iter):
    cdef const double[:, ::1] wx = np.ascontiguousarray(wx_, dtype=np.float64)
    cdef const double[:, ::1] wy = np.ascontiguousarray(wy_, dtype=np.float64)
    cdef const double[:, ::1] diag = np.ascontiguousarray(diag_, dtype=np.float64)
    cdef const double[:, ::1] b = np.ascontiguousarray(b_, dtype=np.float64)
    cdef Py_ssize_t m = b.shape[0], l = b.shape[1], i, j
    cdef double normb = sqrt(_dot(b, b))
    if normb == 0.0:
        return np.zeros((m, l)), 0, 0.0
    x_arr = np.array(x0_, dtype=np.float64, order="C", copy=True)
    r_arr = np.empty((m, l))
    z_arr = np.empty((m, l))
    p_arr = np.empty((m, l))
    ap_arr = np.empty((m, l))
    cdef double[:, ::1] x = x_arr
    cdef double[:, ::1] r = r_arr
    cdef double[:, ::1] z = z_arr
    cdef double[:, ::1] p = p_arr
    cdef double[:, ::1] ap = ap_arr
    cdef double thresh = tol * normb, normr, rz, rz_new, alpha, beta
    cdef int it
    cdef bint restart = True
    with nogil:
        normr = 0.0
        it = 0
        while True:
            if restart:
                _matvec(x, wx, wy, ap)
                for i in range(m):
                    for j in range(l):
                        r[i, j] = b[i, j] - ap[i, j]
                normr = sqrt(_dot(r, r))
                if normr <= thresh:
                    break
                for i in range(m):
                    for j in range(l):
                        z[i, j] = r[i, j] / diag[i, j]
                        p[i, j] = z[i, j]
                rz = _dot(r, z)
                restart = False
            if it >= max_iter:
                break
            it += 1
            _matvec(p, wx, wy, ap)
            alpha = rz / _dot(p, ap)
            for i in range(m):
                for j in range(l):
                    x[i, j] += alpha * p[i, j]
                    r[i, j] -= alpha * ap[i, j]
            normr = sqrt(_dot(r, r))
            if normr <= thresh:
                # guard against drift of the recursive residual
                restart = True
                continue
            for i in range(m):
                for j in range(l):
                    z[i, j] = r[i, j] / diag[i, j]
            rz_new = _dot(r, z)
            beta = rz_new / rz
            for i in range(m):
                for j in range(l):
                    p[i, j] = beta * p[i, j] + z[i, j]
            rz = rz_new
    if normr > thresh:
        raise ConvergenceError(max_iter, normr / normb)
    return x_arr, it, normr / normb


def lbp_codes(data_, int P, double R):
    cdef const double[:, ::1] data = np.ascontiguousarray(data_, dtype=np.float64)
    cdef int c = margin(R)
    cdef Py_ssize_t rows = data.shape[0] - 2 * c, cols = data.shape[1] - 2 * c
    offs = neighbor_offsets(P, R)
    x0_arr = np.empty(P, dtype=np.intp)
    y0_arr = np.empty(P, dtype=np.intp)
    fx_arr = np.empty(P)
    fy_arr = np.empty(P)
    for k, (dx, dy) in enumerate(offs):
        x0_arr[k] = <Py_ssize_t>floor(dx)
        y0_arr[k] = <Py_ssize_t>floor(dy)
        fx_arr[k] = dx - floor(dx)
        fy_arr[k] = dy - floor(dy)
    cdef Py_ssize_t[::1] ox = x0_arr
    cdef Py_ssize_t[::1] oy = y0_arr
    cdef double[::1] fx = fx_arr
    cdef double[::1] fy = fy_arr
    out_arr = np.empty((rows, cols), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, ci, cj, xi, yj
    cdef int k2, bit, first, prev, count, trans
    cdef double g, top, bottom, val
    with nogil:
        for i in range(rows):
            ci = i + c
            for j in range(cols):
                cj = j + c
                g = data[ci, cj]
                count = 0
                trans = 0
                first = 0
                prev = 0
                for k2 in range(P):
                    xi = ci + ox[k2]
                    yj = cj + oy[k2]
                    top = data[xi, yj]
                    if fy[k2] != 0.0:
                        top = top + fy[k2] * (data[xi, yj + 1] - top)
                    if fx[k2] != 0.0:
                        bottom = data[xi + 1, yj]
                        if fy[k2] != 0.0:
                            bottom = bottom + fy[k2] * (data[xi + 1, yj + 1] - bottom)
                        val = top + fx[k2] * (bottom - top)
                    else:
                        val = top
                    bit = 1 if val >= g else 0
                    count += bit
                    if k2 == 0:
                        first = bit
                    elif bit != prev:
                        trans += 1
                    prev = bit
                if first != prev:
                    trans += 1
                out[i, j] = count if trans <= 2 else P + 1
    return out_arr
