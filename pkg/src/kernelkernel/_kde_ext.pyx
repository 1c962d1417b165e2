# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled grid KDE kernel.

Same contract as ``_kde_py.kde_grid``: unscaled sums of the radial profile
at every cell center, C order. Each point only touches the cells inside its
support window, so the cost is ``n * (2b / step)**k`` instead of
``n * cells``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, floor, ceil

cnp.import_array()


cdef inline double _profile(double u, int code) noexcept nogil:
    if u > 1.0:
        return 0.0
    if code == 0:
        return 0.75 * (1.0 - u * u)
    if code == 1:
        return 1.0 - u
    return 0.5


cdef inline void _window(double x, double b, double lo, double step, Py_ssize_t ncell,
                         Py_ssize_t *first, Py_ssize_t *last) noexcept nogil:
    # one cell of padding on each side; the profile zeroes anything outside
    cdef double a = ceil((x - b - lo) / step - 0.5) - 1.0
    cdef double z = floor((x + b - lo) / step - 0.5) + 1.0
    if a < 0:
        a = 0
    elif a > ncell:
        a = ncell
    if z > ncell - 1:
        z = ncell - 1
    elif z < -1:
        z = -1
    first[0] = <Py_ssize_t>a
    last[0] = <Py_ssize_t>z


cdef void _kde1(const double[:, ::1] pts, double b, int code, double lo, double step,
                Py_ssize_t ncell, double[::1] out) noexcept nogil:
    cdef Py_ssize_t j, i, first, last
    cdef double x, c
    for j in range(pts.shape[0]):
        x = pts[j, 0]
        _window(x, b, lo, step, ncell, &first, &last)
        for i in range(first, last + 1):
            c = lo + (i + 0.5) * step
            out[i] += _profile(fabs(c - x) / b, code)


cdef void _kde2(const double[:, ::1] pts, double b, int code, const double[::1] lo,
                const double[::1] step, Py_ssize_t n0, Py_ssize_t n1,
                double[::1] out) noexcept nogil:
    cdef Py_ssize_t j, i0, i1, f0, l0, f1, l1, row
    cdef double x0, x1, c0, c1, d0, d1
    for j in range(pts.shape[0]):
        x0 = pts[j, 0]
        x1 = pts[j, 1]
        _window(x0, b, lo[0], step[0], n0, &f0, &l0)
        _window(x1, b, lo[1], step[1], n1, &f1, &l1)
        for i0 in range(f0, l0 + 1):
            c0 = lo[0] + (i0 + 0.5) * step[0]
            d0 = c0 - x0
            row = i0 * n1
            for i1 in range(f1, l1 + 1):
                c1 = lo[1] + (i1 + 0.5) * step[1]
                d1 = c1 - x1
                out[row + i1] += _profile(sqrt(d0 * d0 + d1 * d1) / b, code)


cdef void _kdek(const double[:, ::1] pts, double b, int code, const double[::1] lo,
                const double[::1] step, const Py_ssize_t[::1] cells,
                Py_ssize_t[::1] first, Py_ssize_t[::1] last, Py_ssize_t[::1] idx,
                double[::1] out) noexcept nogil:
    cdef Py_ssize_t k = pts.shape[1]
    cdef Py_ssize_t j, d, flat
    cdef double s, c, diff
    cdef bint done
    for j in range(pts.shape[0]):
        for d in range(k):
            _window(pts[j, d], b, lo[d], step[d], cells[d], &first[d], &last[d])
            if first[d] > last[d]:
                break
        else:
            for d in range(k):
                idx[d] = first[d]
            done = False
            while not done:
                s = 0.0
                flat = 0
                for d in range(k):
                    c = lo[d] + (idx[d] + 0.5) * step[d]
                    diff = c - pts[j, d]
                    s += diff * diff
                    flat = flat * cells[d] + idx[d]
                out[flat] += _profile(sqrt(s) / b, code)
                d = k - 1
                while True:
                    idx[d] += 1
                    if idx[d] <= last[d]:
                        break
                    idx[d] = first[d]
                    if d == 0:
                        done = True
                        break
                    d -= 1


def kde_grid(points, double b, int code, lo, step, cells):
    cdef const double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[::1] lo_v = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] step_v = np.ascontiguousarray(step, dtype=np.float64)
    cdef const Py_ssize_t[::1] cells_v = np.ascontiguousarray(cells, dtype=np.intp)
    cdef Py_ssize_t k = pts.shape[1]
    cdef Py_ssize_t total = 1
    cdef Py_ssize_t d
    if code < 0 or code > 2:
        raise ValueError(f"unknown kernel code {code}")
    for d in range(k):
        total *= cells_v[d]
    result = np.zeros(total, dtype=np.float64)
    cdef double[::1] out = result
    cdef Py_ssize_t[::1] first, last, idx
    if k == 1:
        with nogil:
            _kde1(pts, b, code, lo_v[0], step_v[0], cells_v[0], out)
    elif k == 2:
        with nogil:
            _kde2(pts, b, code, lo_v, step_v, cells_v[0], cells_v[1], out)
    else:
        first = np.zeros(k, dtype=np.intp)
        last = np.zeros(k, dtype=np.intp)
        idx = np.zeros(k, dtype=np.intp)
        with nogil:
            _kdek(pts, b, code, lo_v, step_v, cells_v, first, last, idx, out)
    return result
