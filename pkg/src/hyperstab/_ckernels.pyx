# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernels for stacks of small dense matrices.

Same contracts as _pykernels; tight C loops beat numpy's per-call overhead
for the n <= 8 matrices this package works with.
"""

import numpy as np

ctypedef fused scalar:
    double
    double complex

# Largest supported matrix dimension (matches algebra.MAX_DIMENSION).
DEF NMAX = 8


cdef inline void _mm(const scalar* a, const scalar* b, scalar* out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef scalar acc
    for i in range(n):
        for j in range(n):
            acc = 0
            for k in range(n):
                acc = acc + a[i * n + k] * b[k * n + j]
            out[i * n + j] = acc


def commutator_stack(scalar[:, ::1] a, scalar[:, :, ::1] xs):
    """a @ x - x @ a for each x in the stack."""
    cdef Py_ssize_t B = xs.shape[0], n = xs.shape[1]
    if n > NMAX:
        raise ValueError("matrix dimension exceeds compiled kernel limit")
    out_arr = np.empty_like(np.asarray(xs))
    cdef scalar[:, :, ::1] out = out_arr
    cdef scalar ax[NMAX * NMAX]
    cdef scalar xa[NMAX * NMAX]
    cdef Py_ssize_t t, i, j
    with nogil:
        for t in range(B):
            _mm(&a[0, 0], &xs[t, 0, 0], ax, n)
            _mm(&xs[t, 0, 0], &a[0, 0], xa, n)
            for i in range(n):
                for j in range(n):
                    out[t, i, j] = ax[i * n + j] - xa[i * n + j]
    return out_arr


def mul_stack(scalar[:, :, ::1] xs, scalar[:, :, ::1] ys):
    cdef Py_ssize_t B = xs.shape[0], n = xs.shape[1]
    if n > NMAX:
        raise ValueError("matrix dimension exceeds compiled kernel limit")
    out_arr = np.empty_like(np.asarray(xs))
    cdef scalar[:, :, ::1] out = out_arr
    cdef Py_ssize_t t
    with nogil:
        for t in range(B):
            _mm(&xs[t, 0, 0], &ys[t, 0, 0], &out[t, 0, 0], n)
    return out_arr


def sandwich_stack(scalar[:, :, ::1] xs, scalar[:, :, ::1] ys):
    """x @ y @ x for each pair in the stacks."""
    cdef Py_ssize_t B = xs.shape[0], n = xs.shape[1]
    if n > NMAX:
        raise ValueError("matrix dimension exceeds compiled kernel limit")
    out_arr = np.empty_like(np.asarray(xs))
    cdef scalar[:, :, ::1] out = out_arr
    cdef scalar xy[NMAX * NMAX]
    cdef Py_ssize_t t
    with nogil:
        for t in range(B):
            _mm(&xs[t, 0, 0], &ys[t, 0, 0], xy, n)
            _mm(xy, &xs[t, 0, 0], &out[t, 0, 0], n)
    return out_arr


def triple_defect_stack(scalar[:, :, ::1] hxyx, scalar[:, :, ::1] hx,
                        scalar[:, :, ::1] hy, scalar[:, :, ::1] xs,
                        scalar[:, :, ::1] ys):
    """h(xyx) - h(x) y x - x h(y) x - x y h(x), given precomputed map values."""
    cdef Py_ssize_t B = xs.shape[0], n = xs.shape[1]
    if n > NMAX:
        raise ValueError("matrix dimension exceeds compiled kernel limit")
    out_arr = np.empty_like(np.asarray(xs))
    cdef scalar[:, :, ::1] out = out_arr
    cdef scalar t1[NMAX * NMAX]
    cdef scalar t2[NMAX * NMAX]
    cdef scalar t3[NMAX * NMAX]
    cdef Py_ssize_t t, i, j
    with nogil:
        for t in range(B):
            # t2 = h(x) (y x)
            _mm(&ys[t, 0, 0], &xs[t, 0, 0], t1, n)
            _mm(&hx[t, 0, 0], t1, t2, n)
            for i in range(n):
                for j in range(n):
                    out[t, i, j] = hxyx[t, i, j] - t2[i * n + j]
            # t2 = x h(y) x
            _mm(&xs[t, 0, 0], &hy[t, 0, 0], t1, n)
            _mm(t1, &xs[t, 0, 0], t2, n)
            # t3 = (x y) h(x)
            _mm(&xs[t, 0, 0], &ys[t, 0, 0], t1, n)
            _mm(t1, &hx[t, 0, 0], t3, n)
            for i in range(n):
                for j in range(n):
                    out[t, i, j] = out[t, i, j] - t2[i * n + j] - t3[i * n + j]
    return out_arr


def deriv_defect_stack(scalar[:, :, ::1] hxy, scalar[:, :, ::1] hx,
                       scalar[:, :, ::1] hy, scalar[:, :, ::1] xs,
                       scalar[:, :, ::1] ys):
    """h(xy) - h(x) y - x h(y), given precomputed map values."""
    cdef Py_ssize_t B = xs.shape[0], n = xs.shape[1]
    if n > NMAX:
        raise ValueError("matrix dimension exceeds compiled kernel limit")
    out_arr = np.empty_like(np.asarray(xs))
    cdef scalar[:, :, ::1] out = out_arr
    cdef scalar t1[NMAX * NMAX]
    cdef scalar t2[NMAX * NMAX]
    cdef Py_ssize_t t, i, j
    with nogil:
        for t in range(B):
            _mm(&hx[t, 0, 0], &ys[t, 0, 0], t1, n)
            _mm(&xs[t, 0, 0], &hy[t, 0, 0], t2, n)
            for i in range(n):
                for j in range(n):
                    out[t, i, j] = hxy[t, i, j] - t1[i * n + j] - t2[i * n + j]
    return out_arr


def jordan_defect_stack(scalar[:, :, ::1] hxx, scalar[:, :, ::1] hx,
                        scalar[:, :, ::1] xs):
    """h(x^2) - h(x) x - x h(x), given precomputed map values."""
    cdef Py_ssize_t B = xs.shape[0], n = xs.shape[1]
    if n > NMAX:
        raise ValueError("matrix dimension exceeds compiled kernel limit")
    out_arr = np.empty_like(np.asarray(xs))
    cdef scalar[:, :, ::1] out = out_arr
    cdef scalar t1[NMAX * NMAX]
    cdef scalar t2[NMAX * NMAX]
    cdef Py_ssize_t t, i, j
    with nogil:
        for t in range(B):
            _mm(&hx[t, 0, 0], &xs[t, 0, 0], t1, n)
            _mm(&xs[t, 0, 0], &hx[t, 0, 0], t2, n)
            for i in range(n):
                for j in range(n):
                    out[t, i, j] = hxx[t, i, j] - t1[i * n + j] - t2[i * n + j]
    return out_arr


def fro_norm_stack(scalar[:, :, ::1] xs):
    """Frobenius norm of each matrix in the stack."""
    cdef Py_ssize_t B = xs.shape[0], n = xs.shape[1]
    out_arr = np.empty(B, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double acc
    cdef scalar v
    cdef Py_ssize_t t, i, j
    with nogil:
        for t in range(B):
            acc = 0.0
            for i in range(n):
                for j in range(n):
                    v = xs[t, i, j]
                    if scalar is double:
                        acc += v * v
                    else:
                        acc += v.real * v.real + v.imag * v.imag
            out[t] = acc ** 0.5
    return out_arr
