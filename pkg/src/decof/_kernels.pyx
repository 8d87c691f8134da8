# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pixel kernels.

Accumulation order mirrors ``decof._kernels_py`` term for term, so both
backends return bitwise-identical arrays.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport nearbyint

cnp.import_array()


def convolve_axis0(const double[:, ::1] padded, const double[::1] weights):
    cdef Py_ssize_t taps = weights.shape[0]
    cdef Py_ssize_t rows = padded.shape[0] - taps + 1
    cdef Py_ssize_t cols = padded.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc
    out_arr = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i in range(rows):
            for j in range(cols):
                acc = weights[0] * padded[i, j]
                for k in range(1, taps):
                    acc = acc + weights[k] * padded[i + k, j]
                out[i, j] = acc
    return out_arr


def resize_bilinear(const double[:, :, ::1] img,
                    const Py_ssize_t[::1] y0, const Py_ssize_t[::1] y1, const double[::1] fy,
                    const Py_ssize_t[::1] x0, const Py_ssize_t[::1] x1, const double[::1] fx):
    cdef Py_ssize_t oh = y0.shape[0]
    cdef Py_ssize_t ow = x0.shape[0]
    cdef Py_ssize_t nc = img.shape[2]
    cdef Py_ssize_t i, j, c
    cdef double a, b, top, bot
    out_arr = np.empty((oh, ow, nc), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    with nogil:
        for i in range(oh):
            for j in range(ow):
                for c in range(nc):
                    a = img[y0[i], x0[j], c]
                    b = img[y0[i], x1[j], c]
                    top = a + fx[j] * (b - a)
                    a = img[y1[i], x0[j], c]
                    b = img[y1[i], x1[j], c]
                    bot = a + fx[j] * (b - a)
                    out[i, j, c] = top + fy[i] * (bot - top)
    return out_arr


cdef void _block_roundtrip(double[:, ::1] plane, Py_ssize_t r0, Py_ssize_t c0,
                           const double[:, ::1] q, const double[:, ::1] basis,
                           double[:, ::1] blk, double[:, ::1] tmp) noexcept nogil:
    cdef Py_ssize_t u, v, x, y
    cdef double acc
    for y in range(8):
        for x in range(8):
            blk[y, x] = plane[r0 + y, c0 + x]
    # forward: tmp = C @ B
    for u in range(8):
        for x in range(8):
            acc = basis[u, 0] * blk[0, x]
            for y in range(1, 8):
                acc = acc + basis[u, y] * blk[y, x]
            tmp[u, x] = acc
    # coef = tmp @ C.T, quantize, dequantize
    for u in range(8):
        for v in range(8):
            acc = tmp[u, 0] * basis[v, 0]
            for x in range(1, 8):
                acc = acc + tmp[u, x] * basis[v, x]
            blk[u, v] = nearbyint(acc / q[u, v]) * q[u, v]
    # inverse: tmp = C.T @ coef
    for y in range(8):
        for v in range(8):
            acc = basis[0, y] * blk[0, v]
            for u in range(1, 8):
                acc = acc + basis[u, y] * blk[u, v]
            tmp[y, v] = acc
    # pixels = tmp @ C
    for y in range(8):
        for x in range(8):
            acc = tmp[y, 0] * basis[0, x]
            for v in range(1, 8):
                acc = acc + tmp[y, v] * basis[v, x]
            plane[r0 + y, c0 + x] = acc


def jpeg_plane_roundtrip(const double[:, ::1] plane, const double[:, ::1] qtable,
                         const double[:, ::1] basis):
    cdef Py_ssize_t h = plane.shape[0]
    cdef Py_ssize_t w = plane.shape[1]
    cdef Py_ssize_t r, c
    out_arr = np.array(plane, dtype=np.float64, copy=True)
    cdef double[:, ::1] out = out_arr
    cdef double[:, ::1] blk = np.empty((8, 8), dtype=np.float64)
    cdef double[:, ::1] tmp = np.empty((8, 8), dtype=np.float64)
    with nogil:
        for r in range(0, h, 8):
            for c in range(0, w, 8):
                _block_roundtrip(out, r, c, qtable, basis, blk, tmp)
    return out_arr
