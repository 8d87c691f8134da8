"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Every sum is accumulated in the same term order as the compiled code so the
two backends agree exactly.
"""
import numpy as np


def convolve_axis0(padded, weights):
    taps = weights.shape[0]
    rows = padded.shape[0] - taps + 1
    out = weights[0] * padded[0:rows]
    for k in range(1, taps):
        out = out + weights[k] * padded[k:k + rows]
    return out


def resize_bilinear(img, y0, y1, fy, x0, x1, fx):
    fx = fx[None, :, None]
    fy = fy[:, None, None]
    a = img[y0][:, x0]
    b = img[y0][:, x1]
    top = a + fx * (b - a)
    a = img[y1][:, x0]
    b = img[y1][:, x1]
    bot = a + fx * (b - a)
    return top + fy * (bot - top)


def jpeg_plane_roundtrip(plane, qtable, basis):
    h, w = plane.shape
    blocks = plane.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3).reshape(-1, 8, 8)

    tmp = np.empty_like(blocks)
    for u in range(8):
        acc = basis[u, 0] * blocks[:, 0, :]
        for y in range(1, 8):
            acc = acc + basis[u, y] * blocks[:, y, :]
        tmp[:, u, :] = acc

    coef = np.empty_like(blocks)
    for v in range(8):
        acc = tmp[:, :, 0] * basis[v, 0]
        for x in range(1, 8):
            acc = acc + tmp[:, :, x] * basis[v, x]
        coef[:, :, v] = acc
    coef = np.rint(coef / qtable) * qtable

    for y in range(8):
        acc = basis[0, y] * coef[:, 0, :]
        for u in range(1, 8):
            acc = acc + basis[u, y] * coef[:, u, :]
        tmp[:, y, :] = acc

    out = np.empty_like(blocks)
    for x in range(8):
        acc = tmp[:, :, 0] * basis[0, x]
        for v in range(1, 8):
            acc = acc + tmp[:, :, v] * basis[v, x]
        out[:, :, x] = acc

    return out.reshape(h // 8, w // 8, 8, 8).transpose(0, 2, 1, 3).reshape(h, w)
