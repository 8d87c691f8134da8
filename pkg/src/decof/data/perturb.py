"""Evaluation perturbations: Gaussian blur and a baseline JPEG round trip.

The JPEG path is a self-contained baseline codec (JFIF colour transform,
4:2:0 subsampling, 8x8 orthonormal DCT, Annex K tables with the usual
quality scaling). Entropy coding is lossless and therefore skipped: the
decoded pixels are what a baseline encoder/decoder pair would produce,
and they are identical on every platform.
"""
import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import ParameterError

LUMA_QTABLE = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.int64)

CHROMA_QTABLE = np.array([
    [17, 18, 24, 47, 99, 99, 99, 99],
    [18, 21, 26, 66, 99, 99, 99, 99],
    [24, 26, 56, 99, 99, 99, 99, 99],
    [47, 66, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
], dtype=np.int64)


def _dct_basis():
    u = np.arange(8)[:, None]
    x = np.arange(8)[None, :]
    c = np.cos((2 * x + 1) * u * np.pi / 16.0)
    alpha = np.where(u == 0, math.sqrt(1.0 / 8.0), math.sqrt(2.0 / 8.0))
    return np.ascontiguousarray(alpha * c)


DCT_BASIS = _dct_basis()


# ------------------------------------------------------------------- blur

def gaussian_kernel(sigma):
    """Normalized 1-D taps over ``[-r, r]`` with ``r = ceil(3 * sigma)``."""
    if not sigma > 0:
        raise ParameterError(f"blur sigma must be > 0 (got {sigma})")
    r = int(math.ceil(3.0 * sigma))
    k = np.arange(-r, r + 1, dtype=np.float64)
    w = np.exp(-(k * k) / (2.0 * sigma * sigma))
    return w / w.sum()


def _blur_axis0(x, weights):
    r = (len(weights) - 1) // 2
    padded = np.pad(x, [(r, r)] + [(0, 0)] * (x.ndim - 1), mode="reflect")
    flat = np.ascontiguousarray(padded.reshape(padded.shape[0], -1))
    return kernels.convolve_axis0(flat, weights).reshape(x.shape)


def gaussian_blur(frame, sigma):
    """Separable Gaussian blur with reflect-101 borders.

    uint8 input gives rounded uint8 output; float input gives float32.
    """
    w = gaussian_kernel(sigma)
    x = np.asarray(frame, dtype=np.float64)
    out = _blur_axis0(x, w)
    out = np.swapaxes(_blur_axis0(np.ascontiguousarray(np.swapaxes(out, 0, 1)), w), 0, 1)
    if np.asarray(frame).dtype == np.uint8:
        return np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return out.astype(np.float32)


# ------------------------------------------------------------------- JPEG

def scaled_qtable(base, quality):
    if not 1 <= quality <= 100:
        raise ParameterError(f"JPEG quality must be in [1, 100] (got {quality})")
    scale = 5000 // quality if quality < 50 else 200 - 2 * quality
    return np.clip((base * scale + 50) // 100, 1, 255).astype(np.float64)


def _u8(x):
    return np.clip(np.rint(x), 0, 255)


def rgb_to_ycbcr(rgb):
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = -0.168735892 * r - 0.331264108 * g + 0.5 * b + 128.0
    cr = 0.5 * r - 0.418687589 * g - 0.081312411 * b + 128.0
    return _u8(y), _u8(cb), _u8(cr)


def ycbcr_to_rgb(y, cb, cr):
    cb = cb - 128.0
    cr = cr - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136286 * cb - 0.714136286 * cr
    b = y + 1.772 * cb
    return np.stack([_u8(r), _u8(g), _u8(b)], axis=-1).astype(np.uint8)


def _plane_roundtrip(plane, qtable):
    out = kernels.jpeg_plane_roundtrip(np.ascontiguousarray(plane - 128.0), qtable, DCT_BASIS)
    return _u8(out + 128.0)


def jpeg_roundtrip(frame, quality, subsampling=True):
    """Encode and decode one RGB frame at ``quality``.

    Accepts uint8 ``(H, W, 3)``; float input in [0, 1] is quantized to 8 bits
    first and returned as float32.
    """
    lq = scaled_qtable(LUMA_QTABLE, quality)
    cq = scaled_qtable(CHROMA_QTABLE, quality)
    arr = np.asarray(frame)
    is_float = arr.dtype != np.uint8
    rgb = _u8(arr * 255.0) if is_float else arr.astype(np.float64)
    h, w = rgb.shape[:2]
    ph, pw = -h % 16, -w % 16
    rgb = np.pad(rgb, [(0, ph), (0, pw), (0, 0)], mode="edge")

    y, cb, cr = rgb_to_ycbcr(rgb)
    y = _plane_roundtrip(y, lq)
    if subsampling:
        def down(c):
            s = c[0::2, 0::2] + c[1::2, 0::2] + c[0::2, 1::2] + c[1::2, 1::2]
            return np.floor((s + 2.0) / 4.0)

        def up(c):
            return np.repeat(np.repeat(c, 2, axis=0), 2, axis=1)

        cb = up(_plane_roundtrip(down(cb), cq))
        cr = up(_plane_roundtrip(down(cr), cq))
    else:
        cb = _plane_roundtrip(cb, cq)
        cr = _plane_roundtrip(cr, cq)
    out = ycbcr_to_rgb(y, cb, cr)[:h, :w]
    return (out / 255.0).astype(np.float32) if is_float else out


def psnr(reference, test, peak=255.0):
    mse = np.mean((np.asarray(reference, np.float64) - np.asarray(test, np.float64)) ** 2)
    return float("inf") if mse == 0 else float(10.0 * np.log10(peak * peak / mse))


# ------------------------------------------------------------------ specs

@dataclass(frozen=True)
class PerturbationSpec:
    kind: str
    sigma: float = None
    quality: int = None

    def validate(self):
        if self.kind == "gaussian_blur":
            if self.sigma is None or not self.sigma > 0:
                raise ParameterError(f"gaussian_blur needs sigma > 0 (got {self.sigma})")
        elif self.kind == "jpeg":
            if self.quality is None or not 1 <= self.quality <= 100:
                raise ParameterError(f"jpeg needs quality in [1, 100] (got {self.quality})")
        elif self.kind != "none":
            raise ParameterError(f"unknown perturbation kind {self.kind!r}")
        return self

    @property
    def tag(self):
        if self.kind == "gaussian_blur":
            return f"blur_sigma{self.sigma:g}"
        if self.kind == "jpeg":
            return f"jpeg_q{self.quality}"
        return "none"

    def to_dict(self):
        d = {"kind": self.kind}
        if self.sigma is not None:
            d["sigma"] = self.sigma
        if self.quality is not None:
            d["quality"] = self.quality
        return d

    @classmethod
    def parse(cls, text):
        """``blur:2``, ``jpeg:70`` or ``none``."""
        kind, _, value = text.partition(":")
        if kind in ("blur", "gaussian_blur"):
            return cls("gaussian_blur", sigma=float(value)).validate()
        if kind == "jpeg":
            return cls("jpeg", quality=int(value)).validate()
        if kind == "none":
            return IDENTITY
        raise ParameterError(f"cannot parse perturbation {text!r}")


IDENTITY = PerturbationSpec("none")
DEFAULT_SPECS = (
    [PerturbationSpec("gaussian_blur", sigma=float(s)) for s in (1, 2, 3)]
    + [PerturbationSpec("jpeg", quality=q) for q in (90, 80, 70, 60, 50)]
)


def perturb_frame(frame, spec):
    spec.validate()
    if spec.kind == "gaussian_blur":
        return gaussian_blur(frame, spec.sigma)
    if spec.kind == "jpeg":
        return jpeg_roundtrip(frame, spec.quality)
    return frame


def perturb_clip(clip, spec):
    """Apply ``spec`` independently to every frame."""
    if spec.kind == "none":
        return clip
    return clip.with_frames(np.stack([perturb_frame(f, spec) for f in clip.frames]))
