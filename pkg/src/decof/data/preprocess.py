"""Spatial preprocessing: center crop, bilinear resize, training augmentation."""
from dataclasses import dataclass

import numpy as np

from .. import kernels
from .clip import ClipTensor
from .perturb import gaussian_blur, jpeg_roundtrip

SIZE = 224
TRAIN_RESIZE = 256


def _axis_weights(n_in, n_out):
    # half-pixel centres; n_in == n_out maps every sample onto itself
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, src - i0


def resize_bilinear(img, out_h, out_w):
    """Bilinear resize of ``(H, W, C)``; returns float64."""
    img = np.ascontiguousarray(img, dtype=np.float64)
    y0, y1, fy = _axis_weights(img.shape[0], out_h)
    x0, x1, fx = _axis_weights(img.shape[1], out_w)
    return kernels.resize_bilinear(img, y0, y1, fy, x0, x1, fx)


def to_uint8(x):
    return np.clip(np.rint(x), 0, 255).astype(np.uint8)


def center_crop_box(h, w):
    """``(top, left, side)`` of the largest centred square."""
    side = min(h, w)
    return (h - side) // 2, (w - side) // 2, side


def center_crop(frame):
    top, left, side = center_crop_box(*frame.shape[:2])
    return frame[top:top + side, left:left + side]


def hflip(frame):
    return frame[:, ::-1]


def preprocess_eval(clip, size=SIZE):
    """Centre-crop to the short side, resize to ``size``, scale to [0, 1]."""
    scale = 1.0 if clip.is_float else 255.0
    out = np.empty((clip.length, size, size, 3), dtype=np.float32)
    for i, frame in enumerate(clip.frames):
        out[i] = resize_bilinear(center_crop(frame), size, size) / scale
    return clip.with_frames(out)


@dataclass(frozen=True)
class AugmentConfig:
    flip_p: float = 0.5
    blur_p: float = 0.1
    blur_sigmas: tuple = (1.0, 2.0, 3.0)
    jpeg_p: float = 0.1
    jpeg_quality: tuple = (50, 95)


def draw_augmentation(rng, aug, resize=TRAIN_RESIZE, size=SIZE):
    """Per-clip random choices; every draw is made regardless of outcome."""
    top = int(rng.integers(0, resize - size + 1))
    left = int(rng.integers(0, resize - size + 1))
    flip = bool(rng.random() < aug.flip_p)
    blur = bool(rng.random() < aug.blur_p)
    sigma = float(aug.blur_sigmas[int(rng.integers(0, len(aug.blur_sigmas)))])
    jpeg = bool(rng.random() < aug.jpeg_p)
    quality = int(rng.integers(aug.jpeg_quality[0], aug.jpeg_quality[1] + 1))
    return dict(top=top, left=left, flip=flip, blur=sigma if blur else None, jpeg=quality if jpeg else None)


def preprocess_train(clip, seed, aug=AugmentConfig()):
    """Resize to 256x256, seeded 224 crop, then flip/blur/JPEG coin flips.

    One set of choices per clip, applied identically to every frame.
    """
    choice = draw_augmentation(np.random.default_rng(seed), aug)
    out = np.empty((clip.length, SIZE, SIZE, 3), dtype=np.float32)
    for i, frame in enumerate(clip.frames):
        if clip.is_float:
            frame = frame * 255.0
        f = to_uint8(resize_bilinear(frame, TRAIN_RESIZE, TRAIN_RESIZE))
        f = f[choice["top"]:choice["top"] + SIZE, choice["left"]:choice["left"] + SIZE]
        if choice["flip"]:
            f = hflip(f)
        if choice["blur"] is not None:
            f = gaussian_blur(f, choice["blur"])
        if choice["jpeg"] is not None:
            f = jpeg_roundtrip(f, choice["jpeg"])
        out[i] = f / 255.0
    return ClipTensor(out, clip.video_id, clip.source_fps)
