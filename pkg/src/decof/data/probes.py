"""Probe transforms that isolate temporal or spatial cues.

``scramble_frames`` destroys temporal order while keeping every frame;
``replicate_frame`` removes all temporal variation while keeping one
frame's spatial content.
"""
import numpy as np

from ..errors import ProbeError


def scramble_permutation(length, seed):
    """Seeded uniform permutation of ``range(length)``, redrawn until it is
    not the identity."""
    if length < 2:
        raise ProbeError(f"cannot scramble a clip of length {length}")
    rng = np.random.default_rng(seed)
    ident = np.arange(length)
    while True:
        perm = rng.permutation(length)
        if not np.array_equal(perm, ident):
            return perm


def replicate_index(length, seed):
    if length < 1:
        raise ProbeError("cannot replicate a frame from an empty clip")
    return int(np.random.default_rng(seed).integers(0, length))


def scramble_frames(clip, seed):
    return clip.with_frames(clip.frames[scramble_permutation(clip.length, seed)])


def replicate_frame(clip, seed):
    i = replicate_index(clip.length, seed)
    return clip.with_frames(np.repeat(clip.frames[i:i + 1], clip.length, axis=0))


def temporal_variance(frames):
    """Mean over pixels of the variance across time."""
    return float(np.asarray(frames, dtype=np.float64).var(axis=0).mean())
