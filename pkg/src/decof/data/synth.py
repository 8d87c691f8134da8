"""Synthetic feature sequences with a known temporal signal.

Real sequences drift smoothly: ``s_t = u + t * v + noise``, where the
per-video anchor ``u`` scatters around a direction shared by the corpus.
Generated ones are built the same way, then one randomly chosen frame is
displaced by an independent Gaussian draw scaled by ``jump_scale``. Rows
are L2-normalized like encoder embeddings. With ``jump_scale = 0`` the two classes share one
distribution.
"""
import numpy as np

from ..errors import DataError
from ..features import FeatureSequence

NOISE_STD = 0.1
DRIFT_STD = 0.05
SPREAD = 0.5
_GEOMETRY_SEED = 20240131


def common_direction(width):
    """Shared mean embedding: encoder features cluster in a narrow cone.

    Fixed per width, so corpora drawn with different seeds share geometry.
    """
    return np.random.default_rng([_GEOMETRY_SEED, width]).standard_normal(width)


def synth_sequence(rng, length, width, generated, jump_scale, center=None):
    if center is None:
        center = common_direction(width)
    u = center + SPREAD * rng.standard_normal(width)
    v = DRIFT_STD * rng.standard_normal(width)
    t = np.arange(length, dtype=np.float64)[:, None]
    s = u + t * v + NOISE_STD * rng.standard_normal((length, width))
    jump_at = int(rng.integers(0, length))
    jump = rng.standard_normal(width)
    if generated:
        s[jump_at] += jump_scale * jump
    return s / np.linalg.norm(s, axis=1, keepdims=True)


def synth_sequences(n_per_class, length=8, width=64, jump_scale=1.0, seed=0,
                    encoder_id="synthetic", prefix="synth"):
    """``2 * n_per_class`` labelled sequences, real and generated alternating."""
    if n_per_class < 1:
        raise DataError("n_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    center = common_direction(width)
    out = []
    for i in range(n_per_class):
        for label in (0, 1):
            feats = synth_sequence(rng, length, width, bool(label), jump_scale, center)
            kind = "gen" if label else "real"
            out.append((FeatureSequence(feats, f"{prefix}-{i:06d}-{kind}", encoder_id), label))
    return out


def consecutive_cosines(features):
    f = np.asarray(features, dtype=np.float64)
    f = f / np.linalg.norm(f, axis=1, keepdims=True)
    return np.sum(f[1:] * f[:-1], axis=1)
