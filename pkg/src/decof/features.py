from dataclasses import dataclass

import numpy as np

from .errors import DimensionError


@dataclass(eq=False)
class FeatureSequence:
    """Per-frame encoder outputs for one video, shape ``(L, D)``."""

    features: np.ndarray
    video_id: str
    encoder_id: str

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float32)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise DimensionError(
                f"{self.video_id}: features must be (L, D) with L >= 1, got {self.features.shape}"
            )
        if not np.all(np.isfinite(self.features)):
            raise DimensionError(f"{self.video_id}: features contain NaN or Inf")

    @property
    def length(self):
        return self.features.shape[0]

    @property
    def width(self):
        return self.features.shape[1]

    def with_features(self, features):
        return FeatureSequence(features, self.video_id, self.encoder_id)

    def __eq__(self, other):
        if not isinstance(other, FeatureSequence):
            return NotImplemented
        return (
            self.video_id == other.video_id
            and self.encoder_id == other.encoder_id
            and self.features.shape == other.features.shape
            and self.features.tobytes() == other.features.tobytes()
        )
