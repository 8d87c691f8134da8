from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError


@dataclass(eq=False)
class ClipTensor:
    """Frames of one video, ``(L, H, W, 3)``.

    ``uint8`` at ingest; ``float32`` in ``[0, 1]`` once preprocessed.
    """

    frames: np.ndarray
    video_id: str = ""
    source_fps: float = None

    def __post_init__(self):
        f = np.asarray(self.frames)
        if f.ndim != 4 or f.shape[0] < 1 or f.shape[1] < 1 or f.shape[2] < 1 or f.shape[3] != 3:
            raise DimensionError(f"{self.video_id}: clip must be (L>=1, H, W, 3), got {f.shape}")
        if f.dtype != np.uint8:
            f = f.astype(np.float32, copy=False)
        self.frames = f

    @property
    def is_float(self):
        return self.frames.dtype == np.float32

    @property
    def length(self):
        return self.frames.shape[0]

    def with_frames(self, frames):
        return ClipTensor(frames, self.video_id, self.source_fps)
