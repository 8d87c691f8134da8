"""Average log-magnitude spectrum of video frames."""
from dataclasses import dataclass

import numpy as np

from .errors import MetricError

LUMA = np.array([0.299, 0.587, 0.114])


@dataclass
class SpectrumGrid:
    """Running mean of centred ``log(1 + |DFT|)`` luma spectra."""

    grid: np.ndarray
    count: int
    source: str = ""

    def normalized(self):
        lo, hi = float(self.grid.min()), float(self.grid.max())
        if hi == lo:
            return np.zeros_like(self.grid)
        return (self.grid - lo) / (hi - lo)

    def merge(self, other):
        total = self.count + other.count
        grid = (self.grid * self.count + other.grid * other.count) / total
        return SpectrumGrid(grid, total, self.source or other.source)

    def write_pgm(self, path):
        """16-bit binary PGM of the min-max normalized grid."""
        img = np.rint(self.normalized() * 65535.0).astype(">u2")
        h, w = img.shape
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
            fh.write(img.tobytes())
        return path

    def write_raw(self, path):
        """Unnormalized grid as row-major float32 little-endian."""
        with open(path, "wb") as fh:
            fh.write(np.ascontiguousarray(self.grid, dtype="<f4").tobytes())
        return path


def frame_spectrum(frame):
    f = np.asarray(frame, dtype=np.float64)
    luma = f @ LUMA if f.ndim == 3 else f
    return np.log1p(np.abs(np.fft.fftshift(np.fft.fft2(luma))))


def avg_spectrum(frames, source=""):
    """Mean spectrum over an iterable of ``(H, W, 3)`` frames (or clips)."""
    total = None
    count = 0
    for item in frames:
        arr = np.asarray(item)
        batch = arr if arr.ndim == 4 else arr[None]
        for frame in batch:
            spec = frame_spectrum(frame)
            if total is None:
                total = np.zeros_like(spec)
            elif spec.shape != total.shape:
                raise MetricError(f"frame size {spec.shape} differs from {total.shape}")
            total += spec
            count += 1
    if count == 0:
        raise MetricError("no frames to average")
    return SpectrumGrid(total / count, count, source)


def read_pgm16(path):
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(maxsplit=4)
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if parts[0] != b"P5" or maxval != 65535:
        raise MetricError(f"{path}: not a 16-bit binary PGM")
    return np.frombuffer(data[-2 * w * h:], dtype=">u2").reshape(h, w)
