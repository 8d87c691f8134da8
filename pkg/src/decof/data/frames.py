"""Frame folders (``000001.png``, ``000002.png``, ... or ``.jpg``), temporal
sampling and the optional external decoder hook."""
import os
import re
import subprocess

import numpy as np
from PIL import Image

from ..errors import BackendError, DataError
from .clip import ClipTensor

_FRAME_RE = re.compile(r"^(\d{6})\.(png|jpg|jpeg)$", re.IGNORECASE)


def list_frames(frames_dir):
    """Frame paths in temporal order."""
    try:
        names = os.listdir(frames_dir)
    except OSError as exc:
        raise DataError(f"cannot list frames in {frames_dir}: {exc}") from None
    numbered = sorted((int(m.group(1)), n) for n in names if (m := _FRAME_RE.match(n)))
    return [os.path.join(frames_dir, n) for _, n in numbered]


def sample_frames(n_frames, length=8):
    """Evenly spaced indices ``floor(i * N / L)``; repeats when N < L."""
    if n_frames < 1:
        raise DataError("cannot sample from a video with no frames")
    return [i * n_frames // length for i in range(length)]


def read_frame(path):
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def load_clip(frames_dir, video_id="", length=8):
    """Read the ``length`` sampled frames of a folder as a uint8 clip."""
    paths = list_frames(frames_dir)
    if not paths:
        raise DataError(f"{video_id or frames_dir}: no frames found in {frames_dir}")
    idx = sample_frames(len(paths), length)
    cache = {}
    frames = []
    for i in idx:
        if i not in cache:
            cache[i] = read_frame(paths[i])
        frames.append(cache[i])
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise DataError(f"{video_id or frames_dir}: frames have differing sizes {sorted(shapes)}")
    return ClipTensor(np.stack(frames), video_id)


def write_frames(frames, frames_dir, ext="png"):
    os.makedirs(frames_dir, exist_ok=True)
    for i, f in enumerate(frames, start=1):
        Image.fromarray(np.asarray(f, dtype=np.uint8)).save(os.path.join(frames_dir, f"{i:06d}.{ext}"))
    return frames_dir


def run_decoder(argv_template, input_path, outdir):
    """Populate ``outdir`` with frames by running a user-configured decoder,
    e.g. ``["ffmpeg", "-i", "{input}", "{outdir}/%06d.png"]``."""
    os.makedirs(outdir, exist_ok=True)
    argv = [a.replace("{input}", str(input_path)).replace("{outdir}", str(outdir)) for a in argv_template]
    try:
        done = subprocess.run(argv, capture_output=True)
    except OSError as exc:
        raise BackendError(f"cannot run decoder {argv[0]!r}: {exc}") from None
    if done.returncode:
        raise BackendError(
            f"decoder failed ({done.returncode}) on {input_path}: {done.stderr.decode(errors='replace')[-400:]}"
        )
    return list_frames(outdir)
