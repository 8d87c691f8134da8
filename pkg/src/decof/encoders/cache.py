"""DCFC feature-cache files: one FeatureSequence per file."""
import json
import os
import struct
from urllib.parse import quote

import numpy as np

from ..errors import FormatError
from ..features import FeatureSequence

MAGIC = b"DCFC"
VERSION = 1
SUFFIX = ".dcfc"
_PREFIX = struct.Struct("<4sII")


def cache_path(cache_dir, video_id):
    return os.path.join(cache_dir, quote(video_id, safe="") + SUFFIX)


def dumps_feature_cache(fs):
    header = {
        "video_id": fs.video_id,
        "encoder_id": fs.encoder_id,
        "dtype": "f32le",
        "shape": list(fs.features.shape),
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = np.ascontiguousarray(fs.features, dtype="<f4").tobytes()
    return _PREFIX.pack(MAGIC, VERSION, len(hbytes)) + hbytes + payload


def loads_feature_cache(blob, source="<bytes>"):
    if len(blob) < _PREFIX.size:
        raise FormatError(f"{source}: file too short ({len(blob)} bytes)", 0)
    magic, version, hlen = _PREFIX.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}", 0)
    if version != VERSION:
        raise FormatError(f"{source}: unsupported version {version}", 4)
    start = _PREFIX.size
    if len(blob) < start + hlen:
        raise FormatError(f"{source}: header truncated", start)
    try:
        header = json.loads(blob[start:start + hlen].decode("utf-8"))
        length, width = (int(n) for n in header["shape"])
    except (ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
        raise FormatError(f"{source}: malformed header ({exc})", start) from None
    if header.get("dtype") != "f32le":
        raise FormatError(f"{source}: unsupported dtype {header.get('dtype')!r}", start)
    base = start + hlen
    expected = 4 * length * width
    actual = len(blob) - base
    if actual != expected:
        raise FormatError(
            f"{source}: payload is {actual} bytes, expected {expected} for shape [{length}, {width}]",
            base + min(actual, expected),
        )
    feats = np.frombuffer(blob, dtype="<f4", offset=base).astype(np.float32).reshape(length, width)
    return FeatureSequence(feats, header["video_id"], header["encoder_id"])


def write_feature_cache(fs, cache_dir):
    os.makedirs(cache_dir, exist_ok=True)
    path = cache_path(cache_dir, fs.video_id)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(dumps_feature_cache(fs))
    os.replace(tmp, path)
    return path


def load_feature_cache(path):
    with open(path, "rb") as fh:
        return loads_feature_cache(fh.read(), source=str(path))
