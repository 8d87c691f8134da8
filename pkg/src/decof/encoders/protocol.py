"""Wire format for talking to an external encoder process over stdin/stdout.

Request:  ``DCRQ`` u32 L, u32 H, u32 W, then L*H*W*3 f32le (RGB in [0, 1]).
Response: ``DCRS`` u32 L, u32 D, then L*D f32le.
"""
import struct

import numpy as np

from ..errors import BackendError

REQUEST_MAGIC = b"DCRQ"
RESPONSE_MAGIC = b"DCRS"
_REQ = struct.Struct("<4sIII")
_RESP = struct.Struct("<4sII")


def read_exact(stream, n):
    chunks = []
    remaining = n
    while remaining:
        chunk = stream.read(remaining)
        if not chunk:
            break
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def encode_request(frames):
    frames = np.ascontiguousarray(frames, dtype="<f4")
    length, height, width, channels = frames.shape
    if channels != 3:
        raise BackendError(f"request frames must have 3 channels, got {channels}")
    return _REQ.pack(REQUEST_MAGIC, length, height, width) + frames.tobytes()


def read_request(stream):
    """Returns frames ``(L, H, W, 3)`` or ``None`` on clean EOF."""
    head = read_exact(stream, _REQ.size)
    if not head:
        return None
    if len(head) < _REQ.size:
        raise BackendError("truncated request header")
    magic, length, height, width = _REQ.unpack(head)
    if magic != REQUEST_MAGIC:
        raise BackendError(f"bad request magic {magic!r}")
    n = length * height * width * 3
    body = read_exact(stream, 4 * n)
    if len(body) != 4 * n:
        raise BackendError(f"truncated request body: {len(body)} of {4 * n} bytes")
    return np.frombuffer(body, dtype="<f4").reshape(length, height, width, 3)


def encode_response(features):
    features = np.ascontiguousarray(features, dtype="<f4")
    length, dim = features.shape
    return _RESP.pack(RESPONSE_MAGIC, length, dim) + features.tobytes()


def read_response(stream):
    head = read_exact(stream, _RESP.size)
    if len(head) < _RESP.size:
        raise BackendError("encoder process closed its output before responding")
    magic, length, dim = _RESP.unpack(head)
    if magic != RESPONSE_MAGIC:
        raise BackendError(f"bad response magic {magic!r}")
    body = read_exact(stream, 4 * length * dim)
    if len(body) != 4 * length * dim:
        raise BackendError(f"truncated response body: {len(body)} of {4 * length * dim} bytes")
    return np.frombuffer(body, dtype="<f4").astype(np.float32).reshape(length, dim)
