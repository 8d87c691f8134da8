"""Tagged binary container used by checkpoints, feature caches and ViT weights.

Layout::

    magic      4 bytes ASCII
    version    u32 little-endian
    hlen       u32 little-endian, byte length of the header
    header     UTF-8 JSON (sorted keys, compact)
    payload    concatenated f32 little-endian tensors

Tensor locations are listed in ``header["tensors"]`` as
``{"name", "shape", "offset"}`` with offsets relative to the payload start.
"""
import json
import struct

import numpy as np

from .errors import FormatError

F32LE = np.dtype("<f4")
_PREFIX = struct.Struct("<4sII")


def encode_header(header):
    return json.dumps(header, sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")


def pack(magic, version, header, tensors):
    """Serialize ``tensors`` (ordered name -> array) under ``header``."""
    directory = []
    chunks = []
    offset = 0
    for name, arr in tensors.items():
        data = np.ascontiguousarray(arr, dtype=F32LE).tobytes()
        directory.append({"name": name, "shape": list(np.shape(arr)), "offset": offset})
        chunks.append(data)
        offset += len(data)
    header = dict(header, tensors=directory)
    hbytes = encode_header(header)
    return _PREFIX.pack(magic, version, len(hbytes)) + hbytes + b"".join(chunks)


def unpack(blob, magic, versions=(1,)):
    """Inverse of :func:`pack`. Returns ``(version, header, tensors)``."""
    if len(blob) < _PREFIX.size:
        raise FormatError(f"file too short for prefix: {len(blob)} bytes < {_PREFIX.size}", 0)
    got_magic, version, hlen = _PREFIX.unpack_from(blob, 0)
    if got_magic != magic:
        raise FormatError(f"bad magic {got_magic!r}, expected {magic!r}", 0)
    if version not in versions:
        raise FormatError(f"unsupported version {version}", 4)
    start = _PREFIX.size
    if len(blob) < start + hlen:
        raise FormatError(f"header truncated: need {hlen} bytes, have {len(blob) - start}", start)
    try:
        header = json.loads(blob[start:start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"header is not valid UTF-8 JSON: {exc}", start) from None
    base = start + hlen
    payload_len = len(blob) - base
    expected = 0
    tensors = {}
    for entry in header.get("tensors", []):
        shape = tuple(entry["shape"])
        nbytes = 4 * int(np.prod(shape, dtype=np.int64))
        end = entry["offset"] + nbytes
        if end > payload_len:
            raise FormatError(
                f"payload truncated for tensor {entry['name']!r}: expected {end} bytes, "
                f"found {payload_len}",
                base + payload_len,
            )
        raw = np.frombuffer(blob, dtype=F32LE, count=nbytes // 4, offset=base + entry["offset"])
        tensors[entry["name"]] = raw.astype(np.float32).reshape(shape)
        expected = max(expected, end)
    if payload_len != expected:
        raise FormatError(f"payload length {payload_len} does not match expected {expected}", base)
    return version, header, tensors


def read_file(path, magic, versions=(1,)):
    with open(path, "rb") as fh:
        return unpack(fh.read(), magic, versions)


def write_file(path, magic, version, header, tensors):
    blob = pack(magic, version, header, tensors)
    with open(path, "wb") as fh:
        fh.write(blob)
    return path
