import io
import struct

import numpy as np
import pytest

from decof import container
from decof.checkpoint import file_digest, load_checkpoint, save_checkpoint
from decof.encoders.cache import (
    cache_path,
    dumps_feature_cache,
    load_feature_cache,
    loads_feature_cache,
    write_feature_cache,
)
from decof.encoders.protocol import encode_request, encode_response, read_request, read_response
from decof.errors import BackendError, FormatError
from decof.features import FeatureSequence
from decof.verifier import init_params

from helpers import SMALL


def test_container_layout():
    blob = container.pack(b"TEST", 1, {"k": "v"}, {"a": np.array([1.0, 2.0])})
    magic, version, hlen = struct.unpack_from("<4sII", blob)
    assert (magic, version) == (b"TEST", 1)
    header = blob[12:12 + hlen]
    assert header == b'{"k":"v","tensors":[{"name":"a","offset":0,"shape":[2]}]}'
    assert blob[12 + hlen:] == np.array([1.0, 2.0], "<f4").tobytes()


def test_container_roundtrip_and_errors():
    tensors = {"x": np.arange(6, dtype=np.float32).reshape(2, 3), "y": np.zeros(0, np.float32)}
    blob = container.pack(b"TEST", 1, {}, tensors)
    _, _, back = container.unpack(blob, b"TEST")
    assert back["x"].tobytes() == tensors["x"].tobytes() and back["y"].shape == (0,)
    with pytest.raises(FormatError, match="bad magic"):
        container.unpack(blob, b"XXXX")
    with pytest.raises(FormatError, match="version"):
        container.unpack(blob, b"TEST", versions=(2,))
    with pytest.raises(FormatError, match="truncated"):
        container.unpack(blob[:-4], b"TEST")
    with pytest.raises(FormatError, match="does not match"):
        container.unpack(blob + b"\0\0\0\0", b"TEST")
    with pytest.raises(FormatError):
        container.unpack(blob[:5], b"TEST")


def test_format_error_reports_offset():
    blob = container.pack(b"TEST", 1, {}, {"x": np.ones(3)})
    with pytest.raises(FormatError) as err:
        container.unpack(blob[:-2], b"TEST")
    assert "byte offset" in str(err.value)
    assert err.value.offset == len(blob) - 2


def test_checkpoint_roundtrip_bitwise(tmp_path):
    p = init_params(SMALL, 4)
    path = tmp_path / "m.dcof"
    save_checkpoint(path, p, "enc-1", {"note": 1})
    q, header = load_checkpoint(path)
    assert header["encoder_id"] == "enc-1" and header["extra"] == {"note": 1}
    assert q.config == p.config
    assert all(q[k].tobytes() == p[k].tobytes() for k in p.names())
    save_checkpoint(tmp_path / "n.dcof", q, "enc-1", {"note": 1})
    assert file_digest(path) == file_digest(tmp_path / "n.dcof")


def test_checkpoint_rejects_foreign_file(tmp_path):
    path = tmp_path / "x.dcof"
    path.write_bytes(b"DCVT" + bytes(8))
    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_feature_cache_roundtrip(tmp_path):
    x = np.random.default_rng(0).normal(size=(8, 5)).astype(np.float32)
    fs = FeatureSequence(x, "clip/with spaces", "enc")
    path = write_feature_cache(fs, tmp_path)
    assert path == cache_path(tmp_path, "clip/with spaces")
    assert "/" not in path.rsplit("/", 1)[1].replace(".dcfc", "")
    back = load_feature_cache(path)
    assert back == fs


def test_feature_cache_truncation_names_lengths():
    fs = FeatureSequence(np.ones((4, 3)), "v", "e")
    blob = dumps_feature_cache(fs)
    with pytest.raises(FormatError) as err:
        loads_feature_cache(blob[:-5])
    msg = str(err.value)
    assert "48" in msg and "43" in msg
    with pytest.raises(FormatError):
        loads_feature_cache(b"DCOF" + blob[4:])


def test_protocol_roundtrip():
    frames = np.random.default_rng(1).random((3, 4, 5, 3)).astype(np.float32)
    back = read_request(io.BytesIO(encode_request(frames)))
    assert back.tobytes() == frames.tobytes() and back.shape == frames.shape
    feats = np.arange(6, dtype=np.float32).reshape(3, 2)
    assert read_response(io.BytesIO(encode_response(feats))).tobytes() == feats.tobytes()
    assert read_request(io.BytesIO(b"")) is None
    with pytest.raises(BackendError, match="truncated"):
        read_request(io.BytesIO(encode_request(frames)[:-1]))
    with pytest.raises(BackendError):
        read_response(io.BytesIO(b"NOPE" + bytes(8)))
