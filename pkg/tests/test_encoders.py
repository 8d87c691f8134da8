import json
import threading

import numpy as np
import pytest

from decof.data.clip import ClipTensor
from decof.encoders import (
    EncoderBackendConfig,
    encode_clip,
    make_backend,
    write_feature_cache,
)
from decof.encoders.native import NativeViT, random_vit, save_vit
from decof.encoders.stub import stub_features
from decof.errors import BackendError, CapabilityError, ConfigError, ContractError
from decof.features import FeatureSequence

from helpers import stub_backend_file
from oracles import reference_vit_features

ARCH = dict(image_size=16, patch_size=8, width=16, depth=2, heads=4, mlp_hidden=24, proj_dim=8)


def _clip(seed=0, length=4, size=32, vid="v"):
    return ClipTensor(np.random.default_rng(seed).random((length, size, size, 3)).astype(np.float32), vid)


# ------------------------------------------------------------- native ViT

@pytest.mark.parametrize("activation", ["gelu", "quick_gelu"])
@pytest.mark.parametrize("use_projection", [True, False])
def test_native_vit_matches_reference(activation, use_projection):
    arch = dict(ARCH, activation=activation)
    tensors = random_vit(arch, seed=3, scale=0.2)
    vit = NativeViT(arch, tensors)
    frame = np.random.default_rng(0).normal(size=(16, 16, 3)).astype(np.float32)
    got = vit.forward_frame(frame, use_projection)
    want = reference_vit_features(frame, tensors, arch, use_projection)
    np.testing.assert_allclose(got, want, atol=1e-5, rtol=0)
    assert got.shape == ((8,) if use_projection else (16,))


def test_native_vit_file_roundtrip(tmp_path):
    tensors = random_vit(ARCH, seed=1)
    path = save_vit(tmp_path / "w.dcvt", ARCH, tensors)
    frames = np.random.default_rng(0).random((2, 16, 16, 3)).astype(np.float32)
    a = NativeViT.load(path).encode(frames)
    b = NativeViT(ARCH, tensors).encode(frames)
    assert a.tobytes() == b.tobytes()


def test_native_vit_capability_errors(tmp_path):
    with pytest.raises(CapabilityError):
        NativeViT({k: v for k, v in ARCH.items() if k != "depth"}, {})
    with pytest.raises(CapabilityError):
        NativeViT(dict(ARCH, activation="relu"), random_vit(ARCH))
    tensors = random_vit(ARCH)
    del tensors["proj"]
    with pytest.raises(CapabilityError):
        NativeViT(ARCH, tensors)
    bad = tmp_path / "bad.dcvt"
    bad.write_bytes(b"junk")
    with pytest.raises(CapabilityError):
        NativeViT.load(bad)


def test_native_vit_rejects_wrong_frame_size():
    vit = NativeViT(ARCH, random_vit(ARCH))
    with pytest.raises(ContractError):
        vit.forward_frame(np.zeros((8, 8, 3)))


# ----------------------------------------------------------------- stub

def test_stub_is_per_frame_and_normalized():
    frames = _clip(1).frames
    full = stub_features(frames, dim=16, seed=2)
    for i in range(len(frames)):
        np.testing.assert_array_equal(stub_features(frames[i:i + 1], dim=16, seed=2)[0], full[i])
    np.testing.assert_allclose(np.linalg.norm(full, axis=1), 1.0, atol=1e-6)


# ------------------------------------------------------------- backends

def test_external_backend_matches_in_process_stub(tmp_path):
    cfg = EncoderBackendConfig.from_file(stub_backend_file(tmp_path, dim=32, seed=4))
    backend = make_backend(cfg)
    try:
        clip = _clip(2)
        fs = encode_clip(clip, backend)
        assert fs.encoder_id == "stub-v1" and fs.video_id == "v"
        np.testing.assert_array_equal(fs.features, stub_features(clip.frames, dim=32, seed=4))
    finally:
        backend.close()


@pytest.mark.parametrize("per_worker", [False, True])
def test_external_backend_thread_safe(tmp_path, per_worker):
    backend = make_backend(EncoderBackendConfig.from_file(stub_backend_file(tmp_path, per_worker=per_worker)))
    clips = [_clip(i, vid=f"c{i}") for i in range(8)]
    results = [None] * len(clips)

    def work(i):
        results[i] = encode_clip(clips[i], backend)

    try:
        threads = [threading.Thread(target=work, args=(i,)) for i in range(len(clips))]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    finally:
        backend.close()
    for clip, fs in zip(clips, results):
        np.testing.assert_array_equal(fs.features, stub_features(clip.frames, dim=32, seed=0))


def test_external_backend_failing_command(tmp_path):
    cfg = EncoderBackendConfig(kind="external", encoder_id="x", external_cmd=["/nonexistent/encoder"])
    with pytest.raises(BackendError):
        make_backend(cfg).encode(_clip())


def test_backend_rejects_unpreprocessed_clip(tmp_path):
    backend = make_backend(EncoderBackendConfig.from_file(stub_backend_file(tmp_path)))
    try:
        with pytest.raises(ContractError):
            encode_clip(ClipTensor(np.full((2, 8, 8, 3), 200, np.uint8), "u"), backend)
    finally:
        backend.close()


def test_expected_dim_enforced(tmp_path):
    cfg = EncoderBackendConfig.from_file(stub_backend_file(tmp_path, dim=8))
    cfg = EncoderBackendConfig(**{**cfg.__dict__, "expected_dim": 9})
    backend = make_backend(cfg)
    try:
        with pytest.raises(ContractError):
            encode_clip(_clip(), backend)
    finally:
        backend.close()


def test_cache_and_computing_backends_interchangeable(tmp_path):
    """Encoding then reading back through the cache yields identical features."""
    weights = save_vit(tmp_path / "w.dcvt", ARCH, random_vit(ARCH, seed=2, scale=0.1))
    (tmp_path / "norm.json").write_text(json.dumps({"mean": [0.5, 0.4, 0.3], "std": [0.2, 0.25, 0.3]}))
    (tmp_path / "native.json").write_text(json.dumps({
        "kind": "native", "encoder_id": "vit-test", "weights_path": "w.dcvt",
        "normalization_file": "norm.json",
    }))
    native = make_backend(EncoderBackendConfig.from_file(tmp_path / "native.json"))
    assert native.cfg.weights_path == str(weights)
    clip = _clip(3, size=16)
    fs = encode_clip(clip, native)
    manual = NativeViT.load(weights).encode((clip.frames - np.float32([0.5, 0.4, 0.3])) / np.float32([0.2, 0.25, 0.3]))
    np.testing.assert_array_equal(fs.features, manual)

    write_feature_cache(fs, tmp_path / "cache")
    (tmp_path / "cache.json").write_text(json.dumps({"kind": "cache", "encoder_id": "vit-test", "cache_dir": "cache"}))
    cache = make_backend(EncoderBackendConfig.from_file(tmp_path / "cache.json"))
    assert encode_clip(clip, cache) == fs
    assert cache.load("v") == fs


def test_cache_backend_errors(tmp_path):
    write_feature_cache(FeatureSequence(np.ones((2, 2)), "v", "other"), tmp_path)
    cache = make_backend(EncoderBackendConfig(kind="cache", encoder_id="mine", cache_dir=str(tmp_path)))
    with pytest.raises(ContractError):
        cache.load("v")
    with pytest.raises(BackendError):
        cache.load("missing")


@pytest.mark.parametrize("raw", [
    {"kind": "magic", "encoder_id": "x"},
    {"kind": "cache", "encoder_id": ""},
    {"kind": "cache", "encoder_id": "x"},
    {"kind": "external", "encoder_id": "x"},
    {"kind": "cache", "encoder_id": "x", "cache_dir": ".", "bogus": 1},
    {"kind": "native", "encoder_id": "x", "weights_path": "w", "mean": [0, 0], "std": [1, 1]},
])
def test_backend_config_validation(tmp_path, raw):
    path = tmp_path / "b.json"
    path.write_text(json.dumps(raw))
    with pytest.raises(ConfigError):
        EncoderBackendConfig.from_file(path)
