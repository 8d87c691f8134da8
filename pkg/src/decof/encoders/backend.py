"""Frozen frame encoders behind one interface.

Three kinds: ``cache`` reads DCFC files written earlier, ``external`` talks
to a child process over the DCRQ/DCRS protocol, ``native`` runs a ViT in
process. All of them return :class:`~decof.features.FeatureSequence`.
"""
import json
import logging
import os
import subprocess
import threading
from dataclasses import dataclass, field

import numpy as np

from ..errors import BackendError, ConfigError, ContractError
from ..features import FeatureSequence
from . import protocol
from .cache import cache_path, load_feature_cache
from .native import NativeViT

log = logging.getLogger(__name__)

KINDS = ("cache", "external", "native")


@dataclass
class EncoderBackendConfig:
    kind: str
    encoder_id: str
    cache_dir: str = None
    external_cmd: list = field(default_factory=list)
    weights_path: str = None
    mean: tuple = (0.0, 0.0, 0.0)
    std: tuple = (1.0, 1.0, 1.0)
    use_projection: bool = True
    per_worker: bool = False
    expected_dim: int = None

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"backend kind must be one of {KINDS}, got {self.kind!r}")
        if not self.encoder_id:
            raise ConfigError("backend encoder_id must be non-empty")
        if self.kind == "cache" and not self.cache_dir:
            raise ConfigError("cache backend needs cache_dir")
        if self.kind == "external" and not self.external_cmd:
            raise ConfigError("external backend needs external_cmd")
        if self.kind == "native" and not self.weights_path:
            raise ConfigError("native backend needs weights_path")
        if len(self.mean) != 3 or len(self.std) != 3 or any(s == 0 for s in self.std):
            raise ConfigError("normalization needs 3 means and 3 non-zero stds")
        return self

    @classmethod
    def from_file(cls, path):
        """Load a JSON backend config. Relative paths resolve against the
        file's directory; ``normalization_file`` names a sidecar JSON with
        ``mean`` and ``std``."""
        base = os.path.dirname(os.path.abspath(path))
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read backend config {path}: {exc}") from None
        norm_file = raw.pop("normalization_file", None)
        if norm_file:
            with open(os.path.join(base, norm_file), encoding="utf-8") as fh:
                norm = json.load(fh)
            raw.setdefault("mean", norm["mean"])
            raw.setdefault("std", norm["std"])
        norm = raw.pop("normalization", None)
        if norm:
            raw.setdefault("mean", norm["mean"])
            raw.setdefault("std", norm["std"])
        for key in ("cache_dir", "weights_path"):
            if raw.get(key):
                raw[key] = os.path.join(base, raw[key])
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown backend config keys: {sorted(unknown)}")
        raw["mean"] = tuple(raw.get("mean", (0.0, 0.0, 0.0)))
        raw["std"] = tuple(raw.get("std", (1.0, 1.0, 1.0)))
        return cls(**raw).validate()


class CacheBackend:
    computes = False

    def __init__(self, cfg):
        self.cfg = cfg
        self.encoder_id = cfg.encoder_id

    def load(self, video_id):
        path = cache_path(self.cfg.cache_dir, video_id)
        if not os.path.exists(path):
            raise BackendError(f"no cached features for {video_id!r} at {path}")
        fs = load_feature_cache(path)
        if fs.encoder_id != self.encoder_id:
            raise ContractError(
                f"{path}: cached encoder_id {fs.encoder_id!r} != backend {self.encoder_id!r}"
            )
        return fs

    def encode(self, clip):
        return self.load(clip.video_id)

    def close(self):
        pass


class _Child:
    def __init__(self, argv):
        try:
            self.proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        except OSError as exc:
            raise BackendError(f"cannot start encoder process {argv}: {exc}") from None
        self.lock = threading.Lock()

    def roundtrip(self, frames):
        with self.lock:
            if self.proc.poll() is not None:
                raise BackendError(f"encoder process exited with code {self.proc.returncode}")
            try:
                self.proc.stdin.write(protocol.encode_request(frames))
                self.proc.stdin.flush()
            except BrokenPipeError:
                raise BackendError("encoder process closed its input") from None
            return protocol.read_response(self.proc.stdout)

    def close(self):
        if self.proc.poll() is None:
            self.proc.stdin.close()
            try:
                self.proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()
        self.proc.stdout.close()


class ExternalBackend:
    """One shared child process (requests serialized), or one per thread
    when ``per_worker`` is set."""

    computes = True

    def __init__(self, cfg):
        self.cfg = cfg
        self.encoder_id = cfg.encoder_id
        self._shared = None
        self._local = threading.local()
        self._children = []
        self._lock = threading.Lock()

    def _child(self):
        if self.cfg.per_worker:
            child = getattr(self._local, "child", None)
            if child is None:
                child = self._local.child = _Child(self.cfg.external_cmd)
                with self._lock:
                    self._children.append(child)
            return child
        with self._lock:
            if self._shared is None:
                self._shared = _Child(self.cfg.external_cmd)
                self._children.append(self._shared)
            return self._shared

    def encode_frames(self, frames):
        feats = self._child().roundtrip(frames)
        if feats.shape[0] != frames.shape[0]:
            raise ContractError(f"encoder returned {feats.shape[0]} rows for {frames.shape[0]} frames")
        return feats

    def encode(self, clip):
        return FeatureSequence(_checked(self.cfg, self.encode_frames(clip.frames)), clip.video_id, self.encoder_id)

    def close(self):
        with self._lock:
            for child in self._children:
                child.close()
            self._children.clear()
            self._shared = None


class NativeBackend:
    computes = True

    def __init__(self, cfg):
        self.cfg = cfg
        self.encoder_id = cfg.encoder_id
        self.model = NativeViT.load(cfg.weights_path)
        self._mean = np.asarray(cfg.mean, dtype=np.float32)
        self._std = np.asarray(cfg.std, dtype=np.float32)

    def encode_frames(self, frames):
        normed = (np.asarray(frames, dtype=np.float32) - self._mean) / self._std
        return self.model.encode(normed, self.cfg.use_projection)

    def encode(self, clip):
        return FeatureSequence(_checked(self.cfg, self.encode_frames(clip.frames)), clip.video_id, self.encoder_id)

    def close(self):
        pass


def _checked(cfg, feats):
    if cfg.expected_dim is not None and feats.shape[1] != cfg.expected_dim:
        raise ContractError(f"encoder produced D={feats.shape[1]}, expected {cfg.expected_dim}")
    return feats


def make_backend(cfg):
    cfg.validate()
    return {"cache": CacheBackend, "external": ExternalBackend, "native": NativeBackend}[cfg.kind](cfg)


def encode_clip(clip, backend):
    """Map a preprocessed clip through a frozen encoder."""
    if backend.computes and (not clip.is_float or clip.frames.min() < 0 or clip.frames.max() > 1):
        raise ContractError(f"{clip.video_id}: clip must be preprocessed float frames in [0, 1]")
    return backend.encode(clip)
