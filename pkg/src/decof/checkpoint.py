"""DCOF checkpoint files: verifier config, encoder id and float32 weights."""
import hashlib

import numpy as np

from . import container
from .errors import FormatError
from .verifier import VerifierConfig, VerifierParams, param_shapes

MAGIC = b"DCOF"
VERSION = 1


def save_checkpoint(path, params, encoder_id="", extra=None):
    header = {
        "config": params.config.to_dict(),
        "encoder_id": encoder_id,
        "extra": extra or {},
    }
    return container.write_file(path, MAGIC, VERSION, header, params.tensors)


def load_checkpoint(path):
    """Returns ``(params, header)``."""
    _, header, tensors = container.read_file(path, MAGIC, (VERSION,))
    cfg = VerifierConfig.from_dict(header["config"])
    expected = param_shapes(cfg)
    if list(tensors) != list(expected):
        raise FormatError(f"{path}: tensor directory does not match config")
    for name, shape in expected.items():
        if tensors[name].shape != shape:
            raise FormatError(f"{path}: {name} has shape {tensors[name].shape}, expected {shape}")
    params = VerifierParams(cfg, {k: np.ascontiguousarray(v) for k, v in tensors.items()})
    return params, header


def file_digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()
