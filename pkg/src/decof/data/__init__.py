from .clip import ClipTensor
from .frames import list_frames, load_clip, run_decoder, sample_frames, write_frames
from .manifest import DatasetManifest, ManifestEntry, load_manifest, write_manifest
from .perturb import (
    DEFAULT_SPECS,
    IDENTITY,
    PerturbationSpec,
    gaussian_blur,
    gaussian_kernel,
    jpeg_roundtrip,
    perturb_clip,
    psnr,
)
from .preprocess import AugmentConfig, preprocess_eval, preprocess_train, resize_bilinear
from .probes import replicate_frame, scramble_frames
from .synth import synth_sequences

__all__ = [
    "AugmentConfig",
    "ClipTensor",
    "DEFAULT_SPECS",
    "DatasetManifest",
    "IDENTITY",
    "ManifestEntry",
    "PerturbationSpec",
    "gaussian_blur",
    "gaussian_kernel",
    "jpeg_roundtrip",
    "list_frames",
    "load_clip",
    "load_manifest",
    "perturb_clip",
    "preprocess_eval",
    "preprocess_train",
    "psnr",
    "replicate_frame",
    "resize_bilinear",
    "run_decoder",
    "sample_frames",
    "scramble_frames",
    "synth_sequences",
    "write_frames",
    "write_manifest",
]
