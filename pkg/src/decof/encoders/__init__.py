from .backend import (
    CacheBackend,
    EncoderBackendConfig,
    ExternalBackend,
    NativeBackend,
    encode_clip,
    make_backend,
)
from .cache import cache_path, load_feature_cache, write_feature_cache
from .native import NativeViT, native_vit_forward

__all__ = [
    "CacheBackend",
    "EncoderBackendConfig",
    "ExternalBackend",
    "NativeBackend",
    "NativeViT",
    "cache_path",
    "encode_clip",
    "load_feature_cache",
    "make_backend",
    "native_vit_forward",
    "write_feature_cache",
]
