"""In-process ViT image encoder read from a DCVT weights file.

The architecture (patch size, depth, width, heads, projection) comes from
the file header. Patch weights are stored as a ``(P*P*3, width)`` matrix
over row-major ``(py, px, channel)`` patch pixels.
"""
import numpy as np

from .. import container
from ..errors import CapabilityError, ContractError
from ..verifier import block_forward, gelu, layernorm, quick_gelu

MAGIC = b"DCVT"
VERSION = 1
ACTIVATIONS = {"gelu": gelu, "quick_gelu": quick_gelu}
ARCH_KEYS = ("image_size", "patch_size", "width", "depth", "heads", "mlp_hidden", "proj_dim")


def vit_shapes(arch):
    w, m = arch["width"], arch["mlp_hidden"]
    p = arch["patch_size"]
    grid = arch["image_size"] // p
    shapes = {
        "patch.w": (p * p * 3, w),
        "class_embedding": (w,),
        "positional_embedding": (grid * grid + 1, w),
        "ln_pre.g": (w,), "ln_pre.b": (w,),
    }
    for i in range(arch["depth"]):
        b = f"blocks.{i}."
        shapes.update({
            b + "ln1.g": (w,), b + "ln1.b": (w,),
            b + "attn.wq": (w, w), b + "attn.bq": (w,),
            b + "attn.wk": (w, w), b + "attn.bk": (w,),
            b + "attn.wv": (w, w), b + "attn.bv": (w,),
            b + "attn.wo": (w, w), b + "attn.bo": (w,),
            b + "ln2.g": (w,), b + "ln2.b": (w,),
            b + "mlp.w1": (w, m), b + "mlp.b1": (m,),
            b + "mlp.w2": (m, w), b + "mlp.b2": (w,),
        })
    shapes["ln_post.g"] = (w,)
    shapes["ln_post.b"] = (w,)
    if arch["proj_dim"]:
        shapes["proj"] = (w, arch["proj_dim"])
    return shapes


def check_arch(arch):
    missing = [k for k in ARCH_KEYS if k not in arch]
    if missing:
        raise CapabilityError(f"ViT header lacks {missing}")
    if arch.get("activation", "gelu") not in ACTIVATIONS:
        raise CapabilityError(f"unsupported activation {arch.get('activation')!r}")
    if arch["image_size"] % arch["patch_size"] or arch["width"] % arch["heads"]:
        raise CapabilityError("image_size must divide by patch_size and width by heads")
    return arch


def random_vit(arch, seed=0, scale=0.02):
    """Randomly initialised weights for ``arch`` (tests and benchmarks)."""
    check_arch(arch)
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in vit_shapes(arch).items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf == "g":
            tensors[name] = (1.0 + scale * rng.standard_normal(shape)).astype(np.float32)
        else:
            tensors[name] = (scale * rng.standard_normal(shape)).astype(np.float32)
    return tensors


def save_vit(path, arch, tensors):
    return container.write_file(path, MAGIC, VERSION, {"arch": arch}, tensors)


class NativeViT:
    def __init__(self, arch, tensors):
        self.arch = check_arch(dict(arch))
        expected = vit_shapes(self.arch)
        for name, shape in expected.items():
            if name not in tensors or tensors[name].shape != shape:
                raise CapabilityError(f"weights missing or misshapen: {name} (expected {shape})")
        self.tensors = {k: np.asarray(tensors[k], dtype=np.float32) for k in expected}
        self.activation = ACTIVATIONS[self.arch.get("activation", "gelu")]
        self.eps = float(self.arch.get("ln_eps", 1e-5))
        self._blocks = [
            {k[len(f"blocks.{i}."):]: v for k, v in self.tensors.items() if k.startswith(f"blocks.{i}.")}
            for i in range(self.arch["depth"])
        ]

    @classmethod
    def load(cls, path):
        try:
            _, header, tensors = container.read_file(path, MAGIC, (VERSION,))
        except Exception as exc:
            raise CapabilityError(f"cannot read ViT weights {path}: {exc}") from exc
        if "arch" not in header:
            raise CapabilityError(f"{path}: header has no 'arch' section")
        return cls(header["arch"], tensors)

    @property
    def out_dim(self):
        return self.arch["proj_dim"] or self.arch["width"]

    def patchify(self, frame):
        p = self.arch["patch_size"]
        h, w, c = frame.shape
        g_h, g_w = h // p, w // p
        return frame.reshape(g_h, p, g_w, p, c).transpose(0, 2, 1, 3, 4).reshape(g_h * g_w, p * p * c)

    def forward_frame(self, frame, use_projection=True):
        t = self.tensors
        size = self.arch["image_size"]
        if frame.shape != (size, size, 3):
            raise ContractError(f"ViT expects {size}x{size}x3 frames, got {frame.shape}")
        tokens = self.patchify(np.asarray(frame, dtype=np.float32)) @ t["patch.w"]
        z = np.concatenate([t["class_embedding"][None], tokens]) + t["positional_embedding"]
        z, _ = layernorm(z[None], t["ln_pre.g"], t["ln_pre.b"], self.eps)
        for blk in self._blocks:
            z, _ = block_forward(z, blk, self.arch["heads"], activation=self.activation, eps=self.eps)
        out, _ = layernorm(z[0, 0], t["ln_post.g"], t["ln_post.b"], self.eps)
        if use_projection and "proj" in t:
            out = out @ t["proj"]
        return out.astype(np.float32)

    def encode(self, frames, use_projection=True):
        """Frames ``(L, H, W, 3)`` already normalized; one row per frame."""
        return np.stack([self.forward_frame(f, use_projection) for f in frames])


def native_vit_forward(frames, weights_path, use_projection=True):
    return NativeViT.load(weights_path).encode(frames, use_projection)
