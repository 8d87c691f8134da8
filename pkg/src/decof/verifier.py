"""Temporal-consistency verifier: class token + positions + pre-norm
transformer encoder blocks + classification head, with a hand-written
reverse pass.

Label convention everywhere: 1 = generated, 0 = real.
"""
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import erf, expit

from .errors import ConfigError, ConsistencyError, DimensionError
from .features import FeatureSequence

LN_EPS = 1e-5
GENERATED = 1
REAL = 0

_SQRT_HALF = float(np.sqrt(0.5))
_INV_SQRT_2PI = float(1.0 / np.sqrt(2.0 * np.pi))


@dataclass(frozen=True)
class VerifierConfig:
    seq_len: int = 8
    width: int = 768
    layers: int = 2
    heads: int = 4
    mlp_hidden: int = 768
    dropout: float = 0.1
    head_hidden: int = 0

    def validate(self):
        problems = []
        if self.seq_len < 1:
            problems.append(f"seq_len must be >= 1 (got {self.seq_len})")
        if self.width < 1:
            problems.append(f"width must be >= 1 (got {self.width})")
        if self.layers < 1:
            problems.append(f"layers must be >= 1 (got {self.layers})")
        if self.heads < 1 or self.width % self.heads:
            problems.append(f"width {self.width} not divisible by heads {self.heads}")
        if self.mlp_hidden < 1:
            problems.append(f"mlp_hidden must be >= 1 (got {self.mlp_hidden})")
        if not 0.0 <= self.dropout < 1.0:
            problems.append(f"dropout must be in [0, 1) (got {self.dropout})")
        if self.head_hidden < 0:
            problems.append(f"head_hidden must be >= 0 (got {self.head_hidden})")
        if problems:
            raise ConfigError("invalid verifier config: " + "; ".join(problems))
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown verifier config keys: {sorted(unknown)}")
        return cls(**d)


def param_shapes(config):
    """Ordered mapping of parameter name to shape for ``config``."""
    d, m = config.width, config.mlp_hidden
    shapes = {
        "class_embedding": (d,),
        "positional_embedding": (config.seq_len + 1, d),
    }
    for i in range(config.layers):
        p = f"layers.{i}."
        shapes.update({
            p + "ln1.g": (d,), p + "ln1.b": (d,),
            p + "attn.wq": (d, d), p + "attn.bq": (d,),
            p + "attn.wk": (d, d), p + "attn.bk": (d,),
            p + "attn.wv": (d, d), p + "attn.bv": (d,),
            p + "attn.wo": (d, d), p + "attn.bo": (d,),
            p + "ln2.g": (d,), p + "ln2.b": (d,),
            p + "mlp.w1": (d, m), p + "mlp.b1": (m,),
            p + "mlp.w2": (m, d), p + "mlp.b2": (d,),
        })
    shapes["head.ln.g"] = (d,)
    shapes["head.ln.b"] = (d,)
    head_in = d
    if config.head_hidden:
        shapes["head.hidden.w"] = (d, config.head_hidden)
        shapes["head.hidden.b"] = (config.head_hidden,)
        head_in = config.head_hidden
    shapes["head.w"] = (head_in, 2)
    shapes["head.b"] = (2,)
    return shapes


@dataclass
class VerifierParams:
    """All learnable tensors, keyed by name in :func:`param_shapes` order."""

    config: VerifierConfig
    tensors: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.tensors[name]

    def __setitem__(self, name, value):
        self.tensors[name] = value

    def names(self):
        return list(self.tensors)

    @property
    def dtype(self):
        return next(iter(self.tensors.values())).dtype

    def num_params(self):
        return sum(t.size for t in self.tensors.values())

    def copy(self):
        return type(self)(self.config, {k: v.copy() for k, v in self.tensors.items()})

    def astype(self, dtype):
        return type(self)(self.config, {k: v.astype(dtype) for k, v in self.tensors.items()})

    def zeros_like(self):
        return type(self)(self.config, {k: np.zeros_like(v) for k, v in self.tensors.items()})

    def flat(self):
        return np.concatenate([t.ravel() for t in self.tensors.values()])

    def check_congruent(self, other):
        if list(self.tensors) != list(other.tensors):
            raise ConsistencyError("parameter trees have different names")
        for k, v in self.tensors.items():
            if v.shape != other.tensors[k].shape:
                raise ConsistencyError(f"{k}: shape {v.shape} != {other.tensors[k].shape}")

    def all_finite(self):
        return all(np.all(np.isfinite(t)) for t in self.tensors.values())


class Gradients(VerifierParams):
    """Same tree as :class:`VerifierParams`, holding d(loss)/d(param)."""


def init_params(config, seed):
    config.validate()
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in param_shapes(config).items():
        leaf = name.rsplit(".", 1)[-1]
        if name in ("head.w", "head.b"):
            t = np.zeros(shape, np.float32)
        elif leaf == "g":
            t = np.ones(shape, np.float32)
        elif leaf.startswith("b"):
            t = np.zeros(shape, np.float32)
        else:
            t = (rng.standard_normal(shape) * 0.02).astype(np.float32)
        tensors[name] = t
    return VerifierParams(config, tensors)


# ---------------------------------------------------------------- primitives

def gelu(x):
    return 0.5 * x * (1.0 + erf(x * _SQRT_HALF))


def gelu_grad(x):
    cdf = 0.5 * (1.0 + erf(x * _SQRT_HALF))
    return cdf + x * _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def quick_gelu(x):
    return x / (1.0 + np.exp(-1.702 * x))


def layernorm(x, g, b, eps=LN_EPS):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = xc * rstd
    return xhat * g + b, (xhat, rstd)


def layernorm_backward(dy, g, cache):
    xhat, rstd = cache
    red = tuple(range(dy.ndim - 1))
    dg = (dy * xhat).sum(axis=red)
    db = dy.sum(axis=red)
    dxhat = dy * g
    dx = rstd * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dg, db


def softmax(x, axis=-1):
    e = np.exp(x - x.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def _split_heads(x, heads):
    b, t, d = x.shape
    return x.reshape(b, t, heads, d // heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    b, h, t, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * dh)


def _dropout_mask(rng, shape, rate, dtype):
    keep = rng.random(shape) >= rate
    return (keep / (1.0 - rate)).astype(dtype)


def block_forward(z, p, heads, *, activation=gelu, rng=None, dropout=0.0, eps=LN_EPS):
    """One pre-norm encoder block. ``p`` maps short names (``ln1.g``,
    ``attn.wq``, ``mlp.w1`` ...) to arrays. Returns ``(z_out, cache)``."""
    training = rng is not None and dropout > 0.0
    h, ln1 = layernorm(z, p["ln1.g"], p["ln1.b"], eps)
    q = _split_heads(h @ p["attn.wq"] + p["attn.bq"], heads)
    k = _split_heads(h @ p["attn.wk"] + p["attn.bk"], heads)
    v = _split_heads(h @ p["attn.wv"] + p["attn.bv"], heads)
    scale = 1.0 / float(np.sqrt(q.shape[-1]))
    probs = softmax((q @ k.transpose(0, 1, 3, 2)) * scale)
    attn_mask = _dropout_mask(rng, probs.shape, dropout, z.dtype) if training else None
    probs_d = probs * attn_mask if training else probs
    ctx = _merge_heads(probs_d @ v)
    z1 = z + (ctx @ p["attn.wo"] + p["attn.bo"])

    h2, ln2 = layernorm(z1, p["ln2.g"], p["ln2.b"], eps)
    u = h2 @ p["mlp.w1"] + p["mlp.b1"]
    act = activation(u)
    m = act @ p["mlp.w2"] + p["mlp.b2"]
    mlp_mask = _dropout_mask(rng, m.shape, dropout, z.dtype) if training else None
    z2 = z1 + (m * mlp_mask if training else m)

    cache = dict(h=h, ln1=ln1, q=q, k=k, v=v, scale=scale, probs=probs,
                 attn_mask=attn_mask, probs_d=probs_d, ctx=ctx,
                 h2=h2, ln2=ln2, u=u, act=act, mlp_mask=mlp_mask)
    return z2, cache


def block_backward(dz2, p, c):
    """Reverse of :func:`block_forward` (GELU activation). Returns
    ``(dz, grads)`` with grads keyed like ``p``."""
    g = {}
    red = (0, 1)
    # MLP branch
    dm = dz2 * c["mlp_mask"] if c["mlp_mask"] is not None else dz2
    g["mlp.w2"] = np.einsum("bti,btj->ij", c["act"], dm)
    g["mlp.b2"] = dm.sum(axis=red)
    dact = dm @ p["mlp.w2"].T
    du = dact * gelu_grad(c["u"])
    g["mlp.w1"] = np.einsum("bti,btj->ij", c["h2"], du)
    g["mlp.b1"] = du.sum(axis=red)
    dh2 = du @ p["mlp.w1"].T
    dz1_ln, g["ln2.g"], g["ln2.b"] = layernorm_backward(dh2, p["ln2.g"], c["ln2"])
    dz1 = dz2 + dz1_ln

    # attention branch
    g["attn.wo"] = np.einsum("bti,btj->ij", c["ctx"], dz1)
    g["attn.bo"] = dz1.sum(axis=red)
    dctx = _split_heads(dz1 @ p["attn.wo"].T, c["q"].shape[1])
    dprobs_d = dctx @ c["v"].transpose(0, 1, 3, 2)
    dv = c["probs_d"].transpose(0, 1, 3, 2) @ dctx
    dprobs = dprobs_d * c["attn_mask"] if c["attn_mask"] is not None else dprobs_d
    probs = c["probs"]
    dscores = probs * (dprobs - (dprobs * probs).sum(axis=-1, keepdims=True))
    dscores *= c["scale"]
    dq = _merge_heads(dscores @ c["k"])
    dk = _merge_heads(dscores.transpose(0, 1, 3, 2) @ c["q"])
    dv = _merge_heads(dv)
    h = c["h"]
    dh = np.zeros_like(h)
    for name, dproj in (("q", dq), ("k", dk), ("v", dv)):
        g[f"attn.w{name}"] = np.einsum("bti,btj->ij", h, dproj)
        g[f"attn.b{name}"] = dproj.sum(axis=red)
        dh += dproj @ p[f"attn.w{name}"].T
    dz_ln, g["ln1.g"], g["ln1.b"] = layernorm_backward(dh, p["ln1.g"], c["ln1"])
    return dz1 + dz_ln, g


def _layer_view(params, i):
    prefix = f"layers.{i}."
    return {k[len(prefix):]: v for k, v in params.tensors.items() if k.startswith(prefix)}


# ------------------------------------------------------------------ forward

@dataclass
class ForwardTrace:
    logits: np.ndarray
    training: bool
    rng_seed: int
    config: VerifierConfig
    dtype: np.dtype
    batched: bool
    inputs: np.ndarray = None
    caches: dict = field(default_factory=dict)

    def dropout_masks(self):
        masks = []
        for c in self.caches["layers"]:
            masks.extend(m for m in (c["attn_mask"], c["mlp_mask"]) if m is not None)
        return masks


def _as_batch(S, dtype):
    if isinstance(S, FeatureSequence):
        x = S.features
    else:
        x = np.asarray(S)
    batched = x.ndim == 3
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3:
        raise DimensionError(f"expected (L, D) or (B, L, D) features, got shape {x.shape}")
    return x.astype(dtype, copy=False), batched


def verifier_forward(S, params, training=False, seed=0):
    """Run the verifier on one sequence ``(L, D)`` or a batch ``(B, L, D)``.

    Logits are ``(2,)`` or ``(B, 2)``. Dropout is only active when
    ``training`` is true; its masks come from ``seed``.
    """
    cfg = params.config
    x, batched = _as_batch(S, params.dtype)
    if x.shape[1] != cfg.seq_len or x.shape[2] != cfg.width:
        raise DimensionError(
            f"features {x.shape[1:]} do not match verifier (seq_len={cfg.seq_len}, width={cfg.width})"
        )
    rng = np.random.default_rng(seed) if training and cfg.dropout > 0 else None

    cls = np.broadcast_to(params["class_embedding"], (x.shape[0], 1, cfg.width))
    z = np.concatenate([cls, x], axis=1) + params["positional_embedding"]
    layer_caches = []
    for i in range(cfg.layers):
        z, c = block_forward(z, _layer_view(params, i), cfg.heads, rng=rng, dropout=cfg.dropout)
        layer_caches.append(c)

    pooled = z[:, 0, :]
    head_in, head_ln = layernorm(pooled, params["head.ln.g"], params["head.ln.b"])
    caches = dict(layers=layer_caches, head_ln=head_ln, head_in=head_in)
    if cfg.head_hidden:
        hid_pre = head_in @ params["head.hidden.w"] + params["head.hidden.b"]
        hid = gelu(hid_pre)
        caches.update(hid_pre=hid_pre, hid=hid)
        head_in = hid
    logits = head_in @ params["head.w"] + params["head.b"]
    if not batched:
        logits = logits[0]
    return ForwardTrace(logits, training, seed, cfg, params.dtype, batched, x, caches)


def verifier_backward(trace, dlogits, params):
    """Exact gradients of a scalar loss given d(loss)/d(logits)."""
    cfg = params.config
    if trace.config != cfg or trace.dtype != params.dtype:
        raise ConsistencyError("trace was produced with a different verifier config or dtype")
    dlogits = np.asarray(dlogits, dtype=params.dtype)
    if not trace.batched:
        dlogits = dlogits[None]
    if dlogits.shape != (trace.inputs.shape[0], 2):
        raise ConsistencyError(f"dlogits shape {dlogits.shape} does not match trace")

    c = trace.caches
    grads = {}
    head_in = c["hid"] if cfg.head_hidden else c["head_in"]
    grads["head.w"] = head_in.T @ dlogits
    grads["head.b"] = dlogits.sum(axis=0)
    dhead = dlogits @ params["head.w"].T
    if cfg.head_hidden:
        dpre = dhead * gelu_grad(c["hid_pre"])
        grads["head.hidden.w"] = c["head_in"].T @ dpre
        grads["head.hidden.b"] = dpre.sum(axis=0)
        dhead = dpre @ params["head.hidden.w"].T
    dpooled, grads["head.ln.g"], grads["head.ln.b"] = layernorm_backward(
        dhead, params["head.ln.g"], c["head_ln"])

    dz = np.zeros_like(trace.inputs, shape=(trace.inputs.shape[0], cfg.seq_len + 1, cfg.width))
    dz[:, 0, :] = dpooled
    for i in reversed(range(cfg.layers)):
        dz, g = block_backward(dz, _layer_view(params, i), c["layers"][i])
        for k, v in g.items():
            grads[f"layers.{i}.{k}"] = v
    grads["positional_embedding"] = dz.sum(axis=0)
    grads["class_embedding"] = dz[:, 0, :].sum(axis=0)

    ordered = {name: grads[name].astype(params.dtype, copy=False) for name in params.tensors}
    return Gradients(cfg, ordered)


# --------------------------------------------------------------------- loss

def softmax_cross_entropy(logits, label, smoothing=0.0):
    """Cross-entropy of a 2-vector of logits against ``label``.

    Returns ``(loss, dlogits)`` with ``dlogits = softmax(logits) - target``.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise DimensionError("non-finite logits")
    shifted = logits - logits.max()
    logp = shifted - np.log(np.exp(shifted).sum())
    target = np.full(2, smoothing / 2.0)
    target[int(label)] += 1.0 - smoothing
    loss = float(-(target * logp).sum())
    return loss, np.exp(logp) - target


def batch_cross_entropy(logits, labels, smoothing=0.0):
    """Mean cross-entropy over a ``(B, 2)`` batch; gradient is w.r.t. the mean."""
    logits = np.asarray(logits)
    labels = np.asarray(labels, dtype=np.int64)
    shifted = logits - logits.max(axis=1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    target = np.full(logits.shape, smoothing / 2.0, dtype=logits.dtype)
    target[np.arange(len(labels)), labels] += 1.0 - smoothing
    n = len(labels)
    loss = float(-(target * logp).sum() / n)
    return loss, ((np.exp(logp) - target) / n).astype(logits.dtype)


# ------------------------------------------------------------------ predict

def scores_from_logits(logits):
    """Probability of the generated class (column 1)."""
    logits = np.asarray(logits, dtype=np.float64)
    return expit(logits[..., GENERATED] - logits[..., REAL])


def predict(S, params):
    return float(scores_from_logits(verifier_forward(S, params).logits))


def predict_batch(X, params, batch_size=256):
    X = np.asarray(X)
    out = np.empty(len(X))
    for start in range(0, len(X), batch_size):
        chunk = X[start:start + batch_size]
        out[start:start + len(chunk)] = scores_from_logits(verifier_forward(chunk, params).logits)
    return out
