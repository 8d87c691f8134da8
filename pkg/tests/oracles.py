"""Independent reference implementations used as test oracles.

Written in plain Python with scalar loops so they share no code (and no
vectorization choices) with the package.
"""
import math

import numpy as np


def _vec(a):
    return [float(x) for x in np.asarray(a, dtype=np.float64).ravel()]


def _mat(a):
    a = np.asarray(a, dtype=np.float64)
    return [[float(x) for x in row] for row in a]


def _matvec(x, w):
    # x: len n, w: n x m  -> len m
    m = len(w[0])
    return [sum(x[i] * w[i][j] for i in range(len(x))) for j in range(m)]


def _add(a, b):
    return [x + y for x, y in zip(a, b)]


def _layernorm(x, g, b, eps=1e-5):
    mu = sum(x) / len(x)
    var = sum((v - mu) ** 2 for v in x) / len(x)
    s = math.sqrt(var + eps)
    return [(v - mu) / s * gi + bi for v, gi, bi in zip(x, g, b)]


def _gelu(x):
    return 0.5 * x * (1.0 + math.erf(x / math.sqrt(2.0)))


def _quick_gelu(x):
    return x / (1.0 + math.exp(-1.702 * x))


def _block(tokens, p, heads, act=_gelu, eps=1e-5):
    n, d = len(tokens), len(tokens[0])
    dh = d // heads
    hs = [_layernorm(t, p["ln1.g"], p["ln1.b"], eps) for t in tokens]
    q = [_add(_matvec(h, p["attn.wq"]), p["attn.bq"]) for h in hs]
    k = [_add(_matvec(h, p["attn.wk"]), p["attn.bk"]) for h in hs]
    v = [_add(_matvec(h, p["attn.wv"]), p["attn.bv"]) for h in hs]
    ctx = [[0.0] * d for _ in range(n)]
    for hd in range(heads):
        lo = hd * dh
        for i in range(n):
            scores = [sum(q[i][lo + c] * k[j][lo + c] for c in range(dh)) / math.sqrt(dh) for j in range(n)]
            top = max(scores)
            ex = [math.exp(s - top) for s in scores]
            tot = sum(ex)
            for j in range(n):
                w = ex[j] / tot
                for c in range(dh):
                    ctx[i][lo + c] += w * v[j][lo + c]
    out = []
    for i in range(n):
        z1 = _add(tokens[i], _add(_matvec(ctx[i], p["attn.wo"]), p["attn.bo"]))
        h2 = _layernorm(z1, p["ln2.g"], p["ln2.b"], eps)
        u = [act(x) for x in _add(_matvec(h2, p["mlp.w1"]), p["mlp.b1"])]
        m = _add(_matvec(u, p["mlp.w2"]), p["mlp.b2"])
        out.append(_add(z1, m))
    return out


def _convert(tensors, prefix):
    conv = {}
    for k, val in tensors.items():
        if k.startswith(prefix):
            short = k[len(prefix):]
            conv[short] = _mat(val) if np.ndim(val) == 2 else _vec(val)
    return conv


def reference_verifier_logits(features, tensors, cfg):
    """Eval-mode logits of the verifier, straight-line."""
    x = _mat(features)
    cls = _vec(tensors["class_embedding"])
    pos = _mat(tensors["positional_embedding"])
    tokens = [_add(t, pos[i]) for i, t in enumerate([cls] + x)]
    for layer in range(cfg.layers):
        tokens = _block(tokens, _convert(tensors, f"layers.{layer}."), cfg.heads)
    c = _layernorm(tokens[0], _vec(tensors["head.ln.g"]), _vec(tensors["head.ln.b"]))
    if cfg.head_hidden:
        c = [_gelu(v) for v in _add(_matvec(c, _mat(tensors["head.hidden.w"])), _vec(tensors["head.hidden.b"]))]
    return _add(_matvec(c, _mat(tensors["head.w"])), _vec(tensors["head.b"]))


def reference_vit_features(frame, tensors, arch, use_projection=True):
    """One frame through a ViT, straight-line (patch order: row-major grid,
    pixels row-major within a patch, channels innermost)."""
    p = arch["patch_size"]
    eps = float(arch.get("ln_eps", 1e-5))
    act = _quick_gelu if arch.get("activation") == "quick_gelu" else _gelu
    size = arch["image_size"]
    img = np.asarray(frame, dtype=np.float64)
    pw = _mat(tensors["patch.w"])
    tokens = [_vec(tensors["class_embedding"])]
    for gy in range(size // p):
        for gx in range(size // p):
            flat = []
            for py in range(p):
                for px in range(p):
                    for c in range(3):
                        flat.append(float(img[gy * p + py, gx * p + px, c]))
            tokens.append(_matvec(flat, pw))
    pos = _mat(tensors["positional_embedding"])
    tokens = [_add(t, pos[i]) for i, t in enumerate(tokens)]
    tokens = [_layernorm(t, _vec(tensors["ln_pre.g"]), _vec(tensors["ln_pre.b"]), eps) for t in tokens]
    for i in range(arch["depth"]):
        tokens = _block(tokens, _convert(tensors, f"blocks.{i}."), arch["heads"], act, eps)
    out = _layernorm(tokens[0], _vec(tensors["ln_post.g"]), _vec(tensors["ln_post.b"]), eps)
    if use_projection and arch["proj_dim"]:
        out = _matvec(out, _mat(tensors["proj"]))
    return out


def brute_force_ap(scores, labels, ids):
    """AP from pairwise rank counting: no sorting.

    The rank of item i is 1 + the number of items that come before it
    (higher score, or equal score and smaller id).
    """
    n = len(scores)

    def before(j, i):
        return scores[j] > scores[i] or (scores[j] == scores[i] and ids[j] < ids[i])

    precisions = []
    for i in range(n):
        if labels[i] != 1:
            continue
        rank = 1 + sum(before(j, i) for j in range(n) if j != i)
        pos_at_or_above = 1 + sum(before(j, i) and labels[j] == 1 for j in range(n) if j != i)
        precisions.append(pos_at_or_above / rank)
    return sum(precisions) / len(precisions)


def enumerate_param_count(cfg):
    """Count learnable scalars by walking the architecture description."""
    d, m = cfg.width, cfg.mlp_hidden
    per_layer = 0
    per_layer += 2 * d          # pre-attention layernorm scale + bias
    per_layer += 4 * (d * d + d)  # q, k, v, out projections with biases
    per_layer += 2 * d          # pre-MLP layernorm
    per_layer += d * m + m      # MLP in
    per_layer += m * d + d      # MLP out
    total = cfg.layers * per_layer
    total += d                  # class token
    total += (cfg.seq_len + 1) * d
    total += 2 * d              # head layernorm
    head_in = d
    if cfg.head_hidden:
        total += d * cfg.head_hidden + cfg.head_hidden
        head_in = cfg.head_hidden
    total += head_in * 2 + 2
    return total


def gaussian_taps(sigma):
    r = math.ceil(3 * sigma)
    w = [math.exp(-(k * k) / (2 * sigma * sigma)) for k in range(-r, r + 1)]
    s = math.fsum(w)
    return [x / s for x in w]
