"""Central finite-difference gradients, used as an independent check on
:func:`decof.verifier.verifier_backward`."""
import numpy as np

from .verifier import Gradients, batch_cross_entropy, verifier_forward


def loss_at(params, S, labels, smoothing=0.0):
    """Eval-mode mean cross-entropy for a sequence or batch."""
    logits = np.atleast_2d(verifier_forward(S, params, training=False).logits)
    return batch_cross_entropy(logits, np.atleast_1d(labels), smoothing)[0]


def finite_difference_grad(params, S, label, h=1e-4, names=None):
    """Per-coordinate ``(loss(p + h e) - loss(p - h e)) / 2h`` in float64.

    ``names`` restricts the walk to a subset of tensors; the rest are
    returned as zeros.
    """
    p = params.astype(np.float64)
    grads = p.zeros_like()
    for name in names if names is not None else p.names():
        t = p[name]
        g = grads[name]
        flat_t = t.reshape(-1)
        flat_g = g.reshape(-1)
        for i in range(flat_t.size):
            orig = flat_t[i]
            flat_t[i] = orig + h
            up = loss_at(p, S, label)
            flat_t[i] = orig - h
            down = loss_at(p, S, label)
            flat_t[i] = orig
            flat_g[i] = (up - down) / (2.0 * h)
    return Gradients(p.config, grads.tensors)


def max_relative_error(analytic, numeric, floor=1e-6):
    """Largest ``|a - n| / max(|a|, |n|, floor)`` over every entry."""
    worst = 0.0
    for name in analytic.names():
        a = np.asarray(analytic[name], dtype=np.float64)
        n = np.asarray(numeric[name], dtype=np.float64)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        if a.size:
            worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst
