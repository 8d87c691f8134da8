"""SGD-with-momentum training of the verifier with early stopping on
validation accuracy."""
import csv
import logging
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError, ContractError, DataError, DivergenceError
from .metrics import ScoredItem, accuracy, average_precision
from .verifier import (
    batch_cross_entropy,
    init_params,
    predict_batch,
    verifier_backward,
    verifier_forward,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    momentum: float = 0.9
    batch_size: int = 32
    max_epochs: int = 100
    early_stop_patience: int = 10
    seed: int = 0
    label_smoothing: float = 0.0

    def validate(self):
        if not self.lr > 0:
            raise ConfigError(f"lr must be > 0 (got {self.lr})")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1) (got {self.momentum})")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1 (got {self.batch_size})")
        if self.max_epochs < 0 or self.early_stop_patience < 1:
            raise ConfigError("max_epochs must be >= 0 and early_stop_patience >= 1")
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ConfigError(f"label_smoothing must be in [0, 1) (got {self.label_smoothing})")
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_acc: float
    val_ap: float


def sgd_momentum_step(params, grads, velocity, lr, momentum):
    """Classic momentum: ``v' = momentum * v + g``; ``p' = p - lr * v'``.

    Returns new ``(params, velocity)``; the inputs are left untouched.
    """
    params.check_congruent(grads)
    params.check_congruent(velocity)
    new_p, new_v = params.copy(), velocity.copy()
    for name in params.names():
        v = momentum * velocity[name] + grads[name]
        new_v[name] = v.astype(velocity[name].dtype, copy=False)
        new_p[name] = (params[name] - lr * v).astype(params[name].dtype, copy=False)
    return new_p, new_v


def _stack(pairs, vcfg):
    encoder_ids = {fs.encoder_id for fs, _ in pairs}
    if len(encoder_ids) > 1:
        raise ContractError(f"mixed encoder ids in one run: {sorted(encoder_ids)}")
    for fs, _ in pairs:
        if fs.features.shape != (vcfg.seq_len, vcfg.width):
            raise ConfigError(
                f"{fs.video_id}: features {fs.features.shape} do not match "
                f"verifier (seq_len={vcfg.seq_len}, width={vcfg.width})"
            )
    if not pairs:
        return np.zeros((0, vcfg.seq_len, vcfg.width), np.float32), np.zeros(0, np.int64), [], encoder_ids
    X = np.stack([fs.features for fs, _ in pairs])
    y = np.array([int(label) for _, label in pairs], dtype=np.int64)
    ids = [fs.video_id for fs, _ in pairs]
    return X, y, ids, encoder_ids


def _batch_seed(seed, epoch, batch):
    return int(np.random.SeedSequence([seed, epoch, batch]).generate_state(1, np.uint64)[0])


def evaluate_split(params, X, y, ids):
    scores = predict_batch(X, params)
    items = [ScoredItem(float(s), int(l), vid) for s, l, vid in zip(scores, y, ids)]
    acc = accuracy(items)
    ap = average_precision(items) if y.any() else float("nan")
    return acc, ap


def train_verifier(train, val, vcfg, tcfg):
    """Train on ``(FeatureSequence, label)`` pairs; select on ``val``.

    Returns ``(best_params, curves)`` where curves is a list of
    :class:`EpochRecord`, one per completed epoch.
    """
    vcfg.validate()
    tcfg.validate()
    X, y, _, train_enc = _stack(train, vcfg)
    Xv, yv, val_ids, val_enc = _stack(val, vcfg)
    if train_enc and val_enc and train_enc != val_enc:
        raise ContractError(f"train/val encoder ids differ: {sorted(train_enc | val_enc)}")
    params = init_params(vcfg, tcfg.seed)
    curves = []
    if tcfg.max_epochs == 0:
        return params, curves
    if len(set(y.tolist())) < 2:
        raise DataError("training set must contain both real and generated examples")
    if len(yv) == 0:
        raise DataError("validation set is empty")

    rng = np.random.default_rng(tcfg.seed)
    velocity = params.zeros_like()
    best, best_acc, stale = params.copy(), -1.0, 0
    n = len(y)
    for epoch in range(1, tcfg.max_epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for b, start in enumerate(range(0, n, tcfg.batch_size)):
            idx = order[start:start + tcfg.batch_size]
            trace = verifier_forward(X[idx], params, training=True, seed=_batch_seed(tcfg.seed, epoch, b))
            loss, dlogits = batch_cross_entropy(trace.logits, y[idx], tcfg.label_smoothing)
            if not np.isfinite(loss):
                raise DivergenceError(epoch, b, loss)
            grads = verifier_backward(trace, dlogits, params)
            params, velocity = sgd_momentum_step(params, grads, velocity, tcfg.lr, tcfg.momentum)
            total += loss * len(idx)
        acc, ap = evaluate_split(params, Xv, yv, val_ids)
        curves.append(EpochRecord(epoch, total / n, acc, ap))
        log.info("epoch %d loss %.5f val_acc %.4f val_ap %.4f", epoch, total / n, acc, ap)
        if acc > best_acc:
            best, best_acc, stale = params.copy(), acc, 0
        else:
            stale += 1
            if stale >= tcfg.early_stop_patience:
                log.info("early stop after %d epochs without improvement", stale)
                break
    return best, curves


def write_curves_csv(curves, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_acc", "val_ap"])
        for r in curves:
            w.writerow([r.epoch, repr(r.train_loss), repr(r.val_acc), repr(r.val_ap)])
