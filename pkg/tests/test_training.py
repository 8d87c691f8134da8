import numpy as np
import pytest

from decof.data.synth import synth_sequences
from decof.errors import ConfigError, ContractError, DataError
from decof.features import FeatureSequence
from decof.training import EpochRecord, TrainConfig, sgd_momentum_step, train_verifier, write_curves_csv
from decof.verifier import VerifierConfig, init_params

from helpers import SMALL

TINY = VerifierConfig(seq_len=8, width=16, layers=1, heads=2, mlp_hidden=16, dropout=0.1)


def _single(value):
    p = init_params(VerifierConfig(seq_len=1, width=4, layers=1, heads=1, mlp_hidden=1), 0).astype(np.float64)
    for k in p.names():
        p[k] = np.full(p[k].shape, value)
    return p


def test_momentum_step_with_zero_gradient():
    p, g, v = _single(1.0), _single(0.0), _single(1.0)
    new_p, new_v = sgd_momentum_step(p, g, v, lr=0.001, momentum=0.9)
    np.testing.assert_allclose(new_p["head.b"], 1.0 - 0.0009)
    np.testing.assert_allclose(new_v["head.b"], 0.9)
    assert p["head.b"][0] == 1.0  # inputs untouched


def test_two_steps_accumulate_velocity():
    p, g, v = _single(0.0), _single(2.0), _single(0.0)
    p1, v1 = sgd_momentum_step(p, g, v, 0.1, 0.9)
    p2, v2 = sgd_momentum_step(p1, g, v1, 0.1, 0.9)
    np.testing.assert_allclose(v2["head.b"], 2.0 * 1.9)
    np.testing.assert_allclose(p2["head.b"], -0.1 * 2.0 - 0.1 * 3.8)


def test_defaults():
    t = TrainConfig()
    assert (t.lr, t.momentum, t.batch_size) == (0.001, 0.9, 32)
    v = VerifierConfig()
    assert (v.seq_len, v.heads, v.mlp_hidden, v.dropout) == (8, 4, 768, 0.1)
    assert TrainConfig.from_dict(t.to_dict()) == t


@pytest.mark.parametrize("bad", [dict(lr=0.0), dict(momentum=1.0), dict(batch_size=0), dict(max_epochs=-1)])
def test_invalid_train_config(bad):
    with pytest.raises(ConfigError):
        TrainConfig(**bad).validate()


def _data(n, seed, prefix):
    return synth_sequences(n, width=16, seed=seed, jump_scale=2.0, prefix=prefix)


def test_zero_epochs_returns_init():
    train = _data(4, 0, "t")
    params, curves = train_verifier(train, _data(2, 1, "v"), TINY, TrainConfig(max_epochs=0, seed=3))
    init = init_params(TINY, 3)
    assert curves == []
    assert all(params[k].tobytes() == init[k].tobytes() for k in init.names())


def test_single_class_and_empty_val_rejected():
    train = _data(4, 0, "t")
    reals = [(fs, y) for fs, y in train if y == 0]
    with pytest.raises(DataError):
        train_verifier(reals, _data(2, 1, "v"), TINY, TrainConfig(max_epochs=1))
    with pytest.raises(DataError):
        train_verifier(train, [], TINY, TrainConfig(max_epochs=1))


def test_mixed_encoders_rejected():
    train = _data(4, 0, "t")
    fs, y = train[0]
    train[0] = (FeatureSequence(fs.features, fs.video_id, "other"), y)
    with pytest.raises(ContractError):
        train_verifier(train, _data(2, 1, "v"), TINY, TrainConfig(max_epochs=1))


def test_shape_mismatch_rejected():
    with pytest.raises(ConfigError):
        train_verifier(_data(4, 0, "t"), _data(2, 1, "v"), SMALL, TrainConfig(max_epochs=1))


def test_training_is_deterministic_and_learns():
    train, val = _data(64, 0, "t"), _data(16, 1, "v")
    tcfg = TrainConfig(lr=0.01, max_epochs=6, batch_size=16, seed=5)
    p1, c1 = train_verifier(train, val, TINY, tcfg)
    p2, c2 = train_verifier(train, val, TINY, tcfg)
    assert c1 == c2
    assert all(p1[k].tobytes() == p2[k].tobytes() for k in p1.names())
    assert all(isinstance(r, EpochRecord) for r in c1)


def _separable(n, seed, prefix):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=16)
    out = []
    for i in range(n):
        y = i % 2
        x = (1 if y else -1) * a + 0.3 * rng.normal(size=(8, 16))
        out.append((FeatureSequence(x, f"{prefix}{i}", "e"), y))
    return out


def test_training_learns_separable_task():
    data = _separable(96, 0, "s")
    train, val = data[:64], data[64:]
    _, curves = train_verifier(train, val, TINY, TrainConfig(lr=0.01, max_epochs=15, batch_size=16, seed=1))
    assert curves[-1].train_loss < curves[0].train_loss
    assert max(r.val_acc for r in curves) == 1.0


def test_early_stopping_respects_patience():
    train, val = _data(16, 0, "t"), _data(4, 1, "v")
    _, curves = train_verifier(train, val, TINY, TrainConfig(lr=1e-6, max_epochs=50, early_stop_patience=2, batch_size=8))
    assert len(curves) < 50
    best = max(r.val_acc for r in curves)
    first_best = next(r.epoch for r in curves if r.val_acc == best)
    assert curves[-1].epoch == first_best + 2


def test_curves_csv(tmp_path):
    path = tmp_path / "curves.csv"
    write_curves_csv([EpochRecord(1, 0.5, 0.75, 0.875)], path)
    assert path.read_text() == "epoch,train_loss,val_acc,val_ap\n1,0.5,0.75,0.875\n"
