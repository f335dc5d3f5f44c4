import numpy as np
import pytest

from sbtrain.config import TrainConfig
from sbtrain.engine import Gradients, backward, forward, init_network
from sbtrain.errors import ConfigError, NumericsError
from sbtrain.gradsim import (
    cosine_similarity,
    flatten,
    sign_agreement,
    subsample_comparison,
    subsample_epoch_rows,
)


def test_flatten_is_layer_major():
    grads = Gradients(
        weights=[np.array([[1.0, 2.0]]), np.array([[5.0], [6.0]])],
        biases=[np.array([3.0, 4.0]), np.array([7.0])],
    )
    np.testing.assert_array_equal(flatten(grads), [1, 2, 3, 4, 5, 6, 7])


def test_cosine_extremes():
    a = np.array([1.0, 2.0, -3.0])
    assert cosine_similarity(a, 2.5 * a) == pytest.approx(1.0)
    assert cosine_similarity(a, -a) == pytest.approx(-1.0)
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(0.0)


def test_cosine_zero_vector_raises():
    with pytest.raises(NumericsError):
        cosine_similarity(np.zeros(3), np.ones(3))
    with pytest.raises(ConfigError):
        cosine_similarity(np.ones(3), np.ones(4))


def test_sign_agreement_hand_case():
    a = np.array([1.0, -1.0, 0.0, 2.0])
    b = np.array([2.0, -3.0, 1.0, -1.0])
    # signs: (+,+) (-,-) (0,+) (+,-) -> 2 of 4 agree
    assert sign_agreement(a, b) == pytest.approx(0.5)


def test_sign_agreement_zero_only_matches_zero():
    assert sign_agreement(np.array([0.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(0.5)
    with pytest.raises(ConfigError):
        sign_agreement(np.array([]), np.array([]))


def rand_batch(rng, n=12, dim=3, classes=3):
    x = rng.normal(size=(n, dim))
    y = rng.integers(0, classes, size=n)
    return x, y


def test_full_fraction_matches_whole_batch():
    rng = np.random.default_rng(0)
    net = init_network([3, 5, 3], seed=7)
    x, y = rand_batch(rng)
    for mode in ("top-loss", "random", "low-loss"):
        cos, sign = subsample_comparison(net, x, y, 1.0, mode, np.random.default_rng(1))
        assert cos == pytest.approx(1.0, abs=1e-12)
        assert sign == pytest.approx(1.0)


def test_rank_modes_do_not_touch_rng():
    rng = np.random.default_rng(5)
    net = init_network([3, 4, 3], seed=1)
    x, y = rand_batch(rng)
    for mode in ("top-loss", "low-loss"):
        probe = np.random.default_rng(42)
        before = probe.bit_generator.state
        subsample_comparison(net, x, y, 0.5, mode, probe)
        assert probe.bit_generator.state == before
    probe = np.random.default_rng(42)
    before = probe.bit_generator.state
    subsample_comparison(net, x, y, 0.5, "random", probe)
    assert probe.bit_generator.state != before


def test_equal_losses_tie_break_by_position():
    # mirrored inputs with permuted labels give identical losses, so the
    # stable sort must pick the earliest positions
    net = init_network([2, 4, 2], seed=3)
    x = np.array([[1.0, 0.5], [1.0, 0.5], [1.0, 0.5], [1.0, 0.5]])
    y = np.array([0, 0, 0, 0])
    logits, trace = forward(net, x)
    sub_cos, _ = subsample_comparison(net, x, y, 0.5, "top-loss", np.random.default_rng(0))
    _, first_trace = forward(net, x[:2])
    expected = flatten(backward(net, first_trace, y[:2]))
    full = flatten(backward(net, trace, y))
    assert sub_cos == pytest.approx(cosine_similarity(expected, full))


def test_invalid_fraction_and_mode():
    net = init_network([2, 2], seed=0)
    x = np.ones((2, 2))
    y = np.array([0, 1])
    rng = np.random.default_rng(0)
    with pytest.raises(ConfigError):
        subsample_comparison(net, x, y, 0.0, "random", rng)
    with pytest.raises(ConfigError):
        subsample_comparison(net, x, y, 1.5, "random", rng)
    with pytest.raises(ConfigError):
        subsample_comparison(net, x, y, 0.5, "bottom", rng)


def small_cfg(**overrides):
    base = {
        "dataset": {"synthetic": {"n": 200, "classes": 2, "dim": 2, "spread": 0.5, "seed": 4}},
        "model": {"hidden": [8]},
        "strategy": {"name": "traditional"},
        "bsize": 32,
        "epochs": 1,
        "lr": {"initial": 0.1},
        "seed": 0,
    }
    base.update(overrides)
    return TrainConfig.model_validate(base)


def test_subsample_epoch_rows_counts():
    cfg = small_cfg()
    rows = subsample_epoch_rows(cfg, [0.25, 0.5], ["top-loss", "random"], pretrain_epochs=1)
    # 160 train examples, bsize 32 -> 5 full batches, 2 fractions x 2 modes
    assert len(rows) == 5 * 2 * 2
    assert {r["mode"] for r in rows} == {"top-loss", "random"}
    assert all(-1.0 <= r["cosine"] <= 1.0 for r in rows)
    assert all(0.0 <= r["sign_agreement"] <= 1.0 for r in rows)


def test_subsample_epoch_rows_max_batches_and_determinism():
    cfg = small_cfg()
    rows_a = subsample_epoch_rows(cfg, [0.5], ["top-loss"], max_batches=2)
    rows_b = subsample_epoch_rows(cfg, [0.5], ["top-loss"], max_batches=2)
    assert len(rows_a) == 2
    assert rows_a == rows_b
