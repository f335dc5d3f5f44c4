"""Batch-selection strategies and the training driver.

The driver walks the shuffled training set once per epoch and hands
minibatches to a strategy. Strategies that select examples run one cheap
selection forward per inspected batch, accumulate chosen examples into a
pending batch, and fire a full update (fresh training forward + backward +
step) each time the pending batch fills. The pending batch survives epoch
boundaries and is discarded only when training ends, so every update sees
a full batch. The always-train baseline updates on every minibatch
including a final short one.

All pass counters count examples, not batches, so a partial batch adds its
actual size.
"""

import math
from dataclasses import dataclass, field
from time import perf_counter

import numpy as np

from . import rng as streams
from .config import StrategySpec, TrainConfig
from .data import Dataset, load_idx, read_csv, synth_blobs, uniform_flip
from .engine import (
    LrSchedule,
    Network,
    backward,
    cross_entropy_losses,
    forward,
    init_network,
    lr_at,
    sgd_step,
)
from .errors import ConfigError
from .metrics import EpochRecord, ProbTrace, RunLog, RunLogWriter, evaluate
from .sampler import (
    LossHistory,
    beta_from_selectivity,
    decide,
    push_and_percentile,
    selection_probability,
)

DEFAULT_SELECTIVITY = 1.0 / 3.0


@dataclass(frozen=True)
class Traditional:
    pass


@dataclass(frozen=True)
class SB:
    beta: float
    history_capacity: int = 1024


@dataclass(frozen=True)
class StaleSB:
    beta: float
    period: int
    history_capacity: int = 1024


@dataclass(frozen=True)
class Kath18:
    pool_size: int
    select_k: int


@dataclass(frozen=True)
class TopK:
    fraction: float


@dataclass(frozen=True)
class RandomSubset:
    fraction: float


Strategy = Traditional | SB | StaleSB | Kath18 | TopK | RandomSubset


def _beta_of(spec: StrategySpec) -> float:
    if spec.beta is not None:
        return spec.beta
    return beta_from_selectivity(
        spec.selectivity if spec.selectivity is not None else DEFAULT_SELECTIVITY
    )


def strategy_from_spec(spec: StrategySpec, bsize: int) -> Strategy:
    """Resolve a validated config section into a runtime strategy."""
    if spec.name == "traditional":
        return Traditional()
    if spec.name == "sb":
        return SB(_beta_of(spec), spec.history_capacity)
    if spec.name == "stale_sb":
        return StaleSB(_beta_of(spec), spec.staleness_n, spec.history_capacity)
    if spec.name == "kath18":
        return Kath18(spec.pool_size or 3 * bsize, spec.select_k or bsize)
    fraction = spec.fraction if spec.fraction is not None else DEFAULT_SELECTIVITY
    if spec.name == "topk":
        return TopK(fraction)
    return RandomSubset(fraction)


@dataclass
class PassSink:
    """Cumulative pass counters, per-phase timers, and optional probe."""

    sel_fwd: int = 0
    train_fwd: int = 0
    bwd: int = 0
    t_sel: float = 0.0
    t_train_fwd: float = 0.0
    t_bwd: float = 0.0
    probe: ProbTrace | None = None
    tracked_positions: dict[int, int] | None = None  # position -> example id
    shadow: LossHistory | None = None  # shadow sampler for the always-train baseline
    shadow_beta: float = 0.0


@dataclass
class EpochState:
    """Selection state that persists across epochs."""

    pending: list[tuple[int, float]] = field(default_factory=list)  # (position, loss)
    history: LossHistory | None = None
    stored_probs: np.ndarray | None = None  # stale-period reuse, indexed by position
    stored_losses: np.ndarray | None = None


@dataclass
class EpochEnv:
    net: Network
    data: Dataset
    order: np.ndarray  # shuffled positions for this epoch
    bsize: int
    lr: float
    sel_rng: np.random.Generator
    sink: PassSink
    epoch: int


def _minibatches(order: np.ndarray, size: int):
    for start in range(0, len(order), size):
        yield order[start : start + size]


def _update_on(env: EpochEnv, positions: np.ndarray) -> None:
    """One full update: fresh training forward, backward, SGD step."""
    sink = env.sink
    x = env.data.features[positions]
    y = env.data.labels[positions]
    t0 = perf_counter()
    _, trace = forward(env.net, x)
    sink.t_train_fwd += perf_counter() - t0
    sink.train_fwd += len(positions)
    t0 = perf_counter()
    grads = backward(env.net, trace, y)
    sgd_step(env.net, grads, env.lr)
    sink.t_bwd += perf_counter() - t0
    sink.bwd += len(positions)


def _fire_pending(env: EpochEnv, state: EpochState) -> None:
    positions = np.fromiter((pos for pos, _ in state.pending), dtype=np.int64)
    state.pending.clear()
    _update_on(env, positions)


def _probe_record(env: EpochEnv, position: int, prob: float) -> None:
    tracked = env.sink.tracked_positions
    if tracked is not None and position in tracked:
        env.sink.probe.record(tracked[position], env.epoch, prob)


def run_traditional_epoch(env: EpochEnv) -> None:
    """Train on every minibatch, the final short one included."""
    sink = env.sink
    for batch in _minibatches(env.order, env.bsize):
        x = env.data.features[batch]
        y = env.data.labels[batch]
        t0 = perf_counter()
        logits, trace = forward(env.net, x)
        sink.t_train_fwd += perf_counter() - t0
        sink.train_fwd += len(batch)
        if sink.shadow is not None:
            # Instrumentation only: what a percentile sampler would have said.
            for pos, loss in zip(batch.tolist(), cross_entropy_losses(logits, y).tolist()):
                perc = push_and_percentile(sink.shadow, loss)
                _probe_record(env, pos, selection_probability(perc, sink.shadow_beta))
        t0 = perf_counter()
        grads = backward(env.net, trace, y)
        sgd_step(env.net, grads, env.lr)
        sink.t_bwd += perf_counter() - t0
        sink.bwd += len(batch)


def run_sb_epoch(env: EpochEnv, beta: float, state: EpochState, store: bool = False) -> None:
    """One selection forward per minibatch, per-example percentile keep rule.

    Selected examples join the pending batch; the update fires the moment it
    holds bsize examples, even mid-minibatch. With store=True the computed
    probabilities and losses are kept for stale reuse.
    """
    sink = env.sink
    for batch in _minibatches(env.order, env.bsize):
        x = env.data.features[batch]
        y = env.data.labels[batch]
        t0 = perf_counter()
        logits, _ = forward(env.net, x)
        losses = cross_entropy_losses(logits, y)
        sink.t_sel += perf_counter() - t0
        sink.sel_fwd += len(batch)
        for pos, loss in zip(batch.tolist(), losses.tolist()):
            perc = push_and_percentile(state.history, loss)
            prob = selection_probability(perc, beta)
            if store:
                state.stored_probs[pos] = prob
                state.stored_losses[pos] = loss
            _probe_record(env, pos, prob)
            if decide(prob, env.sel_rng):
                state.pending.append((pos, loss))
                if len(state.pending) == env.bsize:
                    _fire_pending(env, state)


def run_stale_sb_epoch(env: EpochEnv, strat: StaleSB, state: EpochState) -> None:
    """Selection forwards only every `period` epochs; in between, re-draw from
    the stored probabilities. Stale losses never enter the history."""
    if env.epoch % strat.period == 0:
        run_sb_epoch(env, strat.beta, state, store=True)
        return
    for pos in env.order.tolist():
        if decide(float(state.stored_probs[pos]), env.sel_rng):
            state.pending.append((pos, float(state.stored_losses[pos])))
            if len(state.pending) == env.bsize:
                _fire_pending(env, state)


def kath18_sample(losses: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k draws with replacement, proportional to loss; uniform when all zero."""
    losses = np.asarray(losses, dtype=np.float64)
    total = losses.sum()
    if total > 0:
        return rng.choice(len(losses), size=k, replace=True, p=losses / total)
    return rng.choice(len(losses), size=k, replace=True)


def run_kath18_epoch(env: EpochEnv, strat: Kath18) -> None:
    """Pool-based importance sampling: one selection forward per pool, then
    train exactly select_k loss-proportional draws (a short final pool scales
    select_k down proportionally, floor, minimum 1)."""
    sink = env.sink
    for pool in _minibatches(env.order, strat.pool_size):
        x = env.data.features[pool]
        y = env.data.labels[pool]
        t0 = perf_counter()
        logits, _ = forward(env.net, x)
        losses = cross_entropy_losses(logits, y)
        sink.t_sel += perf_counter() - t0
        sink.sel_fwd += len(pool)
        if len(pool) == strat.pool_size:
            k = strat.select_k
        else:
            k = max(1, strat.select_k * len(pool) // strat.pool_size)
        chosen = kath18_sample(losses, k, env.sel_rng)
        _update_on(env, pool[chosen])


def run_topk_epoch(env: EpochEnv, fraction: float) -> None:
    """Keep the highest-loss ceil(fraction * batch) examples of each minibatch."""
    sink = env.sink
    for batch in _minibatches(env.order, env.bsize):
        x = env.data.features[batch]
        y = env.data.labels[batch]
        t0 = perf_counter()
        logits, _ = forward(env.net, x)
        losses = cross_entropy_losses(logits, y)
        sink.t_sel += perf_counter() - t0
        sink.sel_fwd += len(batch)
        k = math.ceil(fraction * len(batch))
        chosen = np.argsort(-losses, kind="stable")[:k]
        _update_on(env, batch[chosen])


def run_random_epoch(env: EpochEnv, fraction: float) -> None:
    """Size-matched control for topk: a uniform subset of each minibatch."""
    sink = env.sink
    for batch in _minibatches(env.order, env.bsize):
        t0 = perf_counter()
        forward(env.net, env.data.features[batch])
        sink.t_sel += perf_counter() - t0
        sink.sel_fwd += len(batch)
        k = math.ceil(fraction * len(batch))
        chosen = env.sel_rng.choice(len(batch), size=k, replace=False)
        _update_on(env, batch[chosen])


def load_datasets(cfg: TrainConfig) -> tuple[Dataset, Dataset]:
    """Materialize (train, test) from the config, applying label corruption
    to the train split only."""
    ds = cfg.dataset
    if ds.synthetic is not None:
        s = ds.synthetic
        train, test = synth_blobs(s.n, s.classes, s.dim, s.spread, s.seed)
    elif ds.idx is not None:
        train = load_idx(ds.idx.train_images, ds.idx.train_labels)
        test = load_idx(ds.idx.test_images, ds.idx.test_labels)
    else:
        train = read_csv(ds.csv.train)
        test = read_csv(ds.csv.test)
    if train.features.shape[1] != test.features.shape[1]:
        raise ConfigError(
            f"train has {train.features.shape[1]} features but test has {test.features.shape[1]}"
        )
    classes = max(train.class_count, test.class_count)
    train.class_count = classes
    test.class_count = classes
    if cfg.corruption is not None and cfg.corruption.fraction > 0:
        seed = cfg.corruption.seed
        flip_rng = (
            streams.stream(cfg.seed, "corruption")
            if seed is None
            else np.random.default_rng(seed)
        )
        train, _ = uniform_flip(train, cfg.corruption.fraction, flip_rng)
    return train, test


@dataclass
class TrainResult:
    log: RunLog
    trace: ProbTrace | None
    net: Network


def run_training(cfg: TrainConfig, out_path: str | None = None, on_epoch=None) -> TrainResult:
    """Train per the config and return the run log (written to out_path when
    given, one record per completed epoch, row 0 pre-training).

    Everything except the wall-clock columns is a pure function of the
    config. on_epoch(net, completed_epochs) is called after each record.
    """
    t_start = perf_counter()
    train, test = load_datasets(cfg)
    layer_sizes = [train.features.shape[1], *cfg.model.hidden, train.class_count]
    net = init_network(layer_sizes, streams.stream(cfg.seed, "init"))
    strategy = strategy_from_spec(cfg.strategy, cfg.bsize)
    schedule = LrSchedule(cfg.lr.initial, [tuple(s) for s in cfg.lr.steps])
    sel_rng = streams.stream(cfg.seed, "selection")
    sink = PassSink()
    state = EpochState()
    if isinstance(strategy, (SB, StaleSB)):
        state.history = LossHistory(strategy.history_capacity)
    if isinstance(strategy, StaleSB):
        state.stored_probs = np.zeros(len(train))
        state.stored_losses = np.zeros(len(train))
    if cfg.tracked_ids:
        if not isinstance(strategy, (Traditional, SB, StaleSB)):
            raise ConfigError(
                f"tracked_ids: probability tracing needs traditional, sb, or stale_sb, "
                f"not {cfg.strategy.name}"
            )
        id_to_pos = {int(v): i for i, v in enumerate(train.ids)}
        missing = [i for i in cfg.tracked_ids if i not in id_to_pos]
        if missing:
            raise ConfigError(f"tracked_ids: {missing} not in the training set")
        sink.probe = ProbTrace(cfg.tracked_ids)
        sink.tracked_positions = {id_to_pos[i]: int(i) for i in cfg.tracked_ids}
        if isinstance(strategy, Traditional):
            sink.shadow = LossHistory(cfg.strategy.history_capacity)
            sink.shadow_beta = _beta_of(cfg.strategy)
    log = RunLog(cfg.fingerprint(), cfg.strategy.name, cfg.config_id(), [])
    writer = RunLogWriter(out_path, log) if out_path else None

    def record(completed: int) -> None:
        err = evaluate(net, test)
        t_other = (perf_counter() - t_start) - (sink.t_sel + sink.t_train_fwd + sink.t_bwd)
        rec = EpochRecord(
            completed, sink.sel_fwd, sink.train_fwd, sink.bwd, round(err, 6),
            round(sink.t_sel, 6), round(sink.t_train_fwd, 6), round(sink.t_bwd, 6),
            round(t_other, 6),
        )
        log.records.append(rec)
        if writer:
            writer.append(rec)
        if on_epoch:
            on_epoch(net, completed)

    record(0)
    for epoch in range(cfg.epochs):
        env = EpochEnv(
            net, train, streams.epoch_shuffle(cfg.seed, epoch, len(train)),
            cfg.bsize, lr_at(schedule, epoch), sel_rng, sink, epoch,
        )
        if isinstance(strategy, Traditional):
            run_traditional_epoch(env)
        elif isinstance(strategy, SB):
            run_sb_epoch(env, strategy.beta, state)
        elif isinstance(strategy, StaleSB):
            run_stale_sb_epoch(env, strategy, state)
        elif isinstance(strategy, Kath18):
            run_kath18_epoch(env, strategy)
        elif isinstance(strategy, TopK):
            run_topk_epoch(env, strategy.fraction)
        else:
            run_random_epoch(env, strategy.fraction)
        record(epoch + 1)
    # pending examples left at the end of training are dropped
    if writer:
        writer.close()
    return TrainResult(log, sink.probe, net)


def trace_probabilities(cfg: TrainConfig, tracked_ids: list[int]) -> ProbTrace:
    """Run training with the given ids tracked and return their series."""
    traced = cfg.model_copy(update={"tracked_ids": [int(i) for i in tracked_ids]})
    return run_training(traced).trace
