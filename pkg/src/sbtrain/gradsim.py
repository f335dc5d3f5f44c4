"""Gradient similarity: how well a loss-ranked subset approximates a full batch.

The quantities of interest are the cosine similarity and the elementwise
sign agreement between the mean gradient of a subset and the mean gradient
of the whole batch the subset came from.
"""

import math

import numpy as np

from .engine import Network, backward, cross_entropy_losses, forward
from .errors import ConfigError, NumericsError

MODES = ("top-loss", "random", "low-loss")


def flatten(grads) -> np.ndarray:
    """Layer-major concatenation: weights then biases per layer."""
    parts = []
    for w, b in zip(grads.weights, grads.biases):
        parts.append(np.ravel(w))
        parts.append(np.ravel(b))
    return np.concatenate(parts)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ConfigError(f"vectors differ in shape: {a.shape} vs {b.shape}")
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0.0 or norm_b == 0.0:
        raise NumericsError("cosine similarity with a zero vector is undefined")
    return float(a @ b / (norm_a * norm_b))


def sign_agreement(a: np.ndarray, b: np.ndarray) -> float:
    """Fraction of coordinates with equal sign; zero only agrees with zero."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ConfigError(f"vectors differ in shape: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ConfigError("sign agreement of empty vectors is undefined")
    return float(np.mean(np.sign(a) == np.sign(b)))


def subsample_comparison(
    net: Network,
    features: np.ndarray,
    labels: np.ndarray,
    fraction: float,
    mode: str,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Compare the subset mean gradient against the full-batch mean gradient.

    The subset holds ceil(fraction * batch) examples picked by mode:
    "top-loss" and "low-loss" rank by per-example loss (ties broken by
    position, never touching the rng); "random" draws uniformly without
    replacement. Returns (cosine, sign agreement).
    """
    if not (0.0 < fraction <= 1.0):
        raise ConfigError(f"fraction must be in (0, 1], got {fraction}")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    batch = len(labels)
    if batch == 0:
        raise ConfigError("empty batch")
    logits, trace = forward(net, features)
    full = flatten(backward(net, trace, labels))
    k = math.ceil(fraction * batch)
    if mode == "random":
        chosen = rng.choice(batch, size=k, replace=False)
    else:
        losses = cross_entropy_losses(logits, labels)
        order = np.argsort(-losses if mode == "top-loss" else losses, kind="stable")
        chosen = order[:k]
    _, sub_trace = forward(net, features[chosen])
    subset = flatten(backward(net, sub_trace, labels[chosen]))
    return cosine_similarity(subset, full), sign_agreement(subset, full)


def subsample_epoch_rows(
    cfg,
    fractions: list[float],
    modes: list[str],
    pretrain_epochs: int = 1,
    max_batches: int | None = None,
) -> list[dict]:
    """Pretrain per the config, then score one epoch of full batches.

    The batches come from the shuffle the run would have used next, so the
    numbers describe the state training actually reaches. Only full batches
    are scored; the row count is batches * len(fractions) * len(modes).
    """
    from . import rng as streams
    from .strategies import load_datasets, run_training

    pre = cfg.model_copy(update={"epochs": pretrain_epochs, "tracked_ids": None, "out": None})
    net = run_training(pre).net
    train, _ = load_datasets(cfg)
    order = streams.epoch_shuffle(cfg.seed, pretrain_epochs, len(train))
    rng = streams.stream(cfg.seed, "selection", pretrain_epochs)
    rows = []
    total = len(order) // cfg.bsize
    if max_batches is not None:
        total = min(total, max_batches)
    for b in range(total):
        batch = order[b * cfg.bsize : (b + 1) * cfg.bsize]
        x = train.features[batch]
        y = train.labels[batch]
        for fraction in fractions:
            for mode in modes:
                cos, sign = subsample_comparison(net, x, y, fraction, mode, rng)
                rows.append(
                    {
                        "batch": b,
                        "fraction": fraction,
                        "mode": mode,
                        "cosine": cos,
                        "sign_agreement": sign,
                    }
                )
    return rows
