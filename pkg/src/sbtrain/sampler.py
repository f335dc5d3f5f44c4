"""Loss-percentile selection: bounded loss history and keep-probability rule.

An example's keep probability is its percentile among the most recent
`capacity` losses, raised to the power beta. Beta controls selectivity:
with percentiles roughly uniform, the expected keep rate of percentile**beta
is 1 / (beta + 1), so beta = 1/selectivity - 1.
"""

import numpy as np

from .errors import ConfigError, NumericsError


class LossHistory:
    """Bounded FIFO of recent loss values with percentile queries.

    Backed by a ring buffer; a percentile query is one vectorized count
    over the filled region, so order of storage never matters.
    """

    def __init__(self, capacity: int = 1024):
        if capacity < 1:
            raise ConfigError(f"history capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._buf = np.empty(capacity, dtype=np.float64)
        self._head = 0  # next write position
        self._count = 0

    def __len__(self) -> int:
        return self._count

    def push(self, loss: float) -> None:
        if not np.isfinite(loss):
            raise NumericsError(f"non-finite loss {loss!r} pushed into history")
        self._buf[self._head] = loss
        self._head = (self._head + 1) % self.capacity
        self._count = min(self._count + 1, self.capacity)

    def percentile_of(self, loss: float) -> float:
        """Fraction of stored losses <= loss (ties count, so result is in (0, 1])."""
        if self._count == 0:
            raise ConfigError("percentile query on an empty history")
        return np.count_nonzero(self._buf[: self._count] <= loss) / self._count

    @property
    def values(self) -> np.ndarray:
        """Stored losses, oldest first."""
        if self._count < self.capacity:
            return self._buf[: self._count].copy()
        return np.concatenate([self._buf[self._head :], self._buf[: self._head]])


def push_and_percentile(hist: LossHistory, loss: float) -> float:
    """Insert the loss, then return its percentile including itself.

    A fresh maximum scores 1.0; the very first push scores 1.0; the result
    is never below 1/len(hist).
    """
    hist.push(loss)
    return hist.percentile_of(loss)


def beta_from_selectivity(selectivity: float) -> float:
    """Invert the expected keep rate 1 / (beta + 1)."""
    if not (0.0 < selectivity <= 1.0):
        raise ConfigError(f"selectivity must be in (0, 1], got {selectivity}")
    return 1.0 / selectivity - 1.0


def selection_probability(percentile: float, beta: float) -> float:
    """percentile**beta, with beta == 0 mapping everything to exactly 1.0."""
    if beta < 0:
        raise ConfigError(f"beta must be >= 0, got {beta}")
    if beta == 0.0:
        return 1.0
    return float(percentile) ** beta


def decide(prob: float, rng: np.random.Generator) -> bool:
    """Bernoulli draw; prob >= 1 short-circuits to True without consuming the stream."""
    if prob >= 1.0:
        return True
    return rng.random() < prob
