"""Request and response models for the service endpoints."""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import TrainConfig


class _Base(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TrainRequest(_Base):
    config: TrainConfig
    seed: int | None = None  # overrides config.seed
    out: str | None = None  # overrides config.out


class TrainResponse(_Base):
    out: str
    probs_out: str | None
    fingerprint: str
    config_id: str
    strategy: str
    epochs: int
    final_error: float
    sel_fwd: int
    train_fwd: int
    bwd: int
    wallclock: float


class CompareRequest(_Base):
    baseline: str
    candidates: list[str] = Field(min_length=1)
    multipliers: list[float] = Field(default=[1.1, 1.2, 1.4])

    @model_validator(mode="after")
    def _positive(self):
        if any(m <= 0 for m in self.multipliers):
            raise ValueError("multipliers must be positive")
        return self


class CompareRow(_Base):
    config_id: str
    strategy: str
    final_error: float
    multiplier: float
    target_error: float
    speedup_backprops: float | None  # None: target unreached (or unbounded)
    speedup_wallclock: float | None


class CompareResponse(_Base):
    baseline_id: str
    baseline_final_error: float
    rows: list[CompareRow]


class ParetoRequest(_Base):
    logs: list[str] = Field(min_length=1)
    measure: Literal["backprops", "wallclock"] = "backprops"


class ParetoPointOut(_Base):
    time: float
    error: float
    config_id: str
    strategy: str
    on_frontier: bool


class ParetoResponse(_Base):
    measure: str
    points: list[ParetoPointOut]
    shares: dict[str, float]  # strategy -> percent of frontier points


class CorruptRequest(_Base):
    input: str | None = None  # internal-format CSV
    config: TrainConfig | None = None  # alternative: corrupt this config's train split
    fraction: float = Field(ge=0.0, le=1.0)
    seed: int = 0
    output: str

    @model_validator(mode="after")
    def _exactly_one_source(self):
        if (self.input is None) == (self.config is None):
            raise ValueError("corrupt: set exactly one of input, config")
        return self


class CorruptResponse(_Base):
    output: str
    n: int
    flipped_count: int
    flipped_ids: list[int]


class GradsimRequest(_Base):
    config: TrainConfig
    fractions: list[float] = Field(default=[0.1], min_length=1)
    modes: list[Literal["top-loss", "random", "low-loss"]] = Field(
        default=["top-loss", "random"], min_length=1
    )
    pretrain_epochs: int = Field(default=1, ge=0)
    max_batches: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _fractions_valid(self):
        if any(not (0.0 < f <= 1.0) for f in self.fractions):
            raise ValueError("fractions must be in (0, 1]")
        return self


class GradsimRow(_Base):
    batch: int
    fraction: float
    mode: str
    cosine: float
    sign_agreement: float


class GradsimResponse(_Base):
    rows: list[GradsimRow]
