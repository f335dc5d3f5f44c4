"""Training config schema: YAML in, validated pydantic models out.

Unknown keys are rejected everywhere, and strategy parameters that do not
belong to the named strategy are errors rather than silently ignored.
"""

import hashlib
import json
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError

StrategyName = Literal["traditional", "sb", "stale_sb", "kath18", "topk", "random"]


class _Base(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SyntheticSpec(_Base):
    n: int = Field(ge=2)
    classes: int = Field(default=2, ge=2)
    dim: int = Field(default=2, ge=1)
    spread: float = Field(default=1.0, ge=0.0)
    seed: int = 0  # data seed, deliberately independent of the master seed


class IdxSpec(_Base):
    train_images: str
    train_labels: str
    test_images: str
    test_labels: str


class CsvSpec(_Base):
    train: str
    test: str


class DatasetSpec(_Base):
    synthetic: SyntheticSpec | None = None
    idx: IdxSpec | None = None
    csv: CsvSpec | None = None

    @model_validator(mode="after")
    def _exactly_one(self):
        set_count = sum(v is not None for v in (self.synthetic, self.idx, self.csv))
        if set_count != 1:
            raise ValueError("dataset: set exactly one of synthetic, idx, csv")
        return self


class ModelSpec(_Base):
    hidden: list[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def _positive(self):
        if any(h < 1 for h in self.hidden):
            raise ValueError(f"model.hidden sizes must be >= 1, got {self.hidden}")
        return self


class LrSpec(_Base):
    initial: float = Field(gt=0.0)
    steps: list[tuple[int, float]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _monotonic(self):
        epochs = [e for e, _ in self.steps]
        if any(e < 0 for e in epochs) or epochs != sorted(set(epochs)):
            raise ValueError(f"lr.steps epochs must be strictly increasing and >= 0, got {epochs}")
        if any(f <= 0 for _, f in self.steps):
            raise ValueError("lr.steps factors must be positive")
        return self


# Which optional fields each strategy accepts. The always-train baseline
# accepts the sampler fields because probability tracing runs a shadow
# sampler over its losses.
_ALLOWED_FIELDS = {
    "traditional": {"selectivity", "beta", "history_capacity"},
    "sb": {"selectivity", "beta", "history_capacity"},
    "stale_sb": {"selectivity", "beta", "history_capacity", "staleness_n"},
    "kath18": {"pool_size", "select_k"},
    "topk": {"fraction"},
    "random": {"fraction"},
}


class StrategySpec(_Base):
    name: StrategyName
    selectivity: float | None = Field(default=None, gt=0.0, le=1.0)
    beta: float | None = Field(default=None, ge=0.0)
    history_capacity: int = Field(default=1024, ge=1)
    staleness_n: int | None = Field(default=None, ge=1)
    pool_size: int | None = Field(default=None, ge=1)
    select_k: int | None = Field(default=None, ge=1)
    fraction: float | None = Field(default=None, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _fields_match_name(self):
        allowed = _ALLOWED_FIELDS[self.name]
        for field in ("selectivity", "beta", "staleness_n", "pool_size", "select_k", "fraction"):
            if getattr(self, field) is not None and field not in allowed:
                raise ValueError(f"strategy.{field} does not apply to strategy {self.name!r}")
        if self.selectivity is not None and self.beta is not None:
            raise ValueError("strategy: set selectivity or beta, not both")
        if self.name == "stale_sb" and self.staleness_n is None:
            raise ValueError("strategy.staleness_n is required for stale_sb")
        return self


class CorruptionSpec(_Base):
    fraction: float = Field(ge=0.0, le=1.0)
    seed: int | None = None  # None -> the master seed's corruption stream


class TrainConfig(_Base):
    dataset: DatasetSpec
    model: ModelSpec = Field(default_factory=ModelSpec)
    strategy: StrategySpec
    bsize: int = Field(default=128, ge=1)
    epochs: int = Field(ge=0)
    lr: LrSpec
    seed: int = 0
    run_id: str | None = Field(default=None, pattern=r"^[A-Za-z0-9._-]+$")
    out: str | None = None
    corruption: CorruptionSpec | None = None
    tracked_ids: list[int] | None = None

    def fingerprint(self) -> str:
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def config_id(self) -> str:
        if self.run_id:
            return self.run_id
        strat = self.strategy
        parts = [strat.name]
        if strat.beta is not None:
            parts.append(f"b{strat.beta:g}")
        elif strat.selectivity is not None:
            parts.append(f"s{strat.selectivity:g}")
        if strat.staleness_n is not None:
            parts.append(f"n{strat.staleness_n}")
        if strat.pool_size is not None:
            parts.append(f"p{strat.pool_size}")
        if strat.select_k is not None:
            parts.append(f"k{strat.select_k}")
        if strat.fraction is not None:
            parts.append(f"f{strat.fraction:g}")
        parts.append(f"seed{self.seed}")
        return "-".join(parts)


def _format_validation_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "config"
        lines.append(f"{loc}: {err['msg']}")
    return "; ".join(lines)


def load_config(path: str) -> TrainConfig:
    """Parse and validate a YAML (or JSON) config file."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping, got {type(raw).__name__}")
    return validate_config(raw, source=path)


def validate_config(raw: dict, source: str = "config") -> TrainConfig:
    try:
        return TrainConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {_format_validation_error(exc)}") from exc
