"""Desk-scale training for small dense classifiers with loss-based example
selection, plus the measurement tools to judge whether selection paid off."""

__version__ = "0.1.0"

from .config import TrainConfig, load_config
from .data import Dataset, load_idx, read_csv, synth_blobs, uniform_flip, write_csv
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
from .metrics import (
    ParetoPoint,
    ProbTrace,
    RunLog,
    evaluate,
    final_error,
    pareto_frontier,
    phase_breakdown,
    read_runlog,
    speedup,
    time_to_target,
)
from .sampler import (
    LossHistory,
    beta_from_selectivity,
    decide,
    push_and_percentile,
    selection_probability,
)
from .strategies import TrainResult, run_training, trace_probabilities

__all__ = [
    "TrainConfig",
    "load_config",
    "Dataset",
    "load_idx",
    "read_csv",
    "synth_blobs",
    "uniform_flip",
    "write_csv",
    "LrSchedule",
    "Network",
    "backward",
    "cross_entropy_losses",
    "forward",
    "init_network",
    "lr_at",
    "sgd_step",
    "ParetoPoint",
    "ProbTrace",
    "RunLog",
    "evaluate",
    "final_error",
    "pareto_frontier",
    "phase_breakdown",
    "read_runlog",
    "speedup",
    "time_to_target",
    "LossHistory",
    "beta_from_selectivity",
    "decide",
    "push_and_percentile",
    "selection_probability",
    "TrainResult",
    "run_training",
    "trace_probabilities",
]
