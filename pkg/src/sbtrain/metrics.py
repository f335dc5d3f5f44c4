"""Run logs, evaluation, and the analysis layer built on top of them.

A run log is one header line (fingerprint + strategy + config id), one
column line, then one record per completed-epoch count: row 0 is the
pre-training state. Counts are cumulative example passes; times are
cumulative seconds per phase from a monotonic clock. Every field except
the wall-clock columns is reproducible from the config.
"""

import math
from dataclasses import dataclass

import numpy as np

from .engine import Network, forward
from .errors import ConfigError, DataFormatError

RUNLOG_COLUMNS = (
    "epoch",
    "sel_fwd",
    "train_fwd",
    "bwd",
    "test_err",
    "t_sel",
    "t_train_fwd",
    "t_bwd",
    "t_other",
)
MEASURES = ("backprops", "wallclock")


@dataclass
class EpochRecord:
    epoch: int  # completed epochs; 0 is the pre-training eval
    sel_fwd: int
    train_fwd: int
    bwd: int
    test_err: float
    t_sel: float
    t_train_fwd: float
    t_bwd: float
    t_other: float


@dataclass
class RunLog:
    fingerprint: str
    strategy: str
    config_id: str
    records: list[EpochRecord]


def evaluate(net: Network, ds) -> float:
    """Test error: fraction of argmax misclassifications, ties to the lowest class."""
    logits, _ = forward(net, ds.features)
    predictions = np.argmax(logits, axis=1)
    return float(np.mean(predictions != ds.labels))


def wallclock_total(rec: EpochRecord) -> float:
    return rec.t_sel + rec.t_train_fwd + rec.t_bwd + rec.t_other


def _measure_value(rec: EpochRecord, measure: str) -> float:
    if measure == "backprops":
        return float(rec.bwd)
    if measure == "wallclock":
        return wallclock_total(rec)
    raise ConfigError(f"measure must be one of {MEASURES}, got {measure!r}")


def _header_line(log: RunLog) -> str:
    return (
        f"# runlog v1 fingerprint={log.fingerprint} "
        f"strategy={log.strategy} config_id={log.config_id}"
    )


def _record_line(rec: EpochRecord) -> str:
    return (
        f"{rec.epoch},{rec.sel_fwd},{rec.train_fwd},{rec.bwd},"
        f"{rec.test_err:.6f},{rec.t_sel:.6f},{rec.t_train_fwd:.6f},"
        f"{rec.t_bwd:.6f},{rec.t_other:.6f}"
    )


def serialize_runlog(log: RunLog) -> str:
    lines = [_header_line(log), ",".join(RUNLOG_COLUMNS)]
    lines += [_record_line(rec) for rec in log.records]
    return "\n".join(lines) + "\n"


def parse_runlog(text: str) -> RunLog:
    lines = [line for line in text.splitlines() if line.strip()]
    if len(lines) < 2 or not lines[0].startswith("# runlog v1 "):
        raise DataFormatError("not a run log: missing '# runlog v1' header line")
    fields = dict(part.split("=", 1) for part in lines[0].split()[3:] if "=" in part)
    for key in ("fingerprint", "strategy", "config_id"):
        if key not in fields:
            raise DataFormatError(f"run log header is missing {key}")
    if tuple(lines[1].split(",")) != RUNLOG_COLUMNS:
        raise DataFormatError(f"run log column line mismatch: {lines[1]!r}")
    records = []
    for lineno, line in enumerate(lines[2:], start=3):
        parts = line.split(",")
        if len(parts) != len(RUNLOG_COLUMNS):
            raise DataFormatError(f"run log line {lineno} has {len(parts)} fields")
        try:
            records.append(
                EpochRecord(
                    int(parts[0]), int(parts[1]), int(parts[2]), int(parts[3]),
                    float(parts[4]), float(parts[5]), float(parts[6]),
                    float(parts[7]), float(parts[8]),
                )
            )
        except ValueError as exc:
            raise DataFormatError(f"run log line {lineno}: {exc}") from exc
    if not records:
        raise DataFormatError("run log has no records")
    return RunLog(fields["fingerprint"], fields["strategy"], fields["config_id"], records)


def read_runlog(path: str) -> RunLog:
    with open(path) as fh:
        return parse_runlog(fh.read())


class RunLogWriter:
    """Appends records to a log file as epochs complete."""

    def __init__(self, path: str, log: RunLog):
        self._fh = open(path, "w")
        self._fh.write(_header_line(log) + "\n")
        self._fh.write(",".join(RUNLOG_COLUMNS) + "\n")
        self._fh.flush()

    def append(self, rec: EpochRecord) -> None:
        self._fh.write(_record_line(rec) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def final_error(log: RunLog) -> float:
    return log.records[-1].test_err


def time_to_target(log: RunLog, target: float, measure: str) -> float | None:
    """Measure value at the first record whose error is <= target; None if never."""
    for rec in log.records:
        if rec.test_err <= target:
            return _measure_value(rec, measure)
    return None


def speedup(baseline: RunLog, candidate: RunLog, multiplier: float, measure: str) -> float | None:
    """How much faster the candidate reached baseline-final-error * multiplier.

    None when either run never reaches the target. Degenerate zero costs
    (both runs already at target before training) count as a tie.
    """
    target = final_error(baseline) * multiplier
    base = time_to_target(baseline, target, measure)
    cand = time_to_target(candidate, target, measure)
    if base is None or cand is None:
        return None
    if cand == 0.0:
        return 1.0 if base == 0.0 else math.inf
    return base / cand


def compare_table(baseline: RunLog, candidates: list[RunLog], multipliers: list[float]) -> list[dict]:
    """One row per candidate x multiplier, with speedups in both measures."""
    rows = []
    for cand in candidates:
        for mult in multipliers:
            rows.append(
                {
                    "config_id": cand.config_id,
                    "strategy": cand.strategy,
                    "final_error": final_error(cand),
                    "multiplier": mult,
                    "target_error": final_error(baseline) * mult,
                    "speedup_backprops": speedup(baseline, cand, mult, "backprops"),
                    "speedup_wallclock": speedup(baseline, cand, mult, "wallclock"),
                }
            )
    return rows


@dataclass(frozen=True)
class ParetoPoint:
    time: float
    error: float
    config_id: str


def run_points(log: RunLog, measure: str) -> list[ParetoPoint]:
    """(time-to-first-crossing, error) for every error level the run improved to."""
    points = []
    best = math.inf
    for rec in log.records:
        if rec.test_err < best:
            best = rec.test_err
            points.append(ParetoPoint(_measure_value(rec, measure), rec.test_err, log.config_id))
    return points


def pareto_frontier(points: list[ParetoPoint]) -> list[ParetoPoint]:
    """Points not dominated by any other (time <= and error <=, one strict).

    Sorted by time ascending; exact duplicates on both axes collapse to the
    lexicographically smallest config id.
    """
    frontier = []
    best_error = math.inf
    for p in sorted(points, key=lambda p: (p.time, p.error, p.config_id)):
        if p.error < best_error:
            frontier.append(p)
            best_error = p.error
    return frontier


def phase_breakdown(log: RunLog) -> dict[str, float]:
    """Final cumulative seconds per phase; 'other' absorbs eval, loading, logging."""
    rec = log.records[-1]
    return {
        "selection_forward": rec.t_sel,
        "training_forward": rec.t_train_fwd,
        "backward": rec.t_bwd,
        "other": rec.t_other,
        "total": wallclock_total(rec),
    }


class ProbTrace:
    """Selection-probability series for tracked example ids.

    One entry lands per selection pass over the example. Runs without their
    own selection pass (the always-train baseline) record the probability a
    percentile sampler would have assigned, fed from a shadow history.
    """

    def __init__(self, tracked_ids):
        self.series: dict[int, list[tuple[int, float]]] = {int(i): [] for i in tracked_ids}

    @property
    def tracked_ids(self) -> list[int]:
        return sorted(self.series)

    def record(self, example_id: int, epoch: int, prob: float) -> None:
        self.series[int(example_id)].append((epoch, prob))

    def variance(self, example_id: int) -> float:
        probs = [p for _, p in self.series[int(example_id)]]
        if len(probs) < 2:
            return 0.0
        return float(np.var(probs))

    def mean_variance(self) -> float:
        if not self.series:
            raise ConfigError("no tracked example ids")
        return float(np.mean([self.variance(i) for i in self.series]))


def write_probtrace_csv(trace: ProbTrace, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("example_id,epoch,prob\n")
        for example_id in trace.tracked_ids:
            for epoch, prob in trace.series[example_id]:
                fh.write(f"{example_id},{epoch},{prob:.6f}\n")


def read_probtrace_csv(path: str) -> ProbTrace:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "example_id,epoch,prob":
        raise DataFormatError(f"{path}: expected header example_id,epoch,prob")
    rows = [line.split(",") for line in lines[1:] if line.strip()]
    trace = ProbTrace({int(r[0]) for r in rows})
    for r in rows:
        trace.record(int(r[0]), int(r[1]), float(r[2]))
    return trace
