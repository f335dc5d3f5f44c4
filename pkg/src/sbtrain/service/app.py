"""HTTP facade over the training and analysis layer.

Endpoints are synchronous; a training run blocks its request. File paths in
requests are resolved where the service runs, which is the local machine
under the CLI's default in-process transport.
"""

import math

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..data import read_csv, uniform_flip, write_csv
from ..errors import ConfigError, DataFormatError, NumericsError, ShapeError
from ..gradsim import subsample_epoch_rows
from ..metrics import (
    compare_table,
    final_error,
    pareto_frontier,
    read_runlog,
    run_points,
    wallclock_total,
    write_probtrace_csv,
)
from ..strategies import load_datasets, run_training
from . import schemas

app = FastAPI(title="sbtrain", version="0.1.0")


@app.exception_handler(ConfigError)
@app.exception_handler(DataFormatError)
@app.exception_handler(ShapeError)
@app.exception_handler(NumericsError)
async def _invalid_input(request: Request, exc: Exception) -> JSONResponse:
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.exception_handler(FileNotFoundError)
async def _missing_file(request: Request, exc: FileNotFoundError) -> JSONResponse:
    return JSONResponse(status_code=404, content={"detail": str(exc)})


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/train", response_model=schemas.TrainResponse)
def train(req: schemas.TrainRequest) -> schemas.TrainResponse:
    cfg = req.config
    if req.seed is not None:
        cfg = cfg.model_copy(update={"seed": req.seed})
    out = req.out or cfg.out or f"runlog-{cfg.config_id()}.csv"
    result = run_training(cfg, out_path=out)
    probs_out = None
    if result.trace is not None:
        probs_out = out + ".probs.csv"
        write_probtrace_csv(result.trace, probs_out)
    last = result.log.records[-1]
    return schemas.TrainResponse(
        out=out,
        probs_out=probs_out,
        fingerprint=result.log.fingerprint,
        config_id=result.log.config_id,
        strategy=result.log.strategy,
        epochs=cfg.epochs,
        final_error=last.test_err,
        sel_fwd=last.sel_fwd,
        train_fwd=last.train_fwd,
        bwd=last.bwd,
        wallclock=wallclock_total(last),
    )


def _json_safe(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return value


@app.post("/compare", response_model=schemas.CompareResponse)
def compare(req: schemas.CompareRequest) -> schemas.CompareResponse:
    baseline = read_runlog(req.baseline)
    candidates = [read_runlog(path) for path in req.candidates]
    rows = [
        schemas.CompareRow(
            config_id=row["config_id"],
            strategy=row["strategy"],
            final_error=row["final_error"],
            multiplier=row["multiplier"],
            target_error=row["target_error"],
            speedup_backprops=_json_safe(row["speedup_backprops"]),
            speedup_wallclock=_json_safe(row["speedup_wallclock"]),
        )
        for row in compare_table(baseline, candidates, req.multipliers)
    ]
    return schemas.CompareResponse(
        baseline_id=baseline.config_id,
        baseline_final_error=final_error(baseline),
        rows=rows,
    )


@app.post("/pareto", response_model=schemas.ParetoResponse)
def pareto(req: schemas.ParetoRequest) -> schemas.ParetoResponse:
    logs = [read_runlog(path) for path in req.logs]
    strategy_of = {}
    points = []
    for log in logs:
        strategy_of[log.config_id] = log.strategy
        points.extend(run_points(log, req.measure))
    frontier = set(pareto_frontier(points))
    out_points = [
        schemas.ParetoPointOut(
            time=p.time,
            error=p.error,
            config_id=p.config_id,
            strategy=strategy_of[p.config_id],
            on_frontier=p in frontier,
        )
        for p in points
    ]
    shares: dict[str, float] = {}
    if frontier:
        for p in frontier:
            strategy = strategy_of[p.config_id]
            shares[strategy] = shares.get(strategy, 0.0) + 1.0
        shares = {s: round(100.0 * c / len(frontier), 1) for s, c in shares.items()}
    return schemas.ParetoResponse(measure=req.measure, points=out_points, shares=shares)


@app.post("/corrupt", response_model=schemas.CorruptResponse)
def corrupt(req: schemas.CorruptRequest) -> schemas.CorruptResponse:
    if req.input is not None:
        ds = read_csv(req.input)
    else:
        ds, _ = load_datasets(req.config.model_copy(update={"corruption": None}))
    corrupted, flipped_ids = uniform_flip(ds, req.fraction, req.seed)
    write_csv(corrupted, req.output)
    return schemas.CorruptResponse(
        output=req.output,
        n=len(corrupted),
        flipped_count=len(flipped_ids),
        flipped_ids=[int(i) for i in flipped_ids],
    )


@app.post("/gradsim", response_model=schemas.GradsimResponse)
def gradsim(req: schemas.GradsimRequest) -> schemas.GradsimResponse:
    rows = subsample_epoch_rows(
        req.config,
        list(req.fractions),
        list(req.modes),
        req.pretrain_epochs,
        req.max_batches,
    )
    return schemas.GradsimResponse(rows=[schemas.GradsimRow(**row) for row in rows])
