import numpy as np
import pytest
from fastapi.testclient import TestClient

from sbtrain.data import Dataset, write_csv
from sbtrain.metrics import EpochRecord, RunLog, read_runlog, serialize_runlog
from sbtrain.service.app import app

client = TestClient(app, raise_server_exceptions=False)


def config_body(**overrides):
    body = {
        "dataset": {"synthetic": {"n": 200, "classes": 2, "dim": 2, "spread": 0.8, "seed": 5}},
        "model": {"hidden": [6]},
        "strategy": {"name": "sb", "selectivity": 0.5},
        "bsize": 32,
        "epochs": 2,
        "lr": {"initial": 0.1},
        "seed": 0,
    }
    body.update(overrides)
    return body


def write_log(path, errors, bwds, config_id, strategy="sb"):
    records = [
        EpochRecord(i, b * 3, b, b, e, 0.0, 0.0, 0.0, float(i))
        for i, (e, b) in enumerate(zip(errors, bwds))
    ]
    path.write_text(serialize_runlog(RunLog("0" * 16, strategy, config_id, records)))
    return str(path)


def test_health():
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


def test_train_writes_log(tmp_path):
    out = str(tmp_path / "run.csv")
    resp = client.post("/train", json={"config": config_body(), "out": out})
    assert resp.status_code == 200
    body = resp.json()
    assert body["out"] == out
    assert body["epochs"] == 2
    assert body["sel_fwd"] == 320  # 160 train examples, 2 epochs
    assert body["probs_out"] is None
    log = read_runlog(out)
    assert len(log.records) == 3
    assert log.records[-1].test_err == pytest.approx(body["final_error"])


def test_train_seed_override_and_probs(tmp_path):
    out = str(tmp_path / "traced.csv")
    cfg = config_body(tracked_ids=[0, 1], seed=0)
    resp = client.post("/train", json={"config": cfg, "seed": 4, "out": out})
    assert resp.status_code == 200
    body = resp.json()
    assert body["probs_out"] == out + ".probs.csv"
    probs = (tmp_path / "traced.csv.probs.csv").read_text().splitlines()
    assert probs[0] == "example_id,epoch,prob"
    assert len(probs) == 1 + 2 * 2  # two ids, two epochs
    log = read_runlog(out)
    assert log.config_id.endswith("seed4")


def test_train_unknown_key_is_422():
    cfg = config_body()
    cfg["optimizer"] = "adam"
    resp = client.post("/train", json={"config": cfg})
    assert resp.status_code == 422


def test_train_bad_strategy_field_is_422():
    resp = client.post(
        "/train", json={"config": config_body(strategy={"name": "kath18", "beta": 1.0})}
    )
    assert resp.status_code == 422


def test_compare_speedups_and_none(tmp_path):
    base = write_log(tmp_path / "base.csv", [0.5, 0.3, 0.2], [0, 1000, 2000], "base", "traditional")
    cand = write_log(tmp_path / "cand.csv", [0.5, 0.24], [0, 1000], "cand")
    resp = client.post(
        "/compare", json={"baseline": base, "candidates": [cand], "multipliers": [1.2, 2.0]}
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["baseline_id"] == "base"
    assert body["baseline_final_error"] == pytest.approx(0.2)
    rows = {r["multiplier"]: r for r in body["rows"]}
    assert rows[1.2]["speedup_backprops"] == pytest.approx(2.0)
    assert rows[2.0]["speedup_backprops"] == pytest.approx(1.0)
    # target 0.2 * 1.0 would be unreached, but those multipliers were not asked for
    assert all(r["config_id"] == "cand" for r in body["rows"])


def test_compare_unreached_target_serializes_null(tmp_path):
    base = write_log(tmp_path / "b.csv", [0.5, 0.2], [0, 100], "b", "traditional")
    stuck = write_log(tmp_path / "s.csv", [0.5, 0.45], [0, 100], "s")
    resp = client.post(
        "/compare", json={"baseline": base, "candidates": [stuck], "multipliers": [1.1]}
    )
    assert resp.status_code == 200
    assert resp.json()["rows"][0]["speedup_backprops"] is None


def test_compare_missing_file_is_404(tmp_path):
    base = write_log(tmp_path / "b.csv", [0.5], [0], "b")
    resp = client.post(
        "/compare", json={"baseline": base, "candidates": ["/no/such/file.csv"]}
    )
    assert resp.status_code == 404


def test_pareto_points_and_shares(tmp_path):
    fast = write_log(tmp_path / "fast.csv", [0.5, 0.2], [0, 100], "fast", "sb")
    slow = write_log(tmp_path / "slow.csv", [0.5, 0.4], [0, 200], "slow", "traditional")
    resp = client.post("/pareto", json={"logs": [fast, slow], "measure": "backprops"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["measure"] == "backprops"
    on = [p for p in body["points"] if p["on_frontier"]]
    assert {(p["time"], p["error"]) for p in on} == {(0.0, 0.5), (100.0, 0.2)}
    assert body["shares"] == {"sb": 100.0}


def test_pareto_rejects_unknown_measure(tmp_path):
    log = write_log(tmp_path / "l.csv", [0.5], [0], "l")
    resp = client.post("/pareto", json={"logs": [log], "measure": "flops"})
    assert resp.status_code == 422


def test_corrupt_csv_input(tmp_path):
    rng = np.random.default_rng(3)
    ds = Dataset(rng.normal(size=(50, 2)), rng.integers(0, 3, size=50), 3, np.arange(50))
    src = tmp_path / "in.csv"
    dst = tmp_path / "out.csv"
    write_csv(ds, str(src))
    resp = client.post(
        "/corrupt",
        json={"input": str(src), "fraction": 0.2, "seed": 1, "output": str(dst)},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["n"] == 50
    assert body["flipped_count"] == 10
    assert len(set(body["flipped_ids"])) == 10
    from sbtrain.data import read_csv

    flipped = read_csv(str(dst))
    changed = np.flatnonzero(flipped.labels != ds.labels)
    assert sorted(flipped.ids[changed].tolist()) == sorted(body["flipped_ids"])


def test_corrupt_from_config(tmp_path):
    dst = tmp_path / "synth.csv"
    resp = client.post(
        "/corrupt",
        json={"config": config_body(), "fraction": 0.1, "seed": 2, "output": str(dst)},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["n"] == 160
    assert body["flipped_count"] == 16


def test_corrupt_requires_exactly_one_source(tmp_path):
    dst = str(tmp_path / "x.csv")
    resp = client.post("/corrupt", json={"fraction": 0.1, "output": dst})
    assert resp.status_code == 422
    resp = client.post(
        "/corrupt",
        json={"input": "a.csv", "config": config_body(), "fraction": 0.1, "output": dst},
    )
    assert resp.status_code == 422


def test_gradsim_row_count():
    cfg = config_body(strategy={"name": "traditional"}, epochs=1)
    resp = client.post(
        "/gradsim",
        json={
            "config": cfg,
            "fractions": [0.25],
            "modes": ["top-loss", "random"],
            "pretrain_epochs": 1,
            "max_batches": 2,
        },
    )
    assert resp.status_code == 200
    rows = resp.json()["rows"]
    assert len(rows) == 4
    assert {r["mode"] for r in rows} == {"top-loss", "random"}
    for r in rows:
        assert -1.0 <= r["cosine"] <= 1.0
        assert 0.0 <= r["sign_agreement"] <= 1.0
