"""Command-line client for the service.

Every subcommand builds a request model and sends it over HTTP. By default
the request runs against an in-process copy of the app (no daemon needed,
files land on this machine); --server URL targets a running instance
instead.
"""

import argparse
import asyncio
import csv
import sys

import httpx

from .config import load_config
from .errors import ConfigError, SbtrainError


def _post(server: str | None, path: str, payload: dict) -> dict:
    if server is None:
        from .service.app import app

        async def go():
            transport = httpx.ASGITransport(app=app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://sbtrain", timeout=None
            ) as client:
                return await client.post(path, json=payload)

        response = asyncio.run(go())
    else:
        response = httpx.post(server.rstrip("/") + path, json=payload, timeout=None)
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail")
        except ValueError:
            detail = None
        raise ConfigError(f"{path} failed ({response.status_code}): {detail or response.text}")
    return response.json()


def _floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _fmt(value: float | None) -> str:
    return "--" if value is None else f"{value:.2f}"


def _write_csv(path: str, fieldnames: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    payload = {"config": cfg.model_dump(mode="json"), "seed": args.seed, "out": args.out}
    resp = _post(args.server, "/train", payload)
    print(f"wrote {resp['out']}")
    if resp["probs_out"]:
        print(f"wrote {resp['probs_out']}")
    print(f"config {resp['config_id']} strategy={resp['strategy']} fingerprint={resp['fingerprint']}")
    print(f"epochs {resp['epochs']} final test error {resp['final_error']:.6f}")
    print(
        f"passes: selection {resp['sel_fwd']}, training fwd {resp['train_fwd']}, "
        f"backward {resp['bwd']}"
    )
    print(f"wallclock {resp['wallclock']:.3f}s")
    return 0


def cmd_compare(args) -> int:
    payload = {
        "baseline": args.baseline,
        "candidates": args.candidates,
        "multipliers": _floats(args.multipliers),
    }
    resp = _post(args.server, "/compare", payload)
    print(f"baseline {resp['baseline_id']} final error {resp['baseline_final_error']:.6f}")
    header = f"{'config_id':<28} {'mult':>5} {'target':>9} {'bp':>7} {'wc':>7}"
    print(header)
    rows = resp["rows"]
    for row in rows:
        print(
            f"{row['config_id']:<28} {row['multiplier']:>5.2f} {row['target_error']:>9.6f} "
            f"{_fmt(row['speedup_backprops']):>7} {_fmt(row['speedup_wallclock']):>7}"
        )
    if args.out:
        out_rows = [
            {
                **row,
                "speedup_backprops": _fmt(row["speedup_backprops"]),
                "speedup_wallclock": _fmt(row["speedup_wallclock"]),
            }
            for row in rows
        ]
        _write_csv(
            args.out,
            ["config_id", "strategy", "final_error", "multiplier", "target_error",
             "speedup_backprops", "speedup_wallclock"],
            out_rows,
        )
        print(f"wrote {args.out}")
    return 0


def cmd_pareto(args) -> int:
    payload = {"logs": args.logs, "measure": args.measure}
    resp = _post(args.server, "/pareto", payload)
    points = resp["points"]
    frontier = [p for p in points if p["on_frontier"]]
    print(f"measure {resp['measure']}: {len(frontier)} frontier points of {len(points)}")
    for strategy, share in sorted(resp["shares"].items()):
        print(f"share {strategy}: {share}%")
    for p in sorted(frontier, key=lambda p: p["time"]):
        print(f"  {p['time']:.6f} {p['error']:.6f} {p['config_id']}")
    if args.out:
        _write_csv(args.out, ["time", "error", "config_id", "strategy", "on_frontier"], points)
        print(f"wrote {args.out}")
    return 0


def cmd_corrupt(args) -> int:
    if (args.input is None) == (args.config is None):
        raise ConfigError("corrupt: give exactly one of --input, --config")
    payload = {
        "input": args.input,
        "config": load_config(args.config).model_dump(mode="json") if args.config else None,
        "fraction": args.fraction,
        "seed": args.seed,
        "output": args.out,
    }
    resp = _post(args.server, "/corrupt", payload)
    print(f"wrote {resp['output']}: flipped {resp['flipped_count']} of {resp['n']} labels")
    return 0


def cmd_gradsim(args) -> int:
    cfg = load_config(args.config)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    payload = {
        "config": cfg.model_dump(mode="json"),
        "fractions": _floats(args.fractions),
        "modes": modes,
        "pretrain_epochs": args.pretrain_epochs,
        "max_batches": args.max_batches,
    }
    resp = _post(args.server, "/gradsim", payload)
    rows = resp["rows"]
    for fraction in _floats(args.fractions):
        for mode in modes:
            group = [r for r in rows if r["fraction"] == fraction and r["mode"] == mode]
            if not group:
                continue
            cos = sum(r["cosine"] for r in group) / len(group)
            sign = sum(r["sign_agreement"] for r in group) / len(group)
            print(
                f"fraction {fraction:.2f} mode {mode}: mean cosine {cos:.3f}, "
                f"mean sign agreement {sign:.3f} ({len(group)} batches)"
            )
    if args.out:
        _write_csv(args.out, ["batch", "fraction", "mode", "cosine", "sign_agreement"], rows)
        print(f"wrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbtrain",
        description="Train small classifiers with loss-based example selection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run one training session")
    train.add_argument("--config", required=True, help="YAML config path")
    train.add_argument("--seed", type=int, default=None, help="override the config seed")
    train.add_argument("--out", default=None, help="run log path")
    train.set_defaults(func=cmd_train)

    compare = sub.add_parser("compare", help="speedups to reach baseline error x multiplier")
    compare.add_argument("baseline", help="baseline run log")
    compare.add_argument("candidates", nargs="+", help="candidate run logs")
    compare.add_argument("--multipliers", default="1.1,1.2,1.4", help="comma-separated")
    compare.add_argument("--out", default=None, help="CSV output path")
    compare.set_defaults(func=cmd_compare)

    pareto = sub.add_parser("pareto", help="error/time frontier across run logs")
    pareto.add_argument("logs", nargs="+", help="run log paths")
    pareto.add_argument("--measure", choices=["backprops", "wallclock"], default="backprops")
    pareto.add_argument("--out", default=None, help="CSV output path")
    pareto.set_defaults(func=cmd_pareto)

    corrupt = sub.add_parser("corrupt", help="flip a fraction of labels")
    corrupt.add_argument("--input", default=None, help="internal-format CSV")
    corrupt.add_argument("--config", default=None, help="corrupt this config's train split")
    corrupt.add_argument("--fraction", type=float, required=True)
    corrupt.add_argument("--seed", type=int, default=0)
    corrupt.add_argument("--out", required=True, help="corrupted CSV path")
    corrupt.set_defaults(func=cmd_corrupt)

    gradsim = sub.add_parser("gradsim", help="subset-vs-full-batch gradient similarity")
    gradsim.add_argument("--config", required=True, help="YAML config path")
    gradsim.add_argument("--fractions", default="0.1", help="comma-separated")
    gradsim.add_argument("--modes", default="top-loss,random", help="comma-separated")
    gradsim.add_argument("--pretrain-epochs", type=int, default=1)
    gradsim.add_argument("--max-batches", type=int, default=None)
    gradsim.add_argument("--out", default=None, help="CSV output path")
    gradsim.set_defaults(func=cmd_gradsim)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve)

    for name, cmd in sub.choices.items():
        if name != "serve":
            cmd.add_argument("--server", default=None, help="remote service URL")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SbtrainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except httpx.HTTPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
