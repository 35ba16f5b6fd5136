"""Command-line client for the dynfair service.

Every subcommand speaks HTTP to the service API; without --server the app is
mounted in-process, so no daemon is needed for local runs.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

from .runner import ExperimentConfig

POLL_SECONDS = 0.2


def _parse_ks(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def load_config_file(path: str) -> dict:
    """Read a config file: JSON if it looks like JSON, key=value lines
    otherwise."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return json.loads(text)
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        values[key] = _parse_ks(value) if key == "tracked_ks" else value
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynfair", description=__doc__)
    parser.add_argument("--server", default=None, help="base URL of a running service; defaults to in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a simulation experiment")
    run.add_argument("--config", default=None, help="config file (JSON or key=value lines)")
    run.add_argument("--scenario", choices=["news", "movie-synthetic", "movie-file"])
    run.add_argument("--policy", choices=["naive", "dultr-glob", "dultr", "skyline", "fairco", "mmf"])
    run.add_argument("--trials", type=int)
    run.add_argument("--steps", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", dest="output_dir", help="directory for log.csv and summary.json")
    run.add_argument("--tracked-ks", type=_parse_ks, dest="tracked_ks")
    run.add_argument("--cadence", type=int, dest="metric_cadence")
    run.add_argument("--workers", type=int)
    run.add_argument("--record-timing", action="store_true", default=None)
    run.add_argument("--lambda", type=float, dest="mmf_lambda", help="MMF fairness probability")
    run.add_argument("--mmf-k", type=int)
    run.add_argument("--fairco-gain", type=float)
    run.add_argument("--news-docs", type=int)
    run.add_argument("--p-neg", type=float)
    run.add_argument("--merit-mc-users", type=int)
    run.add_argument("--num-users", type=int)
    run.add_argument("--num-docs", type=int)
    run.add_argument("--num-groups", type=int)
    run.add_argument("--latent-rank", type=int)
    run.add_argument("--sigmoid-a", type=float)
    run.add_argument("--sigmoid-b", type=float)
    run.add_argument("--group-spread", type=float)
    run.add_argument("--ratings", dest="ratings_path")
    run.add_argument("--features", dest="features_path")
    run.add_argument("--groups", dest="groups_path")
    run.add_argument("--lr", type=float, dest="learning_rate")
    run.add_argument("--hidden-units", type=int)
    run.add_argument("--ndcg-realized-gains", action="store_true", default=None)

    bench = sub.add_parser("bench", help="time the fairness controllers at growing corpus sizes")
    bench.add_argument("--n-values", type=_parse_ks, default=[1000, 10000])
    bench.add_argument("--k", type=int, default=10)
    bench.add_argument("--m", type=int, default=5)
    bench.add_argument("--reps", type=int, default=200)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", default=None, help="optional JSON output path")

    gen = sub.add_parser("gen-ratings", help="write a synthetic rating matrix as CSV files")
    gen.add_argument("--users", type=int, default=10_000)
    gen.add_argument("--docs", type=int, default=100)
    gen.add_argument("--groups", type=int, default=5)
    gen.add_argument("--rank", type=int, default=10)
    gen.add_argument("--group-spread", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output directory")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _client(server: str | None) -> httpx.AsyncClient:
    if server:
        return httpx.AsyncClient(base_url=server, timeout=None)
    from .service import create_app

    return httpx.AsyncClient(transport=httpx.ASGITransport(app=create_app()), base_url="http://dynfair", timeout=None)


def _raise_for_status(resp: httpx.Response) -> None:
    if resp.status_code >= 400:
        raise SystemExit(f"error {resp.status_code}: {resp.text}")


async def _cmd_run(args) -> int:
    values = load_config_file(args.config) if args.config else {}
    for key in ExperimentConfig.model_fields:
        arg = getattr(args, key, None)
        if arg is not None:
            values[key] = arg
    cfg = ExperimentConfig.model_validate(values)
    if cfg.output_dir is None:
        raise SystemExit("an output directory is required (--out)")
    async with _client(args.server) as client:
        resp = await client.post("/experiments", json=json.loads(cfg.model_dump_json()))
        _raise_for_status(resp)
        job = resp.json()
        while job["status"] in ("queued", "running"):
            await asyncio.sleep(POLL_SECONDS)
            resp = await client.get(f"/experiments/{job['job_id']}")
            _raise_for_status(resp)
            job = resp.json()
    if job["status"] == "failed":
        raise SystemExit(f"experiment failed: {job['error']}")
    summary = job["summary"]
    final = summary["metrics"]["final"]
    print(f"wrote {job['log_csv']} and {job['summary_json']}")
    for key in sorted(final):
        stat = final[key]
        print(f"  {key}: {stat['mean']:.4f} +- {stat['std']:.4f} ({len(stat['trials'])} trials)")
    return 0


async def _cmd_bench(args) -> int:
    payload = {"n_values": args.n_values, "k": args.k, "m": args.m,
               "repetitions": args.reps, "seed": args.seed}
    async with _client(args.server) as client:
        resp = await client.post("/bench", json=payload)
        _raise_for_status(resp)
        rows = resp.json()["rows"]
    print(f"{'policy':8s} {'n':>8s} {'median_micros':>14s} {'mean_micros':>12s}")
    for row in rows:
        print(f"{row['policy']:8s} {row['n']:8d} {row['median_micros']:14.2f} {row['mean_micros']:12.2f}")
    if args.out:
        Path(args.out).write_text(json.dumps(rows, indent=2) + "\n")
        print(f"wrote {args.out}")
    return 0


async def _cmd_gen_ratings(args) -> int:
    payload = {
        "num_users": args.users, "num_docs": args.docs, "num_groups": args.groups,
        "latent_rank": args.rank, "group_spread": args.group_spread,
        "seed": args.seed, "output_dir": args.out,
    }
    async with _client(args.server) as client:
        resp = await client.post("/ratings", json=payload)
        _raise_for_status(resp)
        paths = resp.json()
    for key in ("ratings_path", "features_path", "groups_path"):
        print(f"wrote {paths[key]}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0
    handler = {"run": _cmd_run, "bench": _cmd_bench, "gen-ratings": _cmd_gen_ratings}[args.command]
    return asyncio.run(handler(args))


if __name__ == "__main__":
    sys.exit(main())
