"""Command line: ``streamkm {gen,run,bound,report}``.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime or domain error.
The seed precedence is ``--seed`` flag, then ``SKM_SEED``, then 0.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields, replace
from pathlib import Path

from . import bench
from .bound import BoundDomainError, TheoremCheckConfig, verify_theorem1
from .core import InvalidInputError
from .driftgen import (BaseDataSpec, DriftCalibrationError, DriftStream, DriftStreamSpec,
                       load_csv, read_stream, write_stream)

EXIT_USAGE = 2
EXIT_RUNTIME = 3

log = logging.getLogger("streamkm")


class UsageError(Exception):
    pass


def resolve_seed(flag) -> int:
    if flag is not None:
        return int(flag)
    env = os.environ.get("SKM_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"SKM_SEED must be an integer, got {env!r}") from None
    return 0


def _floats(text: str) -> list[float]:
    return [float(t) for t in str(text).split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in str(text).split(",") if t.strip()]


# -- gen -----------------------------------------------------------------------------

def cmd_gen(args) -> int:
    if not args.eps > 0:
        raise UsageError(f"--eps must be > 0, got {args.eps}")
    seed = resolve_seed(args.seed)
    base_points = None
    if args.from_csv:
        base_points = load_csv(args.from_csv, args.header)
        d = base_points.shape[1]
        base = BaseDataSpec(kind="csv_file", d=d, n=len(base_points), csv_path=args.from_csv,
                            header=args.header, seed=seed)
    else:
        d = args.d
        base = BaseDataSpec(d=args.d, n=args.n, k_true=args.k_true, seed=seed)
    spec = DriftStreamSpec(base=base, epsilon=args.eps, batch_size=args.batch_size,
                           drift_period=args.period, k_cluster=args.k or args.k_true, seed=seed)
    errors = spec.validate()
    if errors:
        raise UsageError("; ".join(errors))
    stream = DriftStream(spec, base_points)
    batches = stream.take(args.batches)
    write_stream(args.out, batches, d=d, N=args.batch_size, period=args.period,
                 epsilon=args.eps, seed=seed)
    for r in stream.drifts:
        print(f"drift to concept {r.concept_id}: ratio {r.ratio:.6f} "
              f"(target {1 + args.eps:.6f}), alpha {r.alpha:.6g}, {r.iterations} iterations")
    return 0


# -- run -----------------------------------------------------------------------------

GRID_KEYS = {"d": int, "K": int, "epsilon": float, "m": int}


def _load_config(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid config ({exc})") from None
    if not isinstance(data, dict):
        raise UsageError(f"{path}: config must be a flat object")
    return data


def build_run(args) -> tuple[bench.ExperimentConfig, dict]:
    """Merge config file and flags; collect every validation error before failing."""
    known = {f.name for f in fields(bench.ExperimentConfig)}
    values: dict = {}
    errors: list[str] = []
    if args.config:
        for key, val in _load_config(args.config).items():
            if key not in known:
                errors.append(f"unknown config key {key!r}")
            else:
                values[key] = val
    flag_map = {"d": args.d, "K": args.K, "epsilon": args.eps, "m": args.m, "tau": args.tau,
                "batch_size": args.batch_size, "n_batches": args.n_batches, "n_pool": args.n_pool,
                "k_true": args.k_true, "t_max": args.t_max, "repetitions": args.reps,
                "max_iterations": args.max_iterations, "algorithms": args.algorithms,
                "csv_path": args.from_csv}
    for key, val in flag_map.items():
        if val is not None:
            values[key] = val
    if args.header:
        values["csv_header"] = True
    if args.seed is not None or "seed" not in values:
        values["seed"] = resolve_seed(args.seed)

    grid = {}
    for key, cast in GRID_KEYS.items():
        if key in values:
            raw = values.pop(key)
            try:
                grid[key] = [cast(v) for v in raw] if isinstance(raw, list) else (
                    _floats(raw) if cast is float else _ints(raw)) if isinstance(raw, str) else [cast(raw)]
            except (TypeError, ValueError):
                errors.append(f"{key}: cannot parse {raw!r}")
    if "algorithms" in values:
        raw = values["algorithms"]
        names = raw.split(",") if isinstance(raw, str) else list(raw)
        algos = []
        for n in names:
            try:
                algos.append(bench.parse_algorithm(n))
            except InvalidInputError as exc:
                errors.append(str(exc))
        values["algorithms"] = tuple(algos)
    try:
        cfg = bench.ExperimentConfig(**values)
    except TypeError as exc:
        raise UsageError(str(exc)) from None
    defaults = {"d": [cfg.d], "K": [cfg.K], "epsilon": [cfg.epsilon], "m": [cfg.m]}
    defaults.update(grid)
    for combo in [replace(cfg, d=d, K=k, epsilon=e, m=m) for d in defaults["d"]
                  for k in defaults["K"] for e in defaults["epsilon"] for m in defaults["m"]]:
        for err in combo.validate():
            if err not in errors:
                errors.append(err)
    if errors:
        raise UsageError("invalid configuration:\n  " + "\n  ".join(errors))
    return cfg, defaults


def cmd_run(args) -> int:
    cfg, grid = build_run(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = out_dir / "records.csv"
    summary_path = out_dir / "summary.csv"
    if args.stream:
        meta, batches = read_stream(args.stream)
        if len(grid["d"]) * len(grid["K"]) * len(grid["epsilon"]) * len(grid["m"]) != 1:
            raise UsageError("--stream runs a single configuration")
        cfg = replace(cfg, d=meta["d"], K=grid["K"][0], epsilon=grid["epsilon"][0], m=grid["m"][0])
        records = bench.run_on_batches(cfg, batches, 0, cfg.seed)
    else:
        cells = bench.grid_configs(cfg, grid["d"], grid["K"], grid["epsilon"], grid["m"])
        records = bench.run_grid(cells, args.jobs)
    bench.write_records(records_path, records)
    bench.write_summary(summary_path, bench.aggregate(records))
    print(f"wrote {len(records)} records to {records_path} and summary to {summary_path}")
    return 0


# -- bound ---------------------------------------------------------------------------

def cmd_bound(args) -> int:
    delta = args.delta
    if args.preset:
        delta = {"95": 0.05, "68": 0.32}[args.preset]
    if not 0 < delta < 1:
        raise UsageError(f"--delta must lie in (0, 1), got {delta}")
    if not 0 < args.rho <= 1:
        raise UsageError(f"--rho must lie in (0, 1], got {args.rho}")
    if args.eps < 0:
        raise UsageError("--eps must be >= 0")
    cfg = TheoremCheckConfig(rho=args.rho, epsilon=args.eps, N=args.n, delta=delta, reps=args.reps,
                             base=BaseDataSpec(d=args.d, n=args.pool, k_true=args.k_true),
                             seed=resolve_seed(args.seed))
    report = verify_theorem1(cfg)
    report.to_csv(args.out)
    print(f"E={report.E:.6g} eps={report.epsilon_hat:.6g} b={report.b:.6g} "
          f"min coverage={report.coverage.min():.3f}")
    return 0


# -- report --------------------------------------------------------------------------

def cmd_report(args) -> int:
    records = []
    for path in args.records:
        records.extend(bench.read_records(path))
    rows = bench.aggregate(records)
    if args.gnuplot:
        print("# algo eps K m batch_index metric median q1 q3")
        for r in rows:
            print(f"{r.algo} {r.eps:.17g} {r.K} {r.m} {r.batch_index} {r.metric} "
                  f"{r.median:.17g} {r.q1:.17g} {r.q3:.17g}")
    else:
        bench.write_summary(sys.stdout, rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="streamkm", description="Streaming K-means under concept drift")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a (1+eps)-drift stream dump")
    g.add_argument("--d", type=int, default=2)
    g.add_argument("--n", type=int, default=5000, help="concept pool size")
    g.add_argument("--k-true", type=int, default=5)
    g.add_argument("--k", type=int, default=None, help="reference clusters (default k-true)")
    g.add_argument("--eps", type=float, required=True)
    g.add_argument("--batch-size", type=int, default=500)
    g.add_argument("--period", type=int, default=10)
    g.add_argument("--batches", type=int, default=100)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--from-csv", default=None)
    g.add_argument("--header", action="store_true")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run the streaming benchmark")
    r.add_argument("--config", default=None, help="flat JSON object of ExperimentConfig fields")
    r.add_argument("--d", default=None, help="dimension(s), comma separated")
    r.add_argument("--K", default=None, help="cluster count(s), comma separated")
    r.add_argument("--eps", default=None, help="drift magnitude(s), comma separated")
    r.add_argument("--m", default=None, help="period fraction(s), comma separated")
    r.add_argument("--tau", type=int, default=None)
    r.add_argument("--batch-size", type=int, default=None)
    r.add_argument("--n-batches", type=int, default=None)
    r.add_argument("--n-pool", type=int, default=None)
    r.add_argument("--k-true", type=int, default=None)
    r.add_argument("--t-max", type=int, default=None)
    r.add_argument("--reps", type=int, default=None)
    r.add_argument("--max-iterations", type=int, default=None)
    r.add_argument("--algorithms", default=None, help="e.g. pskm,fskm-hi")
    r.add_argument("--from-csv", default=None)
    r.add_argument("--header", action="store_true")
    r.add_argument("--stream", default=None, help="reuse a stream dump")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--out-dir", default=".")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bound", help="Monte-Carlo check of the surrogate confidence interval")
    b.add_argument("--rho", type=float, default=0.676)
    b.add_argument("--eps", type=float, default=0.5)
    b.add_argument("--n", type=int, default=1000, help="batch size")
    b.add_argument("--delta", type=float, default=0.05)
    b.add_argument("--preset", choices=("95", "68"), default=None)
    b.add_argument("--reps", type=int, default=200)
    b.add_argument("--d", type=int, default=2)
    b.add_argument("--k-true", type=int, default=3)
    b.add_argument("--pool", type=int, default=20000)
    b.add_argument("--seed", type=int, default=None)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bound)

    rp = sub.add_parser("report", help="aggregate records CSVs")
    rp.add_argument("records", nargs="*")
    rp.add_argument("--gnuplot", action="store_true")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"streamkm {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidInputError, BoundDomainError, DriftCalibrationError, OSError, RuntimeError) as exc:
        print(f"streamkm {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
