"""Command-line harness: ``agppo {train,eval,compare,dump-defaults,replay}``.

Exit codes: 0 ok, 1 replay mismatch, 2 config error, 3 checkpoint error,
4 report schema error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import grid_env
from .errors import CheckpointError, ConfigError, SchemaError, ValidationError
from .evaluate import evaluate
from .metrics import (
    TABLE_COLUMNS,
    aggregate_report,
    read_report_json,
    write_report_csv,
    write_report_json,
    write_roi_csv,
    write_roi_pgm,
)
from .nets import load_checkpoint
from .traces import read_trace_csv, replay, write_trace_csv
from .trainer import train

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_CHECKPOINT, EXIT_SCHEMA = 0, 1, 2, 3, 4
OUT_ENV_VAR = "APPRL_OUT_DIR"


def out_root(arg: str | None) -> Path:
    return Path(arg or os.environ.get(OUT_ENV_VAR) or "runs")


def make_run_dir(root: Path, label: str) -> Path:
    """Create a fresh ``<label>-<timestamp>`` directory; never reuses an existing one."""
    root.mkdir(parents=True, exist_ok=True)
    stamp = time.strftime("%Y%m%d-%H%M%S")
    for i in range(1000):
        path = root / (f"{label}-{stamp}" + (f"-{i}" if i else ""))
        try:
            path.mkdir()
            return path
        except FileExistsError:
            continue
    raise ConfigError(f"could not create a fresh run directory under {root}")


def load_config(args) -> cfgmod.ExperimentConfig:
    return cfgmod.load(args.config) if args.config else cfgmod.ExperimentConfig()


def cmd_train(args) -> int:
    exp = load_config(args).with_overrides(
        shaping=args.shaping,
        env_preset=args.env,
        train_seed=args.seed,
        paper_literal=args.paper_literal or None,
    )
    tcfg = exp.train_config()
    run = make_run_dir(out_root(args.out), f"train-{tcfg.shaping}-{exp.env_preset}-s{tcfg.seed}")
    cfgmod.save(run / "config.toml", exp)
    train(tcfg, run)
    print(run / "final.ckpt")
    return EXIT_OK


def _config_beside(checkpoint: Path) -> cfgmod.ExperimentConfig | None:
    snap = checkpoint.parent / "config.toml"
    return cfgmod.load(snap) if snap.exists() else None


def cmd_eval(args) -> int:
    ckpt = Path(args.checkpoint)
    if args.config:
        exp = cfgmod.load(args.config)
    else:
        exp = _config_beside(ckpt) or cfgmod.ExperimentConfig()
    exp = exp.with_overrides(
        shaping=args.shaping,
        eval_env=args.env,
        eval_episodes=args.episodes,
        eval_seed=args.seed,
        eval_stochastic=args.stochastic_eval or None,
        paper_literal=args.paper_literal or None,
    )
    ev = exp.eval
    nets = load_checkpoint(ckpt)
    if nets.cfg.aux_width != exp.train_config().shaping_config.aux_width:
        raise CheckpointError(
            f"{ckpt}: critic takes {nets.cfg.aux_width} auxiliary inputs but shaping "
            f"{exp.shaping!r} supplies {exp.train_config().shaping_config.aux_width}"
        )
    rng = np.random.default_rng(ev.seed) if ev.stochastic else None
    traces = evaluate(nets, ev.grid, ev.seeds, exp.shaping, stochastic=ev.stochastic, rng=rng)
    report = aggregate_report(
        traces, ev.grid.width, name=exp.shaping, env=ev.env, literal_score=exp.paper_literal
    )

    run = make_run_dir(out_root(args.out), f"eval-{exp.shaping}-{ev.env}")
    cfgmod.save(run / "config.toml", exp)
    write_report_json(run / "report.json", report)
    write_report_csv(run / "report.csv", report)
    write_roi_csv(run / "roi.csv", np.asarray(report.roi))
    write_roi_pgm(run / "roi.pgm", np.asarray(report.roi))
    (run / "traces").mkdir()
    with open(run / "episodes.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "steps", "won", "return", "trace"])
        for t in traces:
            name = f"traces/episode-{t.seed}.csv"
            write_trace_csv(run / name, t)
            writer.writerow([t.seed, t.steps, int(t.won), repr(t.episode_return), name])
    print(run)
    print(format_table([report]))
    return EXIT_OK


def _fmt(v) -> str:
    return f"{v:.4f}" if isinstance(v, float) else str(v)


def format_table(reports) -> str:
    header = ["name", "env", *TABLE_COLUMNS]
    rows = [[r.name, r.env, *(_fmt(getattr(r, c)) for c in TABLE_COLUMNS)] for r in reports]
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    lines = ["  ".join(str(x).rjust(w) for x, w in zip(row, widths)) for row in [header, *rows]]
    return "\n".join(lines)


def cmd_compare(args) -> int:
    if len(args.reports) < 2:
        raise ConfigError("compare needs at least two report files")
    reports = []
    for path in args.reports:
        rep = read_report_json(path)
        if not rep.name:
            rep.name = Path(path).parent.name
        reports.append(rep)
    # stable sort: ties keep command-line order
    reports.sort(key=lambda r: -r.score)
    run = make_run_dir(out_root(args.out), "compare")
    with open(run / "comparison.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "env", *TABLE_COLUMNS])
        for r in reports:
            writer.writerow([r.name, r.env, *(repr(getattr(r, c)) for c in TABLE_COLUMNS)])
    table = format_table(reports)
    (run / "comparison.txt").write_text(table + "\n")
    print(run)
    print(table)
    return EXIT_OK


def cmd_dump_defaults(args) -> int:
    sys.stdout.write(cfgmod.dumps(cfgmod.ExperimentConfig()))
    return EXIT_OK


def cmd_replay(args) -> int:
    path = Path(args.trace)
    seed = args.seed
    if seed is None:
        m = re.search(r"episode-(-?\d+)\.csv$", path.name)
        if not m:
            raise ConfigError("cannot infer the episode seed from the file name; pass --seed")
        seed = int(m.group(1))
    env = args.env
    if env is None:
        snap = path.parent.parent / "config.toml"
        env = cfgmod.load(snap).eval.env if snap.exists() else "gw-a-test"
    grid = grid_env.preset(env)
    trace = read_trace_csv(path, seed=seed)
    problems = replay(trace, grid)
    report = aggregate_report([trace], grid.width, name=path.stem, env=env)
    print(format_table([report]))
    if problems:
        for p in problems:
            print("mismatch:", p, file=sys.stderr)
        return EXIT_MISMATCH
    print(f"replay ok: {trace.steps} steps, won={trace.won}, return={trace.episode_return!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agppo", description="Appraisal-guided PPO experiments")
    parser.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, env_help):
        p.add_argument("--config", help="TOML experiment config")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help=f"output root (default ${OUT_ENV_VAR} or ./runs)")
        p.add_argument("--env", choices=sorted(grid_env.PRESETS), help=env_help)
        p.add_argument("--shaping")
        p.add_argument("--paper-literal", action="store_true")

    p = sub.add_parser("train", help="train an agent")
    common(p, "training environment preset")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("checkpoint")
    common(p, "evaluation environment preset")
    p.add_argument("--episodes", type=int)
    p.add_argument("--stochastic-eval", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="tabulate reports by score")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("dump-defaults", help="print the default config")
    p.set_defaults(func=cmd_dump_defaults)

    p = sub.add_parser("replay", help="re-run a trace through the environment")
    p.add_argument("trace")
    p.add_argument("--seed", type=int)
    p.add_argument("--env", choices=sorted(grid_env.PRESETS))
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
