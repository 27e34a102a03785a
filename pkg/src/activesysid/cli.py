"""Command-line entry point.

Subcommands:
  run           sweep all (condition, seed) episodes of a config and write
                metrics.csv / summary.json
  episode       run a single episode and print its metrics to stdout
  verify        run the built-in correctness checks (PASS/FAIL lines)
  list-systems  show the registered systems and their parameter layouts

Exit codes: 0 success, 1 check/episode failure, 2 config error.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys
from pathlib import Path

import yaml

from .errors import ActiveSysIdError, ConfigError
from .harness import apply_overrides, parse_config, run_episode, run_experiment
from .harness.experiment import METRICS_HEADER, metrics_rows
from .systems import system_descriptions
from .verify import run_checks

__all__ = ["main"]


def _load_cfg(args) -> "ExperimentConfig":
    path = Path(args.config)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc
    if raw is None:
        raise ConfigError(f"config file {path} is empty")
    overrides = list(args.set or [])
    if overrides:
        raw = apply_overrides(raw, overrides)
    if args.out is not None:
        raw["output_dir"] = args.out
    if getattr(args, "seed", None) is not None:
        raw["seeds"] = [args.seed]
    if getattr(args, "jobs", None) is not None:
        raw["jobs"] = args.jobs
    return parse_config(raw)


def _cmd_run(args) -> int:
    cfg = _load_cfg(args)
    metrics_path, summary_path = run_experiment(cfg)
    summary = json.loads(summary_path.read_text())
    print(f"wrote {metrics_path}")
    print(f"wrote {summary_path}")
    failed = False
    for condition, entry in summary["conditions"].items():
        if entry["aborted_seeds"]:
            failed = True
            print(f"episode aborted: condition={condition} seeds={entry['aborted_seeds']}")
    for check, ok in sorted(summary["trend_checks"].items()):
        print(f"trend {check}: {'holds' if ok else 'does not hold'}")
    return 1 if failed else 0


def _cmd_episode(args) -> int:
    cfg = _load_cfg(args)
    conditions = cfg.conditions()
    condition = args.condition or conditions[0]
    if condition not in conditions:
        raise ConfigError(f"condition {condition!r} not in {conditions}")
    seed = cfg.seeds[0]
    record = run_episode(cfg, condition, seed)
    print(METRICS_HEADER)
    for line in metrics_rows([record]):
        print(line)
    print(f"# heldout_single_step_err={record.heldout_single_step_err:.6g}")
    print(f"# heldout_autoregressive_err={record.heldout_autoregressive_err:.6g}")
    if record.aborted:
        print(f"# aborted at step {record.aborted_step}: {record.error}")
        return 1
    return 0


def _cmd_verify(args) -> int:
    return run_checks(inject_failure=args.inject_failure, quick=args.quick)


def _cmd_list_systems(_args) -> int:
    for name, layout in system_descriptions():
        print(f"{name}: {layout}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="activesysid",
        description="Active information gathering for online dynamics identification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seed=True):
        p.add_argument("--config", required=True, help="experiment config (YAML)")
        p.add_argument("--out", default=None, help="output directory override")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="replace the seed list")
        p.add_argument("--jobs", type=int, default=None, help="parallel episode workers")
        p.add_argument(
            "--set",
            action="append",
            metavar="KEY=VALUE",
            help="dotted-key config override (repeatable), e.g. planner.population=512",
        )

    run_p = sub.add_parser("run", help="run a full experiment sweep")
    add_common(run_p)
    run_p.set_defaults(fn=_cmd_run)

    ep_p = sub.add_parser("episode", help="run one episode, metrics to stdout")
    add_common(ep_p)
    ep_p.add_argument("--condition", default=None, help="condition label (default: first)")
    ep_p.set_defaults(fn=_cmd_episode)

    v_p = sub.add_parser("verify", help="run built-in correctness checks")
    v_p.add_argument("--quick", action="store_true", help="smaller Monte-Carlo check")
    v_p.add_argument(
        "--inject-failure", action="store_true", help="force FAIL lines (exit-code testing)"
    )
    v_p.set_defaults(fn=_cmd_verify)

    ls_p = sub.add_parser("list-systems", help="list systems and parameter layouts")
    ls_p.set_defaults(fn=_cmd_list_systems)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return 2
    except ActiveSysIdError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
