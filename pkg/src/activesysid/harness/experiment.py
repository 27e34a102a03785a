"""Experiment driver: (condition, seed) sweeps, metrics.csv and summary.json.

Episodes are independent jobs; with jobs > 1 they run in a process pool.
All output is assembled in the parent process with rows ordered by
(condition, seed, step), so the files are byte-identical regardless of
parallelism or completion order.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .. import __version__
from .config import ExperimentConfig, config_to_dict
from .episode import EpisodeRecord, run_episode

__all__ = ["run_experiment", "METRICS_HEADER", "compute_summary"]

METRICS_HEADER = "experiment,condition,seed,step,param_error,cov_trace,task_cost,info_cost,wall_ms"

_SUMMARY_METRICS = (
    "final_param_error",
    "final_cov_trace",
    "heldout_single_step_err",
    "heldout_autoregressive_err",
)


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


def _episode_job(args) -> EpisodeRecord:
    cfg, condition, seed = args
    return run_episode(cfg, condition, seed)


def _median(values: list[float]) -> float:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return float("nan")
    return float(np.median(arr))


def compute_summary(cfg: ExperimentConfig, records: list[EpisodeRecord]) -> dict:
    conditions: dict[str, dict] = {}
    for condition in cfg.conditions():
        recs = sorted(
            (r for r in records if r.condition == condition), key=lambda r: r.seed
        )
        entry: dict = {"seeds": [r.seed for r in recs]}
        complete = [r for r in recs if not r.aborted]
        for metric in _SUMMARY_METRICS:
            per_seed = [getattr(r, metric) for r in complete]
            entry[metric] = {"median": _median(per_seed), "per_seed": per_seed}
        entry["aborted_seeds"] = [r.seed for r in recs if r.aborted]
        conditions[condition] = entry

    lams = [
        ExperimentConfig.condition_lambda(c)
        for c in cfg.conditions()
        if c != "random"
    ]
    active = max((v for v in lams if v > 0), default=None)
    passive_label = "lambda=0" if 0.0 in lams else None
    random_label = "random" if "random" in cfg.conditions() else None

    trend: dict[str, bool] = {}
    if active is not None:
        active_label = f"lambda={active:g}"
        for metric in _SUMMARY_METRICS:
            med_a = conditions[active_label][metric]["median"]
            if passive_label is not None:
                med_p = conditions[passive_label][metric]["median"]
                trend[f"{metric}_active_lt_passive"] = bool(med_a < med_p)
            if random_label is not None:
                med_r = conditions[random_label][metric]["median"]
                trend[f"{metric}_active_lt_random"] = bool(med_a < med_r)

    return {
        "experiment": cfg.name,
        "code_version": __version__,
        "active_condition": None if active is None else f"lambda={active:g}",
        "conditions": conditions,
        "trend_checks": trend,
        "config": config_to_dict(cfg),
    }


def metrics_rows(records: list[EpisodeRecord]) -> list[str]:
    lines = []
    ordered = sorted(records, key=lambda r: (r.condition, r.seed))
    for rec in ordered:
        for row in rec.rows:
            lines.append(
                ",".join(
                    [
                        rec.experiment,
                        rec.condition,
                        str(rec.seed),
                        str(row["step"]),
                        _fmt(row["param_error"]),
                        _fmt(row["cov_trace"]),
                        _fmt(row["task_cost"]),
                        _fmt(row["info_cost"]),
                        _fmt(row["wall_ms"]),
                    ]
                )
            )
    return lines


def run_experiment(
    cfg: ExperimentConfig, jobs: int | None = None, output_dir: str | Path | None = None
) -> tuple[Path, Path]:
    """Run all (condition, seed) episodes; write metrics.csv and summary.json."""
    jobs = cfg.jobs if jobs is None else max(1, int(jobs))
    out_dir = Path(cfg.output_dir if output_dir is None else output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    pairs = [(cfg, c, s) for c in cfg.conditions() for s in cfg.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_episode_job, pairs))
    else:
        records = [_episode_job(p) for p in pairs]

    metrics_path = out_dir / "metrics.csv"
    lines = [METRICS_HEADER] + metrics_rows(records)
    metrics_path.write_text("\n".join(lines) + "\n")

    summary = compute_summary(cfg, records)
    summary_path = out_dir / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return metrics_path, summary_path
