"""Delimited and JSON outputs with locale-free, reproducible formatting.

Floats are written with 17 significant digits and a plain decimal point,
so (config, seed) determines every output byte.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .simulate import ESTIMATOR_TRACE_COLUMNS, TrajectoryRecord

TRAJECTORY_COLUMNS = ("t", "x", "u", "ell", "w", "cost", "cum_cost", "regret")
EPISODE_COLUMNS = ("episode_index", "tau", "A", "B", "p", "J_selected")


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_trajectory_csv(record: TrajectoryRecord, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
        for i in range(record.T):
            fh.write(
                f"{record.t[i]},{fmt(record.x[i])},{fmt(record.u[i])},"
                f"{int(record.ell[i])},{fmt(record.w[i])},{fmt(record.cost[i])},"
                f"{fmt(record.cum_cost[i])},{fmt(record.regret[i])}\n"
            )
    return path


def write_episodes_csv(record: TrajectoryRecord, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(EPISODE_COLUMNS) + "\n")
        for ep in record.episodes:
            fh.write(
                f"{ep.episode_index},{ep.tau},{fmt(ep.A)},{fmt(ep.B)},"
                f"{fmt(ep.p)},{fmt(ep.J_selected)}\n"
            )
    return path


def write_estimator_trace_csv(record: TrajectoryRecord, path: str | Path) -> Path:
    if record.estimator_trace is None:
        raise ValueError("record carries no estimator trace; rerun with tracing on")
    path = Path(path)
    trace = record.estimator_trace
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(ESTIMATOR_TRACE_COLUMNS) + "\n")
        for row in trace:
            fh.write(
                f"{int(row[0])}," + ",".join(fmt(v) for v in row[1:]) + "\n"
            )
    return path


def run_summary(record: TrajectoryRecord) -> dict:
    """Per-run summary document; final_V1/final_V2 feed the a-posteriori
    variant of the analysis report and are NaN-free only for traced or
    learning runs."""
    return {
        "seed": record.seed,
        "controller": record.controller,
        "T": record.T,
        "final_regret": record.final_regret,
        "max_abs_x": record.max_abs_x,
        "episodes": len(record.episodes),
        "final_V1": _none_if_nan(record.v1_final),
        "final_V2": _none_if_nan(record.v2_final),
        "J_star": record.J_star,
        "total_cost": record.total_cost,
        "warnings": list(record.warnings),
    }


def _none_if_nan(value: float):
    return None if value != value else value


def write_json(doc: dict, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return path


def write_paired_csv(
    ucb: TrajectoryRecord, oracle: TrajectoryRecord, path: str | Path
) -> Path:
    """Paired comparison under common random numbers: regret difference per t."""
    if ucb.T != oracle.T:
        raise ValueError("paired records must share the horizon")
    if not np.array_equal(ucb.ell, oracle.ell) or not np.array_equal(
        ucb.w, oracle.w
    ):
        raise ValueError("paired records must share channel and noise streams")
    path = Path(path)
    diff = ucb.regret - oracle.regret
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,regret_ucb,regret_oracle,regret_diff\n")
        for i in range(ucb.T):
            fh.write(
                f"{ucb.t[i]},{fmt(ucb.regret[i])},"
                f"{fmt(oracle.regret[i])},{fmt(diff[i])}\n"
            )
    return path
