"""Command-line front end: single runs, sweeps, reports, coverage checks.

Subcommands
    simulate   one run (learning, oracle, or both paired) -> CSV + JSON
    sweep      regret vs horizon over many seeds -> quartiles + fitted slope
    bounds     analysis-constant report -> JSON
    coverage   Monte Carlo concentration-event frequencies -> JSON
    riccati    one-shot solve for a parameter triple -> JSON on stdout

Every output byte is determined by (config, seed).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io as out_io
from .bounds import bound_report, check_events
from .config import ExperimentConfig
from .jmls import CandidateTheta, CostWeights, solve_jmls
from .ofu import EmptyConfidenceIntersection
from .simulate import run_oracle, run_ucb_ncs


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out", None) is not None:
        cfg.out_path = args.out
    return cfg


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    truth = cfg.truth()
    ac = cfg.algo_config()
    out = _out_dir(cfg)
    written: list[Path] = []

    records = {}
    if args.controller in ("ucb", "both"):
        records["ucb"] = run_ucb_ncs(truth, ac, cfg.seed, trace_estimates=args.trace)
    if args.controller in ("oracle", "both"):
        records["oracle"] = run_oracle(
            truth,
            cfg.T,
            cfg.seed,
            algo_config=ac if args.trace else None,
            trace_estimates=args.trace,
        )

    for name, rec in records.items():
        written.append(out_io.write_trajectory_csv(rec, out / f"trajectory_{name}.csv"))
        written.append(out_io.write_json(out_io.run_summary(rec), out / f"summary_{name}.json"))
        written.append(out_io.write_episodes_csv(rec, out / f"episodes_{name}.csv"))
        if args.trace:
            written.append(
                out_io.write_estimator_trace_csv(rec, out / f"estimator_trace_{name}.csv")
            )
    if args.controller == "both":
        written.append(
            out_io.write_paired_csv(records["ucb"], records["oracle"], out / "paired.csv")
        )
    for path in written:
        print(path)
    return 0


def _sweep_one(payload) -> tuple[int, int, float, float, float]:
    """Worker: one learning run; returns (T, seed, final regret, V1, V2)."""
    cfg_doc, T, seed = payload
    cfg = ExperimentConfig.from_dict(cfg_doc)
    ac = replace(cfg.algo_config(), T=T)
    rec = run_ucb_ncs(cfg.truth(), ac, seed)
    return T, seed, rec.final_regret, rec.v1_final, rec.v2_final


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    T_list = [int(s) for s in args.T_list.split(",") if s.strip()]
    if len(set(T_list)) != len(T_list):
        raise ValueError(f"duplicate horizon in T_list: {T_list}")
    if T_list != sorted(T_list):
        raise ValueError(f"T_list must be ascending, got {T_list}")
    if not T_list:
        raise ValueError("T_list is empty")
    n_runs = args.n_runs if args.n_runs is not None else cfg.n_runs
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    out = _out_dir(cfg)

    payloads = [
        (cfg.to_dict(), T, seed)
        for T in T_list
        for seed in range(cfg.seed, cfg.seed + n_runs)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_one, payloads))
    else:
        results = [_sweep_one(p) for p in payloads]
    results.sort(key=lambda r: (r[0], r[1]))  # deterministic aggregation order

    rows = []
    per_T = {}
    for T in T_list:
        finals = np.array([r[2] for r in results if r[0] == T])
        q25, q50, q75 = np.percentile(finals, [25.0, 50.0, 75.0])
        v1_med = float(np.median([r[3] for r in results if r[0] == T]))
        v2_med = float(np.median([r[4] for r in results if r[0] == T]))
        rows.append((T, q25, q50, q75))
        per_T[T] = {
            "regret_q25": float(q25),
            "regret_median": float(q50),
            "regret_q75": float(q75),
            "median_final_V1": v1_med,
            "median_final_V2": v2_med,
        }

    medians = np.array([row[2] for row in rows])
    if len(T_list) >= 2 and (medians > 0).all():
        exponent = float(
            np.polyfit(np.log(np.array(T_list, dtype=float)), np.log(medians), 1)[0]
        )
    else:
        exponent = float("nan")

    csv_path = out / "sweep.csv"
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("T,regret_q25,regret_median,regret_q75\n")
        for T, q25, q50, q75 in rows:
            fh.write(
                f"{T},{out_io.fmt(q25)},{out_io.fmt(q50)},{out_io.fmt(q75)}\n"
            )
    json_path = out_io.write_json(
        {
            "T_list": T_list,
            "n_runs": n_runs,
            "seed": cfg.seed,
            "per_T": {str(k): v for k, v in per_T.items()},
            "exponent": exponent,
        },
        out / "sweep.json",
    )
    print(csv_path)
    print(json_path)
    print(f"fitted regret-vs-T exponent: {exponent}")
    return 0


def cmd_bounds(args) -> int:
    cfg = _load_config(args)
    v1_final = v2_final = None
    if args.summary:
        with open(args.summary, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        v1_final = doc.get("final_V1")
        v2_final = doc.get("final_V2")
        if v1_final is None or v2_final is None:
            raise ValueError(
                f"summary {args.summary} lacks final_V1/final_V2; "
                "rerun simulate with a learning controller or --trace"
            )
    rep = bound_report(
        cfg.truth(),
        cfg.box(),
        delta=cfg.delta,
        T=cfg.T,
        L=cfg.L,
        alpha=cfg.alpha,
        eta=cfg.eta,
        epsilon=cfg.epsilon,
        lam=cfg.lam,
        v1_final=v1_final,
        v2_final=v2_final,
    )
    out = _out_dir(cfg)
    name = "bounds_report.json" if rep.variant == "apriori" else "bounds_report_aposteriori.json"
    path = out_io.write_json(rep.to_json_dict(), out / name)
    print(json.dumps(rep.to_json_dict(), indent=2))
    print(path, file=sys.stderr)
    return 0


def cmd_coverage(args) -> int:
    cfg = _load_config(args)
    n_runs = args.n_runs if args.n_runs is not None else cfg.n_runs
    res = check_events(
        cfg.truth(),
        cfg.algo_config(),
        n_runs,
        cfg.seed,
        controller=args.controller,
        t1=args.t1,
        t2=args.t2,
        jobs=args.jobs,
    )
    out = _out_dir(cfg)
    path = out_io.write_json(res.to_json_dict(), out / "coverage.json")
    print(json.dumps(res.to_json_dict(), indent=2))
    print(path, file=sys.stderr)
    return 0


def cmd_riccati(args) -> int:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        Q, R, sigma_w = cfg.Q, cfg.R, cfg.sigma_w
    else:
        Q, R, sigma_w = 1.0, 1.0, 1.0
    if args.Q is not None:
        Q = args.Q
    if args.R is not None:
        R = args.R
    if args.sigma_w is not None:
        sigma_w = args.sigma_w
    theta = CandidateTheta(args.A, args.B, args.p)
    sol = solve_jmls(theta, CostWeights(Q, R, sigma_w))
    print(
        json.dumps(
            {
                "A": theta.A,
                "B": theta.B,
                "p": theta.p,
                "Q": Q,
                "R": R,
                "sigma_w": sigma_w,
                "K0": sol.K0,
                "K1": sol.K1,
                "P0": sol.P0,
                "P1": sol.P1,
                "J": sol.J,
                "residual": sol.residual,
                "converged": sol.converged,
            },
            indent=2,
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ucbncs",
        description="Adaptive LQ control over a lossy actuation channel: "
        "simulations, regret sweeps, analysis reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=str, default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", type=str, default=None, help="override output directory")

    p_sim = sub.add_parser("simulate", help="run one simulation and write its logs")
    add_common(p_sim)
    p_sim.add_argument(
        "--controller",
        choices=("ucb", "oracle", "both"),
        default="both",
        help="which controller(s) to run; 'both' pairs them on one stream",
    )
    p_sim.add_argument(
        "--trace", action="store_true", help="also write the per-step estimator trace"
    )
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="median regret vs horizon over many seeds")
    add_common(p_sweep)
    p_sweep.add_argument(
        "--T-list",
        dest="T_list",
        type=str,
        default="2000,8000,32000",
        help="comma-separated ascending horizons",
    )
    p_sweep.add_argument("--n-runs", dest="n_runs", type=int, default=None)
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_sweep.set_defaults(func=cmd_sweep)

    p_bounds = sub.add_parser("bounds", help="evaluate the analysis-constant report")
    add_common(p_bounds)
    p_bounds.add_argument(
        "--summary",
        type=str,
        default=None,
        help="summary JSON of a finished run; switches the report to realized statistics",
    )
    p_bounds.set_defaults(func=cmd_bounds)

    p_cov = sub.add_parser("coverage", help="Monte Carlo concentration-event check")
    add_common(p_cov)
    p_cov.add_argument("--n-runs", dest="n_runs", type=int, default=None)
    p_cov.add_argument(
        "--controller", choices=("oracle", "ucb"), default="oracle",
        help="controller driving the exploration",
    )
    p_cov.add_argument("--t1", type=int, default=1, help="channel-deviation window start")
    p_cov.add_argument("--t2", type=int, default=None, help="channel-deviation window end")
    p_cov.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_cov.set_defaults(func=cmd_coverage)

    p_ric = sub.add_parser("riccati", help="one-shot solve for a parameter triple")
    p_ric.add_argument("--config", type=str, default=None)
    p_ric.add_argument("--A", type=float, required=True)
    p_ric.add_argument("--B", type=float, required=True)
    p_ric.add_argument("--p", type=float, required=True)
    p_ric.add_argument("--Q", type=float, default=None)
    p_ric.add_argument("--R", type=float, default=None)
    p_ric.add_argument("--sigma-w", dest="sigma_w", type=float, default=None)
    p_ric.set_defaults(func=cmd_riccati)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, EmptyConfidenceIntersection) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
