"""Command-line entry point: run, oracle, sweep, validate.

Outputs land in --out, else the config's out_dir, else $GNELEARN_OUT, else
./runs. Exit code 0 means every piece of requested work succeeded; partial
trace files are flagged in their sidecar metadata.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import configio
from .learner import (LearnerDivergence, RunConfig, Trace, attach_reference,
                      run, write_trace_csv)
from .oracle import (ConvergenceError, MethodDisagreement, NotStronglyMonotone,
                     check_regularization_bounds, estimate_constants, fit_rate,
                     mean_distance_curve, solve_vgne)
from .validate import SUITES, run_suite

DEFAULT_OUT_ENV = "GNELEARN_OUT"


def _out_dir(args, cfg=None) -> Path:
    if getattr(args, "out", None):
        out = Path(args.out)
    elif cfg is not None and cfg.out_dir:
        out = Path(cfg.out_dir)
    else:
        out = Path(os.environ.get(DEFAULT_OUT_ENV, "runs"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _load_experiment(args) -> configio.ExperimentConfig:
    cfg = configio.load_experiment(args.config)
    if getattr(args, "seeds", None):
        cfg = configio.ExperimentConfig.from_dict(
            {**cfg.to_dict(), "seeds": [int(s) for s in args.seeds]})
    return cfg


def _run_one_seed(game, schedule, cfg, seed: int, out: Path, reference) -> Trace:
    run_cfg = RunConfig(game=game, schedule=schedule, horizon=cfg.horizon, seed=seed,
                        record_stride=cfg.record_stride or max(1, cfg.horizon // 100))
    path = out / f"trace_seed{seed}.csv"
    try:
        trace = run(run_cfg)
    except LearnerDivergence as exc:
        partial = Trace(records=getattr(exc, "partial_records", ()), config=run_cfg)
        write_trace_csv(partial, path, extra_metadata={"error": str(exc)}, partial=True)
        raise
    if reference is not None:
        trace = attach_reference(trace, reference.primal)
    write_trace_csv(trace, path)
    return trace


def cmd_run(args) -> int:
    cfg = _load_experiment(args)
    out = _out_dir(args, cfg)
    game = cfg.load_game()
    schedule = cfg.schedule()
    reference = solve_vgne(game) if cfg.attach_reference else None
    for seed in cfg.seeds:
        trace = _run_one_seed(game, schedule, cfg, seed, out, reference)
        last = trace.records[-1]
        line = f"seed {seed}: {len(trace.records)} rows, final t={last.t}"
        if last.dist_vgne is not None:
            line += f", dist_vgne={last.dist_vgne:.6g}"
        print(line)
    return 0


def cmd_oracle(args) -> int:
    game = configio.load_game(args.game if args.game else
                              configio.load_experiment(args.config).game)
    out = _out_dir(args)
    consts = estimate_constants(game)
    ref = solve_vgne(game)
    slack = game.coupling_offset - game.coupling_matrix @ ref.primal
    lo_margin = ref.primal - game.joint_lower()
    up_margin = game.joint_upper() - ref.primal
    activity = {
        "coupling_slack": slack.tolist(),
        "coupling_active": [bool(s <= 1e-6) for s in slack],
        "box_lower_margin": lo_margin.tolist(),
        "box_upper_margin": up_margin.tolist(),
        "all_inactive": bool(slack.min() > 1e-6 and lo_margin.min() > 1e-6
                             and up_margin.min() > 1e-6),
    }
    report = check_regularization_bounds(game, args.eps, reference=ref, constants=consts)
    ref_path = out / f"reference_{game.name or 'game'}.json"
    configio.save_reference(ref, ref_path, consts, extra={"constraint_activity": activity})
    (out / f"regularization_{game.name or 'game'}.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"v-GNE primal: [{', '.join(_fmt(v) for v in ref.primal)}]")
    print(f"dual: [{', '.join(_fmt(v) for v in ref.dual)}]  |lam*| = {np.linalg.norm(ref.dual):.6g}")
    print(f"method: {ref.method}  residual: {ref.residual:.3e}")
    print(f"nu = {consts.nu:.6g}  L = {consts.lip:.6g}")
    print("interior equilibrium" if activity["all_inactive"]
          else "active constraints present")
    print(f"regularization bounds ok: {report['ok']}")
    print(f"wrote {ref_path}")
    return 0 if report["ok"] else 1


def cmd_sweep(args) -> int:
    cfg = _load_experiment(args)
    if len(cfg.seeds) < 20:
        print(f"error: sweeps need at least 20 seeds, got {len(cfg.seeds)}", file=sys.stderr)
        return 2
    out = _out_dir(args, cfg)
    game = cfg.load_game()
    schedule = cfg.schedule()
    reference = solve_vgne(game)
    traces = []
    feasible = True
    max_dual = 0.0
    for seed in cfg.seeds:
        trace = _run_one_seed(game, schedule, cfg, seed, out, reference)
        traces.append(trace)
        states = trace.states()
        feasible &= bool(np.all(states >= game.joint_lower() - 1e-12)
                         and np.all(states <= game.joint_upper() + 1e-12)
                         and np.all(trace.duals() >= 0.0))
        max_dual = max(max_dual, trace.max_dual_norm())
    times, mean_d, std_d = mean_distance_curve(traces, reference.primal)
    agg_path = out / "sweep_mean.csv"
    with open(agg_path, "w") as fh:
        fh.write("t,mean_dist,std_dist\n")
        for t, m, s in zip(times, mean_d, std_d):
            fh.write(f"{t},{_fmt(m)},{_fmt(s)}\n")
    window = cfg.rate_window or (max(10, cfg.horizon // 100), cfg.horizon)
    fit = fit_rate(traces, reference.primal, window)
    fit_report = {
        "slope": fit.slope,
        "stderr": fit.stderr,
        "window": list(window),
        "times": fit.times.tolist(),
        "mean_sq_dist": fit.mean_sq.tolist(),
        "seeds": list(cfg.seeds),
        "max_dual_norm": max_dual,
        "dual_norm_cap": 100.0 * (1.0 + float(np.linalg.norm(reference.dual))),
        "iterates_feasible": feasible,
        "mode": cfg.mode,
    }
    (out / "rate_fit.json").write_text(json.dumps(fit_report, indent=2, sort_keys=True) + "\n")
    print(f"sweep: {len(traces)} seeds, slope {fit.slope:.4f} +- {fit.stderr:.4f} "
          f"over t in {list(window)}")
    print(f"mean dist: initial {mean_d[0]:.4g}, final {mean_d[-1]:.4g}; "
          f"max |lam| {max_dual:.4g}; feasible {feasible}")
    print(f"wrote {agg_path}")
    return 0


def cmd_validate(args) -> int:
    game = configio.load_game(args.game) if args.game else None
    report = run_suite(args.suite, game)
    text = json.dumps(report, indent=2, sort_keys=True, default=float)
    print(text)
    if args.out:
        out = _out_dir(args)
        (out / f"validate_{args.suite}.json").write_text(text + "\n")
    return 0 if report["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gnelearn",
        description="Learn variational generalized Nash equilibria from payoff feedback.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the learner for each configured seed")
    p_run.add_argument("--config", required=True, help="experiment config file (JSON)")
    p_run.add_argument("--out", help="output directory")
    p_run.add_argument("--seed", dest="seeds", action="append",
                       help="override config seeds (repeatable)")
    p_run.set_defaults(fn=cmd_run)

    p_or = sub.add_parser("oracle", help="compute the reference equilibrium and constants")
    group = p_or.add_mutually_exclusive_group(required=True)
    group.add_argument("--game", help="builtin game name or game file")
    group.add_argument("--config", help="experiment config to take the game from")
    p_or.add_argument("--out", help="output directory")
    p_or.add_argument("--eps", type=float, nargs="+",
                      default=[1e-1, 1e-2, 1e-3, 1e-4],
                      help="regularization levels for the bounds report")
    p_or.set_defaults(fn=cmd_oracle)

    p_sw = sub.add_parser("sweep", help="replicate a run over >= 20 seeds and fit the rate")
    p_sw.add_argument("--config", required=True)
    p_sw.add_argument("--out", help="output directory")
    p_sw.add_argument("--seed", dest="seeds", action="append",
                      help="override config seeds (repeatable)")
    p_sw.set_defaults(fn=cmd_sweep)

    p_va = sub.add_parser("validate", help="run a property suite and report pass/fail")
    p_va.add_argument("--suite", required=True, choices=sorted(SUITES),
                      help="property suite name")
    p_va.add_argument("--game", help="game for game-dependent suites")
    p_va.add_argument("--out", help="also write the JSON report here")
    p_va.set_defaults(fn=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except NotStronglyMonotone as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, MethodDisagreement, LearnerDivergence) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
