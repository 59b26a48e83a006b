"""Command-line entry point: predict / analyze / simulate / render.

Every command consumes a scenario JSON document and writes a deterministic
artifact set (CSV/JSON, plus SVG for render). Failures exit nonzero with a
machine-readable JSON error on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import analyze_scenario, export_analysis
from .errors import BeliefReachError
from .navsim import export_simlog, run_closed_loop
from .predictors import (
    export_tube,
    predict_ba_frs_family,
    predict_bayes,
    predict_naive,
)
from .render import render_prediction_dir, render_sim_dir
from .scenario import load_scenario, serialize_scenario, with_overrides


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beliefreach",
        description="Reachability-based human motion prediction and planning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True, help="scenario JSON file")
            p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--out", required=True, help="output directory")

    p_predict = sub.add_parser("predict", help="export prediction tubes")
    add_common(p_predict)
    p_predict.add_argument(
        "--delta", type=float, action="append", default=None,
        help="threshold override (repeatable)",
    )
    p_predict.add_argument(
        "--epsilon-mass", type=float, default=None, help="mass fraction override"
    )
    p_predict.add_argument(
        "--export-joint", action="store_true", help="also export joint-space slices"
    )

    p_analyze = sub.add_parser("analyze", help="confidence-time analysis")
    add_common(p_analyze)

    p_sim = sub.add_parser("simulate", help="closed-loop navigation run")
    add_common(p_sim)
    p_sim.add_argument(
        "--predictor", choices=["ba_frs", "bayes", "naive"], default=None,
        help="predictor override",
    )

    p_render = sub.add_parser("render", help="draw exported artifacts to SVG")
    p_render.add_argument("--in", dest="in_dir", required=True,
                          help="directory produced by predict or simulate")
    p_render.add_argument("--out", required=True, help="output directory")
    return parser


def _load(args):
    scenario = load_scenario(args.scenario)
    if getattr(args, "seed", None) is not None:
        scenario = with_overrides(scenario, seed=args.seed)
    return scenario


def _cmd_predict(args) -> None:
    scenario = _load(args)
    if args.delta:
        scenario = with_overrides(scenario, deltas=tuple(args.delta))
    if args.epsilon_mass is not None:
        scenario = with_overrides(scenario, epsilon_mass=args.epsilon_mass)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scenario.json").write_text(serialize_scenario(scenario))
    export_tube(predict_naive(scenario), out / "naive")
    export_tube(predict_bayes(scenario), out / "bayes")
    for delta, tube in predict_ba_frs_family(scenario).items():
        if not args.export_joint:
            tube = type(tube)(
                kind=tube.kind, sets=tube.sets, occupancy=tube.occupancy,
                joint=None, meta=tube.meta,
            )
        export_tube(tube, out / f"ba_frs_delta_{delta:.3f}")


def _cmd_analyze(args) -> None:
    scenario = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scenario.json").write_text(serialize_scenario(scenario))
    export_analysis(analyze_scenario(scenario), out)


def _cmd_simulate(args) -> None:
    scenario = _load(args)
    if args.predictor is not None:
        from dataclasses import replace

        scenario = with_overrides(
            scenario, sim=replace(scenario.sim, predictor=args.predictor)
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scenario.json").write_text(serialize_scenario(scenario))
    export_simlog(run_closed_loop(scenario), out)


def _cmd_render(args) -> None:
    in_dir = Path(args.in_dir)
    if (in_dir / "log.csv").exists():
        render_sim_dir(in_dir, args.out)
    else:
        render_prediction_dir(in_dir, args.out)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "predict": _cmd_predict,
        "analyze": _cmd_analyze,
        "simulate": _cmd_simulate,
        "render": _cmd_render,
    }
    try:
        handlers[args.command](args)
    except BeliefReachError as exc:
        print(
            json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}),
            file=sys.stderr,
        )
        return 1
    except OSError as exc:
        print(
            json.dumps({"error": {"type": "OSError", "message": str(exc)}}),
            file=sys.stderr,
        )
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
