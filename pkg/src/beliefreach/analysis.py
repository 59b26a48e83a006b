"""Confidence-time analysis: how quickly can observations pin down the true
intent parameter, in the best and the worst case?

For a hypothesized true parameter, only the headings that parameter makes
delta-likely can be observed. Every such heading carries evidence, so the
belief must eventually clear any confidence threshold; the question is how
fast. Both extremes come from one reachability computation on the joint
system: grow the high-confidence belief region backward through the reversed
joint dynamics, extremizing over the admissible headings. With the
maximizing Hamiltonian the grown region first covers the initial state at
the best-case time t_min (most informative observations); with the
minimizing Hamiltonian, at the worst-case time t_max (least informative).
The extremal observation sequences are the characteristics of those value
functions, replayed forward from the initial state.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .beliefs import Belief
from .errors import (
    InfeasibleThresholdError,
    NoTrajectoryError,
    RejectedInputError,
)
from .grids import LevelSetField, ReachTube, interpolate
from .humans import HumanState
from .joint import JointState, allowable_controls_truth, hamiltonian, joint_rate
from .predictors import initial_joint_field, make_truth_hamiltonian
from .scenario import AnalysisSpec, Scenario
from .solver import evolve, first_hitting_time


@dataclass(frozen=True)
class AnalysisResult:
    lambda_star: int
    t_min: float | None
    t_max: float | None
    control_seq_min: tuple[float, ...]  # realizes t_min (most informative)
    control_seq_max: tuple[float, ...]  # realizes t_max (least informative)
    belief_target: float
    meta: dict | None = None

    def __post_init__(self):
        if self.t_min is not None and self.t_max is not None:
            if self.t_min > self.t_max + 1e-9:
                raise RejectedInputError("t_min must not exceed t_max")


def _confidence_slab(scenario: Scenario, lambda_star: int, p_star: float) -> LevelSetField:
    """Implicit surface of the belief region {P(lambda_star) >= p_star}.

    The joint grid's belief coordinate is P(first support value); the slab is
    signed distance along that axis (uniform in the human position).
    """
    grid3 = scenario.joint_grid
    star = list(scenario.model.support).index(lambda_star)
    mesh_p = grid3.meshgrid()[2]
    values = (p_star - mesh_p) if star == 0 else (mesh_p - (1.0 - p_star))
    return LevelSetField(grid3, values, time=0.0)


def time_to_confidence(
    scenario: Scenario,
    lambda_star: int,
    p_star: float,
    delta: float,
    mode: str,
    horizon: float | None = None,
) -> tuple[float | None, ReachTube]:
    """Time for the belief to reach {P(lambda_star) >= p_star} at any position.

    mode='max' extremizes toward the most informative admissible headings and
    returns the best-case time t_min; mode='min' the least informative,
    returning the worst-case time t_max. The high-confidence region is grown
    through the reversed joint dynamics until it covers the initial state, so
    the tube's slice at time s holds every state that reaches confidence
    within s. Returns (hitting time or None, that tube), times quantized to
    the snapshot cadence.
    """
    if not 0.5 < p_star < 1.0:
        raise RejectedInputError("p_star must lie in (0.5, 1)")
    if mode not in ("max", "min"):
        raise RejectedInputError("mode must be 'max' or 'min'")
    horizon = horizon if horizon is not None else (
        scenario.analysis.horizon if scenario.analysis else scenario.horizon
    )
    ham = make_truth_hamiltonian(scenario, lambda_star, delta, mode, reverse=True)
    tube = evolve(
        _confidence_slab(scenario, lambda_star, p_star),
        ham,
        scenario.solver.config(horizon, scenario.snapshot_dt),
    )
    start_nodes = initial_joint_field(scenario).values <= 0.0
    hit = first_hitting_time(tube, start_nodes)
    return hit, tube


def extract_optimal_controls(
    joint_tube: ReachTube,
    mode: str,
    scenario: Scenario,
    lambda_star: int,
    delta: float,
    p_star: float,
) -> tuple[float, ...]:
    """Observation sequence realizing the tube's confidence time.

    Replays the tube's characteristics forward from the initial state: at
    elapsed time t the snapshot holding the remaining time-to-confidence
    applies, and the arg-extremal admissible heading of grad V . f is taken
    (central-difference gradients, ties to the lowest control index). On
    these backward-grown tubes the value increases away from the confidence
    region, so the most informative heading minimizes grad V . f and the
    least informative maximizes it.
    """
    if mode not in ("max", "min"):
        raise RejectedInputError("mode must be 'max' or 'min'")
    grid3 = joint_tube.grid
    start_nodes = initial_joint_field(scenario).values <= 0.0
    hit_idx = None
    for k, s in enumerate(joint_tube.slices):
        if np.any(s.inside() & start_nodes):
            hit_idx = k
            break
    if hit_idx is None:
        raise NoTrajectoryError("the tube never reaches the initial state")

    model = scenario.model
    params = scenario.belief_params
    cg = scenario.control_grid
    dt = joint_tube.dt
    replay_extremum = "min" if mode == "max" else "max"

    p1 = float(np.clip(scenario.prior[0], grid3.mins[2], grid3.maxs[2]))
    z = np.array([scenario.start[0], scenario.start[1], p1])
    controls: list[float] = []
    for j in range(hit_idx):
        snap = joint_tube.slices[hit_idx - j]
        grads = np.gradient(snap.values, *grid3.spacing)
        zc = np.clip(z, grid3.mins, grid3.maxs)
        grad = np.array([interpolate(grid3, g, zc) for g in grads])
        state = JointState(HumanState(zc[0], zc[1]), Belief.from_p1(zc[2]))
        cs = allowable_controls_truth(state.x, lambda_star, delta, model, cg)
        _, u = hamiltonian(state, grad, cs, replay_extremum, model, params)
        controls.append(u.theta)
        rate = joint_rate(state, u, model, params)
        z = zc + dt * np.array([rate[0], rate[1], rate[2]])
    return tuple(controls)


def analyze_hypothesis(
    scenario: Scenario, lambda_star: int, spec: AnalysisSpec | None = None
) -> AnalysisResult:
    """Both confidence times and their extremal observation sequences for one
    hypothesized true parameter."""
    spec = spec or scenario.analysis or AnalysisSpec()
    t_min, tube_min_time = time_to_confidence(
        scenario, lambda_star, spec.p_star, spec.delta, "max", spec.horizon
    )
    t_max, tube_max_time = time_to_confidence(
        scenario, lambda_star, spec.p_star, spec.delta, "min", spec.horizon
    )
    seq_min: tuple[float, ...] = ()
    seq_max: tuple[float, ...] = ()
    if t_min is not None:
        seq_min = extract_optimal_controls(
            tube_min_time, "max", scenario, lambda_star, spec.delta, spec.p_star
        )
    if t_max is not None:
        seq_max = extract_optimal_controls(
            tube_max_time, "min", scenario, lambda_star, spec.delta, spec.p_star
        )
    return AnalysisResult(
        lambda_star=lambda_star,
        t_min=t_min,
        t_max=t_max,
        control_seq_min=seq_min,
        control_seq_max=seq_max,
        belief_target=spec.p_star,
        meta={"delta": spec.delta, "horizon": spec.horizon},
    )


def combine_hypotheses(
    results: list[AnalysisResult],
) -> tuple[float | None, float | None]:
    """Overall (T_min, T_max): the minimum over hypotheses of each time."""
    t_mins = [r.t_min for r in results if r.t_min is not None]
    t_maxs = [r.t_max for r in results if r.t_max is not None]
    return (min(t_mins) if t_mins else None, min(t_maxs) if t_maxs else None)


def analyze_scenario(scenario: Scenario) -> dict:
    """Run every hypothesis in the analysis spec (default: the full support).

    Hypotheses whose delta exceeds their policy's peak density are reported
    as infeasible rather than aborting the run.
    """
    spec = scenario.analysis or AnalysisSpec()
    hypotheses = spec.hypotheses or tuple(scenario.model.support)
    results = []
    infeasible = {}
    for lam in hypotheses:
        try:
            results.append(analyze_hypothesis(scenario, lam, spec))
        except InfeasibleThresholdError as exc:
            infeasible[int(lam)] = {"delta": exc.delta, "peak": exc.peak}
    t_min, t_max = combine_hypotheses(results)
    return {
        "scenario": scenario.digest(),
        "p_star": spec.p_star,
        "delta": spec.delta,
        "horizon": spec.horizon,
        "hypotheses": [
            {
                "lambda_star": r.lambda_star,
                "t_min": r.t_min,
                "t_max": r.t_max,
                "control_seq_min": list(r.control_seq_min),
                "control_seq_max": list(r.control_seq_max),
                "belief_target": r.belief_target,
            }
            for r in results
        ],
        "infeasible": infeasible,
        "t_min": t_min,
        "t_max": t_max,
    }


def export_analysis(report: dict, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "analysis.json").write_text(json.dumps(report, sort_keys=True, indent=1))
