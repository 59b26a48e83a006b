"""Receding-horizon robot planning against prediction tubes, and closed-loop
simulation with a scripted human.

The planner searches a depth-L tree of motion primitives (constant speed and
turn rate per stage) for a Dubins car, keeps only candidates that clear every
time-matched predicted set slice plus static obstacles by the safety radius,
and picks the survivor ending closest to the goal. When nothing is safe it
brakes in place and flags the cycle.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .beliefs import Belief, bayes_update
from .errors import RejectedInputError
from .grids import Grid, P_MIN
from .humans import HumanAction, HumanState, wrap_angle
from .predictors import (
    KIND_BA_FRS,
    KIND_BAYES,
    KIND_NAIVE,
    PredictionTube,
    predict_ba_frs,
    predict_bayes,
    predict_naive,
)
from .scenario import RobotSpec, Scenario, with_overrides


@dataclass(frozen=True)
class RobotState:
    s_x: float
    s_y: float
    phi: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.s_x, self.s_y, self.phi))):
            raise RejectedInputError("robot state must be finite")
        object.__setattr__(self, "phi", float(wrap_angle(self.phi)))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.s_x, self.s_y])


@dataclass(frozen=True)
class RobotControl:
    v: float
    omega: float


@dataclass
class SimLog:
    records: list[dict] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    FIELDS = (
        "t", "h_x", "h_y", "u_theta", "s_x", "s_y", "phi", "v", "omega",
        "p1", "tube_id", "replanned", "braking", "distance",
    )


def dubins_step(state: RobotState, control: RobotControl, dt: float) -> RobotState:
    return RobotState(
        state.s_x + control.v * math.cos(state.phi) * dt,
        state.s_y + control.v * math.sin(state.phi) * dt,
        state.phi + control.omega * dt,
    )


class _SliceTrees:
    """Nearest sub-zero-node lookup per tube slice."""

    def __init__(self, tube: PredictionTube):
        self.dt = tube.dt
        self.n = len(tube.sets.slices)
        grid = tube.sets.grid
        self.half_diag = 0.5 * math.hypot(*grid.spacing)
        mesh = grid.meshgrid()
        pts = np.column_stack([m.ravel() for m in mesh])
        self.trees = []
        for s in tube.sets.slices:
            inside = s.inside().ravel()
            self.trees.append(cKDTree(pts[inside]) if inside.any() else None)

    def clearance(self, point, t: float) -> float:
        """Distance from a point to the sub-zero node set of the slice at t."""
        idx = min(max(int(round(t / self.dt)), 0), self.n - 1)
        tree = self.trees[idx]
        if tree is None:
            return math.inf
        return float(tree.query(point)[0])


def _obstacle_clearance(point, obstacles) -> float:
    best = math.inf
    for cx, cy, r in obstacles:
        best = min(best, math.hypot(point[0] - cx, point[1] - cy) - r)
    return best


def plan(
    robot: RobotState,
    goal,
    tube: PredictionTube,
    horizon: float,
    dt: float,
    spec: RobotSpec,
) -> tuple[list[RobotControl], dict]:
    """Receding-horizon primitive search; returns per-dt controls and info.

    The emitted trajectory keeps (node-set distance) >= r_safe plus half a
    grid-cell diagonal from every time-matched slice, so the true set
    clearance stays >= r_safe; candidates are sampled densely at dt/5.
    """
    if tube.dt <= 0 or tube.times[-1] + 1e-9 < min(
        horizon, spec.stages * max(1, int(math.floor(horizon / spec.stages / dt))) * dt
    ):
        raise RejectedInputError("prediction tube does not cover the plan horizon")
    trees = _SliceTrees(tube)
    margin = spec.r_safe + trees.half_diag
    turns = np.linspace(-spec.omega_max, spec.omega_max, spec.n_turns)
    primitives = [RobotControl(v, float(w)) for v in spec.speeds for w in turns]
    n_per_stage = max(1, int(math.floor(horizon / spec.stages / dt)))
    fine = 5
    dt_fine = dt / fine
    (wx0, wy0), (wx1, wy1) = spec.workspace

    goal = np.asarray(goal, dtype=float)
    best: tuple | None = None
    best_controls: list[RobotControl] | None = None

    def descend(state: RobotState, stage: int, t: float, controls, effort_w, effort_v):
        nonlocal best, best_controls
        if stage == spec.stages:
            dist = float(np.hypot(state.s_x - goal[0], state.s_y - goal[1]))
            key = (dist, effort_w, effort_v)
            if best is None or key < best:
                best = key
                best_controls = list(controls)
            return
        for prim in primitives:
            s = state
            tt = t
            ok = True
            for _ in range(n_per_stage * fine):
                s = dubins_step(s, prim, dt_fine)
                tt += dt_fine
                if not (wx0 <= s.s_x <= wx1 and wy0 <= s.s_y <= wy1):
                    ok = False
                    break
                if trees.clearance((s.s_x, s.s_y), tt) < margin:
                    ok = False
                    break
                if _obstacle_clearance((s.s_x, s.s_y), spec.obstacles) < spec.r_safe:
                    ok = False
                    break
            if ok:
                controls.append(prim)
                descend(s, stage + 1, tt, controls,
                        effort_w + abs(prim.omega), effort_v + abs(prim.v))
                controls.pop()

    descend(robot, 0, 0.0, [], 0.0, 0.0)
    if best_controls is None:
        stop = RobotControl(0.0, 0.0)
        seq = [stop] * (spec.stages * n_per_stage)
        return seq, {"safe": False, "braking": True}
    seq = [c for c in best_controls for _ in range(n_per_stage)]
    return seq, {"safe": True, "braking": False, "terminal_distance": best[0]}


def _prediction_scenario(scenario: Scenario, human_xy, belief: Belief) -> Scenario:
    """Scenario windowed around the current human state for one replan cycle."""
    sim = scenario.sim
    w = sim.pred_halfwidth
    grid = Grid(
        (human_xy[0] - w, human_xy[1] - w),
        (human_xy[0] + w, human_xy[1] + w),
        sim.pred_counts,
    )
    return with_overrides(
        scenario,
        start=(float(human_xy[0]), float(human_xy[1])),
        prior=tuple(float(p) for p in belief.probs),
        human_grid=grid,
        belief_axis=(P_MIN, 1.0 - P_MIN, sim.pred_belief_count),
        horizon=scenario.robot.plan_horizon,
        init_radius=None,
    )


def _predict(scenario: Scenario, rng: np.random.Generator) -> PredictionTube:
    kind = scenario.sim.predictor
    if kind == KIND_NAIVE:
        return predict_naive(scenario)
    if kind == KIND_BA_FRS:
        return predict_ba_frs(scenario, scenario.sim.delta)
    if kind == KIND_BAYES:
        return predict_bayes(scenario, rng=rng)
    raise RejectedInputError(f"unknown predictor kind {kind!r}")


def run_closed_loop(scenario: Scenario) -> SimLog:
    """Observe -> update belief -> predict -> plan -> execute, in a fixed loop.

    The robot-side belief gets one discrete Bayes update per replan cycle from
    the human's last executed heading. Terminates on goal arrival, collision
    at the safety radius, or timeout; the log reproduces bit-for-bit for a
    fixed scenario and seed.
    """
    if scenario.robot is None or scenario.sim is None:
        raise RejectedInputError("closed-loop simulation needs robot and sim specs")
    spec = scenario.robot
    sim = scenario.sim
    rng = np.random.default_rng(scenario.seed)

    human = np.asarray(scenario.start, dtype=float)
    robot = RobotState(*spec.start)
    belief = scenario.prior_belief
    model = scenario.model

    dt = sim.dt
    steps_per_replan = max(1, int(round(spec.replan_period / dt)))
    n_steps = int(math.ceil(spec.timeout / dt))
    goal = np.asarray(spec.goal, dtype=float)

    log = SimLog()
    plan_queue: list[RobotControl] = []
    tube_id = -1
    braking = False
    last_action: float | None = None
    min_distance = math.inf
    collision = False
    time_to_goal: float | None = None
    replan_count = 0

    for step in range(n_steps + 1):
        t = step * dt
        replanned = False
        if step % steps_per_replan == 0:
            if last_action is not None:
                belief = bayes_update(
                    belief, HumanState(*human), HumanAction(last_action), model
                )
            pred_scenario = _prediction_scenario(scenario, human, belief)
            tube = _predict(pred_scenario, rng.spawn(1)[0])
            plan_queue, info = plan(
                robot, spec.goal, tube, spec.plan_horizon, dt, spec
            )
            braking = info["braking"]
            tube_id += 1
            replan_count += 1
            replanned = True

        distance = float(np.hypot(*(robot.xy - human)))
        min_distance = min(min_distance, distance)
        if distance < spec.r_safe:
            collision = True

        # scripted human heading, then synchronized Euler steps; the human
        # holds position once the scripted goal is reached
        gap = float(np.hypot(sim.human_goal[0] - human[0], sim.human_goal[1] - human[1]))
        if gap < 1e-9:
            u_theta = 0.0
            step_len = 0.0
            observed = False
        else:
            mu = math.atan2(sim.human_goal[1] - human[1], sim.human_goal[0] - human[0])
            if sim.human_sigma > 0:
                u_theta = float(wrap_angle(rng.normal(mu, sim.human_sigma)))
            else:
                u_theta = mu
            step_len = min(model.speed * dt, gap)
            observed = True
        control = plan_queue.pop(0) if plan_queue else RobotControl(0.0, 0.0)

        log.records.append({
            "t": round(t, 9),
            "h_x": human[0], "h_y": human[1], "u_theta": u_theta,
            "s_x": robot.s_x, "s_y": robot.s_y, "phi": robot.phi,
            "v": control.v, "omega": control.omega,
            "p1": belief.p1, "tube_id": tube_id,
            "replanned": int(replanned), "braking": int(braking),
            "distance": distance,
        })

        if collision:
            break
        if float(np.hypot(*(robot.xy - goal))) <= spec.goal_tol:
            time_to_goal = t
            break

        human = human + step_len * np.array([math.cos(u_theta), math.sin(u_theta)])
        robot = dubins_step(robot, control, dt)
        if observed:
            last_action = u_theta

    log.metrics = {
        "min_distance": min_distance,
        "collision": collision,
        "time_to_goal": time_to_goal,
        "timeout": time_to_goal is None and not collision,
        "replan_count": replan_count,
        "r_safe": spec.r_safe,
        "steps": len(log.records),
    }
    return log


def export_simlog(log: SimLog, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "log.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SimLog.FIELDS)
        writer.writeheader()
        for rec in log.records:
            writer.writerow({k: _fmt(rec[k]) for k in SimLog.FIELDS})
    (out / "metrics.json").write_text(json.dumps(log.metrics, sort_keys=True, indent=1))


def _fmt(value):
    if isinstance(value, float):
        return format(value, ".17g")
    return value
