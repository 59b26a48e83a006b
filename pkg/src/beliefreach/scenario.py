"""Scenario documents: parsing, validation, defaults, and serialization.

Scenarios are JSON objects. Unknown keys are rejected; all defaults that the
underlying experiments leave open (grids, gamma, speeds, geometry) are stored
explicitly in fixture files shipped with the package, so every run is fully
pinned by its scenario plus seed.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .beliefs import Belief, BeliefParams, zero_intrinsic_change
from .errors import ScenarioError
from .grids import Grid, P_MIN
from .humans import ControlGrid, PolicyModel
from .solver import SolverConfig

FIXTURE_DIR = Path(__file__).parent / "fixtures"

_INTRINSIC_CHANGE = {"zero": zero_intrinsic_change}


@dataclass(frozen=True)
class SolverOptions:
    cfl: float = 0.5
    scheme: int = 1
    time_integrator: str = "euler"
    dissipation: str = "local"

    def config(self, horizon: float, snapshot_dt: float) -> SolverConfig:
        return SolverConfig(
            horizon=horizon,
            snapshot_dt=snapshot_dt,
            cfl=self.cfl,
            scheme=self.scheme,
            time_integrator=self.time_integrator,
            dissipation=self.dissipation,
        )


@dataclass(frozen=True)
class RobotSpec:
    start: tuple[float, float, float]
    goal: tuple[float, float]
    v_max: float = 1.0
    omega_max: float = 1.5
    speeds: tuple[float, ...] = (0.5, 1.0)
    n_turns: int = 7
    stages: int = 3
    plan_horizon: float = 2.0
    replan_period: float = 1.0
    r_safe: float = 0.3
    goal_tol: float = 0.3
    timeout: float = 25.0
    obstacles: tuple[tuple[float, float, float], ...] = ()
    workspace: tuple[tuple[float, float], tuple[float, float]] = ((-5.0, -5.0), (5.0, 5.0))


@dataclass(frozen=True)
class SimSpec:
    human_goal: tuple[float, float]
    human_sigma: float = 0.0
    dt: float = 0.1
    predictor: str = "ba_frs"
    delta: float = 0.1
    pred_halfwidth: float = 1.6
    pred_counts: tuple[int, int] = (41, 41)
    pred_belief_count: int = 21


@dataclass(frozen=True)
class AnalysisSpec:
    p_star: float = 0.9
    delta: float = 0.3
    horizon: float = 8.0
    hypotheses: tuple[int, ...] = ()


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    model: PolicyModel
    start: tuple[float, float]
    prior: tuple[float, ...]
    gamma: float
    intrinsic_change: str
    control_count: int
    human_grid: Grid
    belief_axis: tuple[float, float, int]
    deltas: tuple[float, ...]
    epsilon_mass: float
    horizon: float
    snapshot_dt: float
    particles: int
    init_radius: float | None
    solver: SolverOptions
    robot: RobotSpec | None = None
    sim: SimSpec | None = None
    analysis: AnalysisSpec | None = None

    @property
    def joint_grid(self) -> Grid:
        g = self.human_grid
        lo, hi, n = self.belief_axis
        return Grid(
            g.mins + (lo,), g.maxs + (hi,), g.counts + (n,), g.names + ("p",)
        )

    @property
    def control_grid(self) -> ControlGrid:
        return self.model.control_grid

    @property
    def prior_belief(self) -> Belief:
        return Belief(np.array(self.prior))

    @property
    def belief_params(self) -> BeliefParams:
        return BeliefParams(self.gamma, _INTRINSIC_CHANGE[self.intrinsic_change])

    def digest(self) -> str:
        return hashlib.sha256(serialize_scenario(self).encode()).hexdigest()[:16]


def _require(cond: bool, path: str, constraint: str) -> None:
    if not cond:
        raise ScenarioError(path, constraint)


def _check_keys(obj: dict, path: str, allowed: set[str], required: set[str]) -> None:
    _require(isinstance(obj, dict), path, "must be an object")
    for key in obj:
        _require(key in allowed, f"{path}.{key}", "unknown key")
    for key in required:
        _require(key in obj, f"{path}.{key}", "required key is missing")


def _number(obj, path, lo=None, hi=None) -> float:
    _require(isinstance(obj, (int, float)) and not isinstance(obj, bool), path, "must be a number")
    v = float(obj)
    _require(math.isfinite(v), path, "must be finite")
    if lo is not None:
        _require(v >= lo, path, f"must be >= {lo}")
    if hi is not None:
        _require(v <= hi, path, f"must be <= {hi}")
    return v


def _integer(obj, path, lo=None) -> int:
    _require(isinstance(obj, int) and not isinstance(obj, bool), path, "must be an integer")
    if lo is not None:
        _require(obj >= lo, path, f"must be >= {lo}")
    return int(obj)


def _point(obj, path, n=2) -> tuple[float, ...]:
    _require(isinstance(obj, list) and len(obj) == n, path, f"must be a list of {n} numbers")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(obj))


def _parse_human(obj: dict, control_count: int) -> tuple[PolicyModel, tuple[float, float]]:
    _check_keys(
        obj, "human",
        {"variant", "goals", "sigmas", "sigma", "speed", "start"},
        {"variant"},
    )
    variant = obj["variant"]
    _require(
        variant in ("gaussian_goal", "straight_or_random"),
        "human.variant",
        "must be 'gaussian_goal' or 'straight_or_random'",
    )
    speed = _number(obj.get("speed", 0.6), "human.speed", lo=1e-9)
    start = _point(obj.get("start", [0.0, 0.0]), "human.start")
    if variant == "gaussian_goal":
        _require("goals" in obj, "human.goals", "required for gaussian_goal")
        goals = obj["goals"]
        _require(isinstance(goals, list) and len(goals) >= 2, "human.goals", "need >= 2 goals")
        goals = tuple(_point(g, f"human.goals[{i}]") for i, g in enumerate(goals))
        sigmas = obj.get("sigmas", [math.pi / 4] * len(goals))
        _require(
            isinstance(sigmas, list) and len(sigmas) == len(goals),
            "human.sigmas",
            "need one sigma per goal",
        )
        sigmas = tuple(
            _number(s, f"human.sigmas[{i}]", lo=1e-9) for i, s in enumerate(sigmas)
        )
        return PolicyModel.gaussian_goal(goals, sigmas, speed, control_count), start
    sigma = _number(obj.get("sigma", 0.1), "human.sigma", lo=1e-9)
    return PolicyModel.straight_or_random(sigma, speed, control_count), start


def _parse_grids(obj: dict) -> tuple[Grid, tuple[float, float, int]]:
    _check_keys(obj, "grids", {"human", "belief_axis"}, {"human"})
    hobj = obj["human"]
    _check_keys(hobj, "grids.human", {"mins", "maxs", "counts"}, {"mins", "maxs", "counts"})
    mins = _point(hobj["mins"], "grids.human.mins")
    maxs = _point(hobj["maxs"], "grids.human.maxs")
    counts = hobj["counts"]
    _require(
        isinstance(counts, list) and len(counts) == 2,
        "grids.human.counts",
        "must be a list of 2 integers",
    )
    counts = tuple(_integer(c, f"grids.human.counts[{i}]", lo=3) for i, c in enumerate(counts))
    for d in range(2):
        _require(maxs[d] > mins[d], "grids.human", f"axis {d}: max must exceed min")
    bobj = obj.get("belief_axis", {})
    _check_keys(bobj, "grids.belief_axis", {"min", "max", "count"}, set())
    lo = _number(bobj.get("min", P_MIN), "grids.belief_axis.min", lo=P_MIN - 1e-12)
    hi = _number(bobj.get("max", 1 - P_MIN), "grids.belief_axis.max", hi=1 - P_MIN + 1e-12)
    _require(hi > lo, "grids.belief_axis", "max must exceed min")
    n = _integer(bobj.get("count", 41), "grids.belief_axis.count", lo=3)
    return Grid(mins, maxs, counts), (lo, hi, n)


def _parse_solver(obj: dict) -> SolverOptions:
    _check_keys(
        obj, "solver", {"cfl", "scheme", "time_integrator", "dissipation"}, set()
    )
    opts = SolverOptions(
        cfl=_number(obj.get("cfl", 0.5), "solver.cfl", lo=1e-9, hi=1.0),
        scheme=_integer(obj.get("scheme", 1), "solver.scheme", lo=1),
        time_integrator=obj.get("time_integrator", "euler"),
        dissipation=obj.get("dissipation", "local"),
    )
    _require(opts.scheme in (1, 2), "solver.scheme", "must be 1 or 2")
    _require(
        opts.time_integrator in ("euler", "rk2"),
        "solver.time_integrator",
        "must be 'euler' or 'rk2'",
    )
    _require(
        opts.dissipation in ("local", "global"),
        "solver.dissipation",
        "must be 'local' or 'global'",
    )
    return opts


def _parse_robot(obj: dict) -> RobotSpec:
    _check_keys(
        obj, "robot",
        {"start", "goal", "v_max", "omega_max", "speeds", "n_turns", "stages",
         "plan_horizon", "replan_period", "r_safe", "goal_tol", "timeout",
         "obstacles", "workspace"},
        {"start", "goal"},
    )
    start = _point(obj["start"], "robot.start", n=3)
    goal = _point(obj["goal"], "robot.goal")
    v_max = _number(obj.get("v_max", 1.0), "robot.v_max", lo=1e-9)
    speeds = obj.get("speeds", [0.5 * v_max, v_max])
    _require(isinstance(speeds, list) and speeds, "robot.speeds", "must be a nonempty list")
    speeds = tuple(
        _number(s, f"robot.speeds[{i}]", lo=0.0, hi=v_max) for i, s in enumerate(speeds)
    )
    obstacles = obj.get("obstacles", [])
    _require(isinstance(obstacles, list), "robot.obstacles", "must be a list")
    parsed_obs = []
    for i, ob in enumerate(obstacles):
        _check_keys(ob, f"robot.obstacles[{i}]", {"center", "radius"}, {"center", "radius"})
        cx, cy = _point(ob["center"], f"robot.obstacles[{i}].center")
        parsed_obs.append((cx, cy, _number(ob["radius"], f"robot.obstacles[{i}].radius", lo=0.0)))
    ws = obj.get("workspace", {"mins": [-5.0, -5.0], "maxs": [5.0, 5.0]})
    _check_keys(ws, "robot.workspace", {"mins", "maxs"}, {"mins", "maxs"})
    wmins = _point(ws["mins"], "robot.workspace.mins")
    wmaxs = _point(ws["maxs"], "robot.workspace.maxs")
    replan = _number(obj.get("replan_period", 1.0), "robot.replan_period", lo=1e-9)
    plan_horizon = _number(obj.get("plan_horizon", 2.0), "robot.plan_horizon", lo=replan)
    return RobotSpec(
        start=start,
        goal=goal,
        v_max=v_max,
        omega_max=_number(obj.get("omega_max", 1.5), "robot.omega_max", lo=1e-9),
        speeds=speeds,
        n_turns=_integer(obj.get("n_turns", 7), "robot.n_turns", lo=2),
        stages=_integer(obj.get("stages", 3), "robot.stages", lo=1),
        plan_horizon=plan_horizon,
        replan_period=replan,
        r_safe=_number(obj.get("r_safe", 0.3), "robot.r_safe", lo=0.0),
        goal_tol=_number(obj.get("goal_tol", 0.3), "robot.goal_tol", lo=1e-9),
        timeout=_number(obj.get("timeout", 25.0), "robot.timeout", lo=1e-9),
        obstacles=tuple(parsed_obs),
        workspace=(wmins, wmaxs),
    )


def _parse_sim(obj: dict) -> SimSpec:
    _check_keys(
        obj, "sim",
        {"human_goal", "human_sigma", "dt", "predictor", "delta",
         "pred_halfwidth", "pred_counts", "pred_belief_count"},
        {"human_goal"},
    )
    predictor = obj.get("predictor", "ba_frs")
    _require(
        predictor in ("ba_frs", "bayes", "naive"),
        "sim.predictor",
        "must be 'ba_frs', 'bayes', or 'naive'",
    )
    counts = obj.get("pred_counts", [41, 41])
    _require(
        isinstance(counts, list) and len(counts) == 2,
        "sim.pred_counts",
        "must be a list of 2 integers",
    )
    return SimSpec(
        human_goal=_point(obj["human_goal"], "sim.human_goal"),
        human_sigma=_number(obj.get("human_sigma", 0.0), "sim.human_sigma", lo=0.0),
        dt=_number(obj.get("dt", 0.1), "sim.dt", lo=1e-9),
        predictor=predictor,
        delta=_number(obj.get("delta", 0.1), "sim.delta", lo=0.0),
        pred_halfwidth=_number(obj.get("pred_halfwidth", 1.6), "sim.pred_halfwidth", lo=1e-9),
        pred_counts=tuple(
            _integer(c, f"sim.pred_counts[{i}]", lo=3) for i, c in enumerate(counts)
        ),
        pred_belief_count=_integer(obj.get("pred_belief_count", 21), "sim.pred_belief_count", lo=3),
    )


def _parse_analysis(obj: dict) -> AnalysisSpec:
    _check_keys(
        obj, "analysis", {"p_star", "delta", "horizon", "hypotheses"}, set()
    )
    hyps = obj.get("hypotheses", [])
    _require(isinstance(hyps, list), "analysis.hypotheses", "must be a list")
    p_star = _number(obj.get("p_star", 0.9), "analysis.p_star")
    _require(0.5 < p_star < 1.0, "analysis.p_star", "must lie in (0.5, 1)")
    return AnalysisSpec(
        p_star=p_star,
        delta=_number(obj.get("delta", 0.3), "analysis.delta", lo=0.0),
        horizon=_number(obj.get("horizon", 8.0), "analysis.horizon", lo=1e-9),
        hypotheses=tuple(_integer(h, f"analysis.hypotheses[{i}]", lo=0) for i, h in enumerate(hyps)),
    )


TOP_KEYS = {
    "name", "seed", "human", "prior", "gamma", "intrinsic_change",
    "control_count", "grids", "deltas", "epsilon_mass", "horizon",
    "snapshot_dt", "particles", "init_radius", "solver", "robot", "sim",
    "analysis",
}


def parse_scenario(text: str) -> Scenario:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("$", f"invalid JSON: {exc}") from exc
    _check_keys(obj, "$", TOP_KEYS, {"seed", "human", "grids"})
    control_count = _integer(obj.get("control_count", 72), "control_count", lo=8)
    model, start = _parse_human(obj["human"], control_count)
    human_grid, belief_axis = _parse_grids(obj["grids"])

    prior = obj.get("prior", [1.0 / model.n_params] * model.n_params)
    _require(
        isinstance(prior, list) and len(prior) == model.n_params,
        "prior",
        f"must be a list of {model.n_params} probabilities",
    )
    prior = tuple(_number(p, f"prior[{i}]", lo=0.0, hi=1.0) for i, p in enumerate(prior))
    _require(abs(sum(prior) - 1.0) <= 1e-9, "prior", "must sum to 1")

    deltas = obj.get("deltas", [0.1])
    _require(isinstance(deltas, list) and deltas, "deltas", "must be a nonempty list")
    deltas = tuple(_number(d, f"deltas[{i}]", lo=0.0) for i, d in enumerate(deltas))

    horizon = _number(obj.get("horizon", 2.0), "horizon", lo=1e-9)
    snapshot_dt = _number(obj.get("snapshot_dt", 0.1), "snapshot_dt", lo=1e-9, hi=horizon)
    _require(
        abs(round(horizon / snapshot_dt) * snapshot_dt - horizon) < 1e-9,
        "snapshot_dt",
        "must divide the horizon",
    )

    init_radius = obj.get("init_radius")
    if init_radius is not None:
        init_radius = _number(init_radius, "init_radius", lo=1e-12)

    intrinsic = obj.get("intrinsic_change", "zero")
    _require(intrinsic in _INTRINSIC_CHANGE, "intrinsic_change", "must be 'zero'")

    scenario = Scenario(
        name=str(obj.get("name", "scenario")),
        seed=_integer(obj["seed"], "seed", lo=0),
        model=model,
        start=start,
        prior=prior,
        gamma=_number(obj.get("gamma", 1.0), "gamma", lo=0.0),
        intrinsic_change=intrinsic,
        control_count=control_count,
        human_grid=human_grid,
        belief_axis=belief_axis,
        deltas=deltas,
        epsilon_mass=_number(obj.get("epsilon_mass", 0.95), "epsilon_mass", lo=1e-9, hi=1 - 1e-9),
        horizon=horizon,
        snapshot_dt=snapshot_dt,
        particles=_integer(obj.get("particles", 100_000), "particles", lo=1),
        init_radius=init_radius,
        solver=_parse_solver(obj.get("solver", {})),
        robot=_parse_robot(obj["robot"]) if "robot" in obj else None,
        sim=_parse_sim(obj["sim"]) if "sim" in obj else None,
        analysis=_parse_analysis(obj["analysis"]) if "analysis" in obj else None,
    )
    return scenario


def scenario_to_dict(s: Scenario) -> dict:
    human: dict = {"variant": s.model.variant, "speed": s.model.speed, "start": list(s.start)}
    if s.model.variant == "gaussian_goal":
        human["goals"] = [list(g) for g in s.model.goals]
        human["sigmas"] = list(s.model.sigmas)
    else:
        human["sigma"] = s.model.sigmas[0]
    out: dict = {
        "name": s.name,
        "seed": s.seed,
        "human": human,
        "prior": list(s.prior),
        "gamma": s.gamma,
        "intrinsic_change": s.intrinsic_change,
        "control_count": s.control_count,
        "grids": {
            "human": {
                "mins": list(s.human_grid.mins),
                "maxs": list(s.human_grid.maxs),
                "counts": list(s.human_grid.counts),
            },
            "belief_axis": {
                "min": s.belief_axis[0],
                "max": s.belief_axis[1],
                "count": s.belief_axis[2],
            },
        },
        "deltas": list(s.deltas),
        "epsilon_mass": s.epsilon_mass,
        "horizon": s.horizon,
        "snapshot_dt": s.snapshot_dt,
        "particles": s.particles,
        "init_radius": s.init_radius,
        "solver": {
            "cfl": s.solver.cfl,
            "scheme": s.solver.scheme,
            "time_integrator": s.solver.time_integrator,
            "dissipation": s.solver.dissipation,
        },
    }
    if s.robot is not None:
        r = s.robot
        out["robot"] = {
            "start": list(r.start),
            "goal": list(r.goal),
            "v_max": r.v_max,
            "omega_max": r.omega_max,
            "speeds": list(r.speeds),
            "n_turns": r.n_turns,
            "stages": r.stages,
            "plan_horizon": r.plan_horizon,
            "replan_period": r.replan_period,
            "r_safe": r.r_safe,
            "goal_tol": r.goal_tol,
            "timeout": r.timeout,
            "obstacles": [
                {"center": [o[0], o[1]], "radius": o[2]} for o in r.obstacles
            ],
            "workspace": {"mins": list(r.workspace[0]), "maxs": list(r.workspace[1])},
        }
    if s.sim is not None:
        out["sim"] = {
            "human_goal": list(s.sim.human_goal),
            "human_sigma": s.sim.human_sigma,
            "dt": s.sim.dt,
            "predictor": s.sim.predictor,
            "delta": s.sim.delta,
            "pred_halfwidth": s.sim.pred_halfwidth,
            "pred_counts": list(s.sim.pred_counts),
            "pred_belief_count": s.sim.pred_belief_count,
        }
    if s.analysis is not None:
        out["analysis"] = {
            "p_star": s.analysis.p_star,
            "delta": s.analysis.delta,
            "horizon": s.analysis.horizon,
            "hypotheses": list(s.analysis.hypotheses),
        }
    return out


def serialize_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), sort_keys=True, indent=1)


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text())


def load_fixture(name: str) -> Scenario:
    return load_scenario(FIXTURE_DIR / f"{name}.json")


def with_overrides(s: Scenario, **kwargs) -> Scenario:
    """Functional update used by the CLI flags and the closed-loop replanner."""
    return replace(s, **kwargs)
