"""The three human-motion predictors.

  naive   -- forward reachable set under every heading (worst case).
  ba_frs  -- reachability in the joint position/belief space, restricted to
             headings whose mixture density under the evolving belief clears
             a threshold delta; projected onto the human plane.
  bayes   -- stochastic baseline: particles carrying (position, belief),
             binned into per-slice occupancy grids; its likely-state sets are
             superlevel sets holding a requested probability mass.

All predictors share one snapshot cadence so tubes compare slice by slice.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .beliefs import Belief
from .errors import InfeasibleThresholdError, RejectedInputError
from .grids import (
    Grid,
    LevelSetField,
    OccupancySlice,
    ReachTube,
    export_field,
    import_field,
    make_ball_field,
    make_ellipsoid_field,
    project_to_human_space,
)
from .humans import (
    HumanState,
    PolicyModel,
    likelihood_at,
    likelihood_tables,
    wrap_angle,
)
from .joint import JointState, allowable_controls_belief
from .scenario import Scenario
from .solver import evolve, evolve_chain

KIND_NAIVE = "naive"
KIND_BA_FRS = "ba_frs"
KIND_BAYES = "bayes"


@dataclass(frozen=True)
class PredictionTube:
    """Per-snapshot predicted human-state sets, plus predictor-specific extras."""

    kind: str
    sets: ReachTube
    occupancy: tuple[OccupancySlice, ...] | None = None
    joint: ReachTube | None = None
    meta: dict | None = None

    @property
    def dt(self) -> float:
        return self.sets.dt

    @property
    def times(self) -> np.ndarray:
        return self.sets.times


# ---------------------------------------------------------------------------
# Hamiltonian builders
# ---------------------------------------------------------------------------

def make_naive_hamiltonian(scenario: Scenario):
    """Max of grad . velocity over every control-grid heading (2-D grids)."""
    v = scenario.model.speed
    angles = scenario.control_grid.angles
    vx = v * np.cos(angles)
    vy = v * np.sin(angles)

    def ham(gm, gp):
        gx = 0.5 * (gm[0] + gp[0])
        gy = 0.5 * (gm[1] + gp[1])
        out = np.full(gx.shape, -np.inf)
        for c in range(len(angles)):
            np.maximum(out, vx[c] * gx + vy[c] * gy, out=out)
        return out, (v, v)

    return ham


def _clamp_belief_rows(rate: np.ndarray) -> np.ndarray:
    """Freeze outward rates at the first/last belief rows so characteristics
    cannot exit the axis (clamped dynamics)."""
    rate[..., 0] = np.maximum(rate[..., 0], 0.0)
    rate[..., -1] = np.minimum(rate[..., -1], 0.0)
    return rate


def _belief_rate_tables(scenario: Scenario, grid3: Grid, clamp: bool = True):
    """Per-control belief rates and mixture densities on the joint grid.

    Returns (pdot, mix) with shape (M, nx, ny, np): d(p_1)/dt and the mixture
    density for each control heading at each joint node, with outward rates
    frozen at the belief-axis edges unless clamp=False. Only two-value
    supports fit on a 3-D grid.
    """
    model = scenario.model
    if model.n_params != 2:
        raise RejectedInputError("joint-grid predictors require a two-value support")
    cg = scenario.control_grid
    xs, ys, ps = (grid3.axis(d) for d in range(3))
    tables = likelihood_tables(model, cg, xs, ys)  # (2, M, nx, ny)
    p = ps[None, :]  # broadcast over (nodes, p)
    shape = (cg.count,) + grid3.shape
    pdot = np.empty(shape)
    mix = np.empty(shape)
    gamma = scenario.gamma
    for c in range(cg.count):
        l1 = tables[0, c][..., None]  # density under the first support value
        l2 = tables[1, c][..., None]
        m = l1 * p + l2 * (1.0 - p)
        post = np.divide(l1 * p, m, out=np.zeros_like(m), where=m > 0)
        rate = gamma * (post - p)
        pdot[c] = _clamp_belief_rows(rate) if clamp else rate
        mix[c] = m
    return pdot, mix


def _masked_joint_hamiltonian(
    scenario, pdot, mask, mode="max", alpha_p=None, speed_sign=1.0
):
    """Extremum of grad . f over the per-node admissible control masks.

    Nodes whose admissible set is empty get a zero Hamiltonian (frozen state);
    the scenarios in this package keep mixture peaks above every delta in use,
    so this path is a safeguard rather than a modeled behavior.
    """
    v = scenario.model.speed
    angles = scenario.control_grid.angles
    vx = speed_sign * v * np.cos(angles)
    vy = speed_sign * v * np.sin(angles)
    if alpha_p is None:
        # alpha_x = alpha_y = speed; alpha_p bounds |pdot| over the admissible
        # controls at each node (local LF), exactly |dH/d(grad_p)| there.
        alpha_p = np.max(np.abs(pdot) * mask, axis=0)
    if scenario.solver.dissipation == "global":
        alpha_p = float(np.max(alpha_p))
    extremize = np.maximum if mode == "max" else np.minimum
    fill = -np.inf if mode == "max" else np.inf
    active = [c for c in range(len(angles)) if mask[c].any()]
    blocked = [~mask[c] if not mask[c].all() else None for c in range(len(angles))]

    def ham(gm, gp):
        gx = 0.5 * (gm[0] + gp[0])
        gy = 0.5 * (gm[1] + gp[1])
        gz = 0.5 * (gm[2] + gp[2])
        out = np.full(gx.shape, fill)
        cand = np.empty(gx.shape)
        for c in active:
            np.multiply(pdot[c], gz, out=cand)
            cand += vx[c] * gx
            cand += vy[c] * gy
            if blocked[c] is not None:
                cand[blocked[c]] = fill
            extremize(out, cand, out=out)
        out[~np.isfinite(out)] = 0.0
        return out, (v, v, alpha_p)

    return ham


def make_belief_threshold_hamiltonian(scenario: Scenario, delta: float, mode="max"):
    grid3 = scenario.joint_grid
    pdot, mix = _belief_rate_tables(scenario, grid3)
    mask = mix >= delta
    return _masked_joint_hamiltonian(scenario, pdot, mask, mode)


def make_truth_hamiltonian(
    scenario: Scenario,
    lambda_star: int,
    delta: float,
    mode="max",
    reverse: bool = False,
):
    """Joint Hamiltonian with controls admissible under one hypothesized
    ground-truth parameter; the belief still flows by the Bayes rule.

    reverse=True negates the joint dynamics, turning a forward solve into a
    backward reach of the initial surface (the control set itself is a
    likelihood statement and does not flip).
    """
    grid3 = scenario.joint_grid
    model = scenario.model
    if lambda_star not in model.support:
        raise RejectedInputError(f"lambda {lambda_star!r} is not in the support")
    cg = scenario.control_grid
    xs, ys, _ = (grid3.axis(d) for d in range(3))
    tables = likelihood_tables(model, cg, xs, ys)
    star = list(model.support).index(lambda_star)
    peak = float(tables[star].max())
    if peak < delta:
        raise InfeasibleThresholdError(delta, peak)
    pdot, _ = _belief_rate_tables(scenario, grid3, clamp=False)
    if reverse:
        pdot = -pdot
    _clamp_belief_rows(pdot)
    mask = np.broadcast_to(
        (tables[star] >= delta)[..., None], pdot.shape
    )
    return _masked_joint_hamiltonian(
        scenario, pdot, mask, mode, speed_sign=-1.0 if reverse else 1.0
    )


# ---------------------------------------------------------------------------
# Initial sets
# ---------------------------------------------------------------------------

def initial_human_field(scenario: Scenario) -> LevelSetField:
    grid = scenario.human_grid
    r = scenario.init_radius or 2.0 * max(grid.spacing)
    return make_ball_field(grid, scenario.start, r)


def initial_joint_field(scenario: Scenario) -> LevelSetField:
    """Two grid cells per axis around (start, prior); an ellipsoid because the
    position and belief axes carry incommensurate units."""
    grid3 = scenario.joint_grid
    h = grid3.spacing
    r_xy = scenario.init_radius or 2.0 * max(h[0], h[1])
    radii = (r_xy, r_xy, 2.0 * h[2])
    p1 = float(np.clip(scenario.prior[0], grid3.mins[2], grid3.maxs[2]))
    center = (scenario.start[0], scenario.start[1], p1)
    return make_ellipsoid_field(grid3, center, radii)


# ---------------------------------------------------------------------------
# Predictors
# ---------------------------------------------------------------------------

def _meta(scenario: Scenario, kind: str, grid: Grid, horizon: float, **extra) -> dict:
    meta = {
        "kind": kind,
        "scenario": scenario.digest(),
        "horizon": horizon,
        "snapshot_dt": scenario.snapshot_dt,
        "grid": grid.spec(),
    }
    meta.update(extra)
    return meta


def predict_naive(scenario: Scenario, horizon: float | None = None) -> PredictionTube:
    """Forward reachable set under all headings: a disc growing at the human speed."""
    horizon = horizon if horizon is not None else scenario.horizon
    init = initial_human_field(scenario)
    tube = evolve(
        init,
        make_naive_hamiltonian(scenario),
        scenario.solver.config(horizon, scenario.snapshot_dt),
    )
    return PredictionTube(
        kind=KIND_NAIVE,
        sets=tube,
        meta=_meta(scenario, KIND_NAIVE, scenario.human_grid, horizon),
    )


def _check_delta_feasible(scenario: Scenario, delta: float) -> None:
    # Raises InfeasibleThresholdError when delta clears the initial mixture peak.
    allowable_controls_belief(
        JointState(HumanState(*scenario.start), scenario.prior_belief),
        delta,
        scenario.model,
        scenario.control_grid,
    )


def _ba_frs_tube(scenario, delta, horizon, joint) -> PredictionTube:
    return PredictionTube(
        kind=KIND_BA_FRS,
        sets=project_to_human_space(joint),
        joint=joint,
        meta=_meta(scenario, KIND_BA_FRS, scenario.human_grid, horizon, delta=delta),
    )


def predict_ba_frs(
    scenario: Scenario, delta: float, horizon: float | None = None
) -> PredictionTube:
    """Belief-augmented reachable tube for one likelihood threshold delta."""
    horizon = horizon if horizon is not None else scenario.horizon
    _check_delta_feasible(scenario, delta)
    joint = evolve(
        initial_joint_field(scenario),
        make_belief_threshold_hamiltonian(scenario, delta),
        scenario.solver.config(horizon, scenario.snapshot_dt),
    )
    return _ba_frs_tube(scenario, delta, horizon, joint)


def predict_ba_frs_family(
    scenario: Scenario, deltas=None, horizon: float | None = None
) -> dict[float, PredictionTube]:
    """Belief-augmented tubes for several thresholds, co-marched as an ordered
    chain so the discrete sets nest exactly the way the exact sets do.

    Raising delta only shrinks the admissible control set, so the exact tubes
    are nested; evolve_chain preserves that ordering against second-order
    scheme noise. The per-threshold rate tables are shared, so this is also
    cheaper than independent solves.
    """
    horizon = horizon if horizon is not None else scenario.horizon
    deltas = tuple(deltas if deltas is not None else scenario.deltas)
    order = np.argsort(deltas)
    ordered = [float(deltas[i]) for i in order]
    for delta in ordered:
        _check_delta_feasible(scenario, delta)

    grid3 = scenario.joint_grid
    pdot, mix = _belief_rate_tables(scenario, grid3)
    hams = [
        _masked_joint_hamiltonian(scenario, pdot, mix >= delta) for delta in ordered
    ]
    init = initial_joint_field(scenario)
    joints = evolve_chain(
        [init] * len(ordered),
        hams,
        scenario.solver.config(horizon, scenario.snapshot_dt),
    )
    return {
        delta: _ba_frs_tube(scenario, delta, horizon, joint)
        for delta, joint in zip(ordered, joints)
    }


def _sample_mixture_headings(model, xs, beliefs, rng):
    """One heading per particle from its belief-weighted policy mixture."""
    n = xs.shape[0]
    u = rng.random(n)
    comp = (u[:, None] > np.cumsum(beliefs, axis=1)).sum(axis=1)
    comp = np.minimum(comp, beliefs.shape[1] - 1)
    theta = np.empty(n)
    for k, lam in enumerate(model.support):
        pick = comp == k
        if not np.any(pick):
            continue
        if model.variant == "straight_or_random" and lam == 1:
            theta[pick] = rng.uniform(-math.pi, math.pi, size=int(pick.sum()))
            continue
        if model.variant == "straight_or_random":
            mu = np.zeros(int(pick.sum()))
            sigma = model.sigmas[0]
        else:
            g = model.goals[lam]
            mu = np.arctan2(g[1] - xs[pick, 1], g[0] - xs[pick, 0])
            sigma = model.sigmas[lam]
        draws = rng.normal(mu, sigma)
        bad = np.abs(draws - mu) > math.pi
        while np.any(bad):
            draws[bad] = rng.normal(mu[bad], sigma)
            bad = np.abs(draws - mu) > math.pi
        theta[pick] = wrap_angle(draws)
    return theta


def _bin_occupancy(grid: Grid, xs: np.ndarray, time: float) -> OccupancySlice:
    hx, hy = grid.spacing
    edges_x = np.concatenate(
        [[grid.mins[0] - hx / 2], grid.axis(0) + hx / 2]
    )
    edges_y = np.concatenate(
        [[grid.mins[1] - hy / 2], grid.axis(1) + hy / 2]
    )
    counts, _, _ = np.histogram2d(xs[:, 0], xs[:, 1], bins=[edges_x, edges_y])
    return OccupancySlice(grid, counts / xs.shape[0], time=time)


def predict_bayes(
    scenario: Scenario,
    horizon: float | None = None,
    n_particles: int | None = None,
    rng: np.random.Generator | None = None,
    init_radius: float = 0.0,
) -> PredictionTube:
    """Particle realization of the stochastic predictor.

    Each particle carries (position, belief); per snapshot step it samples a
    heading from its belief mixture, moves by explicit Euler, and applies a
    discrete Bayes update with the sampled heading as the observation. The
    occupancy histogram per slice conserves mass by construction; the
    likely-state sets are the per-slice superlevel sets at the scenario's
    mass fraction. init_radius > 0 spreads the initial positions uniformly
    over a disc for set-to-set comparisons against ball-initialized tubes.
    """
    horizon = horizon if horizon is not None else scenario.horizon
    n = n_particles if n_particles is not None else scenario.particles
    if n < 10_000:
        raise RejectedInputError("the particle oracle needs at least 10^4 particles")
    rng = rng if rng is not None else np.random.default_rng(scenario.seed)
    model = scenario.model
    grid = scenario.human_grid
    dt = scenario.snapshot_dt
    n_steps = int(round(horizon / dt))

    xs = np.tile(np.asarray(scenario.start, dtype=float), (n, 1))
    if init_radius > 0:
        r = init_radius * np.sqrt(rng.random(n))
        ang = rng.uniform(-math.pi, math.pi, size=n)
        xs += np.column_stack([r * np.cos(ang), r * np.sin(ang)])
    beliefs = np.tile(np.asarray(scenario.prior, dtype=float), (n, 1))

    occupancy = [_bin_occupancy(grid, xs, 0.0)]
    for step in range(1, n_steps + 1):
        theta = _sample_mixture_headings(model, xs, beliefs, rng)
        xs = xs + model.speed * dt * np.column_stack([np.cos(theta), np.sin(theta)])
        like = likelihood_at(model, xs, theta)
        weighted = beliefs * like
        totals = weighted.sum(axis=1, keepdims=True)
        ok = totals[:, 0] > 0
        beliefs = np.where(ok[:, None], weighted / np.where(ok[:, None], totals, 1.0), beliefs)
        occupancy.append(_bin_occupancy(grid, xs, step * dt))

    epsilons = []
    slices = []
    for occ in occupancy:
        eps = epsilon_from_mass(occ, scenario.epsilon_mass)
        epsilons.append(eps)
        slices.append(LevelSetField(grid, eps - occ.mass, time=occ.time))
    return PredictionTube(
        kind=KIND_BAYES,
        sets=ReachTube(tuple(slices), dt=dt),
        occupancy=tuple(occupancy),
        meta=_meta(
            scenario,
            KIND_BAYES,
            grid,
            horizon,
            epsilon_mass=scenario.epsilon_mass,
            epsilons=epsilons,
            n_particles=n,
        ),
    )


def epsilon_from_mass(occ: OccupancySlice, q: float) -> float:
    """Largest threshold whose strict superlevel set holds mass fraction >= q.

    Ties resolve toward including more cells, so the reported set never
    under-covers the requested mass.
    """
    if not 0 < q < 1:
        raise RejectedInputError("mass fraction must lie in (0, 1)")
    flat = occ.mass.ravel()
    nz = flat[flat > 0]
    vals, counts = np.unique(nz, return_counts=True)
    vals, counts = vals[::-1], counts[::-1]  # descending
    running = np.cumsum(vals * counts)
    j = int(np.searchsorted(running, q - 1e-12))
    j = min(j, len(vals) - 1)
    return float(np.nextafter(vals[j], 0.0))


# ---------------------------------------------------------------------------
# Tube export / import (per-slice CSV plus one JSON meta file)
# ---------------------------------------------------------------------------

def export_tube(tube: PredictionTube, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = dict(tube.meta or {})
    meta["n_slices"] = len(tube.sets.slices)
    (out / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=1))
    for i, s in enumerate(tube.sets.slices):
        export_field(s, out / f"slice_{i:04d}.csv")
    if tube.occupancy is not None:
        for i, occ in enumerate(tube.occupancy):
            export_field(
                LevelSetField(occ.grid, occ.mass, time=occ.time),
                out / f"occupancy_{i:04d}.csv",
            )
    if tube.joint is not None:
        jdir = out / "joint"
        jdir.mkdir(exist_ok=True)
        for i, s in enumerate(tube.joint.slices):
            export_field(s, jdir / f"slice_{i:04d}.csv")


def load_tube_sets(tube_dir) -> tuple[dict, ReachTube]:
    """Read back the projected sets of an exported tube (for rendering)."""
    tube_dir = Path(tube_dir)
    meta = json.loads((tube_dir / "meta.json").read_text())
    grid = Grid.from_spec(meta["grid"])
    dt = float(meta["snapshot_dt"])
    slices = []
    for i in range(int(meta["n_slices"])):
        data = np.loadtxt(tube_dir / f"slice_{i:04d}.csv", delimiter=",", skiprows=1)
        values = data[:, -1].reshape(grid.shape)
        slices.append(LevelSetField(grid, values, time=i * dt))
    return meta, ReachTube(tuple(slices), dt=dt)
