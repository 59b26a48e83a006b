"""Planar human kinematics and parameterized stochastic heading policies.

The human moves at constant speed with heading as the control:
xdot = [v * cos(theta), v * sin(theta)]. Policies are densities over the
heading in 1/radian; Gaussian components are truncated to (-pi, pi] and
renormalized so that rectangle-rule quadrature over the model's control grid
sums to one exactly. That keeps Gaussian and uniform components comparable
when thresholding, at the price of tying each model to a control
discretization (carried as PolicyModel.control_count).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGoalError, RejectedInputError

TWO_PI = 2.0 * math.pi
UNIFORM_DENSITY = 1.0 / TWO_PI

GAUSSIAN_GOAL = "gaussian_goal"
STRAIGHT_OR_RANDOM = "straight_or_random"

# Below this distance the human counts as arrived and the goal heading is
# undefined; policy evaluation falls back to a uniform density there (D4).
ARRIVAL_TOL = 1e-9


def wrap_angle(theta):
    """Wrap angles into (-pi, pi]."""
    return math.pi - np.remainder(math.pi - np.asarray(theta, dtype=float), TWO_PI)


@dataclass(frozen=True)
class HumanState:
    h_x: float
    h_y: float

    def __post_init__(self):
        if not (math.isfinite(self.h_x) and math.isfinite(self.h_y)):
            raise RejectedInputError("human state must be finite")

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.h_x, self.h_y])


@dataclass(frozen=True)
class HumanAction:
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(wrap_angle(self.theta)))


@dataclass(frozen=True)
class ControlGrid:
    """Uniform discretization of the heading circle, covering (-pi, pi]."""

    count: int = 72

    def __post_init__(self):
        if self.count < 8:
            raise RejectedInputError("control grid needs at least 8 headings")

    @property
    def spacing(self) -> float:
        return TWO_PI / self.count

    @property
    def angles(self) -> np.ndarray:
        return -math.pi + self.spacing * np.arange(1, self.count + 1)


@dataclass(frozen=True)
class PolicyModel:
    """Stochastic heading policy indexed by the intent parameter lambda.

    Variants:
      gaussian_goal: one Gaussian per candidate goal, mean pointing at the goal.
      straight_or_random: Gaussian around heading 0 (lambda=0, "rational") or
        uniform over the circle (lambda=1, "irrational").

    control_count fixes the heading discretization that normalizes the
    Gaussian components (and that downstream threshold sweeps use).
    """

    variant: str
    speed: float
    sigmas: tuple[float, ...]
    goals: tuple[tuple[float, float], ...] = ()
    control_count: int = 72

    def __post_init__(self):
        if self.variant not in (GAUSSIAN_GOAL, STRAIGHT_OR_RANDOM):
            raise RejectedInputError(f"unknown policy variant {self.variant!r}")
        if self.speed <= 0 or not math.isfinite(self.speed):
            raise RejectedInputError("speed must be positive and finite")
        if any(s <= 0 for s in self.sigmas):
            raise RejectedInputError("sigmas must be positive")
        if self.control_count < 8:
            raise RejectedInputError("control_count must be at least 8")
        if self.variant == GAUSSIAN_GOAL:
            if not self.goals:
                raise RejectedInputError("gaussian_goal needs at least one goal")
            if len(self.sigmas) != len(self.goals):
                raise RejectedInputError("need one sigma per goal")
            if len(self.goals) < 2:
                raise RejectedInputError("support size must be at least 2")
        else:
            if len(self.sigmas) != 1:
                raise RejectedInputError("straight_or_random takes a single sigma")

    @property
    def support(self) -> tuple[int, ...]:
        if self.variant == GAUSSIAN_GOAL:
            return tuple(range(len(self.goals)))
        return (0, 1)

    @property
    def n_params(self) -> int:
        return len(self.support)

    @property
    def control_grid(self) -> "ControlGrid":
        return ControlGrid(self.control_count)

    @staticmethod
    def gaussian_goal(goals, sigmas, speed: float, control_count: int = 72) -> "PolicyModel":
        return PolicyModel(
            GAUSSIAN_GOAL,
            speed,
            tuple(float(s) for s in sigmas),
            tuple((float(g[0]), float(g[1])) for g in goals),
            control_count,
        )

    @staticmethod
    def straight_or_random(sigma: float, speed: float, control_count: int = 72) -> "PolicyModel":
        return PolicyModel(
            STRAIGHT_OR_RANDOM, speed, (float(sigma),), (), control_count
        )


def human_velocity(x: HumanState, u: HumanAction, model: PolicyModel) -> np.ndarray:
    return np.array(
        [model.speed * math.cos(u.theta), model.speed * math.sin(u.theta)]
    )


def policy_mean_angle(x: HumanState, goal) -> float:
    """Four-quadrant heading from the human toward the goal."""
    dx = goal[0] - x.h_x
    dy = goal[1] - x.h_y
    if math.hypot(dx, dy) < ARRIVAL_TOL:
        raise DegenerateGoalError("goal coincides with the current position")
    return math.atan2(dy, dx)


def _gauss_kernel(diff, sigma: float):
    """Unnormalized Gaussian kernel of a wrapped angular difference."""
    return np.exp(-0.5 * (np.asarray(diff) / sigma) ** 2)


def _quad_normalizer(mu, sigma: float, cg: ControlGrid):
    """Rectangle-rule integral of the kernel over the control grid.

    mu may be a scalar or an array; the result broadcasts against it.
    """
    mu = np.asarray(mu, dtype=float)
    diff = wrap_angle(cg.angles.reshape((-1,) + (1,) * mu.ndim) - mu[None, ...])
    z = _gauss_kernel(diff, sigma).sum(axis=0) * cg.spacing
    if np.any(z <= 0) or not np.all(np.isfinite(z)):
        raise RejectedInputError(
            "control grid too coarse to normalize the heading density"
        )
    return z


def _gauss_density(u, mu, sigma: float, cg: ControlGrid):
    """Quadrature-normalized truncated-Gaussian density, in 1/radian."""
    return _gauss_kernel(wrap_angle(np.asarray(u) - mu), sigma) / _quad_normalizer(
        mu, sigma, cg
    )


def action_likelihood(
    model: PolicyModel, x: HumanState, u: HumanAction, lam: int
) -> float:
    """Density of heading u under intent parameter lam, in 1/radian."""
    if lam not in model.support:
        raise RejectedInputError(f"lambda {lam!r} is not in the support")
    cg = model.control_grid
    if model.variant == STRAIGHT_OR_RANDOM:
        if lam == 1:
            return UNIFORM_DENSITY
        return float(_gauss_density(u.theta, 0.0, model.sigmas[0], cg))
    goal = model.goals[lam]
    try:
        mu = policy_mean_angle(x, goal)
    except DegenerateGoalError:
        return UNIFORM_DENSITY  # arrived: no preferred heading (D4)
    return float(_gauss_density(u.theta, mu, model.sigmas[lam], cg))


def likelihood_profile(
    model: PolicyModel, x: HumanState, lam: int, angles: np.ndarray
) -> np.ndarray:
    """Vectorized action_likelihood over an array of headings."""
    if lam not in model.support:
        raise RejectedInputError(f"lambda {lam!r} is not in the support")
    cg = model.control_grid
    if model.variant == STRAIGHT_OR_RANDOM:
        if lam == 1:
            return np.full(np.shape(angles), UNIFORM_DENSITY)
        return _gauss_density(angles, 0.0, model.sigmas[0], cg)
    try:
        mu = policy_mean_angle(x, model.goals[lam])
    except DegenerateGoalError:
        return np.full(np.shape(angles), UNIFORM_DENSITY)
    return _gauss_density(angles, mu, model.sigmas[lam], cg)


def likelihood_at(model: PolicyModel, xs: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Heading densities for a batch of (position, heading) pairs: (n, K)."""
    xs = np.asarray(xs, dtype=float)
    theta = np.asarray(theta, dtype=float)
    cg = model.control_grid
    out = np.empty((xs.shape[0], model.n_params))
    if model.variant == STRAIGHT_OR_RANDOM:
        out[:, 0] = _gauss_kernel(wrap_angle(theta), model.sigmas[0]) / _quad_normalizer(
            0.0, model.sigmas[0], cg
        )
        out[:, 1] = UNIFORM_DENSITY
        return out
    for k, goal in enumerate(model.goals):
        dx = goal[0] - xs[:, 0]
        dy = goal[1] - xs[:, 1]
        mu = np.arctan2(dy, dx)
        dens = _gauss_kernel(wrap_angle(theta - mu), model.sigmas[k]) / _quad_normalizer(
            mu, model.sigmas[k], cg
        )
        dens[np.hypot(dx, dy) < ARRIVAL_TOL] = UNIFORM_DENSITY
        out[:, k] = dens
    return out


def likelihood_tables(
    model: PolicyModel, cg: ControlGrid, xs: np.ndarray, ys: np.ndarray
) -> np.ndarray:
    """Per-parameter heading densities on a position grid.

    Returns an array of shape (K, M, nx, ny): density of control angle m at
    position (xs[i], ys[j]) under support value k. Positions within ARRIVAL_TOL
    of a goal get the uniform density. The sweep grid cg must match the
    model's own control grid so thresholds see the normalized densities.
    """
    if cg.count != model.control_count:
        raise RejectedInputError("sweep grid must match the model's control grid")
    angles = cg.angles
    nx, ny = len(xs), len(ys)
    out = np.empty((model.n_params, cg.count, nx, ny))
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    if model.variant == STRAIGHT_OR_RANDOM:
        out[0] = _gauss_density(angles, 0.0, model.sigmas[0], cg)[:, None, None]
        out[1] = UNIFORM_DENSITY
        return out
    for k, goal in enumerate(model.goals):
        dx = goal[0] - gx
        dy = goal[1] - gy
        arrived = np.hypot(dx, dy) < ARRIVAL_TOL
        mu = np.arctan2(dy, dx)
        raw = _gauss_kernel(
            wrap_angle(angles[:, None, None] - mu[None, :, :]), model.sigmas[k]
        )
        dens = raw / (raw.sum(axis=0) * cg.spacing)
        dens[:, arrived] = UNIFORM_DENSITY
        out[k] = dens
    return out


def sample_actions(
    model: PolicyModel, x: HumanState, lam: int, rng: np.random.Generator, n: int
) -> np.ndarray:
    """Draw n headings from the policy; matches action_likelihood in law."""
    if lam not in model.support:
        raise RejectedInputError(f"lambda {lam!r} is not in the support")
    if model.variant == STRAIGHT_OR_RANDOM and lam == 1:
        return rng.uniform(-math.pi, math.pi, size=n)
    if model.variant == STRAIGHT_OR_RANDOM:
        mu, sigma = 0.0, model.sigmas[0]
    else:
        try:
            mu = policy_mean_angle(x, model.goals[lam])
        except DegenerateGoalError:
            return rng.uniform(-math.pi, math.pi, size=n)
        sigma = model.sigmas[lam]
    # Rejection keeps the draw on the truncated support; the reject rate is
    # erfc(pi / (sigma*sqrt(2))), negligible for the sigmas in use.
    draws = rng.normal(mu, sigma, size=n)
    bad = np.abs(draws - mu) > math.pi
    while np.any(bad):
        draws[bad] = rng.normal(mu, sigma, size=int(bad.sum()))
        bad = np.abs(draws - mu) > math.pi
    return wrap_angle(draws)


def sample_action(
    model: PolicyModel, x: HumanState, lam: int, rng: np.random.Generator
) -> HumanAction:
    return HumanAction(float(sample_actions(model, x, lam, rng, 1)[0]))
