"""Joint human-state/belief system: mixture likelihoods, joint dynamics, and
threshold-based allowable control sets.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beliefs import Belief, BeliefParams, likelihood_vector, rate_from_likelihoods
from .errors import InfeasibleThresholdError, RejectedInputError
from .grids import P_MIN
from .humans import (
    ControlGrid,
    HumanAction,
    HumanState,
    PolicyModel,
    human_velocity,
    likelihood_profile,
)


@dataclass(frozen=True)
class JointState:
    """Human position plus belief; belief entries clamped to [P_MIN, 1-P_MIN]."""

    x: HumanState
    b: Belief

    def __post_init__(self):
        probs = np.clip(self.b.probs, P_MIN, 1.0 - P_MIN)
        object.__setattr__(self, "b", Belief(probs / probs.sum()))

    @property
    def p1(self) -> float:
        return self.b.p1


@dataclass(frozen=True)
class ControlSet:
    """Subset of control-grid headings admissible at some joint state."""

    angles: tuple[float, ...]
    indices: tuple[int, ...]
    delta: float

    def __post_init__(self):
        if not self.angles:
            raise RejectedInputError("control set may not be empty")
        if len(self.angles) != len(self.indices):
            raise RejectedInputError("angles/indices length mismatch")

    def __len__(self) -> int:
        return len(self.angles)

    @staticmethod
    def full(cg: ControlGrid, delta: float = 0.0) -> "ControlSet":
        return ControlSet(
            tuple(cg.angles.tolist()), tuple(range(cg.count)), delta
        )


def mixture_likelihood(z: JointState, u: HumanAction, model: PolicyModel) -> float:
    """Predicted heading density under the belief: sum_k b_k * P(u | x; k)."""
    return float(np.dot(z.b.probs, likelihood_vector(model, z.x, u)))


def joint_rate(
    z: JointState, u: HumanAction, model: PolicyModel, params: BeliefParams
) -> np.ndarray:
    """Concatenated [xdot, bdot]; the belief rate is frozen at the clamp box edge."""
    v = human_velocity(z.x, u, model)
    bdot = rate_from_likelihoods(z.b.probs, likelihood_vector(model, z.x, u), params)
    probs = z.b.probs
    pinned = ((probs <= P_MIN) & (bdot < 0)) | ((probs >= 1 - P_MIN) & (bdot > 0))
    if np.any(pinned):
        bdot = np.zeros_like(bdot)
    return np.concatenate([v, bdot])


def _threshold_set(
    densities: np.ndarray, cg: ControlGrid, delta: float
) -> ControlSet:
    if delta < 0:
        raise RejectedInputError("delta must be nonnegative")
    keep = np.nonzero(densities >= delta)[0]
    if keep.size == 0:
        raise InfeasibleThresholdError(delta, float(densities.max()))
    angles = cg.angles
    return ControlSet(
        tuple(angles[keep].tolist()), tuple(int(i) for i in keep), delta
    )


def mixture_profile(
    z: JointState, model: PolicyModel, angles: np.ndarray
) -> np.ndarray:
    """Vectorized mixture_likelihood over an array of headings."""
    out = np.zeros(np.shape(angles))
    for weight, lam in zip(z.b.probs, model.support):
        out += weight * likelihood_profile(model, z.x, lam, angles)
    return out


def allowable_controls_belief(
    z: JointState, delta: float, model: PolicyModel, cg: ControlGrid
) -> ControlSet:
    """Headings whose mixture density under the current belief is >= delta."""
    return _threshold_set(mixture_profile(z, model, cg.angles), cg, delta)


def allowable_controls_truth(
    x: HumanState,
    lambda_star: int,
    delta: float,
    model: PolicyModel,
    cg: ControlGrid,
) -> ControlSet:
    """Headings with density >= delta under one hypothesized true parameter."""
    return _threshold_set(likelihood_profile(model, x, lambda_star, cg.angles), cg, delta)


def hamiltonian(
    z: JointState,
    grad: np.ndarray,
    cs: ControlSet,
    mode: str,
    model: PolicyModel,
    params: BeliefParams,
) -> tuple[float, HumanAction]:
    """Extremum of grad . joint_rate over the control set.

    Returns the extremal rate and the extremizing control; ties break toward
    the lowest control-grid index (D12). The gradient layout is
    (d/dx, d/dy, d/dp_1) for K=2 joint grids.
    """
    if mode not in ("max", "min"):
        raise RejectedInputError("mode must be 'max' or 'min'")
    grad = np.asarray(grad, dtype=float)
    values = np.empty(len(cs))
    for i, angle in enumerate(cs.angles):
        rate = joint_rate(z, HumanAction(angle), model, params)
        if grad.size == rate.size - 1:
            # K=2 grids carry only the free coordinate p_1.
            rate = np.concatenate([rate[:2], rate[2:3]])
        values[i] = float(np.dot(grad, rate[: grad.size]))
    pick = int(np.argmax(values)) if mode == "max" else int(np.argmin(values))
    return float(values[pick]), HumanAction(cs.angles[pick])
