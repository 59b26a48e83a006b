"""Bayesian belief over the intent parameter and its continuous-time dynamics.

The belief flows toward the one-observation posterior at rate gamma (the
observation frequency), plus an optional intrinsic-change term k:
    bdot = gamma * (posterior(b; u) - b) + k(b).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import RejectedInputError
from .humans import HumanAction, HumanState, PolicyModel, action_likelihood

SIMPLEX_TOL = 1e-9


def zero_intrinsic_change(probs: np.ndarray) -> np.ndarray:
    """Default k: the human's intrinsic behavior does not drift."""
    return np.zeros_like(probs)


@dataclass(frozen=True)
class Belief:
    """Probability vector over the policy support (a simplex point)."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 1 or probs.size < 2:
            raise RejectedInputError("belief needs at least two entries")
        if np.any(probs < -SIMPLEX_TOL) or np.any(probs > 1 + SIMPLEX_TOL):
            raise RejectedInputError("belief entries must lie in [0, 1]")
        if abs(float(probs.sum()) - 1.0) > SIMPLEX_TOL:
            raise RejectedInputError("belief entries must sum to 1")

    @property
    def p1(self) -> float:
        """Free coordinate for K=2: probability of the first support value."""
        return float(self.probs[0])

    @staticmethod
    def from_p1(p1: float) -> "Belief":
        return Belief(np.array([p1, 1.0 - p1]))


@dataclass(frozen=True)
class BeliefParams:
    gamma: float = 1.0
    k: Callable[[np.ndarray], np.ndarray] = zero_intrinsic_change

    def __post_init__(self):
        if self.gamma < 0:
            raise RejectedInputError("gamma must be nonnegative")


def likelihood_vector(
    model: PolicyModel, x: HumanState, u: HumanAction
) -> np.ndarray:
    return np.array(
        [action_likelihood(model, x, u, lam) for lam in model.support]
    )


def posterior_from_likelihoods(prior: np.ndarray, likelihoods: np.ndarray) -> np.ndarray:
    """Posterior ~ likelihood * prior; returns the prior if all mass vanishes (D8)."""
    weighted = np.asarray(likelihoods, dtype=float) * np.asarray(prior, dtype=float)
    total = weighted.sum()
    if total <= 0.0:
        return np.array(prior, dtype=float, copy=True)
    return weighted / total


def bayes_update(
    prior: Belief, x: HumanState, u: HumanAction, model: PolicyModel
) -> Belief:
    return Belief(posterior_from_likelihoods(prior.probs, likelihood_vector(model, x, u)))


def rate_from_likelihoods(
    probs: np.ndarray, likelihoods: np.ndarray, params: BeliefParams
) -> np.ndarray:
    posterior = posterior_from_likelihoods(probs, likelihoods)
    return params.gamma * (posterior - probs) + params.k(probs)


def belief_rate(
    b: Belief,
    x: HumanState,
    u: HumanAction,
    model: PolicyModel,
    params: BeliefParams,
) -> np.ndarray:
    """Time derivative of the belief vector; sums to zero when k preserves mass."""
    return rate_from_likelihoods(b.probs, likelihood_vector(model, x, u), params)
