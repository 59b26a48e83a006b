import math

import numpy as np
import pytest

from beliefreach.beliefs import Belief, BeliefParams
from beliefreach.errors import InfeasibleThresholdError, RejectedInputError
from beliefreach.grids import P_MIN
from beliefreach.humans import (
    ControlGrid,
    HumanAction,
    HumanState,
    PolicyModel,
    action_likelihood,
)
from beliefreach.joint import (
    ControlSet,
    JointState,
    allowable_controls_belief,
    allowable_controls_truth,
    hamiltonian,
    joint_rate,
    mixture_likelihood,
)

UNIFORM = 1.0 / (2 * math.pi)


def joint_state(p1=0.5, x=0.0, y=0.0):
    return JointState(HumanState(x, y), Belief(np.array([p1, 1 - p1])))


class TestJointState:
    def test_belief_clamped_to_box(self):
        z = JointState(HumanState(0, 0), Belief(np.array([1.0, 0.0])))
        assert z.p1 == pytest.approx(1 - P_MIN)
        z = JointState(HumanState(0, 0), Belief(np.array([0.0, 1.0])))
        assert z.p1 == pytest.approx(P_MIN)


class TestMixture:
    def test_degenerate_mixture_matches_component(self, two_goal_model):
        z = joint_state(p1=1.0)  # clamps to 1 - P_MIN
        u = HumanAction(0.3)
        mix = mixture_likelihood(z, u, two_goal_model)
        l0 = action_likelihood(two_goal_model, z.x, u, 0)
        l1 = action_likelihood(two_goal_model, z.x, u, 1)
        assert mix == pytest.approx((1 - P_MIN) * l0 + P_MIN * l1, rel=1e-12)

    def test_identical_components(self):
        m = PolicyModel.gaussian_goal([(1.0, 0.0), (1.0, 0.0)], [0.4, 0.4], 0.6)
        z = joint_state(p1=0.5)
        u = HumanAction(0.2)
        assert mixture_likelihood(z, u, m) == pytest.approx(
            action_likelihood(m, z.x, u, 0)
        )

    def test_running_example_combination(self, two_goal_model, rng):
        # P(u|z) = p1 N(mu1, s1^2) + (1 - p1) N(mu2, s2^2)
        for _ in range(100):
            z = joint_state(p1=rng.uniform(0.1, 0.9), x=rng.uniform(-1, 1), y=rng.uniform(-1, 1))
            u = HumanAction(rng.uniform(-math.pi, math.pi))
            expected = z.b.probs[0] * action_likelihood(two_goal_model, z.x, u, 0) + \
                z.b.probs[1] * action_likelihood(two_goal_model, z.x, u, 1)
            assert mixture_likelihood(z, u, two_goal_model) == pytest.approx(expected, rel=1e-12)

    def test_affine_in_belief(self, two_goal_model):
        x, u = HumanState(0.5, -0.2), HumanAction(1.0)
        vals = []
        for p1 in (0.2, 0.5, 0.8):
            z = JointState(x, Belief(np.array([p1, 1 - p1])))
            vals.append(mixture_likelihood(z, u, two_goal_model))
        assert vals[1] == pytest.approx(0.5 * (vals[0] + vals[2]), rel=1e-12)


class TestJointRate:
    def test_zero_gamma_keeps_belief(self, two_goal_model):
        params = BeliefParams(gamma=0.0)
        rate = joint_rate(joint_state(), HumanAction(0.7), two_goal_model, params)
        v = two_goal_model.speed
        assert np.allclose(rate[:2], [v * math.cos(0.7), v * math.sin(0.7)])
        assert np.allclose(rate[2:], 0.0)

    def test_straight_unit_speed(self):
        m = PolicyModel.gaussian_goal([(1, 1), (1, -1)], [0.5, 0.5], speed=1.0)
        rate = joint_rate(joint_state(), HumanAction(0.0), m, BeliefParams(gamma=0.0))
        assert np.allclose(rate, [1.0, 0.0, 0.0, 0.0])

    def test_belief_component_composes(self):
        # likelihood ratio 2:1 at prior 0.5 gives +1/6 on the first component
        m = PolicyModel.gaussian_goal([(1.0, 0.0), (-1.0, 0.0)], [1.0, 1.0], 0.6)
        z = joint_state(p1=0.5)
        u = HumanAction(0.0)
        params = BeliefParams(gamma=1.0)
        rate = joint_rate(z, u, m, params)
        l0 = action_likelihood(m, z.x, u, 0)
        l1 = action_likelihood(m, z.x, u, 1)
        expected = (l0 * 0.5) / (l0 * 0.5 + l1 * 0.5) - 0.5
        assert rate[2] == pytest.approx(expected, rel=1e-12)

    def test_frozen_at_clamp_edge(self, two_goal_model):
        z = JointState(HumanState(0, 0), Belief(np.array([0.0, 1.0])))  # p1 = P_MIN
        # an observation pushing p1 further down must freeze the belief rate
        u = HumanAction(policy_mean_angle_toward_second(two_goal_model))
        rate = joint_rate(z, u, two_goal_model, BeliefParams(gamma=1.0))
        assert np.allclose(rate[2:], 0.0)


def policy_mean_angle_toward_second(model):
    g = model.goals[1]
    return math.atan2(g[1], g[0])


class TestAllowableControls:
    def test_zero_threshold_keeps_all(self, two_goal_model, control_grid):
        cs = allowable_controls_belief(joint_state(), 0.0, two_goal_model, control_grid)
        assert len(cs) == control_grid.count

    def test_uniform_level_keeps_all(self, rational_or_random_model, control_grid):
        z = joint_state(p1=0.0)  # effectively all mass on the uniform component
        cs = allowable_controls_belief(
            z, UNIFORM * 0.99, rational_or_random_model, control_grid
        )
        assert len(cs) == control_grid.count

    def test_matches_exhaustive_evaluation(self, two_goal_model, control_grid):
        # oracle: evaluate the mixture density at every grid angle directly
        z = joint_state(p1=0.5)
        delta = 0.2
        cs = allowable_controls_belief(z, delta, two_goal_model, control_grid)
        expected = [
            i for i, a in enumerate(control_grid.angles)
            if mixture_likelihood(z, HumanAction(a), two_goal_model) >= delta
        ]
        assert list(cs.indices) == expected
        assert len(expected) > 0

    def test_truth_uniform_full_grid(self, rational_or_random_model, control_grid):
        cs = allowable_controls_truth(
            HumanState(0, 0), 1, UNIFORM * 0.9, rational_or_random_model, control_grid
        )
        assert len(cs) == control_grid.count

    def test_truth_band_is_symmetric(self, rational_or_random_model, control_grid):
        # sigma = 0.1, delta = 0.3: the admissible band around zero, verified
        # against direct density evaluation; the edge is recorded for the
        # analysis cross-check
        cs = allowable_controls_truth(
            HumanState(0, 0), 0, 0.3, rational_or_random_model, control_grid
        )
        band = np.array(cs.angles)
        assert np.allclose(np.sort(band), np.sort(-band))
        for a in control_grid.angles:
            dens = action_likelihood(
                rational_or_random_model, HumanState(0, 0), HumanAction(a), 0
            )
            assert (a in cs.angles) == (dens >= 0.3)
        edge = np.max(np.abs(band))
        assert edge == pytest.approx(np.radians(10.0), abs=1e-9)

    def test_above_peak_errors_with_peak(self, rational_or_random_model, control_grid):
        with pytest.raises(InfeasibleThresholdError) as err:
            allowable_controls_truth(
                HumanState(0, 0), 1, 0.3, rational_or_random_model, control_grid
            )
        assert err.value.peak == pytest.approx(UNIFORM)

    def test_threshold_monotonicity(self, two_goal_model, control_grid, rng):
        for _ in range(25):
            z = joint_state(
                p1=rng.uniform(0.05, 0.95), x=rng.uniform(-1, 1), y=rng.uniform(-1, 1)
            )
            small = allowable_controls_belief(z, 0.05, two_goal_model, control_grid)
            large = allowable_controls_belief(z, 0.15, two_goal_model, control_grid)
            assert set(large.indices) <= set(small.indices)


class TestHamiltonian:
    def test_max_picks_aligned_heading(self, control_grid):
        m = PolicyModel.gaussian_goal([(1, 1), (1, -1)], [0.5, 0.5], speed=1.0)
        cs = ControlSet.full(control_grid)
        params = BeliefParams(gamma=0.0)
        value, u = hamiltonian(joint_state(), (1.0, 0.0, 0.0), cs, "max", m, params)
        assert value == pytest.approx(1.0)
        assert u.theta == pytest.approx(0.0)

    def test_min_picks_opposed_heading(self, control_grid):
        m = PolicyModel.gaussian_goal([(1, 1), (1, -1)], [0.5, 0.5], speed=1.0)
        cs = ControlSet.full(control_grid)
        params = BeliefParams(gamma=0.0)
        value, u = hamiltonian(joint_state(), (1.0, 0.0, 0.0), cs, "min", m, params)
        assert value == pytest.approx(-1.0)
        assert abs(u.theta) == pytest.approx(math.pi)

    def test_belief_gradient_matches_exhaustive_sweep(self, two_goal_model, control_grid):
        # oracle: explicit sweep of grad . f over the control set
        z = joint_state(p1=0.4, x=0.3, y=-0.2)
        params = BeliefParams(gamma=1.0)
        cs = ControlSet.full(control_grid)
        grad = (0.0, 0.0, 1.0)
        value, u = hamiltonian(z, grad, cs, "max", two_goal_model, params)
        sweep = [
            joint_rate(z, HumanAction(a), two_goal_model, params)[2]
            for a in cs.angles
        ]
        assert value == pytest.approx(max(sweep), rel=1e-12)
        assert u.theta == cs.angles[int(np.argmax(sweep))]

    def test_max_at_least_min_and_singleton_equality(self, two_goal_model, control_grid, rng):
        params = BeliefParams(gamma=1.0)
        for _ in range(25):
            z = joint_state(p1=rng.uniform(0.1, 0.9))
            grad = rng.normal(size=3)
            cs = ControlSet.full(control_grid)
            hi, _ = hamiltonian(z, grad, cs, "max", two_goal_model, params)
            lo, _ = hamiltonian(z, grad, cs, "min", two_goal_model, params)
            assert hi >= lo
            single = ControlSet((0.5,), (10,), 0.0)
            hs, _ = hamiltonian(z, grad, single, "max", two_goal_model, params)
            ls, _ = hamiltonian(z, grad, single, "min", two_goal_model, params)
            assert hs == pytest.approx(ls)

    def test_enlarging_set_is_monotone(self, two_goal_model, control_grid, rng):
        params = BeliefParams(gamma=1.0)
        z = joint_state(p1=0.6)
        grad = rng.normal(size=3)
        full = ControlSet.full(control_grid)
        sub = ControlSet(full.angles[10:20], full.indices[10:20], 0.0)
        assert hamiltonian(z, grad, full, "max", two_goal_model, params)[0] >= \
            hamiltonian(z, grad, sub, "max", two_goal_model, params)[0]
        assert hamiltonian(z, grad, full, "min", two_goal_model, params)[0] <= \
            hamiltonian(z, grad, sub, "min", two_goal_model, params)[0]

    def test_tie_breaks_to_lowest_index(self, control_grid):
        # gradient along +y: +-90 degree headings tie in x but not in y; use a
        # pure-x gradient with symmetric headings instead
        m = PolicyModel.gaussian_goal([(1, 1), (1, -1)], [0.5, 0.5], speed=1.0)
        params = BeliefParams(gamma=0.0)
        # grad along y = 0: headings +-pi/2 both give 0; every heading pair
        # (a, -a) ties on (0, 0, 1) gradients with gamma 0 (rate is 0)
        cs = ControlSet.full(control_grid)
        _, u = hamiltonian(joint_state(), (0.0, 0.0, 1.0), cs, "max", m, params)
        assert u.theta == cs.angles[0]

    def test_empty_control_set_rejected(self):
        with pytest.raises(RejectedInputError):
            ControlSet((), (), 0.1)
