import numpy as np
import pytest

from beliefreach.analysis import (
    AnalysisResult,
    analyze_hypothesis,
    combine_hypotheses,
    extract_optimal_controls,
    time_to_confidence,
)
from beliefreach.beliefs import Belief, posterior_from_likelihoods
from beliefreach.errors import (
    InfeasibleThresholdError,
    NoTrajectoryError,
    RejectedInputError,
)
from beliefreach.grids import Grid
from beliefreach.humans import HumanAction, HumanState, PolicyModel
from beliefreach.joint import allowable_controls_truth
from beliefreach.scenario import AnalysisSpec, with_overrides
from conftest import small_scenario


def analysis_scenario(**overrides):
    base = dict(
        model=PolicyModel.straight_or_random(0.1, 0.6, control_count=36),
        prior=(0.1, 0.9),
        human_grid=Grid((-2.0, -2.0), (2.0, 2.0), (15, 15)),
        belief_axis=(0.001, 0.999, 41),
        horizon=1.0,
        control_count=36,
    )
    base.update(overrides)
    return small_scenario(**base)


SPEC = AnalysisSpec(p_star=0.9, delta=0.3, horizon=6.0)


class TestTimeToConfidence:
    def test_prior_already_confident_hits_at_zero(self):
        s = analysis_scenario(prior=(0.95, 0.05))
        hit, _ = time_to_confidence(s, 0, 0.9, 0.3, "max", horizon=1.0)
        assert hit == 0.0

    def test_infeasible_uniform_hypothesis(self):
        s = analysis_scenario()
        with pytest.raises(InfeasibleThresholdError):
            time_to_confidence(s, 1, 0.9, 0.3, "max", horizon=1.0)

    def test_best_case_not_slower_than_worst_case(self):
        s = analysis_scenario()
        t_min, _ = time_to_confidence(s, 0, SPEC.p_star, SPEC.delta, "max", SPEC.horizon)
        t_max, _ = time_to_confidence(s, 0, SPEC.p_star, SPEC.delta, "min", SPEC.horizon)
        assert t_min is not None and t_max is not None
        assert t_min <= t_max

    def test_raising_p_star_never_speeds_up(self):
        s = analysis_scenario()
        for mode in ("max", "min"):
            lo, _ = time_to_confidence(s, 0, 0.8, 0.3, mode, SPEC.horizon)
            hi, _ = time_to_confidence(s, 0, 0.95, 0.3, mode, SPEC.horizon)
            assert lo is not None and hi is not None
            assert hi >= lo

    def test_delta_monotonicity(self):
        # raising delta trims the least informative admissible headings, so
        # the worst case improves (t_max never increases) while the best case
        # cannot improve (t_min never decreases)
        s = analysis_scenario()
        tmin_lo, _ = time_to_confidence(s, 0, 0.9, 0.3, "max", SPEC.horizon)
        tmin_hi, _ = time_to_confidence(s, 0, 0.9, 1.0, "max", SPEC.horizon)
        tmax_lo, _ = time_to_confidence(s, 0, 0.9, 0.3, "min", SPEC.horizon)
        tmax_hi, _ = time_to_confidence(s, 0, 0.9, 1.0, "min", SPEC.horizon)
        assert tmin_hi >= tmin_lo
        assert tmax_hi <= tmax_lo

    def test_bad_p_star_rejected(self):
        s = analysis_scenario()
        with pytest.raises(RejectedInputError):
            time_to_confidence(s, 0, 0.4, 0.3, "max")


class TestExtraction:
    def test_single_member_control_set_repeats(self):
        # delta above the 5-degree density leaves only the straight heading
        s = analysis_scenario()
        cs = allowable_controls_truth(
            HumanState(0, 0), 0, 3.0, s.model, s.control_grid
        )
        assert len(cs) == 1
        hit, tube = time_to_confidence(s, 0, 0.9, 3.0, "max", horizon=4.0)
        assert hit is not None
        seq = extract_optimal_controls(tube, "max", s, 0, 3.0, 0.9)
        assert len(seq) == round(hit / s.snapshot_dt)
        assert all(u == cs.angles[0] for u in seq)

    def test_sequences_respect_truth_predicate(self):
        s = analysis_scenario()
        hit, tube = time_to_confidence(s, 0, 0.9, 0.3, "min", SPEC.horizon)
        seq = extract_optimal_controls(tube, "min", s, 0, 0.3, 0.9)
        cs = allowable_controls_truth(HumanState(0, 0), 0, 0.3, s.model, s.control_grid)
        assert seq
        for u in seq:
            assert u in cs.angles

    def test_no_trajectory_when_never_hit(self):
        s = analysis_scenario()
        hit, tube = time_to_confidence(s, 0, 0.9, 0.3, "min", horizon=0.2)
        assert hit is None
        with pytest.raises(NoTrajectoryError):
            extract_optimal_controls(tube, "min", s, 0, 0.3, 0.9)


class TestReplayConsistency:
    def test_discrete_replay_reaches_target_near_t_min(self, analysis_fixture, analysis_report):
        # replay the most informative sequence through the discrete update
        # dynamics; confidence must arrive within one snapshot of t_min
        rep = next(h for h in analysis_report["hypotheses"] if h["lambda_star"] == 0)
        t_min = rep["t_min"]
        seq = rep["control_seq_min"]
        model = analysis_fixture.model
        gamma = analysis_fixture.gamma
        dt = analysis_fixture.snapshot_dt
        b = np.array(analysis_fixture.prior)
        x = HumanState(*analysis_fixture.start)
        hit = None
        for k, u in enumerate(seq + seq[-1:] * 40):
            like = np.array([
                __import__("beliefreach").humans.action_likelihood(model, x, HumanAction(u), lam)
                for lam in model.support
            ])
            post = posterior_from_likelihoods(b, like)
            b = b + dt * gamma * (post - b)
            if b[0] >= 0.9:
                hit = (k + 1) * dt
                break
        assert hit is not None
        assert abs(hit - t_min) <= dt + 1e-9


class TestCombination:
    def result(self, lam, t_min, t_max):
        return AnalysisResult(lam, t_min, t_max, (), (), 0.9)

    def test_min_over_finite_minima(self):
        t_min, t_max = combine_hypotheses(
            [self.result(0, 3.2, None), self.result(1, 5.0, None)]
        )
        assert t_min == 3.2 and t_max is None

    def test_max_times_also_combine_with_min(self):
        t_min, t_max = combine_hypotheses(
            [self.result(0, 3.2, 11.2), self.result(1, 5.0, 14.0)]
        )
        assert t_max == 11.2

    def test_all_none(self):
        assert combine_hypotheses([self.result(0, None, None)]) == (None, None)

    def test_result_orders_times(self):
        with pytest.raises(RejectedInputError):
            AnalysisResult(0, 5.0, 2.0, (), (), 0.9)


class TestHypothesisOrchestration:
    def test_analyze_hypothesis_fills_both_sides(self):
        s = analysis_scenario(analysis=SPEC)
        res = analyze_hypothesis(s, 0)
        assert res.t_min is not None and res.t_max is not None
        assert res.t_min <= res.t_max
        assert len(res.control_seq_min) == round(res.t_min / s.snapshot_dt)
        assert len(res.control_seq_max) == round(res.t_max / s.snapshot_dt)
