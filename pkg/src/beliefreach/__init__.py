"""Belief-space reachability for predicting and analyzing human motion.

The package evolves a level-set value function over the joint space of a
human's position and a Bayesian belief over their intent, producing
likely-state tubes that a receding-horizon robot planner can avoid; it also
bounds how long a predictor needs to identify the true intent.
"""

from .beliefs import Belief, BeliefParams, bayes_update, belief_rate
from .errors import (
    BeliefReachError,
    DegenerateGoalError,
    InfeasibleThresholdError,
    NoTrajectoryError,
    NumericalBlowupError,
    RejectedInputError,
    ScenarioError,
)
from .grids import (
    Grid,
    LevelSetField,
    OccupancySlice,
    ReachTube,
    default_init_radius,
    make_ball_field,
    make_ellipsoid_field,
    project_to_human_space,
    set_membership,
)
from .humans import (
    ControlGrid,
    HumanAction,
    HumanState,
    PolicyModel,
    action_likelihood,
    human_velocity,
    policy_mean_angle,
    sample_action,
)
from .joint import (
    ControlSet,
    JointState,
    allowable_controls_belief,
    allowable_controls_truth,
    hamiltonian,
    joint_rate,
    mixture_likelihood,
)
from .analysis import (
    AnalysisResult,
    analyze_hypothesis,
    analyze_scenario,
    combine_hypotheses,
    extract_optimal_controls,
    time_to_confidence,
)
from .navsim import RobotControl, RobotState, SimLog, plan, run_closed_loop
from .predictors import (
    PredictionTube,
    epsilon_from_mass,
    predict_ba_frs,
    predict_bayes,
    predict_naive,
)
from .scenario import Scenario, load_fixture, load_scenario, parse_scenario
from .solver import SolverConfig, evolve, first_hitting_time

__version__ = "0.1.0"
