"""Solver and verifier for games whose players revise their policies in play.

Agents carry an observation-conditioned policy parameter and a deterministic
update rule that rewrites the parameter after every transition.  A joint
profile of (parameter, rule) pairs induces a deterministic chain over
(state, parameters) nodes, so long-run average rewards, periodic limit
distributions, and exhaustive deviation checks are all exact.
"""

from .errors import CapExceededError, ValidationError
from .games import (
    ActiveMarkovGame,
    AgentSpace,
    AgentStrategy,
    PolicyParameter,
    StageGame,
    StrategyProfile,
    StrategySpace,
    UpdateDomain,
    UpdateRule,
    build_periodic_game,
    build_repeated_game,
    enumerate_policies,
    enumerate_update_rules,
    extract_stage_game,
    full_rule_keys,
    full_strategy_space,
    identity_update_rule,
    joint_action_keys,
    validate_profile,
    DEFAULT_RULE_CAP,
)
from .chain import (
    AverageReward,
    ChainNode,
    InducedChain,
    PeriodicDistribution,
    average_reward,
    cycle_decomposition,
    induce_chain,
    mu_weighted_average_reward,
    periodic_distribution,
    verify_balance,
)
from .nash import (
    MixedEquilibrium,
    PureNashResult,
    StationaryDeviation,
    StationaryVerification,
    mixed_nash_support_enumeration,
    pure_stationary_nash,
    stationary_best_response,
    verify_stationary_nash,
)
from .active import (
    ActiveEquilibrium,
    ActiveVerification,
    DeviationResult,
    EquilibriumReport,
    best_active_deviation,
    compare_report,
    enumerate_active_equilibria,
    verify_active_equilibrium,
    DEFAULT_PROFILE_CAP,
)
from .simulate import PeriodEstimate, Trajectory, TrajectoryStep, detect_period, rollout
from .scenario import (
    Scenario,
    ScenarioError,
    build_game,
    bundled_scenario_dir,
    bundled_scenario_names,
    load_scenario,
    parse_scenario,
    resolve_scenario_path,
    serialize_scenario,
)
from .cli import report_document, run_command, serialize_report

__version__ = "0.1.0"

__all__ = [
    "ActiveEquilibrium",
    "ActiveMarkovGame",
    "ActiveVerification",
    "AgentSpace",
    "AgentStrategy",
    "AverageReward",
    "CapExceededError",
    "ChainNode",
    "DEFAULT_PROFILE_CAP",
    "DEFAULT_RULE_CAP",
    "DeviationResult",
    "EquilibriumReport",
    "InducedChain",
    "MixedEquilibrium",
    "PeriodEstimate",
    "PeriodicDistribution",
    "PolicyParameter",
    "PureNashResult",
    "Scenario",
    "ScenarioError",
    "StageGame",
    "StationaryDeviation",
    "StationaryVerification",
    "StrategyProfile",
    "StrategySpace",
    "Trajectory",
    "TrajectoryStep",
    "UpdateDomain",
    "UpdateRule",
    "ValidationError",
    "average_reward",
    "best_active_deviation",
    "build_game",
    "build_periodic_game",
    "build_repeated_game",
    "bundled_scenario_dir",
    "bundled_scenario_names",
    "compare_report",
    "cycle_decomposition",
    "detect_period",
    "enumerate_active_equilibria",
    "enumerate_policies",
    "enumerate_update_rules",
    "extract_stage_game",
    "full_rule_keys",
    "full_strategy_space",
    "identity_update_rule",
    "induce_chain",
    "joint_action_keys",
    "load_scenario",
    "mixed_nash_support_enumeration",
    "mu_weighted_average_reward",
    "parse_scenario",
    "periodic_distribution",
    "pure_stationary_nash",
    "report_document",
    "resolve_scenario_path",
    "rollout",
    "run_command",
    "serialize_report",
    "serialize_scenario",
    "stationary_best_response",
    "validate_profile",
    "verify_active_equilibrium",
    "verify_balance",
    "verify_stationary_nash",
]
