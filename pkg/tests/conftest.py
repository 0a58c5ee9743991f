"""Shared fixtures: bundled scenarios and small strategy constructors."""

import pytest

from activegames import (
    PolicyParameter,
    StageGame,
    StrategyProfile,
    UpdateDomain,
    UpdateRule,
    load_scenario,
    resolve_scenario_path,
)


@pytest.fixture(scope="session")
def pd():
    """(game, candidate, scenario) for the bundled prisoners_dilemma file."""
    return load_scenario(resolve_scenario_path("prisoners_dilemma"))


@pytest.fixture(scope="session")
def bos():
    """(game, candidate, scenario) for the bundled bach_stravinsky file."""
    return load_scenario(resolve_scenario_path("bach_stravinsky"))


@pytest.fixture(scope="session")
def periodic():
    """(game, candidate, scenario) for the bundled periodic_hidden file."""
    return load_scenario(resolve_scenario_path("periodic_hidden"))


def joint_action_rule(assignment):
    """Rule keyed by joint action: {joint index tuple: own action index}."""
    return UpdateRule(
        UpdateDomain.JOINT_ACTION,
        tuple((key, PolicyParameter((value,))) for key, value in assignment.items()),
    )


def two_by_two_stage(rows, labels=("C", "D")):
    """2-agent stage game from a nested payoff list rows[a0][a1] = (r0, r1)."""
    payoffs = {
        (a0, a1): tuple(rows[a0][a1]) for a0 in range(2) for a1 in range(2)
    }
    return StageGame(2, (tuple(labels), tuple(labels)), payoffs)


def profile_of(*agent_strategies):
    return StrategyProfile(tuple(agent_strategies))
