"""Step-by-step rollout of a strategy profile, independent of the chain analysis.

The simulator replays the game one transition at a time straight from the
game tables, so its empirical averages and detected periods can be used to
cross-check the analytic cycle computations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError
from .games import ActiveMarkovGame, PolicyParameter, StrategyProfile, validate_profile


@dataclass(frozen=True)
class TrajectoryStep:
    state: int
    parameters: tuple[PolicyParameter, ...]
    joint_action: tuple[int, ...]
    rewards: tuple[float, ...]
    next_state: int


@dataclass(frozen=True)
class Trajectory:
    steps: tuple[TrajectoryStep, ...]
    empirical_avg: tuple[float, ...]


@dataclass(frozen=True)
class PeriodEstimate:
    """Detected cycle structure, or an explicit undetermined marker."""

    determined: bool
    period: "int | None"
    entry_length: "int | None"


def rollout(
    game: ActiveMarkovGame,
    profile: StrategyProfile,
    steps: int,
    *,
    seed: "int | None" = None,
) -> Trajectory:
    """Replay the profile for a fixed number of steps from the initial state.

    The seed argument is reserved for stochastic extensions; the dynamics
    here are fully deterministic, so passing one is rejected rather than
    silently ignored.
    """
    if seed is not None:
        raise ValidationError(
            "seed is reserved for stochastic dynamics and must not be set; "
            "this game is deterministic"
        )
    if steps < 1:
        raise ValidationError(f"steps must be at least 1, got {steps}")
    validate_profile(game, profile)
    state = game.initial_state
    parameters = tuple(strategy.parameter for strategy in profile.agents)
    recorded = []
    for _ in range(steps):
        obs = game.observe[state]
        joint = tuple(p.action(obs) for p in parameters)
        rewards = game.rewards[(state, joint)]
        next_state = game.transition[(state, joint)]
        recorded.append(TrajectoryStep(state, parameters, joint, rewards, next_state))
        parameters = tuple(
            strategy.rule.next_parameter(parameters[i], state, joint, next_state)
            for i, strategy in enumerate(profile.agents)
        )
        state = next_state
    averages = tuple(
        math.fsum(step.rewards[i] for step in recorded) / steps
        for i in range(game.num_agents)
    )
    return Trajectory(steps=tuple(recorded), empirical_avg=averages)


def detect_period(trajectory: Trajectory) -> PeriodEstimate:
    """Recover (period, entry length) from a trajectory's node sequence.

    A node is the full (state, joint policy) pair, so its first repeat pins
    the cycle exactly.  The estimate is reported only when the trajectory
    contains the entry plus two full cycle traversals and the whole suffix is
    consistent with the detected period; otherwise the result is explicitly
    undetermined rather than a guess.
    """
    nodes = [(step.state, step.parameters) for step in trajectory.steps]
    first_seen: dict = {}
    entry = None
    period = None
    for index, node in enumerate(nodes):
        if node in first_seen:
            entry = first_seen[node]
            period = index - entry
            break
        first_seen[node] = index
    if period is None:
        return PeriodEstimate(determined=False, period=None, entry_length=None)
    if len(nodes) < entry + 2 * period:
        return PeriodEstimate(determined=False, period=None, entry_length=None)
    for index in range(entry + period, len(nodes)):
        if nodes[index] != nodes[index - period]:
            return PeriodEstimate(determined=False, period=None, entry_length=None)
    return PeriodEstimate(determined=True, period=period, entry_length=entry)
