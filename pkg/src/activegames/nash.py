"""Stationary Nash analysis: pure enumeration plus mixed support enumeration.

Stationary here means the policy tables are held fixed for the whole play,
so a profile's value is its induced cycle mean.  A profile is a stationary
equilibrium when no agent can raise its own value from any initial state by
switching to another fixed policy.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .chain import AverageReward
from .errors import ValidationError
from .games import ActiveMarkovGame, PolicyParameter, StageGame, enumerate_policies

MIXED_MAX_ACTIONS = 4
DEDUP_TOLERANCE = 1e-7


@dataclass(frozen=True)
class PureNashResult:
    """All joint policy tables that survive every unilateral stationary deviation."""

    profiles: tuple[tuple[PolicyParameter, ...], ...]
    payoffs: tuple[AverageReward, ...]


@dataclass(frozen=True)
class StationaryDeviation:
    """Best stationary reply for one agent, taken at its most favorable start state."""

    agent: int
    parameter: PolicyParameter
    state: int
    best_value: float
    baseline_value: float
    gain: float


@dataclass(frozen=True)
class StationaryVerification:
    verdict: bool
    best_deviations: tuple[StationaryDeviation, ...]


@dataclass(frozen=True)
class MixedEquilibrium:
    """Mixed stage-game equilibrium: one simplex vector per player plus values."""

    probabilities: tuple[tuple[float, ...], tuple[float, ...]]
    value: tuple[float, float]


def _stationary_values(game: ActiveMarkovGame, joint: tuple[PolicyParameter, ...], start: int):
    """Cycle-mean rewards of fixed policies, walking states only."""
    state = start
    seen: dict[int, int] = {}
    rewards = []
    while state not in seen:
        seen[state] = len(rewards)
        obs = game.observe[state]
        action = tuple(p.action(obs) for p in joint)
        rewards.append(game.rewards[(state, action)])
        state = game.transition[(state, action)]
    entry = seen[state]
    period = len(rewards) - entry
    return tuple(
        math.fsum(row[i] for row in rewards[entry:]) / period
        for i in range(game.num_agents)
    )


def _check_joint_parameters(game: ActiveMarkovGame, joint) -> tuple[PolicyParameter, ...]:
    joint = tuple(joint)
    if len(joint) != game.num_agents:
        raise ValidationError(
            f"expected {game.num_agents} policies, got {len(joint)}"
        )
    num_obs = len(game.observations)
    for agent, policy in enumerate(joint):
        if len(policy.table) != num_obs:
            raise ValidationError(
                f"agent {agent} policy covers {len(policy.table)} observations, expected {num_obs}"
            )
        if any(a >= len(game.actions[agent]) for a in policy.table):
            raise ValidationError(f"agent {agent} policy uses an out-of-range action index")
    return joint


def verify_stationary_nash(
    game: ActiveMarkovGame,
    joint_parameters: tuple[PolicyParameter, ...],
    *,
    epsilon: float = 1e-9,
) -> StationaryVerification:
    """Check the no-profitable-stationary-deviation condition from every start state.

    The reported deviation per agent is the best alternative policy at the
    start state where its advantage over the baseline is largest; the
    profile is an equilibrium when every such gain is at most epsilon.
    """
    joint = _check_joint_parameters(game, joint_parameters)
    deviations = []
    for agent in range(game.num_agents):
        candidates = enumerate_policies(game, agent)
        best = None
        for state in range(len(game.states)):
            baseline = _stationary_values(game, joint, state)[agent]
            best_value = -math.inf
            best_param = None
            for candidate in candidates:
                trial = joint[:agent] + (candidate,) + joint[agent + 1:]
                value = _stationary_values(game, trial, state)[agent]
                if value > best_value:
                    best_value = value
                    best_param = candidate
            gain = best_value - baseline
            if best is None or gain > best.gain:
                best = StationaryDeviation(
                    agent=agent,
                    parameter=best_param,
                    state=state,
                    best_value=best_value,
                    baseline_value=baseline,
                    gain=gain,
                )
        deviations.append(best)
    verdict = all(d.gain <= epsilon for d in deviations)
    return StationaryVerification(verdict=verdict, best_deviations=tuple(deviations))


def pure_stationary_nash(game: ActiveMarkovGame, *, epsilon: float = 1e-9) -> PureNashResult:
    """Exhaustively enumerate all pure stationary equilibria.

    Every joint policy table is checked against every unilateral alternative
    from every initial state.  Best replies are shared across profiles: the
    best value an agent can reach depends only on the others' policies.
    """
    policy_lists = [enumerate_policies(game, agent) for agent in range(game.num_agents)]
    num_states = len(game.states)
    values: dict[tuple, tuple] = {}
    for joint in itertools.product(*policy_lists):
        values[joint] = tuple(
            _stationary_values(game, joint, state) for state in range(num_states)
        )
    best: dict[tuple, float] = {}
    for joint, per_state in values.items():
        for agent in range(game.num_agents):
            others = joint[:agent] + joint[agent + 1:]
            for state in range(num_states):
                key = (agent, others, state)
                value = per_state[state][agent]
                if key not in best or value > best[key]:
                    best[key] = value
    profiles = []
    payoffs = []
    for joint in itertools.product(*policy_lists):
        per_state = values[joint]
        good = True
        for agent in range(game.num_agents):
            others = joint[:agent] + joint[agent + 1:]
            for state in range(num_states):
                if per_state[state][agent] < best[(agent, others, state)] - epsilon:
                    good = False
                    break
            if not good:
                break
        if good:
            profiles.append(joint)
            payoffs.append(AverageReward(per_agent=per_state[game.initial_state]))
    return PureNashResult(profiles=tuple(profiles), payoffs=tuple(payoffs))


def stationary_best_response(
    game: ActiveMarkovGame,
    agent: int,
    opponents_parameters: Mapping[int, PolicyParameter],
) -> tuple[PolicyParameter, float]:
    """Best fixed policy against fixed opponents, ties broken lexicographically."""
    if not 0 <= agent < game.num_agents:
        raise ValidationError(f"agent {agent} is out of range")
    expected = set(range(game.num_agents)) - {agent}
    if set(opponents_parameters) != expected:
        raise ValidationError(
            f"opponents_parameters must cover exactly agents {sorted(expected)}"
        )
    best_value = -math.inf
    best_param = None
    for candidate in enumerate_policies(game, agent):
        joint = tuple(
            candidate if i == agent else opponents_parameters[i]
            for i in range(game.num_agents)
        )
        value = _stationary_values(game, _check_joint_parameters(game, joint), game.initial_state)[agent]
        if value > best_value:
            best_value = value
            best_param = candidate
    return best_param, best_value


def _support_pairs(num_rows: int, num_cols: int):
    row_supports = [
        combo
        for size in range(1, num_rows + 1)
        for combo in itertools.combinations(range(num_rows), size)
    ]
    col_supports = [
        combo
        for size in range(1, num_cols + 1)
        for combo in itertools.combinations(range(num_cols), size)
    ]
    return itertools.product(row_supports, col_supports)


def _solve_indifference(payoff: np.ndarray, held_support, mover_support):
    """Distribution for the moving player that equalizes the held player's payoffs.

    Builds the linear system [payoff restricted to supports | -1] [p; v] = 0
    with the simplex normalization appended, solves it by least squares, and
    returns (probabilities over the full action set, value) or None when the
    system is inconsistent.
    """
    rows = len(held_support)
    cols = len(mover_support)
    matrix = np.zeros((rows + 1, cols + 1))
    rhs = np.zeros(rows + 1)
    for r, i in enumerate(held_support):
        for c, j in enumerate(mover_support):
            matrix[r, c] = payoff[i, j]
        matrix[r, cols] = -1.0
    matrix[rows, :cols] = 1.0
    rhs[rows] = 1.0
    solution, _, _, _ = np.linalg.lstsq(matrix, rhs, rcond=None)
    if np.max(np.abs(matrix @ solution - rhs)) > 1e-9:
        return None
    probabilities = np.zeros(payoff.shape[1])
    for c, j in enumerate(mover_support):
        probabilities[j] = solution[c]
    return probabilities, float(solution[cols])


def _is_equilibrium(a: np.ndarray, b: np.ndarray, x: np.ndarray, y: np.ndarray, tol: float) -> bool:
    if np.min(x) < -tol or np.min(y) < -tol:
        return False
    if abs(np.sum(x) - 1.0) > tol or abs(np.sum(y) - 1.0) > tol:
        return False
    row_payoffs = a @ y
    col_payoffs = x @ b
    v1 = float(x @ row_payoffs)
    v2 = float(col_payoffs @ y)
    # Supported actions must achieve the value; unsupported must not beat it.
    for i in range(a.shape[0]):
        if x[i] > tol and abs(row_payoffs[i] - v1) > tol:
            return False
        if row_payoffs[i] > v1 + tol:
            return False
    for j in range(a.shape[1]):
        if y[j] > tol and abs(col_payoffs[j] - v2) > tol:
            return False
        if col_payoffs[j] > v2 + tol:
            return False
    return True


def mixed_nash_support_enumeration(
    stage: StageGame,
    *,
    epsilon: float = 1e-9,
    dedup_tolerance: float = DEDUP_TOLERANCE,
) -> tuple[MixedEquilibrium, ...]:
    """All mixed equilibria of a two-player stage game found by support enumeration.

    Every pair of action supports is tried; singular or inconsistent
    indifference systems are skipped, and surviving candidates are verified
    against the simplex and best-response conditions before being kept.
    """
    if stage.num_agents != 2:
        raise ValidationError("mixed support enumeration handles exactly 2 agents")
    num_rows = len(stage.action_labels[0])
    num_cols = len(stage.action_labels[1])
    if max(num_rows, num_cols) > MIXED_MAX_ACTIONS:
        raise ValidationError(
            f"mixed support enumeration is limited to {MIXED_MAX_ACTIONS} actions per agent"
        )
    a = np.array(
        [[stage.payoffs[(i, j)][0] for j in range(num_cols)] for i in range(num_rows)]
    )
    b = np.array(
        [[stage.payoffs[(i, j)][1] for j in range(num_cols)] for i in range(num_rows)]
    )
    found: list[MixedEquilibrium] = []
    kept: list[tuple[np.ndarray, np.ndarray]] = []
    for row_support, col_support in _support_pairs(num_rows, num_cols):
        y_solution = _solve_indifference(a, row_support, col_support)
        if y_solution is None:
            continue
        x_solution = _solve_indifference(b.T, col_support, row_support)
        if x_solution is None:
            continue
        y, _ = y_solution
        x, _ = x_solution
        x = np.where(np.abs(x) < 1e-12, 0.0, x)
        y = np.where(np.abs(y) < 1e-12, 0.0, y)
        # Renormalizing removes solver rounding; singleton supports become
        # exact unit vectors.
        x = x / x.sum()
        y = y / y.sum()
        if not _is_equilibrium(a, b, x, y, epsilon):
            continue
        if any(
            np.allclose(x, px, atol=dedup_tolerance) and np.allclose(y, py, atol=dedup_tolerance)
            for px, py in kept
        ):
            continue
        kept.append((x, y))
        found.append(
            MixedEquilibrium(
                probabilities=(tuple(float(p) for p in x), tuple(float(q) for q in y)),
                value=(float(x @ a @ y), float(x @ b @ y)),
            )
        )
    return tuple(found)
