"""Exhaustive search and verification of active equilibria.

A profile of (initial policy, update rule) choices is an active equilibrium
when no agent can raise its own limit-average reward from any initial state
by replacing its whole choice with another one from the deviation space.
Stationary equilibria are the special case whose update rules keep the
policy fixed, so every stationary equilibrium embeds here.

The deviation search is exhaustive.  Enumeration over joint profiles shares
work across profiles: the best value an agent can reach depends only on the
other agents' strategies, so one pass over the payoff tensor yields every
verdict.  The worker count is controlled by the AE_NUM_THREADS environment
variable (0 or unset means all cores); results are identical for any count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .chain import (
    AverageReward,
    _compile_game,
    _compile_profile,
    _compile_strategy,
    _cycle_means,
)
from .errors import CapExceededError, ValidationError
from .games import (
    ActiveMarkovGame,
    AgentStrategy,
    StrategyProfile,
    StrategySpace,
    extract_stage_game,
    validate_profile,
)
from .nash import (
    MixedEquilibrium,
    PureNashResult,
    mixed_nash_support_enumeration,
    pure_stationary_nash,
    MIXED_MAX_ACTIONS,
)

DEFAULT_PROFILE_CAP = 2 ** 20
_SERIAL_THRESHOLD = 4096


@dataclass(frozen=True)
class DeviationResult:
    """Best unilateral replacement for one agent at its most favorable start state.

    The agent's own strategy is always in the deviation space, so gain is
    never meaningfully negative; a positive gain breaks the equilibrium.
    """

    agent: int
    state: int
    best_value: float
    best_strategies: tuple[AgentStrategy, ...]
    baseline_value: float
    gain: float


@dataclass(frozen=True)
class ActiveVerification:
    verdict: bool
    deviations: tuple[DeviationResult, ...]
    profile_in_space: bool


@dataclass(frozen=True)
class ActiveEquilibrium:
    profile: StrategyProfile
    payoff: AverageReward
    period: int


@dataclass(frozen=True)
class EquilibriumReport:
    """Side-by-side summary of stationary and active analysis for one game."""

    scenario: str
    space_cardinalities: tuple[tuple[int, int], ...]
    pure_nash: PureNashResult
    mixed: tuple[tuple[int, MixedEquilibrium], ...]
    active: tuple[ActiveEquilibrium, ...]
    active_labels: tuple
    pareto_flags: tuple[bool, ...]
    notes: tuple[str, ...]


def _worker_count(workers: "int | None") -> int:
    if workers is None:
        raw = os.environ.get("AE_NUM_THREADS", "").strip()
        if raw == "":
            workers = 0
        else:
            try:
                workers = int(raw)
            except ValueError:
                raise ValidationError(
                    f"AE_NUM_THREADS must be a nonnegative integer, got {raw!r}"
                ) from None
    if workers < 0:
        raise ValidationError(f"worker count must be nonnegative, got {workers}")
    if workers == 0:
        workers = os.cpu_count() or 1
    return workers


def _decode_flat(flat: int, counts) -> tuple[int, ...]:
    index = [0] * len(counts)
    for i in range(len(counts) - 1, -1, -1):
        index[i] = flat % counts[i]
        flat //= counts[i]
    return tuple(index)


def _evaluate_chunk(payload):
    """Per-state cycle means for a contiguous range of joint profile indices."""
    cg, compiled_lists, num_states, start, stop = payload
    counts = tuple(len(lst) for lst in compiled_lists)
    out = []
    for flat in range(start, stop):
        index = _decode_flat(flat, counts)
        strategies = tuple(compiled_lists[i][index[i]] for i in range(len(counts)))
        out.append(
            tuple(_cycle_means(cg, strategies, s)[0] for s in range(num_states))
        )
    return out


def _evaluate_profiles(cg, compiled_lists, num_states, total, workers):
    if workers <= 1 or total < _SERIAL_THRESHOLD:
        return _evaluate_chunk((cg, compiled_lists, num_states, 0, total))
    chunk = -(-total // (workers * 4))
    payloads = [
        (cg, compiled_lists, num_states, start, min(start + chunk, total))
        for start in range(0, total, chunk)
    ]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_evaluate_chunk, payloads))
    return [row for part in parts for row in part]


def _check_spaces(game: ActiveMarkovGame, spaces: StrategySpace) -> None:
    if len(spaces.agents) != game.num_agents:
        raise ValidationError(
            f"strategy space covers {len(spaces.agents)} agents, game has {game.num_agents}"
        )
    for agent, space in enumerate(spaces.agents):
        if not space.parameters or not space.rules:
            raise ValidationError(f"agent {agent} has an empty strategy space")


def best_active_deviation(
    game: ActiveMarkovGame,
    profile: StrategyProfile,
    agent: int,
    spaces: StrategySpace,
) -> DeviationResult:
    """Evaluate every candidate (policy, rule) for one agent, all else fixed.

    Candidates are scored from each initial state separately; the reported
    result is taken at the state where the advantage over the baseline is
    largest, so a zero gain certifies the equilibrium condition at every
    state.
    """
    validate_profile(game, profile)
    _check_spaces(game, spaces)
    if not 0 <= agent < game.num_agents:
        raise ValidationError(f"agent {agent} is out of range")
    candidates = spaces.agents[agent].strategies()
    cg = _compile_game(game)
    compiled = list(_compile_profile(cg, profile))
    baseline_by_state = [
        _cycle_means(cg, compiled, state)[0][agent] for state in range(len(game.states))
    ]
    candidate_values = []
    for candidate in candidates:
        compiled[agent] = _compile_strategy(cg, agent, candidate)
        candidate_values.append(
            tuple(
                _cycle_means(cg, compiled, state)[0][agent]
                for state in range(len(game.states))
            )
        )
    best = None
    for state in range(len(game.states)):
        best_value = max(values[state] for values in candidate_values)
        gain = best_value - baseline_by_state[state]
        if best is None or gain > best[0]:
            best = (gain, state, best_value)
    gain, state, best_value = best
    best_strategies = tuple(
        candidate
        for candidate, values in zip(candidates, candidate_values)
        if values[state] == best_value
    )
    return DeviationResult(
        agent=agent,
        state=state,
        best_value=best_value,
        best_strategies=best_strategies,
        baseline_value=baseline_by_state[state],
        gain=gain,
    )


def _profile_in_space(profile: StrategyProfile, spaces: StrategySpace) -> bool:
    return all(
        strategy.parameter in spaces.agents[agent].parameters
        and strategy.rule in spaces.agents[agent].rules
        for agent, strategy in enumerate(profile.agents)
    )


def verify_active_equilibrium(
    game: ActiveMarkovGame,
    profile: StrategyProfile,
    spaces: StrategySpace,
    *,
    epsilon: float = 1e-9,
) -> ActiveVerification:
    """True when no agent gains more than epsilon by any in-space replacement.

    The verdict is computed even when the profile itself lies outside the
    space; that situation is reported through profile_in_space.
    """
    validate_profile(game, profile)
    _check_spaces(game, spaces)
    deviations = tuple(
        best_active_deviation(game, profile, agent, spaces)
        for agent in range(game.num_agents)
    )
    return ActiveVerification(
        verdict=all(d.gain <= epsilon for d in deviations),
        deviations=deviations,
        profile_in_space=_profile_in_space(profile, spaces),
    )


def enumerate_active_equilibria(
    game: ActiveMarkovGame,
    spaces: StrategySpace,
    *,
    epsilon: float = 1e-9,
    cap: int = DEFAULT_PROFILE_CAP,
    workers: "int | None" = None,
) -> tuple[ActiveEquilibrium, ...]:
    """All joint profiles in the space that pass the active equilibrium check.

    The payoff tensor over the whole product space is computed once (in
    parallel when workers allow); each agent's best reachable value against
    fixed opponents is then read off the tensor, which gives exactly the
    per-state deviation comparison of verify_active_equilibrium.  Output is
    sorted by utilitarian payoff sum, best first, with enumeration order
    breaking ties.
    """
    _check_spaces(game, spaces)
    strategy_lists = [space.strategies() for space in spaces.agents]
    counts = tuple(len(lst) for lst in strategy_lists)
    total = math.prod(counts)
    if total > cap:
        raise CapExceededError(
            f"the joint strategy space has {total} profiles, "
            f"which exceeds the cap of {cap}",
            count=total,
        )
    workers = _worker_count(workers)
    num_agents = game.num_agents
    num_states = len(game.states)
    cg = _compile_game(game)
    compiled_lists = [
        [_compile_strategy(cg, agent, strategy) for strategy in strategy_lists[agent]]
        for agent in range(num_agents)
    ]
    values = _evaluate_profiles(cg, compiled_lists, num_states, total, workers)
    best = [dict() for _ in range(num_agents)]
    for flat in range(total):
        index = _decode_flat(flat, counts)
        per_state = values[flat]
        for agent in range(num_agents):
            others = index[:agent] + index[agent + 1:]
            for state in range(num_states):
                key = (others, state)
                value = per_state[state][agent]
                table = best[agent]
                if key not in table or value > table[key]:
                    table[key] = value
    selected = []
    for flat in range(total):
        index = _decode_flat(flat, counts)
        per_state = values[flat]
        passes = True
        for agent in range(num_agents):
            others = index[:agent] + index[agent + 1:]
            for state in range(num_states):
                if per_state[state][agent] < best[agent][(others, state)] - epsilon:
                    passes = False
                    break
            if not passes:
                break
        if passes:
            selected.append((flat, index))
    results = []
    for flat, index in selected:
        strategies = tuple(
            strategy_lists[agent][index[agent]] for agent in range(num_agents)
        )
        compiled = tuple(
            compiled_lists[agent][index[agent]] for agent in range(num_agents)
        )
        means, period, _ = _cycle_means(cg, compiled, game.initial_state)
        results.append(
            (
                flat,
                ActiveEquilibrium(
                    profile=StrategyProfile(strategies),
                    payoff=AverageReward(per_agent=means),
                    period=period,
                ),
            )
        )
    results.sort(key=lambda item: (-math.fsum(item[1].payoff.per_agent), item[0]))
    return tuple(eq for _, eq in results)


def _dominates(upper, lower, epsilon: float) -> bool:
    return all(u >= l - epsilon for u, l in zip(upper, lower)) and any(
        u > l + epsilon for u, l in zip(upper, lower)
    )


def _spread(values) -> float:
    return max(values) - min(values)


def _format(values) -> str:
    return "(" + ", ".join(f"{v:.12g}" for v in values) + ")"


def _build_notes(
    game: ActiveMarkovGame,
    pure: PureNashResult,
    mixed,
    active,
    epsilon: float,
) -> tuple[str, ...]:
    notes = []
    strictly_mixed = [
        (state, eq)
        for state, eq in mixed
        if any(1e-9 < p < 1 - 1e-9 for dist in eq.probabilities for p in dist)
    ]
    if len(game.states) > 1 and pure.profiles and strictly_mixed:
        states_covered = {state for state, _ in strictly_mixed}
        mixed_values = [eq.value for _, eq in strictly_mixed]
        same_mixed = all(
            abs(a - b) <= 1e-9
            for value in mixed_values
            for a, b in zip(value, mixed_values[0])
        )
        same_pure = all(
            abs(a - b) <= 1e-9
            for payoff in pure.payoffs
            for a, b in zip(payoff.per_agent, pure.payoffs[0].per_agent)
        )
        if states_covered == set(range(len(game.states))) and same_mixed and same_pure:
            stationary = pure.payoffs[0].per_agent
            if any(abs(a - b) > 1e-9 for a, b in zip(stationary, mixed_values[0])):
                notes.append(
                    f"stationary pure equilibria average {_format(stationary)} per step over the "
                    f"{len(game.states)}-phase cycle, while each single phase has a mixed "
                    f"equilibrium worth {_format(mixed_values[0])}; per-step values over the "
                    "cycle are cycle means and cannot be read off one phase's equilibrium"
                )
    if active and mixed:
        top = active[0].payoff.per_agent
        weak = all(
            all(a >= b - epsilon for a, b in zip(top, eq.value)) for _, eq in mixed
        )
        strict = any(
            any(a > b + epsilon for a, b in zip(top, eq.value)) for _, eq in mixed
        )
        if weak and strict:
            notes.append(
                f"the best active payoff {_format(top)} weakly dominates every stage "
                f"equilibrium value and strictly exceeds at least one"
            )
    if active and pure.payoffs:
        active_spread = min(_spread(eq.payoff.per_agent) for eq in active)
        pure_spread = min(_spread(p.per_agent) for p in pure.payoffs)
        if active_spread < pure_spread - epsilon:
            notes.append(
                f"an active equilibrium narrows the payoff gap between agents to "
                f"{active_spread:.12g}, against at least {pure_spread:.12g} for every "
                "pure stationary equilibrium"
            )
    return tuple(notes)


def compare_report(
    game: ActiveMarkovGame,
    spaces: StrategySpace,
    *,
    scenario_name: str = "scenario",
    candidate: "StrategyProfile | None" = None,
    candidate_label: "str | None" = None,
    epsilon: float = 1e-9,
    cap: int = DEFAULT_PROFILE_CAP,
    workers: "int | None" = None,
) -> EquilibriumReport:
    """Full stationary-versus-active comparison over an enumerated space."""
    _check_spaces(game, spaces)
    pure = pure_stationary_nash(game, epsilon=epsilon)
    mixed = []
    if game.num_agents == 2 and max(len(a) for a in game.actions) <= MIXED_MAX_ACTIONS:
        for state in range(len(game.states)):
            stage = extract_stage_game(game, state)
            for equilibrium in mixed_nash_support_enumeration(stage, epsilon=epsilon):
                mixed.append((state, equilibrium))
    active = enumerate_active_equilibria(
        game, spaces, epsilon=epsilon, cap=cap, workers=workers
    )
    labels = tuple(
        candidate_label
        if candidate is not None and equilibrium.profile == candidate
        else None
        for equilibrium in active
    )
    pareto = tuple(
        bool(pure.payoffs)
        and all(
            _dominates(equilibrium.payoff.per_agent, payoff.per_agent, epsilon)
            for payoff in pure.payoffs
        )
        for equilibrium in active
    )
    return EquilibriumReport(
        scenario=scenario_name,
        space_cardinalities=tuple(
            (len(space.parameters), len(space.rules)) for space in spaces.agents
        ),
        pure_nash=pure,
        mixed=tuple(mixed),
        active=active,
        active_labels=labels,
        pareto_flags=pareto,
        notes=_build_notes(game, pure, tuple(mixed), active, epsilon),
    )
