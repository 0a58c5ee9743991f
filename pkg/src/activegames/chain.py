"""Markov-chain analysis of the joint (state, policy) process.

Profiles in these games are deterministic end to end, so the induced process
is a functional graph over (state, joint policy) nodes: a single trajectory
from the initial node enters a cycle after a finite transient prefix.
Limit-average rewards are exact cycle means, and the limiting periodic
distributions are point masses on the cycle nodes, one per phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple

from .errors import ValidationError
from .games import (
    ActiveMarkovGame,
    PolicyParameter,
    StrategyProfile,
    UpdateDomain,
    validate_profile,
)


class ChainNode(NamedTuple):
    state: int
    parameters: tuple[PolicyParameter, ...]


@dataclass(frozen=True)
class InducedChain:
    """Reachable, successor-closed node set of one profile's joint process."""

    nodes: tuple[ChainNode, ...]
    successor: Mapping[ChainNode, ChainNode]
    node_reward: Mapping[ChainNode, tuple[float, ...]]
    initial_node: ChainNode


@dataclass(frozen=True)
class PeriodicDistribution:
    """Point-mass limiting distribution, one mass vector per cycle phase.

    Phase 0 is the first node at which the trajectory enters the cycle;
    entry_length counts the transient steps before that.
    """

    period: int
    phase_masses: tuple[Mapping[ChainNode, float], ...]
    entry_length: int

    def __post_init__(self):
        if self.period < 1:
            raise ValidationError("period must be positive")
        if len(self.phase_masses) != self.period:
            raise ValidationError(
                f"expected {self.period} phase mass vectors, got {len(self.phase_masses)}"
            )
        for phase, masses in enumerate(self.phase_masses):
            total = math.fsum(masses.values())
            if abs(total - 1.0) > 1e-9:
                raise ValidationError(f"phase {phase} masses sum to {total}, expected 1")


@dataclass(frozen=True)
class AverageReward:
    """Per-agent limit of the running mean reward."""

    per_agent: tuple[float, ...]


# Compiled representation used by the hot paths.  Policies are indexed into
# per-strategy local tables so nodes become flat integer tuples.


@dataclass(frozen=True)
class _CompiledGame:
    num_agents: int
    num_states: int
    observe: tuple[int, ...]
    action_counts: tuple[int, ...]
    joint_actions: tuple[tuple[int, ...], ...]
    next_state: tuple[tuple[int, ...], ...]
    rewards: tuple[tuple[tuple[float, ...], ...], ...]


@dataclass(frozen=True)
class _CompiledStrategy:
    initial: int
    parameters: tuple[PolicyParameter, ...]
    actions: tuple[tuple[int, ...], ...]
    joint_table: "tuple[int, ...] | None"
    full_table: "dict[tuple[int, int, int, int], int] | None"


def _compile_game(game: ActiveMarkovGame) -> _CompiledGame:
    joint = game.joint_actions()
    next_state = tuple(
        tuple(game.transition[(s, a)] for a in joint) for s in range(len(game.states))
    )
    rewards = tuple(
        tuple(game.rewards[(s, a)] for a in joint) for s in range(len(game.states))
    )
    return _CompiledGame(
        num_agents=game.num_agents,
        num_states=len(game.states),
        observe=game.observe,
        action_counts=tuple(len(a) for a in game.actions),
        joint_actions=joint,
        next_state=next_state,
        rewards=rewards,
    )


def _compile_strategy(cg: _CompiledGame, agent: int, strategy) -> _CompiledStrategy:
    index: dict[PolicyParameter, int] = {}

    def local(policy: PolicyParameter) -> int:
        if policy not in index:
            index[policy] = len(index)
        return index[policy]

    local(strategy.parameter)
    rule = strategy.rule
    if rule.domain is UpdateDomain.JOINT_ACTION:
        by_joint = dict(rule.entries)
        joint_table = tuple(local(by_joint[a]) for a in cg.joint_actions)
        full_table = None
    else:
        joint_table = None
        joint_index = {a: i for i, a in enumerate(cg.joint_actions)}
        for key, _ in rule.entries:
            local(key[0])
        full_table = {
            (local(key[0]), key[1], joint_index[key[2]], key[3]): local(value)
            for key, value in rule.entries
        }
    parameters = tuple(index)
    actions = tuple(p.table for p in parameters)
    return _CompiledStrategy(
        initial=index[strategy.parameter],
        parameters=parameters,
        actions=actions,
        joint_table=joint_table,
        full_table=full_table,
    )


def _compile_profile(cg: _CompiledGame, profile: StrategyProfile) -> tuple[_CompiledStrategy, ...]:
    return tuple(
        _compile_strategy(cg, agent, strategy) for agent, strategy in enumerate(profile.agents)
    )


def _walk(cg: _CompiledGame, strategies, start_state: int):
    """Follow the deterministic process until the first node repeat.

    Returns (path of nodes, entry index of the cycle, per-step reward rows).
    Nodes are (state, local policy index per agent) tuples.
    """
    observe = cg.observe
    counts = cg.action_counts
    num_agents = cg.num_agents
    node = (start_state,) + tuple(st.initial for st in strategies)
    seen: dict = {}
    path = []
    reward_rows = []
    while node not in seen:
        seen[node] = len(path)
        path.append(node)
        state = node[0]
        obs = observe[state]
        joint = 0
        for i in range(num_agents):
            joint = joint * counts[i] + strategies[i].actions[node[1 + i]][obs]
        reward_rows.append(cg.rewards[state][joint])
        next_state = cg.next_state[state][joint]
        nxt = [next_state]
        for i in range(num_agents):
            st = strategies[i]
            if st.joint_table is not None:
                nxt.append(st.joint_table[joint])
            else:
                nxt.append(st.full_table[(node[1 + i], state, joint, next_state)])
        node = tuple(nxt)
    return path, seen[node], reward_rows


def _cycle_means(cg, strategies, start_state: int):
    """Cycle-mean reward per agent plus (period, entry length)."""
    path, entry, reward_rows = _walk(cg, strategies, start_state)
    period = len(path) - entry
    means = tuple(
        math.fsum(row[i] for row in reward_rows[entry:]) / period
        for i in range(cg.num_agents)
    )
    return means, period, entry


def _decode_node(strategies, node) -> ChainNode:
    return ChainNode(node[0], tuple(st.parameters[p] for st, p in zip(strategies, node[1:])))


def induce_chain(game: ActiveMarkovGame, profile: StrategyProfile) -> InducedChain:
    """Materialize the node set reachable from the initial state under a profile."""
    validate_profile(game, profile)
    cg = _compile_game(game)
    strategies = _compile_profile(cg, profile)
    path, entry, reward_rows = _walk(cg, strategies, game.initial_state)
    nodes = tuple(_decode_node(strategies, n) for n in path)
    successor = {nodes[i]: nodes[i + 1] for i in range(len(nodes) - 1)}
    successor[nodes[-1]] = nodes[entry]
    node_reward = {nodes[i]: reward_rows[i] for i in range(len(nodes))}
    return InducedChain(
        nodes=nodes,
        successor=successor,
        node_reward=node_reward,
        initial_node=nodes[0],
    )


def cycle_decomposition(chain: InducedChain) -> tuple[tuple[ChainNode, ...], tuple[ChainNode, ...]]:
    """Split the walk from the initial node into transient prefix and minimal cycle."""
    seen: dict[ChainNode, int] = {}
    path = []
    node = chain.initial_node
    while node not in seen:
        seen[node] = len(path)
        path.append(node)
        node = chain.successor[node]
    entry = seen[node]
    return tuple(path[:entry]), tuple(path[entry:])


def average_reward(
    game: ActiveMarkovGame,
    profile: StrategyProfile,
    *,
    initial_state: "int | None" = None,
) -> AverageReward:
    """Limit-average reward of a profile: the exact mean over one cycle."""
    validate_profile(game, profile)
    start = game.initial_state if initial_state is None else initial_state
    if not 0 <= start < len(game.states):
        raise ValidationError(f"initial state {start} is out of range")
    cg = _compile_game(game)
    strategies = _compile_profile(cg, profile)
    means, _, _ = _cycle_means(cg, strategies, start)
    return AverageReward(per_agent=means)


def periodic_distribution(
    game: ActiveMarkovGame,
    profile: StrategyProfile,
    *,
    initial_state: "int | None" = None,
) -> PeriodicDistribution:
    """Limiting distribution over nodes, resolved by phase within the cycle."""
    validate_profile(game, profile)
    start = game.initial_state if initial_state is None else initial_state
    cg = _compile_game(game)
    strategies = _compile_profile(cg, profile)
    path, entry, _ = _walk(cg, strategies, start)
    cycle = [_decode_node(strategies, n) for n in path[entry:]]
    return PeriodicDistribution(
        period=len(cycle),
        phase_masses=tuple({node: 1.0} for node in cycle),
        entry_length=entry,
    )


def verify_balance(
    game: ActiveMarkovGame,
    profile: StrategyProfile,
    dist: PeriodicDistribution,
) -> float:
    """Residual of the phase-averaged balance equation for a candidate distribution.

    For each node n the shifted side (1/k) sum_l mass[l+1 mod k](n) must equal
    the flow side (1/k) sum_l sum_m mass[l](m) [successor(m) = n].  Returns
    the maximum absolute difference over nodes; the true periodic
    distribution achieves 0 up to rounding.
    """
    chain = induce_chain(game, profile)
    period = dist.period
    node_set = set(chain.nodes)
    for phase, masses in enumerate(dist.phase_masses):
        for node in masses:
            if node not in node_set:
                raise ValidationError(
                    f"phase {phase} puts mass on a node outside the induced chain: {node}"
                )
    shifted: dict[ChainNode, float] = {}
    flowed: dict[ChainNode, float] = {}
    for phase in range(period):
        for node, mass in dist.phase_masses[(phase + 1) % period].items():
            shifted[node] = shifted.get(node, 0.0) + mass
        for node, mass in dist.phase_masses[phase].items():
            target = chain.successor[node]
            flowed[target] = flowed.get(target, 0.0) + mass
    residual = 0.0
    for node in chain.nodes:
        lhs = shifted.get(node, 0.0) / period
        rhs = flowed.get(node, 0.0) / period
        residual = max(residual, abs(lhs - rhs))
    return residual


def mu_weighted_average_reward(
    game: ActiveMarkovGame,
    profile: StrategyProfile,
    dist: "PeriodicDistribution | None" = None,
    *,
    initial_state: "int | None" = None,
) -> AverageReward:
    """Average reward computed the distribution-weighted way.

    Weighs each node's one-step reward by its phase mass and averages over
    phases.  Cross-check path for average_reward: on the point-mass
    distribution the two agree to floating-point exactness.
    """
    if dist is None:
        dist = periodic_distribution(game, profile, initial_state=initial_state)
    values = []
    for agent in range(game.num_agents):
        terms = []
        for masses in dist.phase_masses:
            for node, mass in masses.items():
                obs = game.observe[node.state]
                joint = tuple(p.action(obs) for p in node.parameters)
                terms.append(mass * game.rewards[(node.state, joint)][agent])
        values.append(math.fsum(terms) / dist.period)
    return AverageReward(per_agent=tuple(values))
