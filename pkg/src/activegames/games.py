"""Finite Markov games whose agents adapt their policies through update rules.

A game couples a finite state space with per-agent action sets, a
deterministic transition map, and per-agent reward tables.  Each agent acts
through an observation-indexed policy table and revises that table between
steps with a deterministic update rule, so the joint choice of (initial
policy, update rule) per agent is a finite, enumerable object.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Mapping

from .errors import CapExceededError, ValidationError

DEFAULT_RULE_CAP = 2 ** 24


def _validate_action_labels(action_labels: tuple[tuple[str, ...], ...]) -> None:
    if not action_labels:
        raise ValidationError("at least one agent is required")
    for agent, labels in enumerate(action_labels):
        if not labels:
            raise ValidationError(f"agent {agent} has an empty action set")
        if len(set(labels)) != len(labels):
            raise ValidationError(f"agent {agent} has duplicate action labels: {labels}")


def _validate_reward_table(
    table: Mapping[tuple[int, ...], tuple[float, ...]],
    action_labels: tuple[tuple[str, ...], ...],
    context: str,
) -> dict[tuple[int, ...], tuple[float, ...]]:
    """Check totality of a joint-action reward table and return a normalized copy."""
    num_agents = len(action_labels)
    normalized: dict[tuple[int, ...], tuple[float, ...]] = {}
    for joint in itertools.product(*(range(len(a)) for a in action_labels)):
        if joint not in table:
            labels = tuple(action_labels[i][joint[i]] for i in range(num_agents))
            raise ValidationError(f"{context}: missing payoff for joint action {labels}")
        rewards = tuple(float(r) for r in table[joint])
        if len(rewards) != num_agents:
            raise ValidationError(
                f"{context}: joint action {joint} has {len(rewards)} rewards, expected {num_agents}"
            )
        normalized[joint] = rewards
    if len(table) != len(normalized):
        extra = sorted(set(table) - set(normalized))
        raise ValidationError(f"{context}: unexpected joint action keys {extra}")
    return normalized


@dataclass(frozen=True)
class StageGame:
    """One-shot matrix game mapping every joint action to a reward vector."""

    num_agents: int
    action_labels: tuple[tuple[str, ...], ...]
    payoffs: Mapping[tuple[int, ...], tuple[float, ...]]

    def __post_init__(self):
        object.__setattr__(self, "action_labels", tuple(tuple(a) for a in self.action_labels))
        _validate_action_labels(self.action_labels)
        if self.num_agents != len(self.action_labels):
            raise ValidationError(
                f"num_agents is {self.num_agents} but {len(self.action_labels)} action sets were given"
            )
        object.__setattr__(
            self, "payoffs", _validate_reward_table(self.payoffs, self.action_labels, "stage game")
        )

    def joint_actions(self) -> tuple[tuple[int, ...], ...]:
        return tuple(itertools.product(*(range(len(a)) for a in self.action_labels)))


@dataclass(frozen=True)
class ActiveMarkovGame:
    """Finite game with deterministic transitions and a state-to-observation map."""

    states: tuple[str, ...]
    observations: tuple[str, ...]
    observe: tuple[int, ...]
    actions: tuple[tuple[str, ...], ...]
    transition: Mapping[tuple[int, tuple[int, ...]], int]
    rewards: Mapping[tuple[int, tuple[int, ...]], tuple[float, ...]]
    initial_state: int

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "observations", tuple(self.observations))
        object.__setattr__(self, "observe", tuple(self.observe))
        object.__setattr__(self, "actions", tuple(tuple(a) for a in self.actions))
        if not self.states:
            raise ValidationError("state set is empty")
        if not self.observations:
            raise ValidationError("observation set is empty")
        _validate_action_labels(self.actions)
        if len(self.observe) != len(self.states):
            raise ValidationError("observe must assign an observation to every state")
        for state, obs in enumerate(self.observe):
            if not 0 <= obs < len(self.observations):
                raise ValidationError(f"observe[{state}] = {obs} is not an observation index")
        if not 0 <= self.initial_state < len(self.states):
            raise ValidationError(f"initial state {self.initial_state} is out of range")
        transition: dict[tuple[int, tuple[int, ...]], int] = {}
        rewards: dict[tuple[int, tuple[int, ...]], tuple[float, ...]] = {}
        for state in range(len(self.states)):
            for joint in self.joint_actions():
                key = (state, joint)
                if key not in self.transition:
                    raise ValidationError(f"transition is undefined at state {state}, joint action {joint}")
                nxt = self.transition[key]
                if not 0 <= nxt < len(self.states):
                    raise ValidationError(f"transition at {key} leads to invalid state {nxt}")
                if key not in self.rewards:
                    raise ValidationError(f"rewards are undefined at state {state}, joint action {joint}")
                vec = tuple(float(r) for r in self.rewards[key])
                if len(vec) != self.num_agents:
                    raise ValidationError(f"reward vector at {key} has length {len(vec)}")
                transition[key] = nxt
                rewards[key] = vec
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "rewards", rewards)

    @property
    def num_agents(self) -> int:
        return len(self.actions)

    def joint_actions(self) -> tuple[tuple[int, ...], ...]:
        return tuple(itertools.product(*(range(len(a)) for a in self.actions)))


@dataclass(frozen=True)
class PolicyParameter:
    """Deterministic policy: one action index per observation index."""

    table: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(int(a) for a in self.table))
        if not self.table:
            raise ValidationError("policy table is empty")
        if any(a < 0 for a in self.table):
            raise ValidationError(f"policy table {self.table} contains negative action indices")

    def action(self, observation: int) -> int:
        return self.table[observation]


class UpdateDomain(str, Enum):
    """Key domain an update rule conditions on.

    JOINT_ACTION keys rules by the realized joint action alone.  FULL keys
    them by the whole experience (own policy, state, joint action, next
    state).
    """

    JOINT_ACTION = "joint_action"
    FULL = "full"


def _rule_key_sort(key):
    if key and isinstance(key[0], PolicyParameter):
        return (key[0].table, key[1], key[2], key[3])
    return key


@dataclass(frozen=True)
class UpdateRule:
    """Deterministic map from experience keys to the next policy."""

    domain: UpdateDomain
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "domain", UpdateDomain(self.domain))
        entries = tuple(sorted(self.entries, key=lambda kv: _rule_key_sort(kv[0])))
        keys = [k for k, _ in entries]
        if len(set(keys)) != len(keys):
            raise ValidationError("update rule has duplicate keys")
        for _, value in entries:
            if not isinstance(value, PolicyParameter):
                raise ValidationError("update rule values must be policies")
        object.__setattr__(self, "entries", entries)

    def next_parameter(
        self,
        current: PolicyParameter,
        state: int,
        joint_action: tuple[int, ...],
        next_state: int,
    ) -> PolicyParameter:
        if self.domain is UpdateDomain.JOINT_ACTION:
            key = joint_action
        else:
            key = (current, state, joint_action, next_state)
        mapping = _rule_mapping(self)
        if key not in mapping:
            raise ValidationError(f"update rule is undefined for key {key}")
        return mapping[key]


@lru_cache(maxsize=4096)
def _rule_mapping(rule: UpdateRule) -> dict:
    return dict(rule.entries)


@dataclass(frozen=True)
class AgentStrategy:
    """One agent's full strategic choice: initial policy plus update rule."""

    parameter: PolicyParameter
    rule: UpdateRule


@dataclass(frozen=True)
class StrategyProfile:
    agents: tuple[AgentStrategy, ...]

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))


@dataclass(frozen=True)
class AgentSpace:
    """Candidate policies and update rules available to one agent."""

    parameters: tuple[PolicyParameter, ...]
    rules: tuple[UpdateRule, ...]

    def __post_init__(self):
        object.__setattr__(self, "parameters", tuple(self.parameters))
        object.__setattr__(self, "rules", tuple(self.rules))
        if not self.parameters or not self.rules:
            raise ValidationError("an agent's strategy space must not be empty")

    def strategies(self) -> tuple[AgentStrategy, ...]:
        return tuple(
            AgentStrategy(p, r) for p in self.parameters for r in self.rules
        )


@dataclass(frozen=True)
class StrategySpace:
    agents: tuple[AgentSpace, ...]

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))


def build_repeated_game(stage: StageGame) -> ActiveMarkovGame:
    """Wrap a stage game as a single-state game that repeats forever."""
    joint = stage.joint_actions()
    return ActiveMarkovGame(
        states=("stage",),
        observations=("stage",),
        observe=(0,),
        actions=stage.action_labels,
        transition={(0, a): 0 for a in joint},
        rewards={(0, a): stage.payoffs[a] for a in joint},
        initial_state=0,
    )


def build_periodic_game(stages: tuple[StageGame, ...], hidden_phase: bool) -> ActiveMarkovGame:
    """Cycle through the given stage games, one per phase.

    The phase advances deterministically and independently of actions.  With
    hidden_phase the agents see a single constant observation; otherwise they
    observe the phase itself.
    """
    stages = tuple(stages)
    if not stages:
        raise ValidationError("a periodic game needs at least one stage")
    first = stages[0]
    for index, stage in enumerate(stages):
        if stage.action_labels != first.action_labels:
            raise ValidationError(
                f"stage {index} has action sets {stage.action_labels}, "
                f"expected {first.action_labels}"
            )
    period = len(stages)
    states = tuple(f"phase{p}" for p in range(period))
    if hidden_phase:
        observations = ("hidden",)
        observe = tuple(0 for _ in states)
    else:
        observations = states
        observe = tuple(range(period))
    joint = first.joint_actions()
    return ActiveMarkovGame(
        states=states,
        observations=observations,
        observe=observe,
        actions=first.action_labels,
        transition={(p, a): (p + 1) % period for p in range(period) for a in joint},
        rewards={(p, a): stages[p].payoffs[a] for p in range(period) for a in joint},
        initial_state=0,
    )


def extract_stage_game(game: ActiveMarkovGame, state: int) -> StageGame:
    """Read one state's reward table back out as a stand-alone stage game."""
    if not 0 <= state < len(game.states):
        raise ValidationError(f"state {state} is out of range")
    return StageGame(
        num_agents=game.num_agents,
        action_labels=game.actions,
        payoffs={a: game.rewards[(state, a)] for a in game.joint_actions()},
    )


def _check_agent(game: ActiveMarkovGame, agent: int) -> None:
    if not 0 <= agent < game.num_agents:
        raise ValidationError(f"agent {agent} is out of range for {game.num_agents} agents")


def enumerate_policies(game: ActiveMarkovGame, agent: int) -> tuple[PolicyParameter, ...]:
    """All deterministic observation-to-action tables, in lexicographic order."""
    _check_agent(game, agent)
    num_actions = len(game.actions[agent])
    num_obs = len(game.observations)
    return tuple(
        PolicyParameter(table)
        for table in itertools.product(range(num_actions), repeat=num_obs)
    )


def joint_action_keys(game: ActiveMarkovGame) -> tuple[tuple[int, ...], ...]:
    return game.joint_actions()


def full_rule_keys(game: ActiveMarkovGame, agent: int) -> tuple[tuple, ...]:
    """Canonical key order for FULL-domain rules: (policy, state, joint action, next state)."""
    policies = enumerate_policies(game, agent)
    states = range(len(game.states))
    return tuple(
        (p, s, a, s2)
        for p in policies
        for s in states
        for a in game.joint_actions()
        for s2 in states
    )


def _rule_keys(game: ActiveMarkovGame, agent: int, domain: UpdateDomain) -> tuple:
    if UpdateDomain(domain) is UpdateDomain.JOINT_ACTION:
        return joint_action_keys(game)
    return full_rule_keys(game, agent)


def enumerate_update_rules(
    game: ActiveMarkovGame,
    agent: int,
    domain: UpdateDomain,
    *,
    cap: int = DEFAULT_RULE_CAP,
) -> tuple[UpdateRule, ...]:
    """All total maps from the rule key domain to the agent's policy set.

    The count is |policies| ** |keys|; enumeration refuses to materialize
    more than cap rules and reports the exact count instead.
    """
    _check_agent(game, agent)
    domain = UpdateDomain(domain)
    keys = _rule_keys(game, agent, domain)
    policies = enumerate_policies(game, agent)
    count = len(policies) ** len(keys)
    if count > cap:
        raise CapExceededError(
            f"agent {agent} has {count} update rules over {len(keys)} keys, "
            f"which exceeds the cap of {cap}",
            count=count,
        )
    return tuple(
        UpdateRule(domain, tuple(zip(keys, values)))
        for values in itertools.product(policies, repeat=len(keys))
    )


def identity_update_rule(game: ActiveMarkovGame, agent: int, domain: UpdateDomain) -> UpdateRule:
    """The rule that keeps the agent's policy unchanged at every key.

    Under the FULL domain the key carries the current policy, so identity is
    always expressible.  Under JOINT_ACTION the key only carries actions, so
    identity is expressible exactly when a policy is recoverable from its own
    action, i.e. with a single observation.
    """
    _check_agent(game, agent)
    domain = UpdateDomain(domain)
    if domain is UpdateDomain.FULL:
        return UpdateRule(domain, tuple((key, key[0]) for key in full_rule_keys(game, agent)))
    if len(game.observations) != 1:
        raise ValidationError(
            "the identity rule over joint-action keys requires a single observation; "
            f"this game has {len(game.observations)}"
        )
    return UpdateRule(
        domain,
        tuple((key, PolicyParameter((key[agent],))) for key in joint_action_keys(game)),
    )


def full_strategy_space(
    game: ActiveMarkovGame,
    domain: UpdateDomain,
    *,
    rule_cap: int = DEFAULT_RULE_CAP,
) -> StrategySpace:
    """Every agent's complete (policy, update rule) space under one key domain."""
    return StrategySpace(
        tuple(
            AgentSpace(
                parameters=enumerate_policies(game, agent),
                rules=enumerate_update_rules(game, agent, domain, cap=rule_cap),
            )
            for agent in range(game.num_agents)
        )
    )


def validate_profile(game: ActiveMarkovGame, profile: StrategyProfile) -> None:
    """Check that a profile is total and well typed for the given game."""
    if not isinstance(profile, StrategyProfile):
        raise ValidationError("profile must be a StrategyProfile")
    if len(profile.agents) != game.num_agents:
        raise ValidationError(
            f"profile has {len(profile.agents)} strategies for {game.num_agents} agents"
        )
    num_obs = len(game.observations)
    for agent, strategy in enumerate(profile.agents):
        num_actions = len(game.actions[agent])

        def check_policy(policy: PolicyParameter, what: str) -> None:
            if len(policy.table) != num_obs:
                raise ValidationError(
                    f"agent {agent} {what} covers {len(policy.table)} observations, expected {num_obs}"
                )
            if any(a >= num_actions for a in policy.table):
                raise ValidationError(
                    f"agent {agent} {what} {policy.table} uses an action index out of range"
                )

        check_policy(strategy.parameter, "initial policy")
        expected = set(_rule_keys(game, agent, strategy.rule.domain))
        actual = {k for k, _ in strategy.rule.entries}
        if actual != expected:
            missing = expected - actual
            extra = actual - expected
            detail = []
            if missing:
                detail.append(f"missing keys such as {sorted(missing, key=_rule_key_sort)[0]}")
            if extra:
                detail.append(f"unexpected keys such as {sorted(extra, key=_rule_key_sort)[0]}")
            raise ValidationError(
                f"agent {agent} update rule is not total over its key domain ({'; '.join(detail)})"
            )
        for _, value in strategy.rule.entries:
            check_policy(value, "rule value")
