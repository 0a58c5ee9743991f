"""Deterministic display encodings for policies, rules, profiles, and nodes.

Rule keys are shown with the owning agent's action first and the remaining
agents' actions after it in agent-index order, which is also the convention
scenario files use.
"""

from __future__ import annotations

from .chain import ChainNode
from .games import (
    ActiveMarkovGame,
    PolicyParameter,
    StrategyProfile,
    UpdateDomain,
    UpdateRule,
)


def policy_text(game: ActiveMarkovGame, agent: int, policy: PolicyParameter) -> str:
    labels = [game.actions[agent][a] for a in policy.table]
    if len(labels) == 1:
        return labels[0]
    return "-".join(labels)


def own_first_key(agent: int, joint_action: tuple[int, ...]) -> tuple[int, ...]:
    return (joint_action[agent],) + joint_action[:agent] + joint_action[agent + 1:]


def own_first_key_text(game: ActiveMarkovGame, agent: int, joint_action: tuple[int, ...]) -> str:
    reordered = own_first_key(agent, joint_action)
    order = (agent,) + tuple(i for i in range(game.num_agents) if i != agent)
    labels = [game.actions[order[pos]][a] for pos, a in enumerate(reordered)]
    return "(" + ",".join(labels) + ")"


def joint_action_text(game: ActiveMarkovGame, joint_action: tuple[int, ...]) -> str:
    return "(" + ",".join(game.actions[i][a] for i, a in enumerate(joint_action)) + ")"


def rule_text(game: ActiveMarkovGame, agent: int, rule: UpdateRule) -> str:
    parts = []
    if rule.domain is UpdateDomain.JOINT_ACTION:
        entries = sorted(
            rule.entries, key=lambda kv: own_first_key(agent, kv[0])
        )
        for key, value in entries:
            parts.append(
                f"{own_first_key_text(game, agent, key)}->{policy_text(game, agent, value)}"
            )
    else:
        for key, value in rule.entries:
            policy, state, joint, next_state = key
            parts.append(
                f"[{policy_text(game, agent, policy)};{game.states[state]};"
                f"{joint_action_text(game, joint)};{game.states[next_state]}]"
                f"->{policy_text(game, agent, value)}"
            )
    return "{" + ", ".join(parts) + "}"


def strategy_text(game: ActiveMarkovGame, agent: int, strategy) -> str:
    return (
        f"theta0={policy_text(game, agent, strategy.parameter)}; "
        f"rule={rule_text(game, agent, strategy.rule)}"
    )


def profile_text(game: ActiveMarkovGame, profile: StrategyProfile) -> str:
    return " | ".join(
        f"agent{agent}: {strategy_text(game, agent, strategy)}"
        for agent, strategy in enumerate(profile.agents)
    )


def joint_parameters_text(game: ActiveMarkovGame, joint) -> str:
    return "(" + ", ".join(
        policy_text(game, agent, policy) for agent, policy in enumerate(joint)
    ) + ")"


def node_text(game: ActiveMarkovGame, node: ChainNode) -> str:
    params = ", ".join(
        policy_text(game, agent, policy) for agent, policy in enumerate(node.parameters)
    )
    return f"({game.states[node.state]}; {params})"


def format_real(value: float) -> str:
    return f"{value:.12g}"


def payoff_text(values) -> str:
    return "(" + ", ".join(format_real(v) for v in values) + ")"
