"""Scenario files: JSON descriptions of games plus optional candidate profiles.

A scenario names the agents' action sets, the stage payoff tables, how the
stages repeat, and optionally one candidate (initial policy, update rule)
profile to verify.  Rule keys in files are written with the owning agent's
action first, then the other agents' actions in agent-index order; parsing
normalizes them to plain agent-index order internally.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError
from .games import (
    ActiveMarkovGame,
    AgentStrategy,
    PolicyParameter,
    StageGame,
    StrategyProfile,
    UpdateDomain,
    UpdateRule,
    build_periodic_game,
    build_repeated_game,
    joint_action_keys,
)

STRUCTURES = ("repeated", "periodic")
_SCENARIO_KEYS = {
    "name", "agents", "actions", "structure", "hidden_phase",
    "stages", "update_domain", "candidate",
}
_STAGE_KEYS = {"label", "payoffs"}
_CANDIDATE_KEYS = {"label", "theta0", "update_rules"}


class ScenarioError(ValidationError):
    """Parse error carrying the path of the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class Scenario:
    """Parsed scenario file contents."""

    name: str
    num_agents: int
    action_labels: tuple[tuple[str, ...], ...]
    structure: str
    hidden_phase: "bool | None"
    stage_labels: tuple
    stages: tuple[StageGame, ...]
    update_domain: UpdateDomain
    candidate: "StrategyProfile | None"
    candidate_label: "str | None"


def _require(mapping, key, path):
    if key not in mapping:
        raise ScenarioError(path, f"missing required field '{key}'")
    return mapping[key]


def _expect_str(value, path):
    if not isinstance(value, str) or not value:
        raise ScenarioError(path, f"expected a non-empty string, got {value!r}")
    return value


def _expect_int(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(path, f"expected an integer, got {value!r}")
    return value


def _expect_list(value, path, length=None):
    if not isinstance(value, list):
        raise ScenarioError(path, f"expected a list, got {type(value).__name__}")
    if length is not None and len(value) != length:
        raise ScenarioError(path, f"expected a list of length {length}, got {len(value)}")
    return value


def _expect_number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(path, f"expected a number, got {value!r}")
    return float(value)


def _reject_unknown(mapping, allowed, path):
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ScenarioError(path, f"unknown field '{unknown[0]}'")


def _action_index(label, labels, path):
    if label not in labels:
        raise ScenarioError(
            path, f"unknown action label {label!r}; valid labels are {list(labels)}"
        )
    return labels.index(label)


def _parse_payoffs(raw, action_labels, path):
    """Nested payoff lists, one level per agent, leaves holding one reward per agent."""
    num_agents = len(action_labels)
    payoffs = {}

    def descend(node, prefix, node_path):
        depth = len(prefix)
        if depth == num_agents:
            row = _expect_list(node, node_path, length=num_agents)
            payoffs[prefix] = tuple(
                _expect_number(entry, f"{node_path}[{i}]") for i, entry in enumerate(row)
            )
            return
        rows = _expect_list(node, node_path, length=len(action_labels[depth]))
        for i, child in enumerate(rows):
            descend(child, prefix + (i,), f"{node_path}[{i}]")

    descend(raw, (), path)
    return payoffs


def _parse_policy(raw, agent, action_labels, num_observations, path):
    """A policy is one action label, or one label per observation."""
    labels = action_labels[agent]
    if isinstance(raw, str):
        index = _action_index(raw, labels, path)
        return PolicyParameter((index,) * num_observations)
    entries = _expect_list(raw, path, length=num_observations)
    return PolicyParameter(
        tuple(_action_index(_expect_str(e, f"{path}[{i}]"), labels, f"{path}[{i}]")
              for i, e in enumerate(entries))
    )


def _parse_rule_key(raw_key, agent, action_labels, path):
    """Key string '(own,other,...)' reordered to an agent-index joint action."""
    num_agents = len(action_labels)
    text = raw_key.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise ScenarioError(path, f"expected a key like '(X,Y)', got {raw_key!r}")
    parts = [p.strip() for p in text[1:-1].split(",")]
    if len(parts) != num_agents:
        raise ScenarioError(
            path, f"key {raw_key!r} lists {len(parts)} actions, expected {num_agents}"
        )
    order = (agent,) + tuple(i for i in range(num_agents) if i != agent)
    joint = [0] * num_agents
    for position, label in enumerate(parts):
        owner = order[position]
        joint[owner] = _action_index(label, action_labels[owner], path)
    return tuple(joint)


def _serialize_rule_key(joint, agent, action_labels) -> str:
    order = (agent,) + tuple(i for i in range(len(joint)) if i != agent)
    return "(" + ",".join(action_labels[i][joint[i]] for i in order) + ")"


def _parse_candidate(raw, game, scenario_path):
    _reject_unknown(raw, _CANDIDATE_KEYS, scenario_path)
    label = None
    if "label" in raw:
        label = _expect_str(raw["label"], f"{scenario_path}.label")
    num_agents = game.num_agents
    num_observations = len(game.observations)
    theta0_raw = _expect_list(
        _require(raw, "theta0", scenario_path), f"{scenario_path}.theta0", length=num_agents
    )
    rules_raw = _expect_list(
        _require(raw, "update_rules", scenario_path),
        f"{scenario_path}.update_rules",
        length=num_agents,
    )
    strategies = []
    for agent in range(num_agents):
        parameter = _parse_policy(
            theta0_raw[agent], agent, game.actions, num_observations,
            f"{scenario_path}.theta0[{agent}]",
        )
        table_raw = rules_raw[agent]
        rule_path = f"{scenario_path}.update_rules[{agent}]"
        if not isinstance(table_raw, dict):
            raise ScenarioError(rule_path, "expected an object mapping keys to actions")
        entries = []
        for raw_key, raw_value in table_raw.items():
            key = _parse_rule_key(raw_key, agent, game.actions, f"{rule_path}.{raw_key}")
            value = _parse_policy(
                raw_value, agent, game.actions, num_observations, f"{rule_path}.{raw_key}"
            )
            entries.append((key, value))
        keys = {k for k, _ in entries}
        expected = set(joint_action_keys(game))
        if keys != expected:
            missing = expected - keys
            if missing:
                shown = _serialize_rule_key(sorted(missing)[0], agent, game.actions)
                raise ScenarioError(rule_path, f"missing key {shown}")
            raise ScenarioError(rule_path, "duplicate keys after normalization")
        rule = UpdateRule(UpdateDomain.JOINT_ACTION, tuple(entries))
        strategies.append(AgentStrategy(parameter=parameter, rule=rule))
    return StrategyProfile(tuple(strategies)), label


def build_game(scenario: Scenario) -> ActiveMarkovGame:
    if scenario.structure == "repeated":
        return build_repeated_game(scenario.stages[0])
    return build_periodic_game(scenario.stages, bool(scenario.hidden_phase))


def parse_scenario(text: str):
    """Parse scenario JSON into (game, optional candidate profile, scenario).

    Raises ScenarioError naming the field path for every malformed field.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("$", f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ScenarioError("$", "expected a JSON object")
    _reject_unknown(raw, _SCENARIO_KEYS, "$")
    name = _expect_str(_require(raw, "name", "$"), "name")
    num_agents = _expect_int(_require(raw, "agents", "$"), "agents")
    if num_agents < 1:
        raise ScenarioError("agents", f"expected at least 1 agent, got {num_agents}")
    actions_raw = _expect_list(_require(raw, "actions", "$"), "actions", length=num_agents)
    action_labels = tuple(
        tuple(
            _expect_str(label, f"actions[{agent}][{i}]")
            for i, label in enumerate(_expect_list(entry, f"actions[{agent}]"))
        )
        for agent, entry in enumerate(actions_raw)
    )
    structure = _expect_str(_require(raw, "structure", "$"), "structure")
    if structure not in STRUCTURES:
        raise ScenarioError("structure", f"expected one of {list(STRUCTURES)}, got {structure!r}")
    hidden_phase = None
    if structure == "periodic":
        hidden_raw = _require(raw, "hidden_phase", "$")
        if not isinstance(hidden_raw, bool):
            raise ScenarioError("hidden_phase", f"expected true or false, got {hidden_raw!r}")
        hidden_phase = hidden_raw
    elif "hidden_phase" in raw:
        raise ScenarioError("hidden_phase", "only periodic scenarios take hidden_phase")
    stages_raw = _expect_list(_require(raw, "stages", "$"), "stages")
    if structure == "repeated" and len(stages_raw) != 1:
        raise ScenarioError("stages", f"a repeated scenario has exactly 1 stage, got {len(stages_raw)}")
    if not stages_raw:
        raise ScenarioError("stages", "at least one stage is required")
    stage_labels = []
    stages = []
    for index, stage_raw in enumerate(stages_raw):
        stage_path = f"stages[{index}]"
        if not isinstance(stage_raw, dict):
            raise ScenarioError(stage_path, "expected an object with a 'payoffs' field")
        _reject_unknown(stage_raw, _STAGE_KEYS, stage_path)
        label = None
        if "label" in stage_raw:
            label = _expect_str(stage_raw["label"], f"{stage_path}.label")
        payoffs = _parse_payoffs(
            _require(stage_raw, "payoffs", stage_path), action_labels, f"{stage_path}.payoffs"
        )
        stage_labels.append(label)
        stages.append(
            StageGame(num_agents=num_agents, action_labels=action_labels, payoffs=payoffs)
        )
    domain_raw = _expect_str(_require(raw, "update_domain", "$"), "update_domain")
    try:
        update_domain = UpdateDomain(domain_raw)
    except ValueError:
        raise ScenarioError(
            "update_domain",
            f"expected one of {[d.value for d in UpdateDomain]}, got {domain_raw!r}",
        ) from None
    scenario = Scenario(
        name=name,
        num_agents=num_agents,
        action_labels=action_labels,
        structure=structure,
        hidden_phase=hidden_phase,
        stage_labels=tuple(stage_labels),
        stages=tuple(stages),
        update_domain=update_domain,
        candidate=None,
        candidate_label=None,
    )
    game = build_game(scenario)
    candidate = None
    candidate_label = None
    if "candidate" in raw:
        if not isinstance(raw["candidate"], dict):
            raise ScenarioError("candidate", "expected an object")
        candidate, candidate_label = _parse_candidate(raw["candidate"], game, "candidate")
    scenario = Scenario(
        name=name,
        num_agents=num_agents,
        action_labels=action_labels,
        structure=structure,
        hidden_phase=hidden_phase,
        stage_labels=tuple(stage_labels),
        stages=tuple(stages),
        update_domain=update_domain,
        candidate=candidate,
        candidate_label=candidate_label,
    )
    return game, candidate, scenario


def _number(value: float):
    return int(value) if value == int(value) else value


def _inline_json(value):
    """One-line rendering for short dict-free values, None when too long."""
    if isinstance(value, dict):
        return None
    if isinstance(value, list):
        parts = []
        for item in value:
            rendered = _inline_json(item)
            if rendered is None:
                return None
            parts.append(rendered)
        text = "[" + ", ".join(parts) + "]"
        return text if len(text) <= 60 else None
    return json.dumps(value, ensure_ascii=False)


def _dump_json(value, indent: int) -> str:
    """Deterministic two-space formatting with compact leaf lists."""
    inline = _inline_json(value)
    if inline is not None:
        return inline
    pad = "  " * indent
    child = "  " * (indent + 1)
    if isinstance(value, dict):
        if not value:
            return "{}"
        lines = [
            f"{child}{json.dumps(key, ensure_ascii=False)}: {_dump_json(item, indent + 1)}"
            for key, item in value.items()
        ]
        return "{\n" + ",\n".join(lines) + f"\n{pad}}}"
    lines = [f"{child}{_dump_json(item, indent + 1)}" for item in value]
    return "[\n" + ",\n".join(lines) + f"\n{pad}]"


def _policy_document(policy: PolicyParameter, agent: int, action_labels):
    labels = [action_labels[agent][a] for a in policy.table]
    if len(labels) == 1:
        return labels[0]
    return labels


def _payoff_document(stage: StageGame):
    def build(prefix):
        depth = len(prefix)
        if depth == stage.num_agents:
            return [_number(v) for v in stage.payoffs[prefix]]
        return [build(prefix + (i,)) for i in range(len(stage.action_labels[depth]))]

    return build(())


def serialize_scenario(scenario: Scenario) -> str:
    """Canonical JSON text for a scenario; parse then serialize is the identity."""
    doc = {
        "name": scenario.name,
        "agents": scenario.num_agents,
        "actions": [list(labels) for labels in scenario.action_labels],
        "structure": scenario.structure,
    }
    if scenario.structure == "periodic":
        doc["hidden_phase"] = bool(scenario.hidden_phase)
    stages = []
    for label, stage in zip(scenario.stage_labels, scenario.stages):
        entry = {}
        if label is not None:
            entry["label"] = label
        entry["payoffs"] = _payoff_document(stage)
        stages.append(entry)
    doc["stages"] = stages
    doc["update_domain"] = scenario.update_domain.value
    if scenario.candidate is not None:
        candidate: dict = {}
        if scenario.candidate_label is not None:
            candidate["label"] = scenario.candidate_label
        candidate["theta0"] = [
            _policy_document(strategy.parameter, agent, scenario.action_labels)
            for agent, strategy in enumerate(scenario.candidate.agents)
        ]
        rules = []
        for agent, strategy in enumerate(scenario.candidate.agents):
            if strategy.rule.domain is not UpdateDomain.JOINT_ACTION:
                raise ValidationError(
                    "scenario files carry joint-action update rules only"
                )
            table = {}
            for key, value in sorted(
                strategy.rule.entries,
                key=lambda kv: (kv[0][agent],) + kv[0][:agent] + kv[0][agent + 1:],
            ):
                table[_serialize_rule_key(key, agent, scenario.action_labels)] = (
                    _policy_document(value, agent, scenario.action_labels)
                )
            rules.append(table)
        candidate["update_rules"] = rules
        doc["candidate"] = candidate
    return _dump_json(doc, 0) + "\n"


def bundled_scenario_dir() -> Path:
    return Path(__file__).parent / "data" / "scenarios"


def bundled_scenario_names() -> tuple[str, ...]:
    return tuple(sorted(p.stem for p in bundled_scenario_dir().glob("*.json")))


def resolve_scenario_path(argument: str) -> Path:
    """Find a scenario by filesystem path, falling back to the bundled set."""
    direct = Path(argument)
    if direct.exists():
        return direct
    stem = direct.name
    if stem.endswith(".json"):
        stem = stem[: -len(".json")]
    bundled = bundled_scenario_dir() / f"{stem}.json"
    if direct.parent == Path(".") and bundled.exists():
        return bundled
    raise ValidationError(
        f"scenario file not found: {argument} "
        f"(bundled scenarios: {', '.join(bundled_scenario_names())})"
    )


def load_scenario(path):
    return parse_scenario(Path(path).read_text())
