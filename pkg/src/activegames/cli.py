"""Command-line interface over scenario files.

Exit codes: 0 on success, 1 on any validation or usage error, 2 when a
requested verification comes back false.  With --json a machine-readable
document is also written; all reals are rounded to 12 significant digits.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .active import (
    EquilibriumReport,
    compare_report,
    enumerate_active_equilibria,
    verify_active_equilibrium,
    DEFAULT_PROFILE_CAP,
)
from .chain import average_reward, cycle_decomposition, induce_chain, periodic_distribution, verify_balance
from .encoding import (
    format_real,
    joint_parameters_text,
    node_text,
    payoff_text,
    profile_text,
    strategy_text,
)
from .errors import ValidationError
from .games import UpdateDomain, full_strategy_space
from .nash import mixed_nash_support_enumeration, pure_stationary_nash, MIXED_MAX_ACTIONS
from .games import extract_stage_game
from .scenario import load_scenario, resolve_scenario_path
from .simulate import detect_period, rollout


class _UsageError(Exception):
    def __init__(self, parser: argparse.ArgumentParser, message: str):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(self, message)


def _round12(value: float) -> float:
    return float(f"{value:.12g}")


def _reals(values) -> list:
    return [_round12(v) for v in values]


def _build_parser() -> _Parser:
    parser = _Parser(prog="activegames", description=__doc__.splitlines()[0])
    common = _Parser(add_help=False)
    common.add_argument("scenario", help="scenario file path or bundled scenario name")
    common.add_argument("--json", metavar="PATH", help="also write a JSON document here")
    common.add_argument("--epsilon", type=float, default=1e-9, metavar="REAL",
                        help="comparison tolerance (default 1e-9)")
    common.add_argument("--update-domain", choices=[d.value for d in UpdateDomain],
                        help="override the scenario's update-rule key domain")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.add_parser("nash", parents=[common], help="pure and mixed stationary equilibria")
    sub.add_parser("verify", parents=[common],
                   help="check the scenario's candidate profile for active equilibrium")
    enum = sub.add_parser("enumerate", parents=[common], help="list all active equilibria")
    enum.add_argument("--cap", type=int, default=DEFAULT_PROFILE_CAP, metavar="N",
                      help="refuse joint spaces larger than N profiles")
    sim = sub.add_parser("simulate", parents=[common],
                         help="roll out the candidate profile step by step")
    sim.add_argument("--steps", type=int, required=True, metavar="T", help="number of steps")
    sub.add_parser("balance", parents=[common],
                   help="periodic-distribution balance residual of the candidate")
    sub.add_parser("compare", parents=[common],
                   help="full stationary-versus-active comparison report")
    return parser


def _load(args):
    path = resolve_scenario_path(args.scenario)
    game, candidate, scenario = load_scenario(path)
    domain = scenario.update_domain
    if args.update_domain:
        domain = UpdateDomain(args.update_domain)
    return game, candidate, scenario, domain


def _require_candidate(candidate, scenario):
    if candidate is None:
        raise ValidationError(f"scenario '{scenario.name}' has no candidate profile")
    return candidate


def _candidate_id(scenario):
    return scenario.candidate_label or "candidate"


def _write_json(args, document) -> None:
    if not args.json:
        return
    text = json.dumps(document, indent=2, ensure_ascii=False) + "\n"
    try:
        Path(args.json).write_text(text)
    except OSError as exc:
        raise ValidationError(f"cannot write JSON output to {args.json}: {exc}") from None


def _space_summary(spaces) -> str:
    return "; ".join(
        f"agent{i}: {len(s.parameters)} policies x {len(s.rules)} rules"
        for i, s in enumerate(spaces.agents)
    )


def _space_document(spaces) -> list:
    return [
        {"parameters": len(s.parameters), "rules": len(s.rules)} for s in spaces.agents
    ]


def _nash_sections(game, epsilon):
    pure = pure_stationary_nash(game, epsilon=epsilon)
    mixed = []
    if game.num_agents == 2 and max(len(a) for a in game.actions) <= MIXED_MAX_ACTIONS:
        for state in range(len(game.states)):
            stage = extract_stage_game(game, state)
            for eq in mixed_nash_support_enumeration(stage, epsilon=epsilon):
                mixed.append((state, eq))
    return pure, mixed


def _print_nash(game, pure, mixed) -> None:
    print(f"pure stationary equilibria ({len(pure.profiles)}):")
    for joint, payoff in zip(pure.profiles, pure.payoffs):
        print(f"  {joint_parameters_text(game, joint)}  payoff {payoff_text(payoff.per_agent)}")
    print(f"mixed stage equilibria ({len(mixed)}):")
    for state, eq in mixed:
        probs = " x ".join(payoff_text(p) for p in eq.probabilities)
        print(f"  {game.states[state]}: {probs}  value {payoff_text(eq.value)}")


def _nash_document(game, scenario, pure, mixed) -> dict:
    return {
        "scenario": scenario.name,
        "nash": {
            "pure": [
                {
                    "profile": joint_parameters_text(game, joint),
                    "payoff": _reals(payoff.per_agent),
                }
                for joint, payoff in zip(pure.profiles, pure.payoffs)
            ],
            "mixed": [
                {
                    "stage": state,
                    "probabilities": [_reals(p) for p in eq.probabilities],
                    "value": _reals(eq.value),
                }
                for state, eq in mixed
            ],
        },
    }


def _cmd_nash(args) -> int:
    game, _, scenario, _ = _load(args)
    pure, mixed = _nash_sections(game, args.epsilon)
    print(f"scenario: {scenario.name}")
    _print_nash(game, pure, mixed)
    document = _nash_document(game, scenario, pure, mixed)
    document.update({"active": [], "pareto": [], "notes": []})
    _write_json(args, document)
    return 0


def _cmd_verify(args) -> int:
    game, candidate, scenario, domain = _load(args)
    candidate = _require_candidate(candidate, scenario)
    spaces = full_strategy_space(game, domain)
    result = verify_active_equilibrium(game, candidate, spaces, epsilon=args.epsilon)
    payoff = average_reward(game, candidate)
    _, cycle = cycle_decomposition(induce_chain(game, candidate))
    print(f"scenario: {scenario.name}")
    print(f"update domain: {domain.value}")
    print(f"deviation space: {_space_summary(spaces)}")
    print(f"candidate: {_candidate_id(scenario)}")
    if not result.profile_in_space:
        print("note: the candidate profile lies outside the enumerated space")
    for dev in result.deviations:
        print(
            f"agent {dev.agent}: best deviation value {format_real(dev.best_value)} "
            f"baseline {format_real(dev.baseline_value)} gain {format_real(dev.gain)} "
            f"(from state {game.states[dev.state]}, {len(dev.best_strategies)} strategies attain it)"
        )
    print(f"period: {len(cycle)}")
    print(
        f"active equilibrium within enumerated space: {str(result.verdict).lower()}, "
        f"payoffs {payoff_text(payoff.per_agent)}"
    )
    document = {
        "scenario": scenario.name,
        "update_domain": domain.value,
        "space": _space_document(spaces),
        "candidate": _candidate_id(scenario),
        "profile_in_space": result.profile_in_space,
        "verdict": result.verdict,
        "payoff": _reals(payoff.per_agent),
        "period": len(cycle),
        "deviations": [
            {
                "agent": dev.agent,
                "state": game.states[dev.state],
                "best_value": _round12(dev.best_value),
                "baseline_value": _round12(dev.baseline_value),
                "gain": _round12(dev.gain),
                "best_strategies": [
                    strategy_text(game, dev.agent, s) for s in dev.best_strategies
                ],
            }
            for dev in result.deviations
        ],
    }
    _write_json(args, document)
    return 0 if result.verdict else 2


def _cmd_enumerate(args) -> int:
    game, _, scenario, domain = _load(args)
    spaces = full_strategy_space(game, domain)
    total = 1
    for space in spaces.agents:
        total *= len(space.parameters) * len(space.rules)
    equilibria = enumerate_active_equilibria(
        game, spaces, epsilon=args.epsilon, cap=args.cap
    )
    print(f"scenario: {scenario.name}")
    print(f"update domain: {domain.value}")
    print(f"deviation space: {_space_summary(spaces)}")
    print(f"profiles checked: {total}")
    print(f"active equilibria ({len(equilibria)}):")
    for eq in equilibria:
        print(
            f"  payoff {payoff_text(eq.payoff.per_agent)} k={eq.period}  "
            f"{profile_text(game, eq.profile)}"
        )
    document = {
        "scenario": scenario.name,
        "update_domain": domain.value,
        "space": _space_document(spaces),
        "profiles_checked": total,
        "equilibria": [
            {
                "profile": profile_text(game, eq.profile),
                "k": eq.period,
                "payoff": _reals(eq.payoff.per_agent),
            }
            for eq in equilibria
        ],
    }
    _write_json(args, document)
    return 0


def _cmd_simulate(args) -> int:
    game, candidate, scenario, _ = _load(args)
    candidate = _require_candidate(candidate, scenario)
    trajectory = rollout(game, candidate, args.steps)
    estimate = detect_period(trajectory)
    print(f"scenario: {scenario.name}")
    print(f"steps: {args.steps}")
    print(f"empirical average: {payoff_text(trajectory.empirical_avg)}")
    if estimate.determined:
        print(f"period: {estimate.period} (entry length {estimate.entry_length})")
    else:
        print("period: undetermined (trajectory too short)")
    document = {
        "scenario": scenario.name,
        "steps": args.steps,
        "empirical_avg": _reals(trajectory.empirical_avg),
        "period": {
            "determined": estimate.determined,
            "k": estimate.period,
            "entry_length": estimate.entry_length,
        },
    }
    _write_json(args, document)
    return 0


def _cmd_balance(args) -> int:
    game, candidate, scenario, _ = _load(args)
    candidate = _require_candidate(candidate, scenario)
    dist = periodic_distribution(game, candidate)
    residual = verify_balance(game, candidate, dist)
    print(f"scenario: {scenario.name}")
    print(f"period: {dist.period}")
    print(f"entry length: {dist.entry_length}")
    print(f"balance residual: {format_real(residual)}")
    document = {
        "scenario": scenario.name,
        "period": dist.period,
        "entry_length": dist.entry_length,
        "residual": _round12(residual),
        "phases": [
            {
                "phase": phase,
                "masses": [
                    {"node": node_text(game, node), "mass": _round12(mass)}
                    for node, mass in masses.items()
                ],
            }
            for phase, masses in enumerate(dist.phase_masses)
        ],
    }
    _write_json(args, document)
    return 0


def report_document(game, report: EquilibriumReport) -> dict:
    """Machine-readable form of a comparison report."""
    identifiers = [
        label if label is not None else profile_text(game, eq.profile)
        for eq, label in zip(report.active, report.active_labels)
    ]
    return {
        "scenario": report.scenario,
        "nash": {
            "pure": [
                {
                    "profile": joint_parameters_text(game, joint),
                    "payoff": _reals(payoff.per_agent),
                }
                for joint, payoff in zip(report.pure_nash.profiles, report.pure_nash.payoffs)
            ],
            "mixed": [
                {
                    "stage": state,
                    "probabilities": [_reals(p) for p in eq.probabilities],
                    "value": _reals(eq.value),
                }
                for state, eq in report.mixed
            ],
        },
        "active": [
            {
                "profile": identifier,
                "k": eq.period,
                "payoff": _reals(eq.payoff.per_agent),
            }
            for identifier, eq in zip(identifiers, report.active)
        ],
        "pareto": [
            {"profile": identifier, "dominates_all_pure_nash": flag}
            for identifier, flag in zip(identifiers, report.pareto_flags)
        ],
        "notes": list(report.notes),
    }


def serialize_report(game, report: EquilibriumReport) -> str:
    """Human-readable form of a comparison report."""
    lines = [f"scenario: {report.scenario}"]
    lines.append(
        "strategy space: " + "; ".join(
            f"agent{i}: {p} policies x {r} rules"
            for i, (p, r) in enumerate(report.space_cardinalities)
        )
    )
    lines.append(f"pure stationary equilibria ({len(report.pure_nash.profiles)}):")
    for joint, payoff in zip(report.pure_nash.profiles, report.pure_nash.payoffs):
        lines.append(
            f"  {joint_parameters_text(game, joint)}  payoff {payoff_text(payoff.per_agent)}"
        )
    lines.append(f"mixed stage equilibria ({len(report.mixed)}):")
    for state, eq in report.mixed:
        probs = " x ".join(payoff_text(p) for p in eq.probabilities)
        lines.append(f"  {game.states[state]}: {probs}  value {payoff_text(eq.value)}")
    lines.append(f"active equilibria ({len(report.active)}):")
    for eq, label, flag in zip(report.active, report.active_labels, report.pareto_flags):
        name = f"[{label}] " if label else ""
        lines.append(
            f"  {name}payoff {payoff_text(eq.payoff.per_agent)} k={eq.period} "
            f"dominates_all_pure_nash={str(flag).lower()}"
        )
        lines.append(f"    {profile_text(game, eq.profile)}")
    lines.append("notes:")
    for note in report.notes:
        lines.append(f"  - {note}")
    return "\n".join(lines)


def _cmd_compare(args) -> int:
    game, candidate, scenario, domain = _load(args)
    spaces = full_strategy_space(game, domain)
    report = compare_report(
        game,
        spaces,
        scenario_name=scenario.name,
        candidate=candidate,
        candidate_label=scenario.candidate_label,
        epsilon=args.epsilon,
    )
    print(serialize_report(game, report))
    _write_json(args, report_document(game, report))
    return 0


_COMMANDS = {
    "nash": _cmd_nash,
    "verify": _cmd_verify,
    "enumerate": _cmd_enumerate,
    "simulate": _cmd_simulate,
    "balance": _cmd_balance,
    "compare": _cmd_compare,
}


def run_command(argv) -> int:
    """Parse arguments, run one subcommand, and return the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        exc.parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("error: a command is required", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        # A closed output pipe is the reader's choice, not a usage error;
        # main() silences it.
        raise
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    try:
        code = run_command(sys.argv[1:])
        sys.stdout.flush()
    except BrokenPipeError:
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        code = 1
    sys.exit(code)


if __name__ == "__main__":
    main()
