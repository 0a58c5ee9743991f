"""Active equilibrium deviation search, enumeration, and comparison reports."""

from fractions import Fraction

import pytest

import activegames.active as active_module
from activegames import (
    AgentStrategy,
    CapExceededError,
    PolicyParameter,
    StageGame,
    StrategyProfile,
    UpdateDomain,
    ValidationError,
    best_active_deviation,
    build_repeated_game,
    compare_report,
    enumerate_active_equilibria,
    full_strategy_space,
    identity_update_rule,
    periodic_distribution,
    pure_stationary_nash,
    verify_active_equilibrium,
    verify_balance,
)

import oracle
from conftest import joint_action_rule

C, D = 0, 1


def identity_profile(game, joint_actions):
    """Stationary profile: fixed policies with the kept-policy identity rule."""
    return StrategyProfile(
        tuple(
            AgentStrategy(
                PolicyParameter((action,)),
                identity_update_rule(game, agent, UpdateDomain.JOINT_ACTION),
            )
            for agent, action in enumerate(joint_actions)
        )
    )


@pytest.fixture(scope="module")
def pd_space(pd):
    game, _, _ = pd
    return full_strategy_space(game, UpdateDomain.JOINT_ACTION)


@pytest.fixture(scope="module")
def bos_space(bos):
    game, _, _ = bos
    return full_strategy_space(game, UpdateDomain.JOINT_ACTION)


@pytest.fixture(scope="module")
def periodic_space(periodic):
    game, _, _ = periodic
    return full_strategy_space(game, UpdateDomain.JOINT_ACTION)


class TestBestDeviation:
    def test_against_tit_for_tat(self, pd, pd_space):
        game, candidate, _ = pd
        for agent in range(2):
            result = best_active_deviation(game, candidate, agent, pd_space)
            assert result.best_value == -1.0
            assert result.baseline_value == -1.0
            assert result.gain == 0.0

    def test_against_unconditional_defection(self, pd, pd_space):
        game, _, _ = pd
        profile = identity_profile(game, (D, D))
        result = best_active_deviation(game, profile, 0, pd_space)
        assert result.best_value == -2.0
        assert result.gain == 0.0

    def test_against_alternation(self, bos, bos_space):
        game, candidate, _ = bos
        result = best_active_deviation(game, candidate, 0, bos_space)
        assert result.best_value == 1.5
        assert result.gain == 0.0

    def test_matches_the_exhaustive_oracle(self, pd, bos, periodic):
        for triple in (pd, bos, periodic):
            game, candidate, _ = triple
            space = full_strategy_space(game, UpdateDomain.JOINT_ACTION)
            for agent in range(2):
                by_state = oracle.best_deviation_by_state(game, candidate, agent, space)
                result = best_active_deviation(game, candidate, agent, space)
                assert Fraction(result.best_value) == by_state[result.state]

    def test_periodic_deviation_values_per_phase(self, periodic, periodic_space):
        game, candidate, _ = periodic
        by_state = oracle.best_deviation_by_state(game, candidate, 0, periodic_space)
        assert by_state == {0: Fraction(2), 1: Fraction(1)}

    def test_reported_strategies_are_exactly_the_maximizers(self, pd, pd_space):
        game, candidate, _ = pd
        result = best_active_deviation(game, candidate, 0, pd_space)
        strategies = pd_space.agents[0].strategies()
        expected = [
            s
            for s in strategies
            if oracle.exact_average(
                game,
                StrategyProfile((s, candidate.agents[1])),
                result.state,
            )[0] == Fraction(result.best_value)
        ]
        assert list(result.best_strategies) == expected

    def test_self_membership_makes_gain_nonnegative(self, pd, pd_space):
        game, _, _ = pd
        for joint in ((C, C), (C, D), (D, C), (D, D)):
            profile = identity_profile(game, joint)
            for agent in range(2):
                result = best_active_deviation(game, profile, agent, pd_space)
                assert result.gain >= 0.0

    def test_enlarging_the_space_never_hurts_the_deviator(self, pd):
        game, candidate, _ = pd
        ja = full_strategy_space(game, UpdateDomain.JOINT_ACTION)
        full = full_strategy_space(game, UpdateDomain.FULL)
        for agent in range(2):
            narrow = best_active_deviation(game, candidate, agent, ja)
            wide = best_active_deviation(game, candidate, agent, full)
            assert wide.best_value >= narrow.best_value

    def test_bad_agent_index_is_rejected(self, pd, pd_space):
        game, candidate, _ = pd
        with pytest.raises(ValidationError):
            best_active_deviation(game, candidate, 2, pd_space)


class TestVerify:
    def test_bundled_candidates_are_equilibria(self, pd, bos, periodic):
        for triple in (pd, bos, periodic):
            game, candidate, _ = triple
            space = full_strategy_space(game, UpdateDomain.JOINT_ACTION)
            result = verify_active_equilibrium(game, candidate, space)
            assert result.verdict
            assert result.profile_in_space

    def test_unconditional_cooperation_fails_by_one(self, pd, pd_space):
        game, _, _ = pd
        profile = identity_profile(game, (C, C))
        result = verify_active_equilibrium(game, profile, pd_space)
        assert not result.verdict
        assert result.deviations[0].gain == 1.0
        assert result.deviations[1].gain == 1.0

    def test_out_of_space_profile_is_flagged_but_judged(self, pd, pd_space):
        game, _, _ = pd
        full_identity = StrategyProfile(
            tuple(
                AgentStrategy(
                    PolicyParameter((D,)),
                    identity_update_rule(game, agent, UpdateDomain.FULL),
                )
                for agent in range(2)
            )
        )
        result = verify_active_equilibrium(game, full_identity, pd_space)
        assert not result.profile_in_space
        assert result.verdict

    def test_epsilon_tolerance_is_respected(self, pd, pd_space):
        game, _, _ = pd
        profile = identity_profile(game, (C, C))
        generous = verify_active_equilibrium(game, profile, pd_space, epsilon=1.5)
        assert generous.verdict


class TestEnumeration:
    def test_pd_space_contains_the_expected_profiles(self, pd, pd_space):
        game, candidate, _ = pd
        equilibria = enumerate_active_equilibria(game, pd_space)
        profiles = [eq.profile for eq in equilibria]
        assert candidate in profiles
        assert identity_profile(game, (D, D)) in profiles
        assert identity_profile(game, (C, C)) not in profiles

    def test_listed_payoffs_match_direct_evaluation(self, pd, pd_space):
        game, _, _ = pd
        for eq in enumerate_active_equilibria(game, pd_space):
            exact = oracle.exact_average(game, eq.profile)
            assert tuple(Fraction(v) for v in eq.payoff.per_agent) == exact

    def test_membership_agrees_with_verification(self, bos, bos_space):
        game, _, _ = bos
        listed = {eq.profile for eq in enumerate_active_equilibria(game, bos_space)}
        strategies = [space.strategies() for space in bos_space.agents]
        for s0 in strategies[0][::5]:
            for s1 in strategies[1][::5]:
                profile = StrategyProfile((s0, s1))
                verdict = verify_active_equilibrium(game, profile, bos_space).verdict
                assert (profile in listed) == verdict

    def test_bos_alternation_is_listed_at_three_halves(self, bos, bos_space):
        game, candidate, _ = bos
        equilibria = enumerate_active_equilibria(game, bos_space)
        match = [eq for eq in equilibria if eq.profile == candidate]
        assert len(match) == 1
        assert match[0].payoff.per_agent == (1.5, 1.5)
        assert match[0].period == 2

    def test_single_action_game_has_one_trivial_equilibrium(self):
        stage = StageGame(2, (("only",), ("only",)), {(0, 0): (5.0, 5.0)})
        game = build_repeated_game(stage)
        space = full_strategy_space(game, UpdateDomain.JOINT_ACTION)
        equilibria = enumerate_active_equilibria(game, space)
        assert len(equilibria) == 1
        assert equilibria[0].payoff.per_agent == (5.0, 5.0)
        assert equilibria[0].period == 1

    def test_cap_reports_the_exact_profile_count(self, pd, pd_space):
        game, _, _ = pd
        with pytest.raises(CapExceededError) as excinfo:
            enumerate_active_equilibria(game, pd_space, cap=100)
        assert excinfo.value.count == 1024

    def test_every_listed_equilibrium_balances(self, bos, bos_space):
        game, _, _ = bos
        for eq in enumerate_active_equilibria(game, bos_space):
            dist = periodic_distribution(game, eq.profile)
            assert verify_balance(game, eq.profile, dist) <= 1e-9

    def test_output_is_sorted_best_sum_first(self, pd, pd_space):
        game, _, _ = pd
        sums = [sum(eq.payoff.per_agent) for eq in enumerate_active_equilibria(game, pd_space)]
        assert sums == sorted(sums, reverse=True)

    def test_parallel_evaluation_matches_serial(self, pd, pd_space, monkeypatch):
        game, _, _ = pd
        serial = enumerate_active_equilibria(game, pd_space, workers=1)
        monkeypatch.setattr(active_module, "_SERIAL_THRESHOLD", 1)
        pooled = enumerate_active_equilibria(game, pd_space, workers=3)
        assert pooled == serial

    def test_worker_count_env_parsing(self, monkeypatch):
        monkeypatch.setenv("AE_NUM_THREADS", "abc")
        with pytest.raises(ValidationError):
            active_module._worker_count(None)
        monkeypatch.setenv("AE_NUM_THREADS", "-2")
        with pytest.raises(ValidationError):
            active_module._worker_count(None)
        monkeypatch.setenv("AE_NUM_THREADS", "3")
        assert active_module._worker_count(None) == 3
        monkeypatch.setenv("AE_NUM_THREADS", "0")
        assert active_module._worker_count(None) >= 1
        monkeypatch.delenv("AE_NUM_THREADS")
        assert active_module._worker_count(None) >= 1


class TestNashEmbedsInActive:
    def test_pure_nash_with_identity_rules_is_active(self, pd, bos, periodic):
        for triple in (pd, bos, periodic):
            game, _, _ = triple
            space = full_strategy_space(game, UpdateDomain.JOINT_ACTION)
            for joint in pure_stationary_nash(game).profiles:
                profile = StrategyProfile(
                    tuple(
                        AgentStrategy(
                            parameter,
                            identity_update_rule(game, agent, UpdateDomain.JOINT_ACTION),
                        )
                        for agent, parameter in enumerate(joint)
                    )
                )
                result = verify_active_equilibrium(game, profile, space)
                assert result.verdict


class TestCompareReport:
    def test_pd_report_flags_the_candidate(self, pd, pd_space):
        game, candidate, scenario = pd
        report = compare_report(
            game,
            pd_space,
            scenario_name=scenario.name,
            candidate=candidate,
            candidate_label=scenario.candidate_label,
        )
        assert report.scenario == "prisoners_dilemma"
        assert report.space_cardinalities == ((2, 16), (2, 16))
        assert report.pure_nash.payoffs[0].per_agent == (-2.0, -2.0)
        labeled = [
            (eq, flag)
            for eq, label, flag in zip(
                report.active, report.active_labels, report.pareto_flags
            )
            if label == "tit_for_tat"
        ]
        assert len(labeled) == 1
        eq, flag = labeled[0]
        assert eq.payoff.per_agent == (-1.0, -1.0)
        assert flag

    def test_bos_report_notes_the_fairness_gap(self, bos, bos_space):
        game, candidate, scenario = bos
        report = compare_report(
            game,
            bos_space,
            scenario_name=scenario.name,
            candidate=candidate,
            candidate_label=scenario.candidate_label,
        )
        assert any("payoff gap" in note for note in report.notes)
        mixed_values = [eq.value for _, eq in report.mixed]
        assert any(
            all(abs(v - Fraction(2, 3)) <= 1e-9 for v in value)
            for value in mixed_values
        )

    def test_periodic_report_carries_the_discrepancy_note(self, periodic, periodic_space):
        game, candidate, scenario = periodic
        report = compare_report(
            game,
            periodic_space,
            scenario_name=scenario.name,
            candidate=candidate,
            candidate_label=scenario.candidate_label,
        )
        note = next(n for n in report.notes if "single phase" in n)
        assert "(1.5, 1.5)" in note
        assert "0.666666666667" in note
        labeled = [
            eq
            for eq, label in zip(report.active, report.active_labels)
            if label == "alternation"
        ]
        assert len(labeled) == 1
        assert labeled[0].payoff.per_agent == (2.0, 2.0)
        assert labeled[0].period == 2
