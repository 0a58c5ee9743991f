"""Scenario file parsing, canonical serialization, and path resolution."""

import json

import pytest

from activegames import (
    PolicyParameter,
    ScenarioError,
    UpdateDomain,
    ValidationError,
    bundled_scenario_dir,
    bundled_scenario_names,
    load_scenario,
    parse_scenario,
    resolve_scenario_path,
    serialize_scenario,
)


def bundled_text(name):
    return (bundled_scenario_dir() / f"{name}.json").read_text()


def pd_document():
    return json.loads(bundled_text("prisoners_dilemma"))


def parse_document(document):
    return parse_scenario(json.dumps(document))


class TestRoundTrip:
    def test_bundled_files_serialize_to_themselves(self):
        for name in bundled_scenario_names():
            text = bundled_text(name)
            _, _, scenario = parse_scenario(text)
            assert serialize_scenario(scenario) == text

    def test_formatting_differences_normalize_away(self):
        document = pd_document()
        loose = json.dumps(document, indent=7)
        _, _, scenario = parse_scenario(loose)
        assert serialize_scenario(scenario) == bundled_text("prisoners_dilemma")

    def test_non_integral_payoffs_survive(self):
        document = pd_document()
        document["stages"][0]["payoffs"][0][0] = [-0.5, -0.25]
        _, _, scenario = parse_document(document)
        text = serialize_scenario(scenario)
        assert "-0.5" in text and "-0.25" in text
        game, _, _ = parse_scenario(text)
        assert game.rewards[(0, (0, 0))] == (-0.5, -0.25)

    def test_integral_payoffs_stay_integers(self):
        text = bundled_text("bach_stravinsky")
        assert "2.0" not in text
        _, _, scenario = parse_scenario(text)
        assert "2.0" not in serialize_scenario(scenario)


class TestParsing:
    def test_pd_candidate_is_tit_for_tat(self, pd):
        game, candidate, scenario = pd
        assert scenario.name == "prisoners_dilemma"
        assert scenario.candidate_label == "tit_for_tat"
        assert scenario.update_domain is UpdateDomain.JOINT_ACTION
        rule = dict(candidate.agents[0].rule.entries)
        assert rule[(0, 1)] == PolicyParameter((1,))
        assert rule[(1, 0)] == PolicyParameter((0,))

    def test_rule_keys_are_read_in_own_first_order(self):
        document = pd_document()
        document["candidate"]["update_rules"][1] = {
            "(C,C)": "C",
            "(C,D)": "D",
            "(D,C)": "C",
            "(D,D)": "D",
        }
        _, candidate, _ = parse_document(document)
        rule = dict(candidate.agents[1].rule.entries)
        # Key "(C,D)" for agent 1 means own C, opponent D: joint action (D, C).
        assert rule[(1, 0)] == PolicyParameter((1,))
        assert rule[(0, 1)] == PolicyParameter((0,))

    def test_periodic_scenario_builds_a_hidden_phase_game(self, periodic):
        game, _, scenario = periodic
        assert scenario.structure == "periodic"
        assert scenario.hidden_phase is True
        assert game.states == ("phase0", "phase1")
        assert game.observations == ("hidden",)

    def test_candidate_is_optional(self):
        document = pd_document()
        del document["candidate"]
        game, candidate, scenario = parse_document(document)
        assert candidate is None
        assert scenario.candidate is None
        round_tripped = serialize_scenario(scenario)
        assert "candidate" not in round_tripped

    def test_candidate_label_is_optional(self):
        document = pd_document()
        del document["candidate"]["label"]
        _, candidate, scenario = parse_document(document)
        assert candidate is not None
        assert scenario.candidate_label is None


class TestParseErrors:
    @pytest.mark.parametrize(
        "mutate, path_fragment",
        [
            (lambda d: d.pop("name"), "name"),
            (lambda d: d.update(name=7), "name"),
            (lambda d: d.update(agents="two"), "agents"),
            (lambda d: d.update(structure="weekly"), "structure"),
            (lambda d: d.update(hidden_phase=True), "hidden_phase"),
            (lambda d: d.update(stages=[]), "stages"),
            (lambda d: d.update(extra=1), "extra"),
            (lambda d: d["stages"][0].update(bonus=1), "bonus"),
            (lambda d: d.update(update_domain="sometimes"), "update_domain"),
            (lambda d: d["candidate"].update(theta0=["C"]), "theta0"),
            (lambda d: d["candidate"]["update_rules"][0].pop("(C,C)"), "update_rules[0]"),
            (
                lambda d: d["candidate"]["update_rules"][0].update({"(C,C,C)": "C"}),
                "update_rules[0]",
            ),
        ],
    )
    def test_malformed_fields_name_their_path(self, mutate, path_fragment):
        document = pd_document()
        mutate(document)
        with pytest.raises(ScenarioError) as excinfo:
            parse_document(document)
        assert path_fragment in str(excinfo.value)

    def test_short_payoff_row_names_the_cell(self):
        document = pd_document()
        document["stages"][0]["payoffs"][0] = [[-1, -1], [-3, 0], [9, 9]]
        with pytest.raises(ScenarioError, match=r"stages\[0\].payoffs\[0\]"):
            parse_document(document)

    def test_unknown_action_label_lists_the_valid_ones(self):
        document = pd_document()
        document["candidate"]["update_rules"][0]["(C,C)"] = "X"
        with pytest.raises(ScenarioError) as excinfo:
            parse_document(document)
        message = str(excinfo.value)
        assert "'X'" in message
        assert "'C'" in message and "'D'" in message

    def test_repeated_structure_needs_exactly_one_stage(self):
        document = pd_document()
        document["stages"] = document["stages"] * 2
        with pytest.raises(ScenarioError, match="stages"):
            parse_document(document)

    def test_periodic_structure_requires_hidden_phase_flag(self):
        document = json.loads(bundled_text("periodic_hidden"))
        del document["hidden_phase"]
        with pytest.raises(ScenarioError, match="hidden_phase"):
            parse_document(document)

    def test_agent_count_must_match_action_lists(self):
        document = pd_document()
        document["agents"] = 3
        with pytest.raises(ScenarioError):
            parse_document(document)

    def test_invalid_json_is_reported_as_such(self):
        with pytest.raises(ScenarioError, match="JSON"):
            parse_scenario("{not json")


class TestSerializeErrors:
    def test_full_domain_candidate_rules_are_not_serializable(self, pd):
        _, _, scenario = pd
        from dataclasses import replace

        from activegames import AgentStrategy, StrategyProfile, UpdateDomain
        from activegames import identity_update_rule, build_game

        game = build_game(scenario)
        full_profile = StrategyProfile(
            tuple(
                AgentStrategy(
                    PolicyParameter((1,)),
                    identity_update_rule(game, agent, UpdateDomain.FULL),
                )
                for agent in range(2)
            )
        )
        broken = replace(scenario, candidate=full_profile)
        with pytest.raises(ValidationError, match="joint-action"):
            serialize_scenario(broken)


class TestResolution:
    def test_bare_names_fall_back_to_the_bundle(self):
        path = resolve_scenario_path("bach_stravinsky")
        assert path.name == "bach_stravinsky.json"
        assert path.exists()

    def test_bare_names_may_carry_the_extension(self):
        path = resolve_scenario_path("periodic_hidden.json")
        assert path == bundled_scenario_dir() / "periodic_hidden.json"

    def test_direct_paths_win(self, tmp_path):
        target = tmp_path / "prisoners_dilemma.json"
        target.write_text(bundled_text("prisoners_dilemma"))
        assert resolve_scenario_path(str(target)) == target

    def test_missing_files_list_the_bundle(self):
        with pytest.raises(ValidationError) as excinfo:
            resolve_scenario_path("no_such_scenario")
        message = str(excinfo.value)
        for name in bundled_scenario_names():
            assert name in message

    def test_load_scenario_reads_a_file(self, tmp_path):
        target = tmp_path / "copy.json"
        target.write_text(bundled_text("prisoners_dilemma"))
        game, candidate, scenario = load_scenario(target)
        assert scenario.name == "prisoners_dilemma"
        assert candidate is not None
        assert len(game.states) == 1
