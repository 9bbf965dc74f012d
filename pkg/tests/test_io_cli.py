import json
from fractions import Fraction

import pytest

from conftest import BUNDLED
from enpar.cli import main
from enpar.corpus import random_corpus, stored_random_corpus
from enpar.errors import BadDistribution, SchemaError
from enpar.game import Owner
from enpar.io import (game_from_json, game_to_json, jumps_from_json, loads_json, strategy_from_json,
                      strategy_to_json, values_from_csv, values_to_csv, values_to_json)
from enpar.strategy import StrategyFD


@pytest.mark.parametrize("name", sorted(BUNDLED))
def test_round_trip(name):
    g = BUNDLED[name]
    assert game_from_json(json.loads(json.dumps(game_to_json(g)))) == g


def test_negative_probability_rejected():
    obj = {"states": [{"id": 0, "owner": "rand", "color": 0}],
           "edges": [{"from": 0, "to": 0, "reward": 0, "prob": "-1"}]}
    with pytest.raises(BadDistribution):
        game_from_json(obj)


@pytest.mark.parametrize("obj", [
    {"edges": []},
    {"states": [{"id": 0, "owner": "boss", "color": 0}], "edges": []},
    {"states": [{"id": 0, "owner": "max", "color": "0"}], "edges": []},
    {"states": [{"id": 0, "owner": "rand", "color": 0}], "edges": [{"from": 0, "to": 0, "prob": 0.5}]},
])
def test_schema_errors(obj):
    with pytest.raises(SchemaError):
        game_from_json(obj)


def test_json_syntax_error_reports_position():
    with pytest.raises(SchemaError, match="line 1 column"):
        loads_json("{oops", "x.json")


def test_values_csv():
    vals = {1: Fraction(1, 3), 0: Fraction(1)}
    text = values_to_csv(vals)
    assert text == "state,value\n0,1/1\n1,1/3\n"
    assert values_from_csv(text) == vals
    assert values_to_json(vals) == {"values": {"0": "1/1", "1": "1/3"}}


def test_strategy_round_trip():
    strat = StrategyFD(Owner.MAX, 2, 1, {(0, 1): 1}, {(0, 0): 1, (1, 0): 0}, ("a", "b"))
    assert strategy_from_json(strategy_to_json(strat)) == strat


def test_jumps():
    assert jumps_from_json([[0, 3, "1/2"]]) == {(0, 3): Fraction(1, 2)}
    with pytest.raises(SchemaError):
        jumps_from_json([[0, 3]])


def test_stored_corpus_matches_regeneration():
    stored = stored_random_corpus()
    assert len(stored) == 100
    assert [g for _, g in stored] == [g for _, g in random_corpus()]


@pytest.fixture
def game_file(tmp_path):
    def write(name):
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(game_to_json(BUNDLED[name])))
        return str(path)
    return write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_approx(capsys, game_file):
    code, out, _ = run(capsys, "approx", "--game", game_file("mixed_five"), "--state", "0", "--energy", "2",
                       "--epsilon", "1/8")
    assert code == 0
    obj = json.loads(out)
    assert {"v_prime", "N", "branch", "strategies"} <= set(obj)


def test_cli_bad_distribution(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"states": [{"id": 0, "owner": "rand", "color": 0}],
                                "edges": [{"from": 0, "to": 0, "reward": 0, "prob": "1/2"}]}))
    code, _, err = run(capsys, "validate", "--game", str(path))
    assert code == 1
    assert json.loads(err)["error"] == "BadDistribution"


def test_cli_options_after_subcommand(capsys, game_file):
    code, out, _ = run(capsys, "solve-parity", "--game", game_file("two_colors"), "--output", "csv")
    assert code == 0
    assert out.startswith("state,value\n")


def test_cli_unknown_option(capsys):
    code, _, err = run(capsys, "validate", "--nope")
    assert code == 1
    assert json.loads(err)["error"] == "InputError"


@pytest.mark.parametrize("cmd", [
    ["gain", "--strategies"],
    ["bound-n", "--epsilon", "1/16"],
    ["unfold", "--N", "2"],
])
def test_cli_subcommands(capsys, game_file, cmd):
    code, out, _ = run(capsys, cmd[0], "--game", game_file("energy_race"), *cmd[1:])
    assert code == 0
    json.loads(out)


def test_cli_evaluate_and_simulate(capsys, game_file, tmp_path):
    path = game_file("energy_race")
    sigma = tmp_path / "sigma.json"
    sigma.write_text(json.dumps(strategy_to_json(StrategyFD(Owner.MAX, 1, 0, {}, {(0, 0): 2}))))
    code, out, _ = run(capsys, "evaluate", "--game", path, "--sigma", str(sigma), "--state", "0", "--energy", "1")
    assert code == 0
    assert json.loads(out)["lo"] == "1/1"
    code, out, _ = run(capsys, "simulate", "--game", path, "--sigma", str(sigma), "--state", "0",
                       "--energy", "1", "--runs", "3", "--horizon", "10")
    assert code == 0


def test_cli_selftest(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0
    assert json.loads(out)["failed"] == 0
