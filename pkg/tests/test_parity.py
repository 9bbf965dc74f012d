import pytest

from conftest import BUNDLED
from enpar.corpus import random_game, random_mdp
from enpar.errors import BudgetExceeded
from enpar.game import Owner, fix_memoryless, make_game
from enpar.mdp import chain_parity_value, mdp_parity_value, max_reach_value
from enpar.parity import (ENUMERATE, IMPROVE, best_response_parity, complement_check,
                          parity_values_by_enumeration, solve_parity_game)


def test_no_minimizer_is_mdp_solve():
    g = random_mdp(11, 5)
    assert solve_parity_game(g).values == mdp_parity_value(g)[0]


def test_all_odd_colors():
    g = random_game(4)
    g = g.with_colors([1] * g.n)
    sol = solve_parity_game(g)
    assert set(sol.values.values()) == {0}
    upper, lower = sol.certificate
    assert upper == lower


@pytest.mark.parametrize("seed", range(40))
def test_improve_equals_enumerate(seed):
    g = random_game(seed)
    a = solve_parity_game(g, IMPROVE)
    b = solve_parity_game(g, ENUMERATE)
    assert a.values == b.values
    assert a.certificate[0] == a.certificate[1]


def test_unknown_mode():
    with pytest.raises(ValueError):
        solve_parity_game(random_game(0), "guess")


def test_enumeration_budget():
    with pytest.raises(BudgetExceeded):
        parity_values_by_enumeration(random_game(1, 8, owners=(Owner.MIN,)), budget=4)


@pytest.mark.parametrize("seed", range(20))
def test_best_response_to_certificate(seed):
    g = random_game(seed)
    sol = solve_parity_game(g)
    assert best_response_parity(g, sol.pi, Owner.MIN)[0] == sol.values
    assert best_response_parity(g, sol.sigma, Owner.MAX)[0] == sol.values


def test_best_response_into_losing_sink():
    g = make_game(["max", "min", "rand", "rand"], [0, 0, 1, 0],
                  [(0, 2, 0), (0, 1, 0), (1, 3, 0), (1, 2, 0), (2, 2, 0, 1), (3, 3, 0, 1)])
    vals, _ = best_response_parity(g, {0: 2}, Owner.MAX)
    residual = fix_memoryless(g, {0: 2}, Owner.MAX)
    assert vals[0] == 0
    assert vals[1] == 1 - max_reach_value(residual.with_owners(
        [Owner.RAND, Owner.MAX, Owner.RAND, Owner.RAND]), {2})[0][1]


def test_single_choice_game_is_chain():
    g = BUNDLED["fair_coin_sinks"]
    assert solve_parity_game(g).values == chain_parity_value(g)


@pytest.mark.parametrize("name", sorted(BUNDLED))
def test_duality_identity_on_bundled(name):
    g = BUNDLED[name]
    sums, one = complement_check(g, solve_parity_game(g))
    assert set(sums.values()) == {one}
