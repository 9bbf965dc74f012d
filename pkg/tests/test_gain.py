from fractions import Fraction

import pytest

from conftest import BUNDLED
from enpar.corpus import random_game, random_mdp
from enpar.errors import BudgetExceeded
from enpar.gain import gain_guarantee, ssg_gain_value, synthesize_sigma_star
from enpar.game import Owner, make_game
from enpar.mdp import mdp_gain_value
from enpar.oracle import energy_parity_sandwich

TOL = Fraction(1, 1024)


def test_mdp_reduces_to_mdp_gain():
    g = random_mdp(5, 5)
    assert ssg_gain_value(g).values == mdp_gain_value(g)[0]


def test_all_odd_gain_is_zero():
    g = random_game(8)
    g = g.with_colors([1] * g.n)
    assert set(ssg_gain_value(g).values.values()) == {0}


def test_b_core_strategy_certifies_value_one():
    g = make_game(["max"], [0], [(0, 0, 1)])
    sol = ssg_gain_value(g)
    assert sol.values[0] == 1
    assert gain_guarantee(g, sol.sigma_star[0], 0) == 1


def test_no_path_gives_trivial_strategy():
    g = BUNDLED["odd_only"]
    sol = ssg_gain_value(g)
    for s in range(g.n):
        assert sol.values[s] == 0
        assert gain_guarantee(g, sol.sigma_star[s], s) == 0


def test_budget():
    with pytest.raises(BudgetExceeded):
        ssg_gain_value(random_game(2, 8, owners=(Owner.MIN,)), budget=1)


@pytest.mark.parametrize("name", sorted(BUNDLED))
def test_sigma_star_verified_on_bundled(name):
    g = BUNDLED[name]
    sol = ssg_gain_value(g)
    for s in range(g.n):
        assert gain_guarantee(g, sol.sigma_star[s], s) == sol.values[s]


@pytest.mark.parametrize("seed", range(30))
def test_sigma_star_verified_random(seed):
    g = random_game(seed, 4)
    sol = ssg_gain_value(g)
    for s in range(g.n):
        strat = synthesize_sigma_star(g, s, sol)
        strat.check(g)
        assert gain_guarantee(g, strat, s) == sol.values[s]


@pytest.mark.parametrize("seed", range(20))
def test_gain_matches_large_energy_value(seed):
    g = random_game(seed)
    values = ssg_gain_value(g, synthesize=False).values
    sw = energy_parity_sandwich(g, [64])
    for s in range(g.n):
        assert sw.lo[(s, 64)] <= values[s]
        if sw.gap((s, 64)) <= TOL:
            assert values[s] - sw.lo[(s, 64)] <= TOL
