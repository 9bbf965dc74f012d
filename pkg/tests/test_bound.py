from fractions import Fraction

import pytest

from conftest import BUNDLED, hub_walk, loop, ruin
from enpar.bound import (_capped_unfolding, certificates, compute_N_game, compute_N_mdp, least_power,
                         n_from_constants, term_avoid_w1_bound)
from enpar.corpus import random_game, random_mdp
from enpar.gain import ssg_gain_value
from enpar.mdp import max_reach_value, set_W1
from enpar.oracle import energy_parity_sandwich

TOL = Fraction(1, 1024)


def test_closed_form():
    assert n_from_constants(Fraction(1, 2), 0, Fraction(1, 2)) == 2
    assert n_from_constants(Fraction(1, 2), 100, Fraction(1, 2)) == 100


def test_closed_form_monotone_in_eps():
    c = Fraction(1, 2)
    ns = [n_from_constants(c, 0, Fraction(1, 2 ** k)) for k in range(1, 12)]
    assert ns == sorted(ns)


def test_closed_form_rejects_bad_constants():
    with pytest.raises(ValueError):
        n_from_constants(1, 0, Fraction(1, 2))


def test_least_power():
    assert least_power(Fraction(1, 3), Fraction(1, 1024)) == 7
    assert least_power(Fraction(1, 2), 1) == 0


def test_no_negative_rewards_no_termination():
    g = random_mdp(3, rewards=(0, 1))
    assert all(term_avoid_w1_bound(g, j, 4 * j) == 0 for j in (1, 2, 5))


def test_w1_everywhere():
    assert term_avoid_w1_bound(loop(-1, owner="max"), 3, 12) == 0


def lower_bound(mdp, j, cap):
    """Termination probability counting every play that reaches ``cap`` as safe."""
    w1 = set_W1(mdp)
    prod = _capped_unfolding(mdp, [(s, j) for s in range(mdp.n) if s not in w1], cap, w1, Fraction(0))
    if "lose" not in prod.index:
        return Fraction(0)
    values = max_reach_value(prod.game, {prod.index["lose"]})[0]
    return max(values[prod.index[(s, j)]] for s in range(mdp.n) if (s, j) in prod.index)


@pytest.mark.parametrize("seed", range(25))
def test_bound_monotone_in_cap(seed):
    g = random_mdp(seed, 4)
    for j in (1, 2, 3):
        a = term_avoid_w1_bound(g, j, 2 * j)
        b = term_avoid_w1_bound(g, j, 4 * j)
        assert a >= b >= lower_bound(g, j, 256)


def test_certificate_tail_dominates_walk_ruin():
    g = hub_walk("3/4")
    cert = min(certificates(g), key=lambda c: c.rate)
    for j in range(1, 10):
        assert cert.tail(j, 0) >= 1 - ruin("3/4", j)


def test_nonnegative_mdp_cutoff_is_one():
    assert compute_N_mdp(random_mdp(1, rewards=(0, 1)), Fraction(1, 64))[0] == 1


def test_eps_one_cutoff_is_one():
    assert compute_N_mdp(hub_walk("3/4"), 1)[0] == 1


def test_walk_cutoff_matches_ruin():
    eps = Fraction(1, 1024)
    expected = next(j for j in range(1, 100) if 1 - ruin("3/4", j) <= eps)
    assert compute_N_mdp(hub_walk("3/4"), eps, [0])[0] == expected == 7


def test_game_with_nonnegative_drift():
    g = BUNDLED["single_max"]
    assert compute_N_game(g, ssg_gain_value(g), Fraction(1, 16)).N == 1


@pytest.mark.parametrize("seed", range(20))
def test_cutoff_grows_as_eps_shrinks(seed):
    g = random_game(seed)
    sol = ssg_gain_value(g)
    ns = [compute_N_game(g, sol, Fraction(1, 4 ** k)).N for k in (1, 2, 3)]
    assert ns == sorted(ns)


@pytest.mark.parametrize("seed", range(20))
def test_gain_close_to_value_at_cutoff(seed):
    g = random_game(seed, 4)
    sol = ssg_gain_value(g)
    eps = Fraction(1, 16)
    N = compute_N_game(g, sol, eps).N
    sw = energy_parity_sandwich(g, [N])
    for s in range(g.n):
        assert sol.values[s] - sw.hi[(s, N)] <= eps
        if sw.gap((s, N)) <= TOL:
            assert sol.values[s] - sw.lo[(s, N)] <= eps + TOL


def test_report_json():
    g = BUNDLED["drift_up_walk"]
    rep = compute_N_game(g, ssg_gain_value(g), Fraction(1, 8))
    out = rep.to_json()
    assert out["N"] == rep.N
    assert out["epsilon"] == "1/8"
