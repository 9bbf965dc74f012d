from fractions import Fraction

import pytest

from enpar.corpus import bundled_games
from enpar.game import make_game

BUNDLED = dict(bundled_games())


def loop(reward=0, color=0, owner="rand"):
    """One state with a self-loop."""
    edge = (0, 0, reward, 1) if owner == "rand" else (0, 0, reward)
    return make_game([owner], [color], [edge])


def hub_walk(p_up):
    """+1 with ``p_up`` and -1 otherwise, via a hub state; every color even."""
    p = Fraction(p_up)
    return make_game(
        ["rand", "rand", "rand"],
        [0, 0, 0],
        [(0, 1, 1, p), (0, 2, -1, 1 - p), (1, 0, 0, 1), (2, 0, 0, 1)],
    )


def ruin(p_up, i):
    """Probability that a walk started at ``i`` with up-probability ``p_up`` never hits 0.

    Each round trip through the hub takes two steps, the energy only moves
    on the first, so this is the textbook gambler's-ruin survival value.
    """
    p = Fraction(p_up)
    q = 1 - p
    if p <= q:
        return Fraction(0)
    return 1 - (q / p) ** i


@pytest.fixture
def bundled():
    return BUNDLED


@pytest.fixture
def fair_coin():
    """State 0 flips a fair coin into the even sink 1 or the odd sink 2."""
    return BUNDLED["fair_coin_sinks"]


ACCEPTANCE = {}


def report(criterion, ok, detail):
    """Record (and print) the one-line verdict of an acceptance criterion."""
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
