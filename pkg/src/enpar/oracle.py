"""Brute-force bracketing of energy-parity values for testing.

``lo`` solves the saturating unfolding (the counter is clamped at the cap,
which can only hurt the Maximizer).  ``hi`` lets a play that reaches the cap
jump to the winning sink with the plain parity value of its state, which
can only help the Maximizer because every energy-parity play is a parity
play.  Both games are solved exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from enpar.energy import SATURATE, energy_unfolding, gadget_unfolding, level_node
from enpar.parity import IMPROVE, solve_parity_game

ONE = Fraction(1)
ZERO = Fraction(0)
DEFAULT_CAP = 64


@dataclass(frozen=True)
class Sandwich:
    lo: dict
    hi: dict
    cap: int

    def gap(self, key):
        return self.hi[key] - self.lo[key]

    def max_gap(self):
        return max((self.hi[k] - self.lo[k] for k in self.lo), default=ZERO)

    def closed(self, tol):
        return self.max_gap() <= tol


def energy_parity_sandwich(game, levels, cap=DEFAULT_CAP, mode=IMPROVE):
    """Certified ``[lo, hi]`` for ``val(EN(i) and EPAR)(s)`` at every state and ``i`` in ``levels``."""
    levels = list(levels)
    keys = [(s, i) for s in range(game.n) for i in levels]
    lo, hi = {}, {}
    pos = [(s, i) for s, i in keys if i > 0]
    for s, i in keys:
        if i <= 0:
            lo[(s, i)] = hi[(s, i)] = ZERO
    if not pos:
        return Sandwich(lo, hi, cap)

    sat = energy_unfolding(game, cap, [(s, min(i, cap)) for s, i in pos], top=SATURATE)
    vals = solve_parity_game(sat.game, mode).values
    for s, i in pos:
        lo[(s, i)] = vals[sat.index[level_node(s, i, cap, SATURATE)]]

    epar = solve_parity_game(game, mode).values
    prod, node = gadget_unfolding(game, cap, epar, pos)
    vals = solve_parity_game(prod.game, mode).values
    for s, i in pos:
        hi[(s, i)] = vals[prod.index[node(s, i)]]
    return Sandwich(lo, hi, cap)
