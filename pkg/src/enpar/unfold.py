"""Finite parity games encoding the energy level up to N.

States ``(s, i)`` for levels ``0..N+R`` plus two sinks.  Players keep
control on levels ``1..N``; level 0 loses and every level above N is a
random gadget that jumps to the winning sink with a prescribed probability.
With the Gain values as jump probabilities this is the game solved by the
approximation pipeline; with exact energy-parity values it reproduces those
values below N and serves as a test object.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from enpar.errors import BadJumpTable, EnergyTrackOverflow
from enpar.game import GameGraph, Owner, make_game, validate

WIN = "s_win"
LOSE = "s_lose"
WIN_COLOR = 0
LOSE_COLOR = 1


@dataclass(frozen=True)
class EnergyUnfolding:
    base: GameGraph
    N: int
    R: int
    jump_values: dict
    product: GameGraph
    index: dict
    nodes: tuple

    def node_id(self, s, level):
        return self.index[(s, level)]

    def value_at(self, values, s, level):
        """Look up ``(s, level)``; levels above ``N + R`` are not represented."""
        return values[self.index[(s, level)]]


def _check_jumps(game, N, R, jump_values):
    want = {(s, N + k) for s in range(game.n) for k in range(1, R + 1)}
    have = set(jump_values)
    if have != want:
        missing = sorted(want - have)[:3]
        extra = sorted(have - want, key=repr)[:3]
        raise BadJumpTable(f"jump table keys mismatch (missing {missing}, unexpected {extra})")
    table = {}
    for key, v in jump_values.items():
        if isinstance(v, float) or isinstance(v, bool):
            raise BadJumpTable(f"jump value at {key} must be rational, got {v!r}")
        v = Fraction(v)
        if not (0 <= v <= 1):
            raise BadJumpTable(f"jump value at {key} outside [0, 1]: {v}")
        table[key] = v
    return table


def build_unfolding(game, N, jump_values):
    if N < 1:
        raise ValueError("N must be at least 1")
    R = game.energy_margin
    table = _check_jumps(game, N, R, jump_values)
    top = N + R
    nodes = [(s, i) for i in range(top + 1) for s in range(game.n)] + [WIN, LOSE]
    index = {v: k for k, v in enumerate(nodes)}
    owners, colors, edges = [], [], []
    for (s, i) in nodes[:-2]:
        k = index[(s, i)]
        colors.append(game.color[s])
        if i == 0:
            owners.append(Owner.RAND)
            edges.append((k, index[LOSE], 0, Fraction(1)))
        elif i <= N:
            owners.append(game.owner[s])
            for e in (game.edges[j] for j in game.out[s]):
                level = i + e.reward
                if level > top:
                    raise EnergyTrackOverflow(f"level {level} above {top}")
                edges.append((k, index[(e.dst, max(0, level))], e.reward, e.prob))
        else:
            owners.append(Owner.RAND)
            p = table[(s, i)]
            if p > 0:
                edges.append((k, index[WIN], 0, p))
            if p < 1:
                edges.append((k, index[LOSE], 0, 1 - p))
    for sink, color in ((WIN, WIN_COLOR), (LOSE, LOSE_COLOR)):
        owners.append(Owner.RAND)
        colors.append(color)
        edges.append((index[sink], index[sink], 0, Fraction(1)))
    product = make_game(owners, colors, edges, max(game.max_color, LOSE_COLOR))
    validate(product)
    return EnergyUnfolding(game, N, R, table, product, index, tuple(nodes))


def gain_jump_table(game, N, values):
    """Jump table assigning every gadget state ``(s, N+k)`` the value ``values[s]``."""
    R = game.energy_margin
    return {(s, N + k): values[s] for s in range(game.n) for k in range(1, R + 1)}


def build_G_prime(game, N, gain_solution):
    return build_unfolding(game, N, gain_jump_table(game, N, gain_solution.values))


def build_G_N_for_test(game, N, true_values):
    """Unfolding whose gadgets carry exact energy-parity values ``true_values[(s, level)]``."""
    return build_unfolding(game, N, dict(true_values))
