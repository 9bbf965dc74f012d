"""Finite energy unfoldings with a saturating or winning top level.

Nodes are ``(state, level)`` pairs plus the sinks ``WIN`` and ``LOSE``.  A
move with reward ``c`` from level ``j`` goes to level ``j + c``; a level
``<= 0`` means the energy objective failed (``LOSE``).  At the top either
the level is clamped to ``cap`` (under-approximates the energy objective)
or reaching ``cap`` counts as a win (over-approximates it).
"""

from fractions import Fraction

from enpar.game import Owner, explore

WIN = "win"
LOSE = "lose"
WIN_COLOR = 0
LOSE_COLOR = 1

SATURATE = "saturate"
TOP_WINS = "win"


def sink_expansion(node):
    color = WIN_COLOR if node == WIN else LOSE_COLOR
    return Owner.RAND, color, [(node, 0, Fraction(1))]


def level_node(state, level, cap, top):
    if level <= 0:
        return LOSE
    if top == SATURATE:
        return (state, min(level, cap))
    if level >= cap:
        return WIN
    return (state, level)


def energy_unfolding(game, cap, initial=None, top=SATURATE):
    """Explicit energy unfolding of ``game`` reachable from ``initial`` nodes.

    ``initial`` holds ``(state, level)`` pairs (default: every state at every
    level ``1..cap``).  Returns an :class:`enpar.game.Product`.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    if initial is None:
        hi = cap if top == SATURATE else cap - 1
        initial = [(s, j) for j in range(1, hi + 1) for s in range(game.n)]
    starts = [level_node(s, j, cap, top) for s, j in initial]

    def expand(node):
        if node in (WIN, LOSE):
            return sink_expansion(node)
        s, j = node
        succ = []
        for i in game.out[s]:
            e = game.edges[i]
            succ.append((level_node(e.dst, j + e.reward, cap, top), e.reward, e.prob))
        return game.owner[s], game.color[s], succ

    return explore(starts, expand, game.max_color)


def gadget_unfolding(game, cap, top_win, initial):
    """Unfolding on levels ``1..cap-1`` where reaching ``cap`` or more at a
    state ``s`` jumps to ``WIN`` with probability ``top_win[s]`` (else ``LOSE``).

    ``initial`` holds ``(state, level)`` pairs; returns ``(product, node)``
    where ``node(state, level)`` names the product node of a pair.
    """

    def node(s, level):
        if level <= 0:
            return LOSE
        if level >= cap:
            return ("top", s)
        return (s, level)

    def expand(n):
        if n in (WIN, LOSE):
            return sink_expansion(n)
        if n[0] == "top":
            p = Fraction(top_win[n[1]])
            succ = []
            if p > 0:
                succ.append((WIN, 0, p))
            if p < 1:
                succ.append((LOSE, 0, 1 - p))
            return Owner.RAND, game.color[n[1]], succ
        s, level = n
        return game.owner[s], game.color[s], [
            (node(e.dst, level + e.reward), e.reward, e.prob)
            for e in (game.edges[i] for i in game.out[s])]

    return explore([node(s, i) for s, i in initial], expand, game.max_color), node
