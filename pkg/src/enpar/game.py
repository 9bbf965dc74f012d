"""Simple stochastic games: data model, validation and structural transforms."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple, Optional

from enpar.errors import (
    BadDistribution,
    BadReward,
    ColorOutOfRange,
    DanglingEdge,
    DuplicateEdge,
    EmptySuccessorSet,
)

DEFAULT_MAX_COLOR = 16


class Owner(str, Enum):
    MAX = "max"
    MIN = "min"
    RAND = "rand"

    def opponent(self):
        if self is Owner.MAX:
            return Owner.MIN
        if self is Owner.MIN:
            return Owner.MAX
        return self


class Edge(NamedTuple):
    src: int
    dst: int
    reward: int
    prob: Optional[Fraction] = None


@dataclass(frozen=True)
class Configuration:
    state: int
    energy: int

    def __post_init__(self):
        if self.energy < 0:
            raise ValueError("energy must be non-negative")


@dataclass(frozen=True, eq=True)
class GameGraph:
    """A finite turn-based stochastic game.

    ``owner[s]`` and ``color[s]`` describe state ``s``; ``edges`` carry the
    integer reward and, for edges leaving random states, the probability.
    Instances are immutable; call :func:`validate` before analysis.
    """

    owner: tuple
    color: tuple
    edges: tuple
    max_color: int = field(default=DEFAULT_MAX_COLOR, compare=False)

    @property
    def n(self):
        return len(self.owner)

    @cached_property
    def out(self):
        """Outgoing edge indices per state, in edge-list order."""
        out = [[] for _ in range(self.n)]
        for i, e in enumerate(self.edges):
            out[e.src].append(i)
        return tuple(tuple(x) for x in out)

    @cached_property
    def edge_index(self):
        return {(e.src, e.dst): i for i, e in enumerate(self.edges)}

    @cached_property
    def max_reward(self):
        return max((abs(e.reward) for e in self.edges), default=0)

    @property
    def energy_margin(self):
        """Largest single-step energy change used to size unfoldings (at least 1)."""
        return max(1, self.max_reward)

    def successors(self, s):
        return [self.edges[i].dst for i in self.out[s]]

    def states_of(self, who):
        return [s for s in range(self.n) if self.owner[s] is who]

    def is_mdp(self):
        return not (self.states_of(Owner.MAX) and self.states_of(Owner.MIN))

    def with_colors(self, colors):
        return GameGraph(tuple(self.owner), tuple(colors), self.edges, self.max_color)

    def with_owners(self, owners):
        return GameGraph(tuple(Owner(o) for o in owners), self.color, self.edges, self.max_color)


def make_game(owners, colors, edges, max_color=DEFAULT_MAX_COLOR):
    """Build a game from plain Python values.

    ``owners`` items may be ``Owner`` members or the strings ``max``,
    ``min``, ``rand``; ``edges`` items are ``(src, dst, reward[, prob])``.
    """
    own = tuple(o if isinstance(o, Owner) else Owner(o) for o in owners)
    es = []
    for e in edges:
        src, dst, reward = e[0], e[1], e[2]
        prob = e[3] if len(e) > 3 else None
        if prob is not None:
            prob = Fraction(prob)
        es.append(Edge(int(src), int(dst), int(reward), prob))
    return GameGraph(own, tuple(int(c) for c in colors), tuple(es), max_color)


def validate(game):
    """Raise an :class:`~enpar.errors.InputError` subclass unless ``game`` is well formed."""
    n = game.n
    if len(game.color) != n:
        raise DanglingEdge("color list length differs from state count")
    for s, c in enumerate(game.color):
        if not isinstance(c, int) or c < 0 or c > game.max_color:
            raise ColorOutOfRange(f"state {s}: color {c!r} outside 0..{game.max_color}")
    seen = set()
    for i, e in enumerate(game.edges):
        if not (0 <= e.src < n and 0 <= e.dst < n):
            raise DanglingEdge(f"edge {i}: endpoint outside 0..{n - 1}")
        if not isinstance(e.reward, int) or isinstance(e.reward, bool):
            raise BadReward(f"edge {i}: reward must be an integer")
        if (e.src, e.dst) in seen:
            raise DuplicateEdge(f"edge {i}: parallel edge {e.src}->{e.dst}")
        seen.add((e.src, e.dst))
        if game.owner[e.src] is Owner.RAND:
            if e.prob is None or e.prob <= 0:
                raise BadDistribution(f"edge {i} out of random state {e.src}: probability must be positive")
        elif e.prob is not None:
            raise BadDistribution(f"edge {i} out of owned state {e.src}: probability not allowed")
    for s in range(n):
        if not game.out[s]:
            raise EmptySuccessorSet(f"state {s} has no outgoing edge")
        if game.owner[s] is Owner.RAND:
            total = sum(game.edges[i].prob for i in game.out[s])
            if total != 1:
                raise BadDistribution(f"state {s}: probabilities sum to {total}, not 1")


def dual(game):
    """Swap the roles of the two players."""
    return game.with_owners(o.opponent() for o in game.owner)


def shift_colors(game, by=1):
    """Add ``by`` to every color; EPAR of the result is OPAR of the input when ``by`` is odd."""
    return GameGraph(game.owner, tuple(c + by for c in game.color), game.edges,
                     max(game.max_color, max(game.color, default=0) + by))


def fix_memoryless(game, choice, player):
    """Replace ``player``'s states by single-successor random states following ``choice``."""
    owners = list(game.owner)
    keep = []
    for i, e in enumerate(game.edges):
        if game.owner[e.src] is player:
            if choice[e.src] != e.dst:
                continue
            keep.append(Edge(e.src, e.dst, e.reward, Fraction(1)))
        else:
            keep.append(e)
    for s in range(game.n):
        if owners[s] is player:
            owners[s] = Owner.RAND
    return GameGraph(tuple(owners), game.color, tuple(keep), game.max_color)


def restrict_choices(game, allowed):
    """Keep only edges ``i`` with ``allowed(i)`` out of owned states (random states untouched)."""
    keep = [e for i, e in enumerate(game.edges) if game.owner[e.src] is Owner.RAND or allowed(i)]
    return GameGraph(game.owner, game.color, tuple(keep), game.max_color)


class Product(NamedTuple):
    game: GameGraph
    nodes: list
    index: dict


def explore(initial, expand, max_color=None):
    """Build the part of an implicit game reachable from ``initial`` nodes.

    ``expand(node)`` returns ``(owner, color, [(succ_node, reward, prob)])``
    where ``prob`` is ``None`` for owned nodes.  Parallel transitions to the
    same successor are merged (probabilities add; first reward wins).
    Nodes are numbered in discovery order.
    """
    index = {}
    nodes = []
    queue = deque()
    for node in initial:
        if node not in index:
            index[node] = len(nodes)
            nodes.append(node)
            queue.append(node)
    owners, colors, edges_by_src = [], [], []
    while queue:
        node = queue.popleft()
        owner, color, succs = expand(node)
        merged = {}
        order = []
        for succ, reward, prob in succs:
            if succ not in index:
                index[succ] = len(nodes)
                nodes.append(succ)
                queue.append(succ)
            t = index[succ]
            if t in merged:
                r0, p0 = merged[t]
                if prob is not None:
                    merged[t] = (r0, p0 + prob)
            else:
                merged[t] = (reward, prob)
                order.append(t)
        owners.append(owner)
        colors.append(color)
        edges_by_src.append([(t, merged[t][0], merged[t][1]) for t in order])
    edges = []
    for s, lst in enumerate(edges_by_src):
        for t, r, p in lst:
            edges.append(Edge(s, t, r, p))
    mc = max(colors, default=0)
    g = GameGraph(tuple(owners), tuple(colors), tuple(edges),
                  max(mc, max_color if max_color is not None else DEFAULT_MAX_COLOR))
    return Product(g, nodes, index)
