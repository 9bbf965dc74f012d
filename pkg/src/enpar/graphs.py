"""Graph-level algorithms on games: SCCs, attractors, end components.

Sub-arenas are described by a state set plus an optional predicate on edge
indices restricting the moves of owned states; random states always keep
their full support.
"""

from collections import deque

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from enpar.game import Owner


def scc_labels(n_local, pairs):
    """Strong components of a graph on ``0..n_local-1`` given as (u, v) pairs."""
    if n_local == 0:
        return np.zeros(0, dtype=int)
    if pairs:
        u, v = zip(*pairs)
    else:
        u, v = (), ()
    m = csr_matrix((np.ones(len(u), dtype=np.int8), (np.array(u, dtype=int), np.array(v, dtype=int))),
                   shape=(n_local, n_local))
    _, labels = connected_components(m, directed=True, connection="strong")
    return labels


def backward_reach(game, targets, within=None, edge_ok=None):
    """States in ``within`` that can reach ``targets`` along edges inside ``within``."""
    within = set(range(game.n)) if within is None else set(within)
    preds = {}
    for i, e in enumerate(game.edges):
        if e.src in within and e.dst in within and (edge_ok is None or edge_ok(i)):
            preds.setdefault(e.dst, []).append(e.src)
    seen = set(t for t in targets if t in within)
    queue = deque(seen)
    while queue:
        t = queue.popleft()
        for s in preds.get(t, ()):
            if s not in seen:
                seen.add(s)
                queue.append(s)
    return seen


def _positive_attractor(game, targets, u, edge_ok, controller):
    """Layered attractor inside ``u``: controller and random states need one
    successor in the set, the opponent's states need all of them."""
    edges = game.edges
    preds = {}
    moves = {}
    for s in u:
        if game.owner[s] is controller:
            lst = [i for i in game.out[s] if edges[i].dst in u and (edge_ok is None or edge_ok(i))]
        else:
            lst = list(game.out[s])
        moves[s] = lst
        for i in lst:
            preds.setdefault(edges[i].dst, []).append((s, i))
    dist = {t: 0 for t in targets}
    choice = {}
    need = {s: len(moves[s]) for s in u
            if game.owner[s] is not controller and game.owner[s] is not Owner.RAND}
    queue = deque(sorted(dist))
    while queue:
        t = queue.popleft()
        for s, i in preds.get(t, ()):
            if s in dist:
                continue
            owner = game.owner[s]
            if owner is controller:
                choice[s] = edges[i].dst
            elif owner is not Owner.RAND:
                need[s] -= 1
                if need[s] > 0:
                    continue
            dist[s] = dist[t] + 1
            queue.append(s)
    return dist, choice


def almost_sure_reach(game, targets, within=None, edge_ok=None, controller=Owner.MAX):
    """Almost-sure reachability set and a memoryless witness.

    States owned by ``controller`` choose; random states must keep all their
    successors safe and the other player's states are adversarial.  Target
    states are treated as absorbing.  Returns ``(winning_set, choice)`` where
    ``choice`` maps each controller state of the set outside the targets to
    a successor one attractor layer closer to the targets.
    """
    universe = set(range(game.n)) if within is None else set(within)
    targets = set(targets) & universe
    out = game.out
    edges = game.edges
    u = set(universe)
    while True:
        dist, choice = _positive_attractor(game, targets, u, edge_ok, controller)
        bad = u - set(dist)
        if not bad:
            return u, choice
        removed = set(bad)
        changed = True
        while changed:
            changed = False
            for s in u - removed:
                if s in targets:
                    continue
                if game.owner[s] is controller:
                    succ = [edges[i].dst for i in out[s] if edge_ok is None or edge_ok(i)]
                    if all(t not in u or t in removed for t in succ):
                        removed.add(s)
                        changed = True
                else:
                    if any(edges[i].dst not in u or edges[i].dst in removed for i in out[s]):
                        removed.add(s)
                        changed = True
        u -= removed


def end_components(game, states=None, edge_ok=None):
    """Maximal end components of the sub-arena.

    Every non-random state is treated as controllable.  Returns a list of
    ``(state_frozenset, edge_index_frozenset)`` pairs sorted by least state.
    """
    alive = set(range(game.n)) if states is None else set(states)
    out = game.out
    edges = game.edges
    rand = Owner.RAND
    preds = {}
    for i, e in enumerate(edges):
        if game.owner[e.src] is rand or edge_ok is None or edge_ok(i):
            preds.setdefault(e.dst, []).append(e.src)

    def usable(s):
        return any(edges[i].dst in alive and (edge_ok is None or edge_ok(i)) for i in out[s])

    def discard(drop):
        # states that can be forced out of ``alive`` follow the dropped ones
        queue = deque(drop)
        alive.difference_update(drop)
        while queue:
            t = queue.popleft()
            for p in preds.get(t, ()):
                if p in alive and (game.owner[p] is rand or not usable(p)):
                    alive.discard(p)
                    queue.append(p)

    discard([s for s in alive if game.owner[s] is rand and any(edges[i].dst not in alive for i in out[s])]
            + [s for s in alive if game.owner[s] is not rand and not usable(s)])
    while True:
        local = sorted(alive)
        pos = {s: k for k, s in enumerate(local)}
        live_edges = []
        for s in local:
            for i in out[s]:
                e = edges[i]
                if e.dst in alive and (game.owner[s] is rand or edge_ok is None or edge_ok(i)):
                    live_edges.append(i)
        labels = scc_labels(len(local), [(pos[edges[i].src], pos[edges[i].dst]) for i in live_edges])
        comp = {s: labels[pos[s]] for s in local}
        inner = {}
        for i in live_edges:
            e = edges[i]
            if comp[e.src] == comp[e.dst]:
                inner.setdefault(e.src, []).append(i)
        drop = set()
        for s in local:
            if game.owner[s] is rand:
                for i in out[s]:
                    t = edges[i].dst
                    if t not in alive or comp[t] != comp[s]:
                        drop.add(s)
                        break
            elif not inner.get(s):
                drop.add(s)
        if not drop:
            groups = {}
            for s in local:
                groups.setdefault(comp[s], []).append(s)
            result = []
            for members in groups.values():
                mset = frozenset(members)
                eset = frozenset(i for s in members for i in inner.get(s, ()))
                result.append((mset, eset))
            result.sort(key=lambda x: min(x[0]))
            return result
        discard(drop)


def bottom_sccs(game, states=None):
    """Bottom strongly connected components of a Markov chain (all edges followed)."""
    alive = list(range(game.n)) if states is None else sorted(states)
    pos = {s: k for k, s in enumerate(alive)}
    pairs = []
    for s in alive:
        for i in game.out[s]:
            t = game.edges[i].dst
            if t in pos:
                pairs.append((pos[s], pos[t]))
    labels = scc_labels(len(alive), pairs)
    leaves = set()
    for s in alive:
        for i in game.out[s]:
            t = game.edges[i].dst
            if t not in pos or labels[pos[t]] != labels[pos[s]]:
                leaves.add(labels[pos[s]])
    groups = {}
    for s in alive:
        if labels[pos[s]] not in leaves:
            groups.setdefault(labels[pos[s]], []).append(s)
    return sorted((frozenset(g) for g in groups.values()), key=min)
