"""Exact mean payoff of Markov chains and one-player arenas.

Multichain policy iteration (gain, then bias) with exact evaluation: every
strategy is evaluated by solving its chain's gain and bias equations with
the normalisation that the stationary average of the bias is zero in each
recurrent class.
"""

from fractions import Fraction

from enpar.game import Owner
from enpar.graphs import scc_labels
from enpar.linsolve import solve_sparse


def _chain_moves(game, states, choice):
    """Transition lists ``s -> [(t, p, r)]`` of the chain induced by ``choice``."""
    moves = {}
    for s in states:
        if game.owner[s] is Owner.RAND:
            moves[s] = [(game.edges[i].dst, game.edges[i].prob, game.edges[i].reward) for i in game.out[s]]
        else:
            i = choice[s]
            moves[s] = [(game.edges[i].dst, Fraction(1), game.edges[i].reward)]
    return moves


def chain_gain_bias(moves):
    """Gain and bias of a finite Markov chain given as ``s -> [(t, p, r)]``.

    The state set must be closed under transitions.
    """
    states = sorted(moves)
    pos = {s: k for k, s in enumerate(states)}
    pairs = [(pos[s], pos[t]) for s in states for t, _, _ in moves[s]]
    labels = scc_labels(len(states), pairs)
    bottom = set(labels[pos[s]] for s in states)
    for s in states:
        for t, _, _ in moves[s]:
            if labels[pos[t]] != labels[pos[s]]:
                bottom.discard(labels[pos[s]])
    classes = {}
    for s in states:
        if labels[pos[s]] in bottom:
            classes.setdefault(labels[pos[s]], []).append(s)
    reward = {s: sum(p * r for _, p, r in moves[s]) for s in states}

    gain, bias = {}, {}
    for members in classes.values():
        idx = {s: k for k, s in enumerate(members)}
        m = len(members)
        # stationary distribution: pi (P - I) = 0, sum pi = 1 (first equation replaced)
        rows = [dict() for _ in range(m)]
        for s in members:
            for t, p, _ in moves[s]:
                rows[idx[t]][idx[s]] = rows[idx[t]].get(idx[s], 0) + p
        for k in range(m):
            rows[k][k] = rows[k].get(k, 0) - 1
        rows[0] = {k: 1 for k in range(m)}
        rhs = [0] * m
        rhs[0] = 1
        pi = solve_sparse(rows, rhs)
        g = sum(pi[idx[s]] * reward[s] for s in members)
        # bias: h - P h = r - g on the class, with sum pi h = 0 replacing one equation
        rows = []
        rhs = []
        for s in members:
            row = {idx[s]: Fraction(1)}
            for t, p, _ in moves[s]:
                row[idx[t]] = row.get(idx[t], 0) - p
            rows.append(row)
            rhs.append(reward[s] - g)
        rows[0] = {k: pi[k] for k in range(m)}
        rhs[0] = 0
        h = solve_sparse(rows, rhs)
        for s in members:
            gain[s] = g
            bias[s] = h[idx[s]]

    transient = [s for s in states if s not in gain]
    if transient:
        tidx = {s: k for k, s in enumerate(transient)}
        rows, rhs_g = [], []
        for s in transient:
            row = {tidx[s]: Fraction(1)}
            b = Fraction(0)
            for t, p, _ in moves[s]:
                if t in tidx:
                    row[tidx[t]] = row.get(tidx[t], 0) - p
                else:
                    b += p * gain[t]
            rows.append(row)
            rhs_g.append(b)
        gt = solve_sparse(rows, rhs_g)
        for s in transient:
            gain[s] = gt[tidx[s]]
        rhs_h = []
        for s in transient:
            b = reward[s] - gain[s]
            for t, p, _ in moves[s]:
                if t not in tidx:
                    b += p * bias[t]
            rhs_h.append(b)
        ht = solve_sparse(rows, rhs_h)
        for s in transient:
            bias[s] = ht[tidx[s]]
    return gain, bias


def optimal_mean_payoff(game, states, edge_ok=None, maximize=True, init=None):
    """Optimal expected mean payoff inside a closed sub-arena.

    ``states`` must be closed for random states and every owned state must
    keep at least one allowed edge inside ``states``.  All owned states are
    controlled by the optimiser.  Returns ``(gain, bias, choice)`` with
    ``choice`` mapping owned states to edge indices.
    """
    states = set(states)
    sign = 1 if maximize else -1
    allowed = {}
    for s in states:
        if game.owner[s] is not Owner.RAND:
            allowed[s] = [i for i in game.out[s]
                          if game.edges[i].dst in states and (edge_ok is None or edge_ok(i))]
    choice = {}
    for s, lst in allowed.items():
        if init and init.get(s) in lst:
            choice[s] = init[s]
        else:
            choice[s] = lst[0]

    def scaled(moves):
        return {s: [(t, p, sign * r) for t, p, r in lst] for s, lst in moves.items()}

    while True:
        gain, bias = chain_gain_bias(scaled(_chain_moves(game, states, choice)))
        switched = False
        for s, lst in allowed.items():
            cur = gain[game.edges[choice[s]].dst]
            best = max(gain[game.edges[i].dst] for i in lst)
            if best > cur:
                choice[s] = min(i for i in lst if gain[game.edges[i].dst] == best)
                switched = True
        if not switched:
            for s, lst in allowed.items():
                best_g = max(gain[game.edges[i].dst] for i in lst)
                cands = [i for i in lst if gain[game.edges[i].dst] == best_g]

                def w(i):
                    return sign * game.edges[i].reward + bias[game.edges[i].dst]
                best = max(w(i) for i in cands)
                if w(choice[s]) < best:
                    choice[s] = min(i for i in cands if w(i) == best)
                    switched = True
        if not switched:
            break
    if sign < 0:
        gain = {s: -v for s, v in gain.items()}
        bias = {s: -v for s, v in bias.items()}
    return gain, bias, choice
