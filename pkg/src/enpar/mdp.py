"""Exact analysis of Markov chains and maximizing MDPs.

Every function here treats non-random states as owned by a single
controller (the Maximizer).  Minimizing questions are answered by the
callers through :func:`enpar.game.dual` and complemented objectives.
Values are dicts ``state -> Fraction``; memoryless strategies are dicts
``state -> successor state``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from enpar.energy import SATURATE, energy_unfolding
from enpar.errors import CapTooSmallSuspected, InvariantViolation
from enpar.game import Owner
from enpar.graphs import almost_sure_reach, backward_reach, bottom_sccs, end_components
from enpar.linsolve import solve_sparse
from enpar.meanpayoff import optimal_mean_payoff

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class Mec:
    states: frozenset
    edges: frozenset


def _controller_states(game):
    return [s for s in range(game.n) if game.owner[s] is not Owner.RAND]


# ---------------------------------------------------------------------------
# Markov chains


def bscc_decompose(chain):
    return bottom_sccs(chain)


def chain_reach_value(chain, targets, choice=None):
    """Exact probability to reach ``targets`` in the chain induced by ``choice``.

    ``choice`` maps owned states to successor states; a game without owned
    states needs none.
    """
    targets = set(targets)
    edges = chain.edges

    def moves(s):
        if chain.owner[s] is Owner.RAND:
            return [(edges[i].dst, edges[i].prob) for i in chain.out[s]]
        return [(choice[s], ONE)]

    preds = {}
    for s in range(chain.n):
        for t, _ in moves(s):
            preds.setdefault(t, []).append(s)
    can = set(targets)
    stack = list(targets)
    while stack:
        t = stack.pop()
        for s in preds.get(t, ()):
            if s not in can:
                can.add(s)
                stack.append(s)
    values = {s: ZERO for s in range(chain.n)}
    for t in targets:
        values[t] = ONE
    unknown = sorted(can - targets)
    if unknown:
        idx = {s: k for k, s in enumerate(unknown)}
        rows, rhs = [], []
        for s in unknown:
            row = {idx[s]: ONE}
            b = ZERO
            for t, p in moves(s):
                if t in idx:
                    row[idx[t]] = row.get(idx[t], 0) - p
                elif t in targets:
                    b += p
            rows.append(row)
            rhs.append(b)
        for s, v in zip(unknown, solve_sparse(rows, rhs)):
            values[s] = v
    return values


def induced_bsccs(game, choice):
    """Bottom SCCs of the chain induced by an MD strategy."""
    from enpar.game import fix_memoryless

    return bottom_sccs(fix_memoryless(game, choice, Owner.MAX) if choice else game)


def chain_parity_value(chain, choice=None):
    """EPAR value of a chain (or of the chain induced by ``choice``)."""
    from enpar.game import fix_memoryless

    if choice:
        chain = fix_memoryless(chain, choice, Owner.MAX)
    good = set()
    for b in bottom_sccs(chain):
        if min(chain.color[s] for s in b) % 2 == 0:
            good |= b
    return chain_reach_value(chain, good)


# ---------------------------------------------------------------------------
# reachability


def as_reach(game, targets):
    return almost_sure_reach(game, targets)[0]


def _float_value_iteration(game, ones, maybe, iters=2000, tol=1e-12):
    """Approximate max reachability on ``maybe`` states, used only to seed policy iteration."""
    n = game.n
    v = np.zeros(n)
    for s in ones:
        v[s] = 1.0
    if not maybe:
        return v
    src = np.array([e.src for e in game.edges], dtype=int)
    dst = np.array([e.dst for e in game.edges], dtype=int)
    rand = np.array([game.owner[e.src] is Owner.RAND for e in game.edges])
    prob = np.array([float(e.prob) if e.prob is not None else 0.0 for e in game.edges])
    maybe_mask = np.zeros(n, dtype=bool)
    maybe_mask[list(maybe)] = True
    owned_mask = np.array([game.owner[s] is not Owner.RAND for s in range(n)])
    for _ in range(iters):
        vals = v[dst]
        new_rand = np.bincount(src[rand], weights=(prob * vals)[rand], minlength=n)
        new_own = np.full(n, -1.0)
        np.maximum.at(new_own, src[~rand], vals[~rand])
        new = np.where(owned_mask, new_own, new_rand)
        new = np.where(maybe_mask, new, v)
        delta = np.max(np.abs(new - v))
        v = new
        if delta < tol:
            break
    return v


def max_reach_value(game, targets, init=None):
    """Optimal probability to reach ``targets`` and an optimal MD strategy.

    Graph analysis settles the value-0 and value-1 states; the rest is
    solved by policy iteration with exact chain evaluation, seeded from a
    floating-point value iteration (or from ``init``).
    """
    targets = set(targets)
    edges = game.edges
    ones, as_choice = almost_sure_reach(game, targets)
    can = backward_reach(game, targets)
    maybe = sorted(can - ones)
    choice = {}
    for s in _controller_states(game):
        if s in as_choice:
            choice[s] = as_choice[s]
        else:
            choice[s] = edges[game.out[s][0]].dst
    values = {s: (ONE if s in ones else ZERO) for s in range(game.n)}
    if not maybe:
        return values, choice

    maybe_set = set(maybe)
    owned_maybe = [s for s in maybe if game.owner[s] is not Owner.RAND]
    if init is not None:
        for s in owned_maybe:
            if s in init and init[s] in game.successors(s):
                choice[s] = init[s]
    else:
        approx = _float_value_iteration(game, ones, maybe_set)
        for s in owned_maybe:
            succ = game.successors(s)
            best = max(approx[t] for t in succ)
            # among near-ties prefer successors known to be winning, then lowest id
            cands = [t for t in succ if approx[t] >= best - 1e-9]
            choice[s] = min(cands, key=lambda t: (t not in ones, t not in maybe_set, t))

    while True:
        x = _evaluate_reach(game, choice, ones, maybe)
        switched = False
        for s in owned_maybe:
            succ = game.successors(s)
            best = max(x[t] for t in succ)
            if x[choice[s]] < best:
                choice[s] = min(t for t in succ if x[t] == best)
                switched = True
        if not switched:
            break
    values.update({s: x[s] for s in maybe})
    return values, choice


def _evaluate_reach(game, choice, ones, maybe):
    edges = game.edges

    def moves(s):
        if game.owner[s] is Owner.RAND:
            return [(edges[i].dst, edges[i].prob) for i in game.out[s]]
        return [(choice[s], ONE)]

    maybe_set = set(maybe)
    preds = {}
    for s in maybe:
        for t, _ in moves(s):
            preds.setdefault(t, []).append(s)
    good = set()
    stack = [t for t in ones]
    while stack:
        t = stack.pop()
        for s in preds.get(t, ()):
            if s not in good:
                good.add(s)
                stack.append(s)
    x = {}
    for s in range(game.n):
        x[s] = ONE if s in ones else ZERO
    unknown = [s for s in maybe if s in good]
    if unknown:
        idx = {s: k for k, s in enumerate(unknown)}
        rows, rhs = [], []
        for s in unknown:
            row = {idx[s]: ONE}
            b = ZERO
            for t, p in moves(s):
                if t in idx:
                    row[idx[t]] = row.get(idx[t], 0) - p
                elif t in ones:
                    b += p
            rows.append(row)
            rhs.append(b)
        for s, v in zip(unknown, solve_sparse(rows, rhs)):
            x[s] = v
    for s in maybe_set - good:
        x[s] = ZERO
    return x


# ---------------------------------------------------------------------------
# end components and parity


def mec_decompose(game, states=None, edge_ok=None):
    return [Mec(s, e) for s, e in end_components(game, states, edge_ok)]


def mec_extremal_mean_payoff(game, mec, mode="max"):
    edges = mec.edges
    gain, _, _ = optimal_mean_payoff(game, mec.states, lambda i: i in edges, maximize=(mode == "max"))
    return gain[min(mec.states)]


@dataclass
class Core:
    """A sub-end-component witnessing an objective, with an MD strategy that
    stays inside and keeps visiting ``focus`` states."""

    states: frozenset
    edges: frozenset
    color: int
    choice: dict = field(default_factory=dict)


def _visiting_strategy(game, states, edges, focus):
    """MD strategy inside an end component that almost surely visits ``focus`` infinitely often."""
    ok = lambda i: i in edges  # noqa: E731
    _, choice = almost_sure_reach(game, focus, within=states, edge_ok=ok)
    for s in states:
        if game.owner[s] is not Owner.RAND and s not in choice:
            choice[s] = next(game.edges[i].dst for i in game.out[s] if i in edges)
    return choice


def parity_cores(game, parity=0, states=None, edge_ok=None):
    """Sub-end-components whose least color has the given parity (0 even, 1 odd)."""
    cores = []
    for mec in mec_decompose(game, states, edge_ok):
        colors = sorted(set(game.color[s] for s in mec.states))
        claimed = set()
        for d in colors:
            if d % 2 != parity:
                continue
            allowed = [s for s in mec.states if game.color[s] >= d and s not in claimed]
            for sub in mec_decompose(game, allowed, lambda i, E=mec.edges: i in E):
                focus = [s for s in sub.states if game.color[s] == d]
                if focus:
                    claimed |= sub.states
                    cores.append(Core(sub.states, sub.edges, d,
                                      _visiting_strategy(game, sub.states, sub.edges, focus)))
    return cores


def almost_sure_parity(game, parity=0):
    """States winning EPAR (parity 0) or OPAR (parity 1) almost surely, with an MD witness."""
    cores = parity_cores(game, parity)
    target = set().union(*(c.states for c in cores)) if cores else set()
    win, choice = almost_sure_reach(game, target)
    for c in cores:
        choice.update(c.choice)
    return win, choice


def mdp_parity_value(game, init=None):
    """Optimal EPAR value of a maximizing MDP and an optimal MD strategy."""
    cores = parity_cores(game, 0)
    target = set().union(*(c.states for c in cores)) if cores else set()
    values, choice = max_reach_value(game, target, init)
    for c in cores:
        choice.update(c.choice)
    return values, choice


# ---------------------------------------------------------------------------
# the W-sets


def liminf_minus_inf_cores(game):
    """Sub-end-components in which the controller can force the reward sum to
    have limit inferior minus infinity almost surely.

    An end component qualifies when its least achievable mean payoff is
    negative, or it is zero and the zero-reduced-cost part contains an end
    component with a random state whose reduced rewards are not all zero
    (a nondegenerate martingale, which oscillates unboundedly).
    """
    cores = []
    for mec in mec_decompose(game):
        E = mec.edges
        gain, bias, _ = optimal_mean_payoff(game, mec.states, lambda i: i in E, maximize=False)
        g = gain[min(mec.states)]
        if g < 0:
            cores.append(Core(mec.states, mec.edges, -1,
                              _negative_drift_strategy(game, mec)))
            continue
        if g > 0:
            continue

        def reduced(i):
            e = game.edges[i]
            return e.reward + bias[e.dst] - bias[e.src]

        tight = set(i for i in E if game.owner[game.edges[i].src] is Owner.RAND or reduced(i) == 0)
        for sub in mec_decompose(game, mec.states, lambda i: i in tight):
            noisy = [s for s in sub.states if game.owner[s] is Owner.RAND
                     and any(reduced(i) != 0 for i in game.out[s])]
            if noisy:
                cores.append(Core(sub.states, sub.edges, 0,
                                  _visiting_strategy(game, sub.states, sub.edges, noisy)))
    return cores


def _negative_drift_strategy(game, mec):
    E = mec.edges
    _, _, choice = optimal_mean_payoff(game, mec.states, lambda i: i in E, maximize=False)
    return {s: game.edges[i].dst for s, i in choice.items()}


def _reach_cores(game, cores):
    target = set().union(*(c.states for c in cores)) if cores else set()
    return as_reach(game, target)


def set_W1(game):
    """States almost surely forcing the reward sum to liminf minus infinity."""
    return _reach_cores(game, liminf_minus_inf_cores(game))


def set_W2(game):
    """States almost surely winning odd parity."""
    return _reach_cores(game, parity_cores(game, 1))


def set_W0(game):
    """States almost surely winning the Loss objective (liminf minus infinity or odd parity)."""
    return _reach_cores(game, liminf_minus_inf_cores(game) + parity_cores(game, 1))


def loss_value(game):
    """Optimal Loss value of a maximizing MDP: the value of reaching W0."""
    cores = liminf_minus_inf_cores(game) + parity_cores(game, 1)
    target = set().union(*(c.states for c in cores)) if cores else set()
    values, choice = max_reach_value(game, target)
    for c in cores:
        choice.update(c.choice)
    return values, choice


# ---------------------------------------------------------------------------
# Gain


def energy_storage_unfolding(game, cap):
    return energy_unfolding(game, cap, top=SATURATE)


def as_energy_storage_parity(game, k, cap=None, self_check=True):
    """States from which ES(k) and even parity hold almost surely.

    Solved on the saturating unfolding with top level ``cap`` (default
    ``k + |S| * R``); ``self_check`` re-solves at twice the cap and raises
    :class:`CapTooSmallSuspected` when the answer moves.
    """
    if k <= 0:
        return set()
    if cap is None:
        cap = k + game.n * game.energy_margin
    result = _storage_set(game, k, cap)[0]
    if self_check:
        again = _storage_set(game, k, 2 * cap)[0]
        if again != result:
            raise CapTooSmallSuspected(
                f"storage-parity set differs between cap {cap} and {2 * cap}")
    return result


def _storage_set(game, k, cap):
    prod = energy_storage_unfolding(game, max(cap, k))
    win, choice = almost_sure_parity(prod.game, 0)
    level = min(k, cap)
    result = set(s for s in range(game.n) if prod.index[(s, level)] in win)
    return result, prod, win, choice


def mp_parity_cores(game):
    """Sub-end-components almost surely winning positive mean payoff with even parity."""
    cores = []
    for mec in mec_decompose(game):
        colors = sorted(set(game.color[s] for s in mec.states))
        for d in colors:
            if d % 2:
                continue
            allowed = [s for s in mec.states if game.color[s] >= d]
            for sub in mec_decompose(game, allowed, lambda i, E=mec.edges: i in E):
                focus = [s for s in sub.states if game.color[s] == d]
                if not focus:
                    continue
                E = sub.edges
                gain, _, mp_choice = optimal_mean_payoff(game, sub.states, lambda i: i in E, maximize=True)
                if gain[min(sub.states)] > 0:
                    core = Core(sub.states, sub.edges, d,
                                _visiting_strategy(game, sub.states, sub.edges, focus))
                    core.mp_choice = {s: game.edges[i].dst for s, i in mp_choice.items()}
                    core.mean_payoff = gain[min(sub.states)]
                    cores.append(core)
    return cores


def set_B(game):
    return _reach_cores(game, mp_parity_cores(game))


@dataclass
class GainWitness:
    """Data sufficient to assemble a finite-memory optimal Gain strategy."""

    A: set
    B: set
    reach_choice: dict
    k: int
    cap: int
    storage_product: object
    storage_choice: dict
    storage_win: set
    b_cores: list
    k_default: int
    stabilized: bool = True


def mdp_gain_value(game, k_limit=1 << 12):
    """Optimal Gain value of a maximizing MDP with the two-phase witness data."""
    k_default = max(1, game.n * game.max_reward)
    k = k_default
    A = as_energy_storage_parity(game, k)
    while True:
        bigger = as_energy_storage_parity(game, 2 * k)
        if bigger == A:
            break
        A, k = bigger, 2 * k
        if k > k_limit:
            raise CapTooSmallSuspected(f"storage set not stable up to k={k}")
    cap = k + game.n * game.energy_margin
    _, prod, win, schoice = _storage_set(game, k, cap)
    b_cores = mp_parity_cores(game)
    Bcore = set().union(*(c.states for c in b_cores)) if b_cores else set()
    B = as_reach(game, Bcore)
    values, reach_choice = max_reach_value(game, A | B)
    for s, v in values.items():
        if not (0 <= v <= 1):
            raise InvariantViolation(f"value out of range at {s}: {v}")
    witness = GainWitness(A=A, B=B, reach_choice=reach_choice, k=k, cap=cap,
                          storage_product=prod, storage_choice=schoice, storage_win=win,
                          b_cores=b_cores, k_default=k_default, stabilized=(k == k_default))
    return values, witness
