"""Cutoff energy level N beyond which the energy-parity value is within
epsilon of the Gain value.

For a maximizing MDP (the adversary of a fixed optimal Gain strategy) we
bound ``sup P(Term(j) and never reach W1)``, the probability of exhausting
credit ``j`` while avoiding the region where the adversary can force the
reward sum to minus infinity.  Two certified ingredients:

* an exponential supermartingale ``y**level * g(state)`` with ``y < 1``,
  checked exactly in rationals, which bounds termination from any level by
  ``y**level * g(state)``;
* a finite unfolding up to a cap whose top level loses with the tail bound
  of the certificate, solved exactly by max reachability.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from enpar.errors import Divergence, SingularSystem
from enpar.game import Owner, dual, explore
from enpar.linsolve import solve_sparse
from enpar.mdp import max_reach_value, set_W1
from enpar.rational import format_rational
from enpar.strategy import fix_strategy

log = logging.getLogger(__name__)

ONE = Fraction(1)
ZERO = Fraction(0)
LIMIT = 1 << 30
RATES = tuple(ONE - Fraction(1, 1 << k) for k in range(1, 21))

_LOSE = "lose"
_SAFE = "safe"
_TOP = "top"


@dataclass
class BoundReport:
    N: int
    per_state: dict
    epsilon: Fraction
    method: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "N": self.N,
            "epsilon": format_rational(self.epsilon),
            "per_state": {str(s): n for s, n in sorted(self.per_state.items())},
            "method": {k: (format_rational(v) if isinstance(v, Fraction) else v)
                       for k, v in sorted(self.method.items())},
        }


def n_from_constants(c, h, eps):
    """``max(h, ceil(log_c(eps * (1 - c))))`` without floating point.

    The second term is the least ``n >= 0`` with ``c**n <= eps * (1 - c)``.
    """
    c, eps = Fraction(c), Fraction(eps)
    if not (0 < c < 1) or eps <= 0:
        raise ValueError("need 0 < c < 1 and eps > 0")
    return max(h, least_power(c, eps * (1 - c)))


def least_power(c, threshold):
    """Least ``n >= 0`` with ``c**n <= threshold`` for ``0 < c < 1``."""
    if threshold >= 1:
        return 0
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    hi = 1
    while c ** hi > threshold:
        hi *= 2
    lo = hi // 2
    while lo < hi:
        mid = (lo + hi) // 2
        if c ** mid <= threshold:
            hi = mid
        else:
            lo = mid + 1
    return hi


# ---------------------------------------------------------------------------
# exponential certificates


@dataclass(frozen=True)
class Certificate:
    rate: Fraction
    g: dict
    w1: frozenset

    @property
    def g_max(self):
        return max(self.g.values(), default=ONE)

    def tail(self, level, s=None):
        """Upper bound on termination from ``level`` (at ``s``, or at any state)."""
        g = self.g_max if s is None else self.g.get(s, ZERO)
        return min(ONE, self.rate ** level * g)


def _float_certificate(mdp, live, rate, slack, rounds=200, blowup=1e12):
    """Least fixpoint of ``g = max(1, slack * T g)`` by policy iteration in floats.

    A policy stops (value 1) or continues along one edge at owned states and
    in expectation at random states.  Returns ``None`` when the fixpoint is
    infinite, which shows up as a singular or non-positive evaluation.
    """
    n = len(live)
    idx = {s: i for i, s in enumerate(live)}
    y = float(rate)
    rows = []
    for s in live:
        is_rand = mdp.owner[s] is Owner.RAND
        row = []
        for e in (mdp.edges[i] for i in mdp.out[s]):
            if e.dst in idx:
                row.append((idx[e.dst], slack * y ** e.reward * (float(e.prob) if is_rand else 1.0), e))
        rows.append((is_rand, row))
    go = [None] * n  # None: stop; otherwise the (j, w, edge) continued along
    g = np.ones(n)
    for _ in range(rounds):
        changed = False
        for i, (is_rand, row) in enumerate(rows):
            if not row:
                continue
            if is_rand:
                q, pick = sum(w * g[j] for j, w, _ in row), row
            else:
                best = max(row, key=lambda r: r[1] * g[r[0]])
                q, pick = best[1] * g[best[0]], [best]
            cur = 1.0 if go[i] is None else sum(w * g[j] for j, w, _ in go[i])
            if q > cur * (1 + 1e-12) and q > 1.0:
                go[i] = pick
                changed = True
        if not changed:
            return g, go
        a = np.eye(n)
        b = np.zeros(n)
        for i in range(n):
            if go[i] is None:
                b[i] = 1.0
            else:
                for j, w, _ in go[i]:
                    a[i, j] -= w
        try:
            g = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(g)) or g.min() < 1.0 - 1e-9 or g.max() > blowup:
            return None
        g = np.maximum(g, 1.0)
    return None


def _exact_policy_values(mdp, live, rate, go):
    """Exact solution of the stop/continue system of a float-found policy."""
    rows, rhs = [], []
    for i, s in enumerate(live):
        row = {i: ONE}
        if go[i] is None:
            rhs.append(ONE)
        else:
            rhs.append(ZERO)
            for j, _, e in go[i]:
                w = rate ** e.reward * (e.prob if e.prob is not None else ONE)
                row[j] = row.get(j, ZERO) - w
        rows.append(row)
    try:
        vals = solve_sparse(rows, rhs)
    except SingularSystem:
        return None
    return {s: v for s, v in zip(live, vals)}


def _check_certificate(mdp, live, rate, g):
    for s in live:
        if g[s] < 1:
            return False
        terms = []
        for e in (mdp.edges[i] for i in mdp.out[s]):
            terms.append((rate ** e.reward * g.get(e.dst, ZERO), e.prob))
        if mdp.owner[s] is Owner.RAND:
            if sum(p * v for v, p in terms) > g[s]:
                return False
        elif any(v > g[s] for v, _ in terms):
            return False
    return True


def certificates(mdp, w1=None, rates=RATES, extra=3):
    """Exactly checked exponential certificates, one per rate that admits one.

    Rates are tried from the fastest decay; the search stops ``extra`` rates
    after the first success since slower rates only weaken the tail.
    """
    if w1 is None:
        w1 = set_W1(mdp)
    live = [s for s in range(mdp.n) if s not in w1]
    found = []
    for rate in rates:
        if found and len(found) > extra:
            break
        for slack in (1.0, 1 + 1e-9, 1 + 1e-6):
            res = _float_certificate(mdp, live, rate, slack)
            if res is None:
                continue
            gf, go = res
            candidates = [{s: Fraction(float(v)) for s, v in zip(live, gf)}]
            if slack == 1:
                exact = _exact_policy_values(mdp, live, rate, go)
                if exact is not None:
                    candidates.insert(0, exact)
            g = next((c for c in candidates if _check_certificate(mdp, live, rate, c)), None)
            if g is not None:
                found.append(Certificate(rate, g, frozenset(w1)))
                break
    return found


def can_terminate(mdp, starts, w1):
    """Whether some play from ``starts`` avoiding W1 takes a negative reward."""
    seen, stack = set(starts) - w1, list(set(starts) - w1)
    while stack:
        s = stack.pop()
        for i in mdp.out[s]:
            e = mdp.edges[i]
            if e.reward < 0:
                return True
            if e.dst not in w1 and e.dst not in seen:
                seen.add(e.dst)
                stack.append(e.dst)
    return False


# ---------------------------------------------------------------------------
# capped unfolding bound


def _capped_unfolding(mdp, starts, cap, w1, top_loss):
    def node(s, level):
        if s in w1:
            return _SAFE
        if level <= 0:
            return _LOSE
        if level >= cap:
            return _TOP
        return (s, level)

    def expand(n):
        if n in (_LOSE, _SAFE):
            return Owner.RAND, 0, [(n, 0, ONE)]
        if n == _TOP:
            succ = []
            if top_loss > 0:
                succ.append((_LOSE, 0, top_loss))
            if top_loss < 1:
                succ.append((_SAFE, 0, 1 - top_loss))
            return Owner.RAND, 0, succ
        s, level = n
        return mdp.owner[s], 0, [(node(e.dst, level + e.reward), e.reward, e.prob)
                                 for e in (mdp.edges[i] for i in mdp.out[s])]

    return explore([node(s, j) for s, j in starts], expand, 1)


def term_avoid_w1_bound(mdp, j, cap, starts=None, cert=None, w1=None):
    """Certified upper bound on ``sup P(Term(j) and not eventually W1)``.

    Returns the maximum over ``starts`` (default: every state).  Above the
    cap termination is bounded by the certificate's tail (1 without one).
    """
    if cap < j:
        raise ValueError("cap must be at least j")
    if j <= 0:
        return ONE
    if w1 is None:
        w1 = cert.w1 if cert is not None else set_W1(mdp)
    starts = list(range(mdp.n)) if starts is None else list(starts)
    if all(s in w1 for s in starts):
        return ZERO
    if not can_terminate(mdp, starts, set(w1)):
        return ZERO
    if j >= cap:
        return ONE if cert is None else max(cert.tail(j, s) for s in starts if s not in w1)
    top = ONE if cert is None else cert.tail(cap)
    prod = _capped_unfolding(mdp, [(s, j) for s in starts], cap, set(w1), top)
    lose = prod.index.get(_LOSE)
    if lose is None:
        return ZERO
    values, _ = max_reach_value(prod.game, {lose})
    return max(values[prod.index[(s, j)]] if (s, j) in prod.index else ZERO
               for s in starts)


def compute_N_mdp(mdp, eps, states=None, cap_factor=4, limit=LIMIT, search_limit=1 << 10):
    """Least ``j`` (at least 1) whose certified termination bound is at most ``eps``.

    Returns ``(N, info)``; ``info`` records the certificate rate and cap used.
    """
    eps = Fraction(eps)
    states = list(range(mdp.n)) if states is None else list(states)
    w1 = set_W1(mdp)
    info = {"kind": "capped", "cap_factor": cap_factor}
    if eps >= 1 or not can_terminate(mdp, states, w1):
        return 1, info
    certs = certificates(mdp, w1)
    cert, closed = None, None
    for c in certs:
        n = max(max(1, least_power(c.rate, eps / c.g[s])) for s in states if s not in w1)
        if closed is None or n < closed:
            cert, closed = c, n
    if cert is not None:
        info["rate"] = cert.rate
        info["closed_form"] = closed

    def ok(j):
        return term_avoid_w1_bound(mdp, j, cap_factor * j, states, cert, w1) <= eps

    j, prev = 1, 0
    while not ok(j):
        prev = j
        if closed is not None and 2 * j >= closed:
            j = closed
            break
        if j > min(limit, search_limit) and closed is None:
            raise Divergence(f"no cutoff found up to {j} and no exponential certificate")
        j *= 2
    lo = prev + 1
    while lo < j:
        mid = (lo + j) // 2
        if ok(mid):
            j = mid
        else:
            lo = mid + 1
    if j > limit:
        raise Divergence(f"cutoff {j} exceeds limit {limit}")
    info["cap_used"] = cap_factor * j
    return max(1, j), info


def compute_N_game(game, gain_solution, eps, **kw):
    """Per-state cutoffs on the dual of each verified Gain strategy's product."""
    eps = Fraction(eps)
    per_state = {}
    method = {}
    for s in range(game.n):
        strat = gain_solution.sigma_star[s]
        prod = fix_strategy(game, strat, [s])
        mdp = dual(prod.game)
        n, info = compute_N_mdp(mdp, eps, [prod.index[(strat.m0, s)]], **kw)
        per_state[s] = n
        if n >= max(per_state.values()):
            method = info
    N = max(1, max(per_state.values(), default=1))
    return BoundReport(N, per_state, eps, method)
