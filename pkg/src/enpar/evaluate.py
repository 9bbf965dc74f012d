"""Certified intervals for energy-parity values under fixed strategies.

A fixed strategy (or pair) leaves a product MDP with at most one player in
control.  Its energy-parity value is bracketed by two finite games on a
capped energy counter, each solved exactly:

* ``hi``: reaching the cap jumps to the win sink with the Gain value of the
  state, an upper bound because energy-parity plays are Gain plays;
* ``lo``: reaching the cap jumps to the win sink with the probability of
  parity while avoiding the adversary's minus-infinity region, minus a
  certified tail bound on later termination.  Without a certificate the
  counter saturates at the cap instead.

The cap doubles until the interval is narrow enough, both bounds stall, or
a limit is hit.  An interval that did not close is flagged as such.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

from enpar.bound import Certificate, can_terminate, certificates
from enpar.energy import SATURATE, energy_unfolding, gadget_unfolding, level_node
from enpar.game import Owner, dual, explore
from enpar.mdp import loss_value, mdp_gain_value, set_W1
from enpar.parity import solve_parity_game
from enpar.rational import format_rational
from enpar.strategy import fix_strategy

log = logging.getLogger(__name__)

ONE = Fraction(1)
ZERO = Fraction(0)
DEFAULT_CAP_LIMIT = 512


@dataclass(frozen=True)
class ValueInterval:
    lo: Fraction
    hi: Fraction
    cap_used: int
    closed: bool = True

    def __post_init__(self):
        if not (0 <= self.lo <= self.hi <= 1):
            raise ValueError(f"bad interval [{self.lo}, {self.hi}]")

    @property
    def width(self):
        return self.hi - self.lo

    def to_json(self):
        return {"lo": format_rational(self.lo), "hi": format_rational(self.hi),
                "cap_used": self.cap_used, "closed": self.closed}


def _controller(mdp):
    owners = set(mdp.owner) - {Owner.RAND}
    if len(owners) > 1:
        raise ValueError("both players still control states")
    return owners.pop() if owners else None


def _gain_values(mdp, who):
    if who is Owner.MIN:
        loss, _ = loss_value(dual(mdp))
        return {s: 1 - v for s, v in loss.items()}
    return mdp_gain_value(mdp)[0]


class _Analysis:
    """Cap-independent data for one product MDP."""

    def __init__(self, mdp):
        self.mdp = mdp
        self.who = _controller(mdp)
        self.gain = _gain_values(mdp, self.who)
        self.cert = None
        self.safe_parity = None
        if self.who is not Owner.MAX:
            adversary = dual(mdp)
            w1 = set_W1(adversary)
            if not can_terminate(adversary, range(mdp.n), w1):
                # no negative reward is reachable outside W1: nothing to subtract
                self.cert = Certificate(ZERO, {s: ZERO for s in range(mdp.n) if s not in w1}, frozenset(w1))
            else:
                certs = certificates(adversary, w1)
                if certs:
                    self.cert = min(certs, key=lambda c: c.rate)
            if self.cert is not None:
                self.safe_parity = self._parity_avoiding(w1)

    def _parity_avoiding(self, w1):
        mdp = self.mdp
        odd = mdp.max_color | 1

        def expand(s):
            if s in w1:
                return Owner.RAND, odd, [(s, 0, ONE)]
            return mdp.owner[s], mdp.color[s], [(e.dst, e.reward, e.prob) for e in (mdp.edges[i] for i in mdp.out[s])]

        prod = explore(range(mdp.n), expand, odd)
        vals = solve_parity_game(prod.game).values
        return {s: vals[prod.index[s]] for s in range(mdp.n)}

    def lo_top(self, cap):
        return {s: max(ZERO, self.safe_parity[s] - self.cert.tail(cap, s)) if s in self.cert.g else ZERO
                for s in range(self.mdp.n)}

    def interval(self, start, level, cap):
        if level <= 0:
            return ZERO, ZERO
        mdp = self.mdp
        prod, node = gadget_unfolding(mdp, cap, self.gain, [(start, level)])
        hi = solve_parity_game(prod.game).values[prod.index[node(start, level)]]
        if self.cert is not None:
            prod, node = gadget_unfolding(mdp, cap, self.lo_top(cap), [(start, level)])
            lo = solve_parity_game(prod.game).values[prod.index[node(start, level)]]
        else:
            sat = energy_unfolding(mdp, cap, [(start, min(level, cap))], top=SATURATE)
            lo = solve_parity_game(sat.game).values[sat.index[level_node(start, level, cap, SATURATE)]]
        return lo, hi


def sandwich(mdp, start, level, tol, start_cap=16, cap_limit=DEFAULT_CAP_LIMIT):
    """Certified interval for the controller-optimal energy-parity value of ``mdp``."""
    if level <= 0:
        return ValueInterval(ZERO, ZERO, 0)
    analysis = _Analysis(mdp)
    cap = max(start_cap, 2 * level)
    best = None
    while True:
        lo, hi = analysis.interval(start, level, cap)
        prev = best
        if prev is not None:
            lo, hi = max(lo, prev.lo), min(hi, prev.hi)
        best = ValueInterval(lo, hi, cap, hi - lo <= tol)
        if best.closed or 2 * cap > cap_limit:
            break
        if prev is not None and lo - prev.lo <= tol / 8 and prev.hi - hi <= tol / 8:
            # neither bound moves any more, a larger cap will not close the gap
            break
        cap *= 2
    if not best.closed:
        log.warning("interval [%s, %s] still wider than %s at cap %d", best.lo, best.hi, tol, cap)
    return best


def fix_pair(game, sigma, pi, starts):
    """Markov chain of ``game`` under both transducers; nodes ``(sigma_mode, pi_mode, state)``."""
    one = ONE

    def expand(node):
        ms, mp, s = node
        owner = game.owner[s]
        if owner is Owner.RAND:
            idx = game.out[s]
        else:
            strat, m = (sigma, ms) if owner is Owner.MAX else (pi, mp)
            idx = [game.edge_index[(s, strat.move(m, s))]]
        succ = []
        for i in idx:
            e = game.edges[i]
            p = e.prob if owner is Owner.RAND else one
            succ.append(((sigma.step(ms, i), pi.step(mp, i), e.dst), e.reward, p))
        return Owner.RAND, game.color[s], succ

    return explore([(sigma.m0, pi.m0, s) for s in starts], expand, game.max_color)


def evaluate_pair(game, sigma, pi, cfg, tol, energy=None, **kw):
    """Interval for ``P(EN(i) and EPAR)`` when both strategies are fixed."""
    level = cfg.energy if energy is None else energy
    chain = fix_pair(game, sigma, pi, [cfg.state])
    return sandwich(chain.game, chain.index[(sigma.m0, pi.m0, cfg.state)], level, tol, **kw)


def best_response_energy_parity(game, fixed, fixed_player, cfg, tol, **kw):
    """Interval for the opponent-optimal ``EN(i) and EPAR`` value against ``fixed``."""
    if fixed.owner is not fixed_player:
        raise ValueError("strategy owner differs from fixed_player")
    prod = fix_strategy(game, fixed, [cfg.state])
    return sandwich(prod.game, prod.index[(fixed.m0, cfg.state)], cfg.energy, tol, **kw)

