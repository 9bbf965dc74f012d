"""Quantitative stochastic parity games (even parity for the Maximizer).

Both players have optimal memoryless deterministic strategies, so a pair of
MD strategies that are mutual best responses certifies the value.  The
solver searches Minimizer strategies (exhaustively or by strategy
improvement) and always checks that certificate before returning.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction

from enpar.errors import BudgetExceeded, InvariantViolation
from enpar.game import Owner, dual, fix_memoryless, shift_colors
from enpar.mdp import mdp_parity_value

log = logging.getLogger(__name__)

ENUMERATE = "enumerate"
IMPROVE = "improve"
DEFAULT_BUDGET = 1 << 20


@dataclass
class ParitySolution:
    values: dict
    sigma: dict
    pi: dict
    certificate: tuple
    mode: str = IMPROVE

    def value(self, s):
        return self.values[s]


def best_response_parity(game, fixed, fixed_player, init=None):
    """Opponent-optimal EPAR values once ``fixed_player`` plays the MD strategy ``fixed``.

    Returns ``(values, opponent_choice)``; values are always the Maximizer's
    EPAR probabilities.
    """
    if fixed_player is Owner.MIN:
        return mdp_parity_value(fix_memoryless(game, fixed, Owner.MIN), init)
    # Minimizer optimises EPAR in the fixed MDP: dualise and maximise OPAR
    fixed_game = fix_memoryless(game, fixed, Owner.MAX)
    vals, choice = mdp_parity_value(shift_colors(dual(fixed_game)), init)
    return {s: 1 - v for s, v in vals.items()}, choice


def _certify(game, pi, init_sigma=None, init_pi=None):
    upper, sigma = best_response_parity(game, pi, Owner.MIN, init_sigma)
    lower, pi_br = best_response_parity(game, sigma, Owner.MAX, init_pi)
    return upper, sigma, lower, pi_br


def _min_choices(game):
    return [(s, sorted(set(game.successors(s)))) for s in game.states_of(Owner.MIN)]


def solve_parity_game(game, mode=IMPROVE, budget=DEFAULT_BUDGET, max_rounds=10_000):
    """Exact EPAR values with certified optimal MD strategies for both players."""
    if mode == ENUMERATE:
        return _enumerate(game, budget)
    if mode != IMPROVE:
        raise ValueError(f"unknown mode {mode!r}")
    mins = _min_choices(game)
    pi = {s: succ[0] for s, succ in mins}
    sigma = None
    seen = set()
    for _ in range(max_rounds):
        upper, sigma = best_response_parity(game, pi, Owner.MIN, sigma)
        switched = False
        for s, succ in mins:
            best = min(upper[t] for t in succ)
            if upper[pi[s]] > best:
                pi[s] = min(t for t in succ if upper[t] == best)
                switched = True
        if switched:
            continue
        lower, pi_br = best_response_parity(game, sigma, Owner.MAX)
        if lower == upper:
            return ParitySolution(upper, sigma, dict(pi), (upper, lower), IMPROVE)
        key = tuple(sorted(pi.items()))
        if key in seen:
            break
        seen.add(key)
        log.debug("improvement stalled without certificate; jumping to best response")
        pi = {s: pi_br[s] for s, _ in mins}
    log.info("strategy improvement did not certify; falling back to enumeration")
    return _enumerate(game, budget)


def _enumerate(game, budget):
    mins = _min_choices(game)
    count = 1
    for _, succ in mins:
        count *= len(succ)
        if count > budget:
            raise BudgetExceeded(f"{count}+ Minimizer strategies exceed budget {budget}")
    best = None
    candidates = []
    for combo in itertools.product(*(succ for _, succ in mins)):
        pi = {s: t for (s, _), t in zip(mins, combo)}
        vals, _ = best_response_parity(game, pi, Owner.MIN)
        candidates.append((pi, vals))
        if best is None:
            best = dict(vals)
        else:
            for s, v in vals.items():
                if v < best[s]:
                    best[s] = v
    for pi, vals in candidates:
        if vals == best:
            upper, sigma, lower, _ = _certify(game, pi)
            if lower != upper:
                raise InvariantViolation("enumerated optimum failed its certificate")
            return ParitySolution(upper, sigma, pi, (upper, lower), ENUMERATE)
    raise InvariantViolation("no uniformly optimal Minimizer strategy among MD strategies")


def parity_values_by_enumeration(game, budget=DEFAULT_BUDGET):
    return _enumerate(game, budget).values


def complement_check(game, solution):
    """Values of the dual game with shifted colors, for the duality identity."""
    other = solve_parity_game(shift_colors(dual(game)))
    return {s: solution.values[s] + other.values[s] for s in range(game.n)}, Fraction(1)
