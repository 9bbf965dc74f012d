"""End-to-end approximation of energy-parity values with epsilon-optimal strategies."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

from enpar.bound import compute_N_game
from enpar.errors import EnparError
from enpar.evaluate import best_response_energy_parity
from enpar.gain import ssg_gain_value
from enpar.game import Owner, validate
from enpar.parity import IMPROVE, solve_parity_game
from enpar.strategy import assemble_pi_eps, assemble_sigma_eps, memoryless
from enpar.unfold import build_G_prime

log = logging.getLogger(__name__)

ABOVE = "AboveN"
BELOW = "BelowN"


@dataclass
class ApproxResult:
    v_prime: Fraction
    epsilon: Fraction
    N: int
    branch: str
    sigma_eps: object
    pi_eps: object
    verification: tuple = ()
    details: dict = field(default_factory=dict)


@dataclass
class Analysis:
    """Everything that depends on the game and epsilon but not on the configuration."""

    game: object
    epsilon: Fraction
    gain: object
    bound: object
    gprime: object
    gprime_solution: object


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except EnparError as exc:
        exc.stage = name
        raise


def analyse(game, eps, mode=IMPROVE, budget=None):
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    validate(game)
    kw = {} if budget is None else {"budget": budget}
    gain = _stage("gain", ssg_gain_value, game, **kw)
    bound = _stage("bound-n", compute_N_game, game, gain, eps)
    gprime = _stage("unfold", build_G_prime, game, bound.N, gain)
    sol = _stage("solve-parity", solve_parity_game, gprime.product, mode, **kw)
    return Analysis(game, eps, gain, bound, gprime, sol)


def approximate(game, cfg, eps, verify=True, tol=None, analysis=None, mode=IMPROVE):
    """Rational ``v'`` with ``0 <= v' - val(EN(i) and EPAR)(s) <= eps`` plus strategies.

    With ``verify`` the strategies are checked against best responses, each
    bracketed to within ``tol`` (default ``eps / 4``).
    """
    a = analysis if analysis is not None else analyse(game, eps, mode)
    eps = a.epsilon
    N = a.bound.N
    s, i = cfg.state, cfg.energy
    if i > N:
        branch = ABOVE
        v = a.gain.values[s]
        sigma = a.gain.sigma_star[s]
        pi = memoryless(game, a.gain.pi_star, Owner.MIN)
    else:
        branch = BELOW
        v = a.gprime.value_at(a.gprime_solution.values, s, i)
        sigma = _stage("assemble", assemble_sigma_eps, game, N, a.gprime, a.gprime_solution, a.gain, cfg)
        pi = _stage("assemble", assemble_pi_eps, game, N, a.gprime, a.gprime_solution, a.gain, cfg)
    result = ApproxResult(v, eps, N, branch, sigma, pi)
    if verify:
        tol = eps / 4 if tol is None else Fraction(tol)
        vs = _stage("verify", best_response_energy_parity, game, sigma, Owner.MAX, cfg, tol)
        vp = _stage("verify", best_response_energy_parity, game, pi, Owner.MIN, cfg, tol)
        result.verification = (vs, vp)
        result.details["sigma_ok"] = vs.lo >= v - eps - tol
        result.details["pi_ok"] = vp.hi <= v + tol
    return result
