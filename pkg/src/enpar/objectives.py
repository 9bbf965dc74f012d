"""Objectives as data, verdicts on finite play prefixes, and a seeded play sampler.

Energy and termination are decided on prefixes; parity, limit and mean
payoff objectives are tail properties and stay undetermined on any finite
prefix.  The sampler uses numpy's PCG64 and draws successors with exact
integer arithmetic, so a play depends only on its inputs and seed.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

from enpar.game import Owner


class Verdict(str, enum.Enum):
    SATISFIED = "SatisfiedForever"
    VIOLATED = "ViolatedForever"
    UNDETERMINED = "Undetermined"

    def negate(self):
        if self is Verdict.SATISFIED:
            return Verdict.VIOLATED
        if self is Verdict.VIOLATED:
            return Verdict.SATISFIED
        return self


@dataclass(frozen=True)
class EnergyEN:
    k: int


@dataclass(frozen=True)
class EnergyStorage:
    k: int
    l: int | None = None  # None: some storage bound exists


@dataclass(frozen=True)
class Termination:
    k: int


@dataclass(frozen=True)
class EvenParity:
    pass


@dataclass(frozen=True)
class OddParity:
    pass


@dataclass(frozen=True)
class LimInf:
    cmp: str
    bound: Union[Fraction, float]


@dataclass(frozen=True)
class LimSup:
    cmp: str
    bound: Union[Fraction, float]


@dataclass(frozen=True)
class MeanPayoffGt0:
    pass


@dataclass(frozen=True)
class And:
    parts: tuple

    def __post_init__(self):
        if not self.parts:
            raise ValueError("And needs at least one part")


@dataclass(frozen=True)
class Or:
    parts: tuple

    def __post_init__(self):
        if not self.parts:
            raise ValueError("Or needs at least one part")


def Gain():
    return And((LimInf(">", -math.inf), EvenParity()))


def Loss():
    return Or((LimInf("=", -math.inf), OddParity()))


@dataclass
class PlayPrefix:
    states: list
    rewards: list
    initial_energy: int = 0
    summary: dict = field(default_factory=dict)

    def check(self, game):
        if len(self.states) != len(self.rewards) + 1:
            raise ValueError("a prefix has one more state than rewards")
        for a, b, r in zip(self.states, self.states[1:], self.rewards):
            i = game.edge_index.get((a, b))
            if i is None:
                raise ValueError(f"{a}->{b} is not an edge")
            if game.edges[i].reward != r:
                raise ValueError(f"reward of {a}->{b} is {game.edges[i].reward}, not {r}")

    def to_json(self):
        return json.dumps({"states": self.states, "rewards": self.rewards,
                           "initial_energy": self.initial_energy, "summary": self.summary},
                          sort_keys=True)


def _dips_to_zero(k, rewards):
    level = k
    if level <= 0:
        return True
    for r in rewards:
        level += r
        if level <= 0:
            return True
    return False


def _max_infix_drop(rewards):
    peak = level = drop = 0
    for r in rewards:
        level += r
        peak = max(peak, level)
        drop = max(drop, peak - level)
    return drop


def check_prefix(obj, p):
    """Verdict of ``obj`` on prefix ``p`` (which carries the initial credit only for display)."""
    if isinstance(obj, EnergyEN):
        return Verdict.VIOLATED if _dips_to_zero(obj.k, p.rewards) else Verdict.UNDETERMINED
    if isinstance(obj, Termination):
        return Verdict.SATISFIED if _dips_to_zero(obj.k, p.rewards) else Verdict.UNDETERMINED
    if isinstance(obj, EnergyStorage):
        if obj.l is None:
            return check_prefix(EnergyEN(obj.k), p)
        return check_storage_prefix(obj.k, obj.l, p)
    if isinstance(obj, And):
        verdicts = [check_prefix(o, p) for o in obj.parts]
        if Verdict.VIOLATED in verdicts:
            return Verdict.VIOLATED
        if all(v is Verdict.SATISFIED for v in verdicts):
            return Verdict.SATISFIED
        return Verdict.UNDETERMINED
    if isinstance(obj, Or):
        verdicts = [check_prefix(o, p) for o in obj.parts]
        if Verdict.SATISFIED in verdicts:
            return Verdict.SATISFIED
        if all(v is Verdict.VIOLATED for v in verdicts):
            return Verdict.VIOLATED
        return Verdict.UNDETERMINED
    if isinstance(obj, (EvenParity, OddParity, LimInf, LimSup, MeanPayoffGt0)):
        return Verdict.UNDETERMINED
    raise TypeError(f"not an objective: {obj!r}")


def check_storage_prefix(k, l, p):
    if _dips_to_zero(k, p.rewards) or _max_infix_drop(p.rewards) > l:
        return Verdict.VIOLATED
    return Verdict.UNDETERMINED


# ---------------------------------------------------------------------------
# sampling


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def draw_below(rng, n):
    """Uniform integer in ``[0, n)`` by rejection on raw random bytes (exact for any ``n``)."""
    bits = (n - 1).bit_length()
    if bits == 0:
        return 0
    nbytes = (bits + 7) // 8
    mask = (1 << bits) - 1
    while True:
        x = int.from_bytes(rng.bytes(nbytes), "little") & mask
        if x < n:
            return x


def draw_edge(rng, game, s):
    out = game.out[s]
    probs = [game.edges[i].prob for i in out]
    denom = math.lcm(*(p.denominator for p in probs))
    x = draw_below(rng, denom)
    acc = 0
    for i, p in zip(out, probs):
        acc += p.numerator * (denom // p.denominator)
        if x < acc:
            return i
    return out[-1]


def sample_play(game, strat_max, strat_min, cfg, horizon, seed):
    """One play prefix of length ``horizon`` from configuration ``cfg``.

    Termination is recorded as a flag; the play continues to the horizon.
    ``summary['window_min_color']`` is the least color over the second half
    of the prefix, a heuristic stand-in for the parity outcome.
    """
    rng = make_rng(seed)
    s = cfg.state
    modes = {Owner.MAX: strat_max.m0 if strat_max else 0, Owner.MIN: strat_min.m0 if strat_min else 0}
    strats = {Owner.MAX: strat_max, Owner.MIN: strat_min}
    states, rewards = [s], []
    level = cfg.energy
    lo = hi = level
    terminated_at = 0 if level <= 0 else None
    for step in range(horizon):
        owner = game.owner[s]
        if owner is Owner.RAND:
            i = draw_edge(rng, game, s)
        else:
            strat = strats[owner]
            t = strat.move(modes[owner], s) if strat else game.edges[game.out[s][0]].dst
            i = game.edge_index[(s, t)]
        for who, strat in strats.items():
            if strat is not None:
                modes[who] = strat.step(modes[who], i)
        e = game.edges[i]
        level += e.reward
        lo, hi = min(lo, level), max(hi, level)
        if terminated_at is None and level <= 0:
            terminated_at = step + 1
        s = e.dst
        states.append(s)
        rewards.append(e.reward)
    window = states[len(states) // 2:]
    summary = {
        "window_min_color": min(game.color[q] for q in window),
        "energy_min": lo,
        "energy_max": hi,
        "final_energy": level,
        "terminated": terminated_at is not None,
        "terminated_at": terminated_at,
    }
    return PlayPrefix(states, rewards, cfg.energy, summary)


def simulate(game, strat_max, strat_min, cfg, horizon, runs, seed):
    """Summaries of ``runs`` plays with seeds ``seed, seed+1, ...``."""
    return [sample_play(game, strat_max, strat_min, cfg, horizon, seed + r).summary for r in range(runs)]
