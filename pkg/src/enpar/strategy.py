"""Finite-memory deterministic strategies and the products they induce."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

from enpar.errors import EnergyTrackOverflow
from enpar.game import Owner, explore

ONE = Fraction(1)


@dataclass(frozen=True)
class StrategyFD:
    """A deterministic transducer ``(modes, m0, update, nxt)`` for one player.

    ``update[(mode, edge_index)]`` is the next mode after the play takes
    that edge (missing entries keep the mode); ``nxt[(mode, state)]`` is the
    successor chosen at an owned state.
    """

    owner: Owner
    modes: int
    m0: int
    update: dict = field(compare=True)
    nxt: dict = field(compare=True)
    labels: tuple = field(default=(), compare=False)

    def move(self, mode, state):
        return self.nxt[(mode, state)]

    def step(self, mode, edge_index):
        return self.update.get((mode, edge_index), mode)

    def starting_at(self, mode):
        return replace(self, m0=mode)

    def check(self, game):
        """Raise ValueError unless every choice is a legal edge of ``game``."""
        for (m, s), t in self.nxt.items():
            if not (0 <= m < self.modes):
                raise ValueError(f"mode {m} out of range")
            if (s, t) not in game.edge_index:
                raise ValueError(f"mode {m}: {s}->{t} is not an edge")
        for (m, i), m2 in self.update.items():
            if not (0 <= m2 < self.modes):
                raise ValueError(f"update to mode {m2} out of range")
        if not (0 <= self.m0 < self.modes):
            raise ValueError("initial mode out of range")


def memoryless(game, choice, owner):
    """Wrap an MD strategy ``state -> successor`` as a one-mode transducer."""
    nxt = {(0, s): choice[s] for s in game.states_of(owner) if s in choice}
    return StrategyFD(owner, 1, 0, {}, nxt)


def trivial(game, owner):
    """The MD strategy choosing each owned state's first edge."""
    return memoryless(game, {s: game.edges[game.out[s][0]].dst for s in game.states_of(owner)}, owner)


def fix_strategy(game, strat, starts, modes=None):
    """Product MDP of ``game`` with the FD strategy ``strat`` fixed.

    Nodes are ``(mode, state)``; states of ``strat.owner`` become random
    states with a single successor.  ``starts`` are base states entered in
    ``strat.m0`` (or explicit ``(mode, state)`` pairs via ``modes``).
    """
    who = strat.owner
    initial = modes if modes is not None else [(strat.m0, s) for s in starts]

    def expand(node):
        m, s = node
        if game.owner[s] is who:
            t = strat.move(m, s)
            i = game.edge_index[(s, t)]
            e = game.edges[i]
            return Owner.RAND, game.color[s], [((strat.step(m, i), t), e.reward, ONE)]
        succ = []
        for i in game.out[s]:
            e = game.edges[i]
            succ.append(((strat.step(m, i), e.dst), e.reward, e.prob))
        return game.owner[s], game.color[s], succ

    return explore(initial, expand, game.max_color)


# ---------------------------------------------------------------------------
# assembly of the epsilon-optimal strategies


def _check_initial(N, initial):
    if initial.energy > N:
        raise ValueError("initial energy above N: play the Gain strategy directly")


def _base_move(gprime, choice, s, level):
    """Base successor chosen by a product strategy at ``(s, level)``."""
    node = gprime.nodes[choice[gprime.index[(s, level)]]]
    return node[0]


def assemble_sigma_eps(game, N, gprime, gprime_solution, gain_solution, initial):
    """Maximizer transducer: follow the unfolded-game strategy while the
    tracked energy is below ``N``; on first reaching ``N`` or more at a state
    ``t``, hand over to the Gain strategy for ``t`` for good.

    Modes ``0..N-1`` hold the energy level (0 once credit is exhausted);
    each Gain strategy occupies its own block of modes after them.
    """
    _check_initial(N, initial)
    offsets, labels = {}, [f"e{j}" for j in range(N)]
    for t in range(game.n):
        offsets[t] = len(labels)
        labels += [f"g{t}:{lab}" for lab in _labels(gain_solution.sigma_star[t])]
    nxt, update = {}, {}
    sigma_hat = gprime_solution.sigma

    def switch(t):
        return offsets[t] + gain_solution.sigma_star[t].m0

    for j in range(N):
        for s in game.states_of(Owner.MAX):
            nxt[(j, s)] = _base_move(gprime, sigma_hat, s, j) if j > 0 else game.successors(s)[0]
        for i, e in enumerate(game.edges):
            if j == 0:
                continue
            level = j + e.reward
            if level > N + game.energy_margin:
                raise EnergyTrackOverflow(f"tracked level {level}")
            m2 = switch(e.dst) if level >= N else max(0, level)
            if m2 != j:
                update[(j, i)] = m2
    for t, off in offsets.items():
        sub = gain_solution.sigma_star[t]
        for (m, s), u in sub.nxt.items():
            nxt[(off + m, s)] = u
        for (m, i), m2 in sub.update.items():
            update[(off + m, i)] = off + m2
    m0 = switch(initial.state) if initial.energy >= N else initial.energy
    return StrategyFD(Owner.MAX, len(labels), m0, update, nxt, tuple(labels))


def assemble_pi_eps(game, N, gprime, gprime_solution, gain_solution, initial):
    """Minimizer transducer: the unfolded-game strategy below ``N``, then the
    uniform memoryless Gain strategy once the energy reaches ``N``."""
    _check_initial(N, initial)
    labels = [f"e{j}" for j in range(N)] + ["after"]
    after = N
    nxt, update = {}, {}
    pi_hat = gprime_solution.pi
    for j in range(N):
        for s in game.states_of(Owner.MIN):
            nxt[(j, s)] = _base_move(gprime, pi_hat, s, j) if j > 0 else game.successors(s)[0]
        for i, e in enumerate(game.edges):
            if j == 0:
                continue
            level = j + e.reward
            if level > N + game.energy_margin:
                raise EnergyTrackOverflow(f"tracked level {level}")
            m2 = after if level >= N else max(0, level)
            if m2 != j:
                update[(j, i)] = m2
    for s in game.states_of(Owner.MIN):
        nxt[(after, s)] = gain_solution.pi_star[s]
    m0 = after if initial.energy >= N else initial.energy
    return StrategyFD(Owner.MIN, len(labels), m0, update, nxt, tuple(labels))


def _labels(strat):
    return strat.labels if strat.labels else tuple(str(m) for m in range(strat.modes))
