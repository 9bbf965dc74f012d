"""Seeded random games and the bundled hand-written instances."""

import random
from fractions import Fraction
from importlib import resources
from pathlib import Path

from enpar.game import Edge, GameGraph, Owner, validate


def _distribution(rng, k, denom):
    """Random positive distribution over ``k`` outcomes with denominator ``denom``."""
    if k > denom:
        denom = k
    cuts = sorted(rng.sample(range(1, denom), k - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [denom])]
    return [Fraction(p, denom) for p in parts]


def random_game(seed, n_states=5, max_color=2, rewards=(-1, 0, 1), denom=4,
                owners=(Owner.MAX, Owner.MIN, Owner.RAND), max_out=2):
    """A random validated game with ``n_states`` states and out-degree 1..max_out."""
    rng = random.Random(seed)
    owner = [rng.choice(owners) for _ in range(n_states)]
    color = [rng.randint(0, max_color) for _ in range(n_states)]
    edges = []
    for s in range(n_states):
        k = rng.randint(1, max_out)
        if owner[s] is Owner.RAND and k > denom:
            k = denom
        succ = rng.sample(range(n_states), k)
        probs = _distribution(rng, k, rng.choice([d for d in range(1, denom + 1) if d >= k]))
        for j, t in enumerate(sorted(succ)):
            p = probs[j] if owner[s] is Owner.RAND else None
            edges.append(Edge(s, t, rng.choice(rewards), p))
    g = GameGraph(tuple(owner), tuple(color), tuple(edges))
    validate(g)
    return g


def random_mdp(seed, n_states=4, **kw):
    return random_game(seed, n_states, owners=(Owner.MAX, Owner.RAND), **kw)


RANDOM_COUNT = 100


def _data_dir():
    return resources.files("enpar") / "data"


def bundled_games():
    """Hand-written instances as ``(name, game)`` pairs, sorted by name."""
    from enpar.io import game_from_json, loads_json

    games = []
    for entry in sorted(_data_dir().joinpath("games").iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            games.append((entry.name[:-5], game_from_json(loads_json(entry.read_text(), entry.name))))
    return games


def random_corpus(count=RANDOM_COUNT):
    """The seeded random instances, regenerated in memory."""
    return [(f"seed_{seed:03d}", random_game(seed)) for seed in range(count)]


def write_random_corpus(directory=None, count=RANDOM_COUNT):
    """Write the seeded instances as JSON files; returns the paths written."""
    from enpar.io import dumps, game_to_json

    directory = Path(directory) if directory is not None else Path(str(_data_dir().joinpath("random")))
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, game in random_corpus(count):
        path = directory / f"{name}.json"
        path.write_text(dumps(game_to_json(game)))
        paths.append(path)
    return paths


def stored_random_corpus():
    """The random instances as shipped on disk."""
    from enpar.io import game_from_json, loads_json

    folder = _data_dir().joinpath("random")
    return [(p.name[:-5], game_from_json(loads_json(p.read_text(), p.name)))
            for p in sorted(folder.iterdir(), key=lambda p: p.name) if p.name.endswith(".json")]
