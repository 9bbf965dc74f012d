"""JSON and CSV formats for games, strategies, values and reports.

Rationals are always strings: ``"p/q"`` in lowest terms on output, ``"p/q"``
or decimal strings on input.  Output keys and lists are in a fixed order so
files diff cleanly and identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import io as _io
import json
from fractions import Fraction
from pathlib import Path

from enpar.errors import SchemaError
from enpar.game import DEFAULT_MAX_COLOR, Owner, make_game, validate
from enpar.rational import format_rational, parse_rational
from enpar.strategy import StrategyFD


def _require(obj, key, where):
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object")
    if key not in obj:
        raise SchemaError(f"{where}: missing field {key!r}")
    return obj[key]


def _int(value, where):
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{where}: expected an integer, got {value!r}")
    return value


def loads_json(text, source="<input>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


# ---------------------------------------------------------------------------
# games


def game_from_json(obj, validate_game=True):
    states = _require(obj, "states", "game")
    edges = _require(obj, "edges", "game")
    if not isinstance(states, list) or not isinstance(edges, list):
        raise SchemaError("game: 'states' and 'edges' must be lists")
    max_color = _int(obj.get("max_color", DEFAULT_MAX_COLOR), "game.max_color")
    owners, colors = [None] * len(states), [None] * len(states)
    for k, st in enumerate(states):
        where = f"states[{k}]"
        sid = _int(_require(st, "id", where), f"{where}.id")
        if not (0 <= sid < len(states)) or owners[sid] is not None:
            raise SchemaError(f"{where}.id: ids must be dense and unique, got {sid}")
        owner = _require(st, "owner", where)
        try:
            owners[sid] = Owner(owner)
        except ValueError:
            raise SchemaError(f"{where}.owner: expected max, min or rand, got {owner!r}") from None
        colors[sid] = _int(_require(st, "color", where), f"{where}.color")
    triples = []
    for k, e in enumerate(edges):
        where = f"edges[{k}]"
        src = _int(_require(e, "from", where), f"{where}.from")
        dst = _int(_require(e, "to", where), f"{where}.to")
        reward = _int(e.get("reward", 0), f"{where}.reward")
        if "prob" in e:
            try:
                prob = parse_rational(e["prob"])
            except SchemaError as exc:
                raise SchemaError(f"{where}.prob: {exc}") from None
            triples.append((src, dst, reward, prob))
        else:
            triples.append((src, dst, reward))
    game = make_game(owners, colors, triples, max_color)
    if validate_game:
        validate(game)
    return game


def game_to_json(game):
    out = {
        "states": [{"id": s, "owner": game.owner[s].value, "color": game.color[s]} for s in range(game.n)],
        "edges": [],
    }
    for e in game.edges:
        rec = {"from": e.src, "to": e.dst, "reward": e.reward}
        if e.prob is not None:
            rec["prob"] = format_rational(e.prob)
        out["edges"].append(rec)
    if game.max_color != DEFAULT_MAX_COLOR:
        out["max_color"] = game.max_color
    return out


def load_game(path, validate_game=True):
    path = Path(path)
    return game_from_json(loads_json(path.read_text(), str(path)), validate_game)


def save_game(game, path):
    Path(path).write_text(dumps(game_to_json(game)))


# ---------------------------------------------------------------------------
# strategies


def strategy_to_json(strat):
    out = {
        "owner": strat.owner.value,
        "modes": strat.modes,
        "m0": strat.m0,
        "update": [[m, i, m2] for (m, i), m2 in sorted(strat.update.items())],
        "nxt": [[m, s, t] for (m, s), t in sorted(strat.nxt.items())],
    }
    if strat.labels:
        out["labels"] = list(strat.labels)
    return out


def strategy_from_json(obj, game=None):
    where = "strategy"
    try:
        owner = Owner(_require(obj, "owner", where))
    except ValueError:
        raise SchemaError(f"{where}.owner: expected max or min") from None
    modes = _int(_require(obj, "modes", where), f"{where}.modes")
    m0 = _int(_require(obj, "m0", where), f"{where}.m0")
    update, nxt = {}, {}
    for k, row in enumerate(_require(obj, "update", where)):
        if not (isinstance(row, list) and len(row) == 3):
            raise SchemaError(f"{where}.update[{k}]: expected [mode, edge, mode]")
        m, i, m2 = (_int(v, f"{where}.update[{k}]") for v in row)
        update[(m, i)] = m2
    for k, row in enumerate(_require(obj, "nxt", where)):
        if not (isinstance(row, list) and len(row) == 3):
            raise SchemaError(f"{where}.nxt[{k}]: expected [mode, state, successor]")
        m, s, t = (_int(v, f"{where}.nxt[{k}]") for v in row)
        nxt[(m, s)] = t
    strat = StrategyFD(owner, modes, m0, update, nxt, tuple(obj.get("labels", ())))
    if game is not None:
        try:
            strat.check(game)
        except ValueError as exc:
            raise SchemaError(f"{where}: {exc}") from None
    return strat


def load_strategy(path, game=None):
    path = Path(path)
    return strategy_from_json(loads_json(path.read_text(), str(path)), game)


def save_strategy(strat, path):
    Path(path).write_text(dumps(strategy_to_json(strat)))


# ---------------------------------------------------------------------------
# values and reports


def values_to_json(values):
    return {"values": {str(s): format_rational(values[s]) for s in sorted(values)}}


def values_to_csv(values):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["state", "value"])
    for s in sorted(values):
        w.writerow([s, format_rational(values[s])])
    return buf.getvalue()


def values_from_csv(text):
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows or rows[0] != ["state", "value"]:
        raise SchemaError("values CSV: expected header 'state,value'")
    return {int(s): parse_rational(v) for s, v in rows[1:]}


def save_values(values, path, fmt="json"):
    text = values_to_csv(values) if fmt == "csv" else dumps(values_to_json(values))
    Path(path).write_text(text)


def jumps_from_json(obj):
    """Jump table ``[[state, level, "p/q"], ...]``."""
    table = {}
    for k, row in enumerate(obj):
        if not (isinstance(row, list) and len(row) == 3):
            raise SchemaError(f"jumps[{k}]: expected [state, level, prob]")
        table[(_int(row[0], f"jumps[{k}]"), _int(row[1], f"jumps[{k}]"))] = parse_rational(row[2])
    return table


def approx_to_json(result, include_strategies=True):
    out = {
        "v_prime": format_rational(result.v_prime),
        "epsilon": format_rational(result.epsilon),
        "N": result.N,
        "branch": result.branch,
    }
    if result.verification:
        vs, vp = result.verification
        out["verification"] = {"sigma": vs.to_json(), "pi": vp.to_json(),
                               "sigma_ok": result.details.get("sigma_ok"),
                               "pi_ok": result.details.get("pi_ok")}
    if include_strategies:
        out["strategies"] = {"sigma": strategy_to_json(result.sigma_eps),
                             "pi": strategy_to_json(result.pi_eps)}
    return out


def save_report(obj, path):
    Path(path).write_text(dumps(obj))


def fraction_or_none(v):
    return None if v is None else format_rational(Fraction(v))
