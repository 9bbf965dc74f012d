"""Command-line interface.

Exit status: 0 success, 1 input error, 2 budget or limit exceeded,
3 internal invariant violated.  Errors are printed to stderr as one JSON
object.  ``ENPAR_LOG`` sets the log level (default WARNING).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from enpar import io
from enpar.bound import compute_N_game, n_from_constants
from enpar.errors import EnparError, InputError
from enpar.evaluate import DEFAULT_CAP_LIMIT, evaluate_pair
from enpar.gain import DEFAULT_BUDGET as GAIN_BUDGET
from enpar.gain import ssg_gain_value
from enpar.game import Configuration, Owner, dual, shift_colors
from enpar.objectives import simulate
from enpar.parity import DEFAULT_BUDGET, ENUMERATE, IMPROVE, solve_parity_game
from enpar.pipeline import analyse, approximate
from enpar.rational import format_rational, parse_rational
from enpar.strategy import memoryless
from enpar.unfold import build_G_prime, build_unfolding

log = logging.getLogger("enpar")


@dataclass(frozen=True)
class RunConfig:
    epsilon: Fraction = Fraction(1, 8)
    state: int = 0
    energy: int = 1
    solver_mode: str = IMPROVE
    budget: int = DEFAULT_BUDGET
    cap_limit: int = DEFAULT_CAP_LIMIT
    horizon: int = 1000
    seed: int = 0
    output: str = "json"
    dump_analysis: bool = False

    def __post_init__(self):
        if self.epsilon <= 0:
            raise InputError("epsilon must be positive")
        if min(self.budget, self.cap_limit, self.horizon) <= 0:
            raise InputError("budgets must be positive")
        if self.energy < 0:
            raise InputError("energy must be non-negative")
        if self.seed < 0 or self.seed >= 1 << 64:
            raise InputError("seed must fit in 64 bits")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"usage: {message}")


def _rational(text):
    return parse_rational(text)


def _config(args):
    return RunConfig(
        epsilon=args.epsilon,
        state=args.state,
        energy=args.energy,
        solver_mode=args.mode,
        budget=args.budget,
        output=args.output,
        dump_analysis=args.dump_analysis,
    )


def _emit(args, obj, csv_values=None):
    if args.output == "csv" and csv_values is not None:
        text = io.values_to_csv(csv_values)
    else:
        text = io.dumps(obj)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args):
    return io.load_game(args.game)


def _check_state(game, s):
    if not (0 <= s < game.n):
        raise InputError(f"state {s} outside 0..{game.n - 1}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args):
    game = _load(args)
    _emit(args, {"ok": True, "states": game.n, "edges": len(game.edges),
                 "max_reward": game.max_reward})


def _md_json(choice):
    return [[s, t] for s, t in sorted(choice.items())]


def cmd_solve_parity(args):
    game = _load(args)
    sol = solve_parity_game(game, args.mode, args.budget)
    out = io.values_to_json(sol.values)
    out["mode"] = sol.mode
    out["sigma"] = _md_json({s: sol.sigma[s] for s in game.states_of(Owner.MAX)})
    out["pi"] = _md_json(sol.pi)
    _emit(args, out, sol.values)


def cmd_gain(args):
    game = _load(args)
    sol = ssg_gain_value(game, args.budget, synthesize=args.strategies)
    out = io.values_to_json(sol.values)
    out["pi_star"] = _md_json(sol.pi_star)
    if args.strategies:
        out["sigma_star"] = {str(s): io.strategy_to_json(st) for s, st in sorted(sol.sigma_star.items())}
    _emit(args, out, sol.values)


def cmd_bound_n(args):
    game = _load(args)
    sol = ssg_gain_value(game, args.budget)
    report = compute_N_game(game, sol, args.epsilon)
    out = report.to_json()
    if args.c is not None:
        out["closed_form"] = {"c": format_rational(args.c), "h": args.h,
                              "N": n_from_constants(args.c, args.h, args.epsilon)}
    _emit(args, out)


def cmd_unfold(args):
    game = _load(args)
    if args.jumps:
        with open(args.jumps) as fh:
            table = io.jumps_from_json(io.loads_json(fh.read(), args.jumps))
        unf = build_unfolding(game, args.N, table)
    else:
        unf = build_G_prime(game, args.N, ssg_gain_value(game, args.budget, synthesize=False))
    out = io.game_to_json(unf.product)
    if args.with_index:
        out["index"] = [list(n) if isinstance(n, tuple) else n for n in unf.nodes]
    _emit(args, out)


def cmd_approx(args):
    game = _load(args)
    cfg = _config(args)
    _check_state(game, cfg.state)
    a = analyse(game, cfg.epsilon, cfg.solver_mode, cfg.budget)
    res = approximate(game, Configuration(cfg.state, cfg.energy), cfg.epsilon,
                      verify=not args.no_verify, tol=args.tol, analysis=a)
    out = {"state": cfg.state, "energy": cfg.energy}
    out.update(io.approx_to_json(res, include_strategies=not args.no_strategies))
    if cfg.dump_analysis:
        out["analysis"] = {
            "gain": io.values_to_json(a.gain.values)["values"],
            "pi_star": _md_json(a.gain.pi_star),
            "bound": a.bound.to_json(),
            "gprime_states": a.gprime.product.n,
        }
    _emit(args, out)


def _strategies(args, game):
    sigma = io.load_strategy(args.sigma, game)
    pi = io.load_strategy(args.pi, game) if args.pi else memoryless(
        game, {s: game.successors(s)[0] for s in game.states_of(Owner.MIN)}, Owner.MIN)
    return sigma, pi


def cmd_evaluate(args):
    game = _load(args)
    _check_state(game, args.state)
    sigma, pi = _strategies(args, game)
    iv = evaluate_pair(game, sigma, pi, Configuration(args.state, args.energy), args.tol,
                       cap_limit=args.cap_limit)
    _emit(args, iv.to_json())


def cmd_simulate(args):
    game = _load(args)
    _check_state(game, args.state)
    sigma, pi = _strategies(args, game)
    cfg = Configuration(args.state, args.energy)
    runs = simulate(game, sigma, pi, cfg, args.horizon, args.runs, args.seed)
    if args.plays:
        for r in runs:
            sys.stdout.write(json.dumps(r, sort_keys=True) + "\n")
    n = len(runs)
    out = {
        "runs": n,
        "seed": args.seed,
        "horizon": args.horizon,
        "float_estimates": {
            "terminated": sum(r["terminated"] for r in runs) / n,
            "even_window": sum(r["window_min_color"] % 2 == 0 for r in runs) / n,
            "energy_parity": sum((not r["terminated"]) and r["window_min_color"] % 2 == 0 for r in runs) / n,
        },
    }
    _emit(args, out)


def _selftest_one(item):
    """Oracle comparisons for one instance; returns a JSON-able record."""
    from enpar.oracle import energy_parity_sandwich

    name, game, eps = item
    tol = Fraction(1, 1024)
    rec = {"name": name, "checks": 0, "failures": []}

    def check(ok, what):
        rec["checks"] += 1
        if not ok:
            rec["failures"].append(what)

    imp = solve_parity_game(game, IMPROVE)
    enu = solve_parity_game(game, ENUMERATE)
    check(imp.values == enu.values, "improve != enumerate")
    other = solve_parity_game(shift_colors(dual(game)))
    check(all(imp.values[s] + other.values[s] == 1 for s in range(game.n)), "duality")
    a = analyse(game, eps)
    top = max(a.bound.N, 4)
    sw = energy_parity_sandwich(game, range(top + 1))
    rec["N"] = a.bound.N
    if any(sw.gap(k) > tol for k in sw.lo):
        rec["excluded"] = True
        return rec
    for s in range(game.n):
        for i in range(5):
            v = approximate(game, Configuration(s, i), eps, verify=False, analysis=a).v_prime
            check(sw.hi[(s, i)] - tol <= v <= sw.lo[(s, i)] + eps + tol, f"approx at ({s},{i})")
            check(a.gain.values[s] >= sw.lo[(s, i)], f"gain below energy-parity at ({s},{i})")
        check(a.gain.values[s] - sw.lo[(s, a.bound.N)] <= eps + tol, f"cutoff gap at {s}")
    return rec


def cmd_selftest(args):
    from enpar.corpus import bundled_games, random_corpus, write_random_corpus

    if args.regen:
        paths = write_random_corpus(args.regen_dir)
        log.info("wrote %d random instances", len(paths))
    eps = args.epsilon or Fraction(1, 4)
    items = [(n, g, eps) for n, g in bundled_games()]
    if args.random:
        items += [(n, g, eps) for n, g in random_corpus(args.random)]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            records = list(pool.map(_selftest_one, items))
    else:
        records = [_selftest_one(it) for it in items]
    failed = [r for r in records if r["failures"]]
    out = {
        "instances": len(records),
        "excluded": sum(1 for r in records if r.get("excluded")),
        "checks": sum(r["checks"] for r in records),
        "failed": len(failed),
        "records": records,
    }
    _emit(args, out)
    return 0 if not failed else 3


# ---------------------------------------------------------------------------


def build_parser():
    def common(default):
        c = _Parser(add_help=False)
        c.add_argument("--output", choices=["json", "csv"], default=default("json"))
        c.add_argument("--out", default=default(None), help="write the result to this file instead of stdout")
        c.add_argument("--jobs", type=int, default=default(1), help="worker processes for batch work")
        c.add_argument("--log-level", default=default(None), help="overrides ENPAR_LOG")
        return c

    p = _Parser(prog="enpar", description="Energy-parity objectives in stochastic games.",
                parents=[common(lambda v: v)])
    # options may also follow the subcommand; there they only override when given
    shared = common(lambda v: argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def game_cmd(name, fn, help_):
        sp = sub.add_parser(name, help=help_, parents=[shared])
        sp.add_argument("--game", required=True)
        sp.set_defaults(func=fn)
        return sp

    game_cmd("validate", cmd_validate, "check a game file")

    sp = game_cmd("solve-parity", cmd_solve_parity, "exact parity values with MD strategies")
    sp.add_argument("--mode", choices=[IMPROVE, ENUMERATE], default=IMPROVE)
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)

    sp = game_cmd("gain", cmd_gain, "Gain values and optimal strategies")
    sp.add_argument("--budget", type=int, default=GAIN_BUDGET)
    sp.add_argument("--strategies", action="store_true", help="include verified Maximizer transducers")

    sp = game_cmd("bound-n", cmd_bound_n, "certified cutoff N for a given epsilon")
    sp.add_argument("--epsilon", type=_rational, required=True)
    sp.add_argument("--budget", type=int, default=GAIN_BUDGET)
    sp.add_argument("--c", type=_rational, default=None, help="closed-form constant c in (0,1)")
    sp.add_argument("--h", type=int, default=0)

    sp = game_cmd("unfold", cmd_unfold, "finite parity game with jump gadgets")
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--jumps", help="JSON list [[state, level, prob], ...]; default: Gain values")
    sp.add_argument("--budget", type=int, default=GAIN_BUDGET)
    sp.add_argument("--with-index", action="store_true")

    sp = game_cmd("approx", cmd_approx, "approximate value and epsilon-optimal strategies")
    sp.add_argument("--state", type=int, required=True)
    sp.add_argument("--energy", type=int, required=True)
    sp.add_argument("--epsilon", type=_rational, required=True)
    sp.add_argument("--mode", choices=[IMPROVE, ENUMERATE], default=IMPROVE)
    sp.add_argument("--budget", type=int, default=GAIN_BUDGET)
    sp.add_argument("--tol", type=_rational, default=None)
    sp.add_argument("--no-verify", action="store_true")
    sp.add_argument("--no-strategies", action="store_true")
    sp.add_argument("--dump-analysis", action="store_true")

    for name, fn, help_ in (("evaluate", cmd_evaluate, "interval value of a strategy pair"),
                            ("simulate", cmd_simulate, "Monte-Carlo plays of a strategy pair")):
        sp = game_cmd(name, fn, help_)
        sp.add_argument("--sigma", required=True)
        sp.add_argument("--pi")
        sp.add_argument("--state", type=int, required=True)
        sp.add_argument("--energy", type=int, required=True)
        if name == "evaluate":
            sp.add_argument("--tol", type=_rational, default=Fraction(1, 256))
            sp.add_argument("--cap-limit", type=int, default=DEFAULT_CAP_LIMIT)
        else:
            sp.add_argument("--horizon", type=int, default=1000)
            sp.add_argument("--runs", type=int, default=100)
            sp.add_argument("--seed", type=int, default=0)
            sp.add_argument("--plays", action="store_true", help="also print one JSON line per run")

    sp = sub.add_parser("selftest", help="compare solvers against brute-force oracles", parents=[shared])
    sp.add_argument("--regen", action="store_true", help="rewrite the bundled random instances")
    sp.add_argument("--regen-dir", default=None)
    sp.add_argument("--random", type=int, default=0, help="also check this many random instances")
    sp.add_argument("--epsilon", type=_rational, default=None)
    sp.set_defaults(func=cmd_selftest)
    return p


def _setup_logging(level):
    level = (level or os.environ.get("ENPAR_LOG") or "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        _setup_logging(args.log_level)
        if args.jobs < 1:
            raise InputError("--jobs must be at least 1")
        status = args.func(args)
        return status or 0
    except EnparError as exc:
        sys.stderr.write(json.dumps(exc.to_json(), sort_keys=True) + "\n")
        return exc.exit_status
    except (OSError, ValueError) as exc:
        err = InputError(str(exc))
        sys.stderr.write(json.dumps(err.to_json(), sort_keys=True) + "\n")
        return err.exit_status


if __name__ == "__main__":
    sys.exit(main())
