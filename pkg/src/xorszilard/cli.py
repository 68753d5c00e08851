"""Command-line front end.

Subcommands: value, channel, simulate, sweep, cycle, finite-time.
Game specs: ``chsh``, ``chained:N``, or a JSON file path.  Behaviour specs:
``pr``, ``local-opt``, ``quantum-opt``, ``uniform``, a JSON file path,
``noisy:<spec>:<delta>`` (controller-bit noise applied at channel level),
or ``mix:<spec>:<v>`` (visibility mixing with the uniform behaviour; a
distinct operation from channel noise).

Outputs are dimensionless by default (bits, kT); ``--kt`` rescales kT to a
physical energy.  CSV floats carry 9 significant digits with '.' decimals.
Exit codes: 0 ok, 2 parse, 3 validation, 4 budget, 5 regime.
The environment variable XORSZILARD_OUT_DIR sets the default directory for
relative output paths.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import channel as chan
from . import dynamics, engine, games, optimize
from .errors import (BudgetError, ParseError, RegimeError, SimulationError,
                     ValidationError)

DEFAULT_SEED = 1234  # fixed constant, never time-based

EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_BUDGET = 4
EXIT_REGIME = 5


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _out_path(path: str | None) -> str | None:
    if path is None:
        return None
    base = os.environ.get("XORSZILARD_OUT_DIR")
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _emit_json(data: dict, out: str | None):
    text = json.dumps(data, indent=2)
    print(text)
    path = _out_path(out)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _write_csv(rows, header: list[str], path: str | None):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) if isinstance(x, float) else str(x)
                              for x in row))
    text = "\n".join(lines) + "\n"
    resolved = _out_path(path)
    if resolved:
        with open(resolved, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# spec parsing


def parse_game_spec(spec: str) -> games.XorGame:
    if spec == "chsh":
        return games.make_chsh()
    if spec.startswith("chained:"):
        arg = spec.split(":", 1)[1]
        try:
            n = int(arg)
        except ValueError:
            raise ParseError(f"game spec '{spec}': chain length must be an integer")
        return games.make_chained(n)
    if spec.endswith(".json") or os.path.exists(spec):
        return games.load_game(spec)
    raise ParseError(f"unknown game spec '{spec}' (use chsh, chained:N, or a file)")


def _is_structural_chsh(game: games.XorGame) -> bool:
    return (game.nu, game.nv) == (2, 2) \
        and (game.f == [[0, 0], [0, 1]]).all() \
        and np.allclose(game.mu, 0.25, atol=1e-12)


def parse_behaviour_spec(spec: str, game: games.XorGame):
    """Resolve a behaviour spec.  Returns (behaviour, noise_delta, label)."""
    if spec.startswith("noisy:"):
        inner, _, tail = spec[len("noisy:"):].rpartition(":")
        if not inner:
            raise ParseError(f"behaviour spec '{spec}': expected noisy:<spec>:<delta>")
        try:
            delta = float(tail)
        except ValueError:
            raise ParseError(f"behaviour spec '{spec}': delta must be a number")
        b, d0, label = parse_behaviour_spec(inner, game)
        combined = d0 + delta - 2.0 * d0 * delta
        if not 0.0 <= delta <= 0.5:
            raise ValidationError(f"noise delta = {delta!r} outside [0, 1/2]")
        return b, combined, f"noisy:{label}:{delta:g}"
    if spec.startswith("mix:"):
        inner, _, tail = spec[len("mix:"):].rpartition(":")
        if not inner:
            raise ParseError(f"behaviour spec '{spec}': expected mix:<spec>:<v>")
        try:
            vis = float(tail)
        except ValueError:
            raise ParseError(f"behaviour spec '{spec}': visibility must be a number")
        b, d0, label = parse_behaviour_spec(inner, game)
        return games.mix_with_uniform(b, vis), d0, f"mix:{label}:{vis:g}"
    if spec == "pr":
        return games.pr_box(game), 0.0, "pr"
    if spec == "uniform":
        return games.uniform_behaviour(game), 0.0, "uniform"
    if spec == "local-opt":
        _, amap, bmap = optimize.local_value(game)
        return games.deterministic_behaviour(game, amap, bmap), 0.0, "local-opt"
    if spec == "quantum-opt":
        if not _is_structural_chsh(game):
            raise ValidationError(
                "quantum-opt is only defined for the CHSH game; other games "
                "have no canonical optimal behaviour here")
        return games.quantum_optimal_chsh(), 0.0, "quantum-opt"
    if spec.endswith(".json") or os.path.exists(spec):
        return games.load_behaviour(spec), 0.0, spec
    raise ParseError(
        f"unknown behaviour spec '{spec}' (use pr, local-opt, quantum-opt, "
        "uniform, noisy:<spec>:<delta>, mix:<spec>:<v>, or a file)")


# ---------------------------------------------------------------------------
# subcommands


def cmd_value(args) -> int:
    game = parse_game_spec(args.game)
    report = optimize.class_report(game, seed=args.seed, restarts=args.restarts)
    w_l, w_q, w_ns = engine.class_ceilings(report)
    scale = engine.LN2 * args.kt
    data = report.to_json_dict()
    data["seed"] = args.seed
    data["ceilings_bits"] = {"local": w_l, "quantum": w_q, "ns": w_ns}
    data["ceilings_kt"] = {"local": w_l * scale, "quantum": w_q * scale,
                           "ns": w_ns * scale}
    _emit_json(data, args.out)
    return 0


def cmd_channel(args) -> int:
    game = parse_game_spec(args.game)
    behaviour, delta, label = parse_behaviour_spec(args.behaviour, game)
    p = chan.apply_noise(games.game_value(game, behaviour), delta)
    c = chan.orient(p)
    info = chan.mutual_information(c)
    data = {
        "game": game.name,
        "behaviour": label,
        "p": p,
        "oriented_p": c.p,
        "flipped": c.flipped,
        "bias": games.bias(game, behaviour),
        "h_g_given_x_bits": chan.binary_entropy(c.p),
        "mutual_information_bits": info,
        "feedback_work_kt": info * engine.LN2 * args.kt,
        "nonsignalling": bool(optimize.is_nonsignalling(behaviour)),
    }
    if (game.nu, game.nv) == (2, 2):
        data["chsh_S"] = games.chsh_S(behaviour)
    _emit_json(data, args.out)
    return 0


def cmd_simulate(args) -> int:
    game = parse_game_spec(args.game)
    behaviour, delta, label = parse_behaviour_spec(args.behaviour, game)
    result = engine.simulate_rounds(game, behaviour, args.rounds, args.seed,
                                    p_model=args.p_model, noise_delta=delta,
                                    keep_records=args.records is not None)
    if args.records is not None:
        stats, records = result
        chan.rounds_to_csv(records, _out_path(args.records))
    else:
        stats = result
    z = 0.0
    if stats.stderr_kt > 0.0:
        z = (stats.mean_work_kt - stats.analytic_work_kt) / stats.stderr_kt
    data = stats.to_json_dict()
    data["game"] = game.name
    data["behaviour"] = label
    data["noise_delta"] = delta
    data["mean_work_scaled"] = stats.mean_work_kt * args.kt
    data["z_score"] = z
    _emit_json(data, args.out)
    return 0


def cmd_sweep(args) -> int:
    if args.step <= 0.0:
        raise ValidationError(f"sweep step must be positive, got {args.step!r}")
    s_values = []
    s = 0.0
    while s < 4.0 + 1e-12:
        s_values.append(min(s, 4.0))
        s += args.step
    for marker in (2.0, 2.0 * math.sqrt(2.0), 4.0):
        if marker not in s_values:
            s_values.append(marker)
    s_values = sorted(set(s_values))
    rows = [(s, bits, kt * args.kt)
            for s, bits, kt in engine.sweep_s_curve(s_values)]
    _write_csv(rows, ["param", "value_bits", "value_kt"], args.out)
    return 0


def cmd_cycle(args) -> int:
    ledger = engine.cycle_ledger(chan.BinaryChannel(args.p))
    data = ledger.to_json_dict()
    scale = engine.LN2 * args.kt
    data["w_fb_scaled"] = ledger.w_fb_bits * scale
    data["w_reset_scaled"] = ledger.w_reset_bits * scale
    data["w_net_scaled"] = ledger.w_net_bits * scale
    _emit_json(data, args.out)
    return 0


def cmd_finite_time(args) -> int:
    if args.self_test:
        # fit machinery check on synthetic exact c/tau data
        taus = [10.0, 20.0, 40.0, 80.0, 160.0]
        slope, se = dynamics.fit_loglog_slope(taus, [0.7 / t for t in taus])
        _emit_json({"self_test": True, "slope": slope, "slope_stderr": se}, args.out)
        return 0
    taus = [float(t) for t in args.tau_grid.split(",") if t.strip()]
    fit = dynamics.scaling_fit(args.p, taus, args.reps, args.seed,
                               rate=args.rate)
    rows = [(est.tau, est.mean_sigma, est.stderr, est.reps, est.seed)
            for est in fit.estimates]
    _write_csv(rows, ["tau", "sigma_mean", "sigma_stderr", "reps", "seed"],
               args.out)
    band = 1.96 * fit.slope_stderr
    _emit_json({"slope": fit.slope, "slope_stderr": fit.slope_stderr,
                "slope_band": [fit.slope - band, fit.slope + band],
                "seed": args.seed}, None)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xorszilard",
        description="XOR-game values and the Szilard feedback work of the "
                    "side-information channels they induce.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--kt", type=float, default=1.0,
                       help="physical energy per kT (default 1: dimensionless)")
        p.add_argument("--out", default=None, help="also write output to this file")

    p = sub.add_parser("value", help="local/quantum/nonsignalling values and ceilings")
    p.add_argument("--game", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--restarts", type=int, default=optimize.DEFAULT_RESTARTS)
    common(p)
    p.set_defaults(func=cmd_value)

    p = sub.add_parser("channel", help="induced-channel diagnostics for a pair")
    p.add_argument("--game", required=True)
    p.add_argument("--behaviour", required=True)
    common(p)
    p.set_defaults(func=cmd_channel)

    p = sub.add_parser("simulate", help="Monte Carlo feedback rounds")
    p.add_argument("--game", required=True)
    p.add_argument("--behaviour", required=True)
    p.add_argument("--rounds", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--p-model", dest="p_model", type=float, default=None,
                   help="controller channel estimate (default: exact)")
    p.add_argument("--records", default=None,
                   help="write the round transcript CSV to this path")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="CHSH feedback-value curve as CSV")
    p.add_argument("--step", type=float, default=0.01)
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("cycle", help="full-cycle work ledger for a channel")
    p.add_argument("--p", type=float, required=True)
    common(p)
    p.set_defaults(func=cmd_cycle)

    p = sub.add_parser("finite-time", help="dissipation scaling over a tau grid")
    p.add_argument("--p", type=float, default=0.85)
    p.add_argument("--tau-grid", dest="tau_grid", default="10,20,40,80,160")
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--self-test", dest="self_test", action="store_true",
                   help="run the slope fit on synthetic 1/tau data")
    common(p)
    p.set_defaults(func=cmd_finite_time)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error (parse): {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"error (validation): {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except BudgetError as exc:
        print(f"error (budget): {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except RegimeError as exc:
        print(f"error (regime): {exc}", file=sys.stderr)
        return EXIT_REGIME
    except SimulationError as exc:
        print(f"error (simulation): {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
