"""Command-line front end.

Subcommands: ``solve`` (one draw, fixed target or max-min), ``asymptotic``
(closed-form curves), ``montecarlo`` (sweep from a JSON spec), ``optimal-beta``
and ``compare`` (sweep merged with closed-form overlay columns).

Exit codes: 0 success, 2 configuration error, 3 infeasible single solve,
4 internal numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import asymptotic
from .baselines import Baseline
from .channel import SystemConfig, sample_channels
from .downlink import duality_gap, max_min_sinr, solve_at_gamma
from .dual_uplink import Scheme, SolverSettings
from .exceptions import CellbeamError, InfeasibleError
from .experiments import (CSV_HEADER, ExperimentSpec, run_experiment, summarize,
                          write_csv)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_solve(args) -> int:
    config = SystemConfig.from_file(args.config)
    channels = sample_channels(config, args.stream)
    settings = SolverSettings()
    if args.maxmin:
        result = max_min_sinr(args.scheme, channels, config, settings)
        payload = result.to_dict()
        payload["scheme"] = args.scheme
        if result.solution is None:
            _emit(json.dumps(payload, indent=2) + "\n", args.out)
            return EXIT_INFEASIBLE
    else:
        dual, primal = solve_at_gamma(args.scheme, channels, config, args.gamma, settings)
        payload = {
            "scheme": args.scheme,
            "gamma": args.gamma,
            "dual": dual.to_dict(),
            "solution": primal.to_dict(),
            "duality_gap": duality_gap(dual, primal, channels, config),
            "budget_satisfied": bool(np.max(primal.per_bs_power) <= config.power * (1 + 1e-9)),
        }
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


def _sweep_values(sweep_arg):
    axes = {"beta", "epsilon", "snr_db"}
    name, lo, hi, step = sweep_arg.split(":")
    name = name.replace("-", "_")
    if name not in axes:
        raise ValueError(f"sweep axis must be one of {sorted(axes)}")
    lo, hi, step = float(lo), float(hi), float(step)
    if step <= 0 or hi < lo:
        raise ValueError("sweep needs lo <= hi and step > 0")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return name, [lo + i * step for i in range(count)]


def _cmd_asymptotic(args) -> int:
    points = {"beta": [args.beta], "epsilon": [args.epsilon], "snr_db": [args.snr_db]}
    if args.sweep:
        axis, values = _sweep_values(args.sweep)
        points[axis] = values
    lines = [CSV_HEADER]
    for beta in points["beta"]:
        for epsilon in points["epsilon"]:
            for snr_db in points["snr_db"]:
                snr = 10.0 ** (snr_db / 10.0)
                if args.scheme == "td":
                    gamma = asymptotic.td_gamma_star(beta, snr)
                    rate = asymptotic.td_rate(beta, snr)
                    per_bs = 2.0 * snr
                    feasible = True
                else:
                    point = asymptotic.operating_point(args.scheme, beta, epsilon, snr)
                    gamma, feasible = point.gamma_star, point.feasible
                    rate = beta * math.log1p(gamma) if feasible else 0.0
                    per_bs = point.big_p_bar if feasible else 0.0
                lines.append(",".join([
                    args.scheme, repr(float(beta)), repr(float(epsilon)),
                    repr(float(snr_db)), "0", repr(float(gamma)), repr(float(rate)),
                    repr(float(rate / math.log(2.0))), repr(float(per_bs)),
                    repr(float(per_bs)), "true" if feasible else "false", "0.0"]))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _cmd_montecarlo(args) -> int:
    spec = ExperimentSpec.from_file(args.spec)
    out_path = args.out or spec.output_path
    if not out_path:
        raise ValueError("an output path is required (spec output_path or --out)")
    rows = run_experiment(spec)
    write_csv(rows, out_path)
    summary = {
        "mode": str(spec.mode),
        "n_rows": len(rows),
        "csv": out_path,
        "points": summarize(rows),
    }
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def _cmd_optimal_beta(args) -> int:
    snr = 10.0 ** (args.snr_db / 10.0)
    result = asymptotic.optimal_beta(args.scheme, snr, args.epsilon)
    payload = result.to_dict()
    payload.update({"scheme": args.scheme, "epsilon": args.epsilon, "snr_db": args.snr_db})
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


def _overlay(row):
    """Closed-form overlay for one finite-system row; blank for pure ZF."""
    snr = 10.0 ** (row.snr_db / 10.0)
    if row.scheme in {s.value for s in Scheme}:
        gamma = asymptotic.gamma_star(row.scheme, row.beta, row.epsilon, snr)
        feasible = True
    elif row.scheme == Baseline.TD_SCP.value:
        gamma = asymptotic.td_gamma_star(row.beta, snr)
        feasible = True
    else:
        return ",,,"
    rate = row.beta * math.log1p(gamma)
    return ",".join([repr(float(gamma)), repr(float(rate)),
                     repr(float(rate / math.log(2.0))), "true" if feasible else "false"])


def _cmd_compare(args) -> int:
    spec = ExperimentSpec.from_file(args.spec)
    rows = run_experiment(spec)
    lines = [CSV_HEADER + ",lsa_gamma,lsa_rate_nats,lsa_rate_bits,lsa_feasible"]
    for row in rows:
        lines.append(row.csv_line() + "," + _overlay(row))
    _emit("\n".join(lines) + "\n", args.out or spec.output_path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cellbeam",
                                     description="two-cell max-min SINR beamforming toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve one channel draw")
    solve.add_argument("--config", required=True, help="scenario file (JSON or key=value)")
    solve.add_argument("--scheme", required=True, choices=[s.value for s in Scheme])
    group = solve.add_mutually_exclusive_group(required=True)
    group.add_argument("--gamma", type=float, help="fixed SINR target")
    group.add_argument("--maxmin", action="store_true", help="bisect to the max-min SINR")
    solve.add_argument("--stream", type=int, default=0, help="draw stream id")
    solve.add_argument("--out", help="write JSON here instead of stdout")
    solve.set_defaults(func=_cmd_solve)

    asym = sub.add_parser("asymptotic", help="closed-form large-system curves")
    asym.add_argument("--scheme", required=True,
                      choices=[s.value for s in Scheme] + ["td"])
    asym.add_argument("--beta", type=float, required=True)
    asym.add_argument("--epsilon", type=float, required=True)
    asym.add_argument("--snr-db", type=float, required=True)
    asym.add_argument("--sweep", help="axis:lo:hi:step, axis in beta|epsilon|snr_db")
    asym.add_argument("--out")
    asym.set_defaults(func=_cmd_asymptotic)

    mc = sub.add_parser("montecarlo", help="run a sweep from a JSON spec")
    mc.add_argument("--spec", required=True)
    mc.add_argument("--out", help="override the spec's CSV output path")
    mc.set_defaults(func=_cmd_montecarlo)

    ob = sub.add_parser("optimal-beta", help="rate-maximizing cell loading")
    ob.add_argument("--scheme", required=True, choices=[s.value for s in Scheme])
    ob.add_argument("--epsilon", type=float, required=True)
    ob.add_argument("--snr-db", type=float, required=True)
    ob.add_argument("--out")
    ob.set_defaults(func=_cmd_optimal_beta)

    cmp_ = sub.add_parser("compare", help="sweep with closed-form overlay columns")
    cmp_.add_argument("--spec", required=True)
    cmp_.add_argument("--out")
    cmp_.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except InfeasibleError as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG
    except (CellbeamError, np.linalg.LinAlgError, ArithmeticError) as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
