"""Command-line entry points.

Subcommands: simulate, speed, sweep, bound, cfrac, verify, run. Exit
codes: 0 success, 1 invariant violation, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .cfrac import GOLDEN_MEAN, SQRT2, continued_fraction, rational_approximant
from .config import load_config, model_from_config, parse_rho
from .dynamics import DynamicsMode, IntegratorConfig
from .errors import ConfigurationError, InvariantViolation
from .harness import (STATS_HEADER, bound_report, measure_speed, run_config,
                      simulate_stats, sweep, verify_invariants,
                      write_checkpoint, _atomic_write)
from .potentials import default_model


def _model_from_path(path):
    if path is None:
        return default_model()
    return model_from_config(load_config(path))


def _resolve_spacing(text: str, q_max: int = 233):
    """p/q taken verbatim; symbols and floats get a convergent with q <= q_max."""
    if text in (GOLDEN_MEAN, SQRT2):
        frac = rational_approximant(text, q_max)
        print(f"# spacing {text} represented by the approximant "
              f"{frac.numerator}/{frac.denominator}", file=sys.stderr)
        return frac
    try:
        return parse_rho(text)
    except ConfigurationError:
        try:
            value = float(text)
        except ValueError as exc:
            raise ConfigurationError(f"invalid spacing {text!r}") from exc
        frac = rational_approximant(value, q_max)
        print(f"# spacing {value!r} represented by the approximant "
              f"{frac.numerator}/{frac.denominator}", file=sys.stderr)
        return frac


def _mode(name: str) -> DynamicsMode:
    for mode in DynamicsMode:
        if mode.value == name:
            return mode
    raise ConfigurationError(f"unknown mode {name!r}")


def _add_common(sub):
    sub.add_argument("--model", help="model definition file (default: built-in model)")
    sub.add_argument("--mode", default="pulsating-potential",
                     choices=[m.value for m in DynamicsMode])
    sub.add_argument("--dt-max", type=float, default=0.05)
    sub.add_argument("--safety", type=float, default=1.0)


def _cfg(args) -> IntegratorConfig:
    return IntegratorConfig(dt_max=args.dt_max, safety=args.safety)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fkpulse")
    subs = parser.add_subparsers(dest="command", required=True)

    p_sim = subs.add_parser("simulate", help="relax a cell, emit per-phase statistics CSV")
    _add_common(p_sim)
    p_sim.add_argument("--rho", required=True, help="mean spacing p/q")
    p_sim.add_argument("--periods", type=int, default=50)
    p_sim.add_argument("--csv", help="statistics output path (default: stdout)")
    p_sim.add_argument("--checkpoint", help="write the final state here")

    p_speed = subs.add_parser("speed", help="measure the transport speed of one cell")
    _add_common(p_speed)
    p_speed.add_argument("--rho", required=True)
    p_speed.add_argument("--transient", type=int, default=50)
    p_speed.add_argument("--max-periods", type=int, default=4096)
    p_speed.add_argument("--window", type=int, default=32)
    p_speed.add_argument("--tol", type=float, default=1e-6)

    p_sweep = subs.add_parser("sweep", help="run a (rho, tau) grid from a config file")
    p_sweep.add_argument("config")

    p_bound = subs.add_parser("bound", help="evaluate every bound at one (rho, tau)")
    p_bound.add_argument("--rho", required=True)
    p_bound.add_argument("--tau", type=float, required=True)
    p_bound.add_argument("--model")
    p_bound.add_argument("--grid-n", type=int, default=4096)

    p_cfrac = subs.add_parser("cfrac", help="continued-fraction expansion of a spacing")
    p_cfrac.add_argument("rho", help="p/q, a float, 'golden-mean' or 'sqrt2'")
    p_cfrac.add_argument("--max-terms", type=int, default=64)

    p_verify = subs.add_parser("verify", help="check the dissipative-phase invariants")
    _add_common(p_verify)
    p_verify.add_argument("--rho", required=True)
    p_verify.add_argument("--transient", type=int, default=50)
    p_verify.add_argument("--q-max", type=int, default=233)
    p_verify.add_argument("--json", dest="json_out", help="write the JSON summary here")

    p_run = subs.add_parser("run", help="dispatch the command in a config file")
    p_run.add_argument("config")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "run":
        return run_config(args.config)

    if args.command == "sweep":
        return run_config(args.config)

    if args.command == "cfrac":
        rho = args.rho
        if rho not in (GOLDEN_MEAN, SQRT2):
            try:
                rho = parse_rho(rho)
            except ConfigurationError:
                try:
                    rho = float(args.rho)
                except ValueError as exc:
                    raise ConfigurationError(f"invalid spacing {args.rho!r}") from exc
        seq = continued_fraction(rho, max_terms=args.max_terms)
        print("terms:", " ".join(str(a) for a in seq.terms))
        for p, q in seq.convergents:
            print(f"{p}/{q}")
        return 0

    if args.command == "bound":
        model = _model_from_path(args.model)
        sys.stdout.write(bound_report(model, _resolve_spacing(args.rho), args.tau,
                                      grid_n=args.grid_n))
        return 0

    if args.command == "simulate":
        model = _model_from_path(args.model)
        state, rows = simulate_stats(_resolve_spacing(args.rho), model, args.periods,
                                     _mode(args.mode), _cfg(args))
        text = "\n".join([STATS_HEADER] + rows) + "\n"
        if args.csv:
            _atomic_write(args.csv, text)
        else:
            sys.stdout.write(text)
        if args.checkpoint:
            write_checkpoint(state, model, args.checkpoint)
        return 0

    if args.command == "speed":
        model = _model_from_path(args.model)
        est = measure_speed(_resolve_spacing(args.rho), model, _mode(args.mode), _cfg(args),
                            transient_periods=args.transient,
                            max_periods=args.max_periods,
                            window=args.window, speed_tol=args.tol)
        print(json.dumps({
            "rho": f"{est.rho.numerator}/{est.rho.denominator}",
            "tau": est.tau, "v": est.v, "n_periods": est.n_periods,
            "converged": est.converged, "residual": est.residual,
        }, indent=2))
        return 0

    if args.command == "verify":
        model = _model_from_path(args.model)
        report = verify_invariants(_resolve_spacing(args.rho), model, _cfg(args),
                                   transient_periods=args.transient,
                                   q_max=args.q_max)
        for line in report.summary_lines():
            print(line)
        if args.json_out:
            _atomic_write(args.json_out, json.dumps(report.to_dict(), indent=2) + "\n")
        if not report.passed:
            failed = [c.name for c in report.checks if not c.passed]
            raise InvariantViolation("failed checks: " + ", ".join(failed))
        return 0

    raise ConfigurationError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
