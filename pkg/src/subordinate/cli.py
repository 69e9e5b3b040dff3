"""Command-line front end: rates, moments, simulate, compose, verify, sir.

All stochastic subcommands require an explicit --seed; there is no wall-clock
default, so a given command line always reproduces the same bytes.  Reals are
printed with 17 significant digits for round-trip fidelity.  Exit codes:
0 success, 1 verification failure, 2 usage or domain errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from .errors import ConfigurationError, DomainError, HorizonError
from .kernels import transition_kernel
from .moments import moments_from_rates
from .montecarlo import (
    estimate_dispersion,
    estimate_interevent,
    estimate_jump_sizes,
    estimate_transition_rates,
)
from .processes import LinearBirth, LinearDeath, NonlinearDeath, Poisson, ProcessSpec, RateTable
from .rng import RngStream
from .sir import SirConfig, simulate_sir, sir_states_csv
from .trajectories import Trajectory, compose, simulate_simple, simulate_time_changed, trajectory_csv
from .transition_rates import rate_function_S, rates_from_kernel

_USAGE_ERRORS = (DomainError, HorizonError, ConfigurationError, ValueError, KeyError, OSError)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _add_spec_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--spec", help="process spec as inline JSON or @path to a JSON file")
    parser.add_argument(
        "--family",
        choices=["poisson", "linear_birth", "linear_death", "nonlinear_death", "general"],
    )
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--d0", type=int)
    parser.add_argument("--table", help="comma-separated per-state rates for --family general")
    parser.add_argument("--initial", type=int, default=0, help="initial count (default 0)")


def _spec_from_args(args: argparse.Namespace) -> ProcessSpec:
    if args.spec:
        text = args.spec
        if text.startswith("@"):
            text = Path(text[1:]).read_text()
        return ProcessSpec.from_json(text)
    if not args.family:
        raise DomainError("provide --spec or --family with its parameters")
    if args.family == "poisson":
        if args.alpha is None:
            raise DomainError("--family poisson requires --alpha")
        rate = Poisson(args.alpha)
    elif args.family == "linear_birth":
        if args.beta is None:
            raise DomainError("--family linear_birth requires --beta")
        rate = LinearBirth(args.beta)
    elif args.family == "linear_death":
        if args.delta is None or args.d0 is None:
            raise DomainError("--family linear_death requires --delta and --d0")
        rate = LinearDeath(args.delta, args.d0)
    elif args.family == "nonlinear_death":
        if args.d0 is None:
            raise DomainError("--family nonlinear_death requires --d0")
        rate = NonlinearDeath(args.d0)
    else:
        if not args.table:
            raise DomainError("--family general requires --table")
        rate = RateTable(tuple(float(v) for v in args.table.split(",")))
    return ProcessSpec(rate, args.initial)


def _write(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_rates(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    kernel = transition_kernel(spec, args.state, args.eps)
    row = rates_from_kernel(kernel)
    ks = sorted(k for k in row.rates if args.kmax is None or k <= args.kmax)
    if args.format == "json":
        payload = row.to_dict()
        if args.kmax is not None:
            payload["rates"] = {str(k): row.rates[k] for k in ks}
        _write(json.dumps(payload) + "\n", args.output)
    else:
        lines = ["s,k,q"]
        lines += [f"{row.state},{k},{_fmt(row.rates[k])}" for k in ks]
        lines += ["s,lambda_S", f"{row.state},{_fmt(row.rate_function)}"]
        _write("\n".join(lines) + "\n", args.output)
    return 0


def _cmd_moments(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    states = [int(v) for v in args.states.split(",")]
    summaries = []
    for s in states:
        kernel = transition_kernel(spec, s, args.eps)
        summaries.append(moments_from_rates(rates_from_kernel(kernel)))
    if args.format == "json":
        payload = [
            {
                "s": m.state,
                "mu": m.inf_mean,
                "sigma2": m.inf_var,
                "D": m.dispersion,
                "err": m.error_bound,
            }
            for m in summaries
        ]
        _write(json.dumps(payload) + "\n", args.output)
    else:
        lines = ["s,mu,sigma2,D,err"]
        for m in summaries:
            disp = _fmt(m.dispersion) if m.dispersion is not None else ""
            lines.append(f"{m.state},{_fmt(m.inf_mean)},{_fmt(m.inf_var)},{disp},{_fmt(m.error_bound)}")
        _write("\n".join(lines) + "\n", args.output)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    rng = RngStream(args.seed, args.stream)
    if args.time_changed:
        traj = simulate_time_changed(spec, args.t_end, rng)
    else:
        traj = simulate_simple(spec, args.t_end, rng)
    if args.format == "json":
        _write(traj.to_json() + "\n", args.output)
    else:
        _write(trajectory_csv(traj), args.output)
    return 0


def _cmd_compose(args: argparse.Namespace) -> int:
    base = Trajectory.from_json(Path(args.base).read_text())
    clock = Trajectory.from_json(Path(args.clock).read_text())
    traj = compose(base, clock)
    if args.format == "json":
        _write(traj.to_json() + "\n", args.output)
    else:
        _write(trajectory_csv(traj), args.output)
    return 0


_SUITES = ("rates", "holding", "jumps", "dispersion", "all")


def _run_suite(args: argparse.Namespace):
    reports = []
    pp1 = ProcessSpec(Poisson(1.0))
    death = ProcessSpec(LinearDeath(0.7, 10))
    if args.suite in ("rates", "all"):
        reports.append(
            estimate_transition_rates(pp1, 0, args.h, args.reps, args.seed, n_jobs=args.jobs)
        )
    if args.suite in ("holding", "all"):
        reports.append(estimate_interevent(death, 0, args.reps, args.seed, n_jobs=args.jobs))
    if args.suite in ("jumps", "all"):
        reports.append(estimate_jump_sizes(pp1, 0, args.reps, args.seed, n_jobs=args.jobs))
    if args.suite in ("dispersion", "all"):
        pp2 = ProcessSpec(Poisson(2.0))
        reports.append(
            estimate_dispersion(pp2, 0, args.h, args.reps, args.seed, n_jobs=args.jobs)
        )
        reports.append(
            estimate_dispersion(
                pp2, 0, args.h, args.reps, args.seed, time_changed=False, n_jobs=args.jobs
            )
        )
        reports.append(
            estimate_dispersion(death, 9, args.h, args.reps, args.seed, n_jobs=args.jobs)
        )
    return reports


def _cmd_verify(args: argparse.Namespace) -> int:
    reports = _run_suite(args)
    stamp = None if args.no_timestamp else datetime.now(timezone.utc).isoformat()
    lines = []
    ok = True
    for report in reports:
        ok = ok and report.passed
        for comparison in report.comparisons:
            record = comparison.to_dict()
            record["check"] = f"{report.target}.{record['check']}"
            if stamp is not None:
                record["timestamp"] = stamp
            lines.append(json.dumps(record))
    _write("\n".join(lines) + "\n", args.output)
    return 0 if ok else 1


def _cmd_sir(args: argparse.Namespace) -> int:
    config = SirConfig.from_json(Path(args.config).read_text())
    records = simulate_sir(config, args.t_end, RngStream(args.seed, args.stream), args.record_every)
    _write(sir_states_csv(records), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subordinate",
        description="Poisson time changes of Markov counting processes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_rates = sub.add_parser("rates", help="transition rates of the subordinated process")
    _add_spec_arguments(p_rates)
    p_rates.add_argument("--state", type=int, default=0)
    p_rates.add_argument("--kmax", type=int)
    p_rates.add_argument("--eps", type=float, default=1e-12)
    p_rates.add_argument("--format", choices=["csv", "json"], default="csv")
    p_rates.add_argument("--output", "-o")
    p_rates.set_defaults(func=_cmd_rates)

    p_moments = sub.add_parser("moments", help="infinitesimal moments of the subordinated process")
    _add_spec_arguments(p_moments)
    p_moments.add_argument("--states", default="0", help="comma-separated counts")
    p_moments.add_argument("--eps", type=float, default=1e-12)
    p_moments.add_argument("--format", choices=["csv", "json"], default="csv")
    p_moments.add_argument("--output", "-o")
    p_moments.set_defaults(func=_cmd_moments)

    p_sim = sub.add_parser("simulate", help="simulate a trajectory")
    _add_spec_arguments(p_sim)
    p_sim.add_argument("--t-end", type=float, required=True)
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--stream", type=int, default=0)
    p_sim.add_argument("--time-changed", action="store_true", help="simulate the subordinated process")
    p_sim.add_argument("--format", choices=["csv", "json"], default="csv")
    p_sim.add_argument("--output", "-o")
    p_sim.set_defaults(func=_cmd_simulate)

    p_comp = sub.add_parser("compose", help="compose a base trajectory with a clock trajectory")
    p_comp.add_argument("--base", required=True, help="base trajectory JSON file")
    p_comp.add_argument("--clock", required=True, help="clock trajectory JSON file")
    p_comp.add_argument("--format", choices=["csv", "json"], default="csv")
    p_comp.add_argument("--output", "-o")
    p_comp.set_defaults(func=_cmd_compose)

    p_verify = sub.add_parser("verify", help="Monte Carlo checks against the closed forms")
    p_verify.add_argument("--suite", choices=_SUITES, default="all")
    p_verify.add_argument("--seed", type=int, required=True)
    p_verify.add_argument("--reps", type=int, default=100_000)
    p_verify.add_argument("--h", type=float, default=0.01, help="window for rate estimates")
    p_verify.add_argument("--jobs", type=int, default=1)
    p_verify.add_argument("--no-timestamp", action="store_true")
    p_verify.add_argument("--output", "-o")
    p_verify.set_defaults(func=_cmd_verify)

    p_sir = sub.add_parser("sir", help="simulate the SIR counting system")
    p_sir.add_argument("--config", required=True, help="SIR config JSON file")
    p_sir.add_argument("--t-end", type=float, required=True)
    p_sir.add_argument("--seed", type=int, required=True)
    p_sir.add_argument("--stream", type=int, default=0)
    p_sir.add_argument("--record-every", type=int, default=1)
    p_sir.add_argument("--output", "-o")
    p_sir.set_defaults(func=_cmd_sir)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
