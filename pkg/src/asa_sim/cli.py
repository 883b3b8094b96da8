"""Command-line interface.

Subcommands:
    simulate        Monte Carlo regret trace -> CSV (optionally a PNG)
    detector-curve  occupancy-detector error rates vs period length -> CSV
    region-check    rate-region feasibility and the fixed assignment
    bound-check     per-period regret bound comparison -> CSV

Flags override config-file values; the resolved manifest is echoed and
written into every CSV header.  --threads 0 (or ASA_SIM_THREADS=0) picks
one worker per CPU; results do not depend on the thread count.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from . import __version__
from .config import manifest_lines, parse_config
from .errors import SimulationError
from .experiment import (
    ExperimentConfig,
    bound_check,
    detector_error_curve,
    monte_carlo,
)
from .oracle import fixed_allocation, in_region
from . import report


def _add_common(p: argparse.ArgumentParser, with_out: bool = True) -> None:
    p.add_argument("--config", required=True, help="experiment config file")
    if with_out:
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument(
            "--plot", action="store_true", help="also render a PNG next to the CSV"
        )
    p.add_argument("--runs", type=int, help="override experiment.runs")
    p.add_argument("--seed", type=int, help="override experiment.seed")
    p.add_argument("--horizon", type=int, help="override experiment.horizon")
    p.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker processes for Monte Carlo runs (0 = auto; default from "
        "ASA_SIM_THREADS, else auto)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asa-sim",
        description="Distributed multiaccess of on-off channels: simulate the "
        "alternating sensing and access policy and measure regret against a "
        "centralized fixed allocation.",
    )
    parser.add_argument("--version", action="version", version=f"asa-sim {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_sim = sub.add_parser("simulate", help="run Monte Carlo and write the regret trace")
    _add_common(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_det = sub.add_parser(
        "detector-curve", help="estimate detector error rates vs period length"
    )
    _add_common(p_det)
    p_det.add_argument("--trials", type=int, default=10000, help="trials per length")
    p_det.add_argument("--length-min", type=int, default=12)
    p_det.add_argument("--length-max", type=int, default=120)
    p_det.add_argument("--length-step", type=int, default=12)
    p_det.add_argument(
        "--occupant-rate",
        type=float,
        default=None,
        help="rate of the hypothetical occupant (default: smallest user rate)",
    )
    p_det.set_defaults(func=_cmd_detector_curve)

    p_reg = sub.add_parser(
        "region-check", help="report rate-region feasibility and the assignment"
    )
    p_reg.add_argument("--config", required=True, help="experiment config file")
    p_reg.set_defaults(func=_cmd_region_check)

    p_bnd = sub.add_parser(
        "bound-check", help="compare measured regret with the per-period bound"
    )
    _add_common(p_bnd)
    p_bnd.set_defaults(func=_cmd_bound_check)
    return parser


def _resolve_threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("ASA_SIM_THREADS", "").strip()
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise SimulationError(f"ASA_SIM_THREADS must be an integer, got {env!r}") from exc
    return 0


def _load_config(args) -> ExperimentConfig:
    cfg = parse_config(args.config)
    overrides = {
        name: getattr(args, name)
        for name in ("runs", "seed", "horizon")
        if getattr(args, name, None) is not None
    }
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _manifest(args, cfg: ExperimentConfig, out_path) -> list[str]:
    lines = [
        f"asa-sim {__version__}",
        f"subcommand = {args.subcommand}",
        f"config = {args.config}",
    ]
    if out_path is not None:
        lines.append(f"out = {os.path.basename(out_path)}")
    lines.extend(manifest_lines(cfg))
    return lines


def _echo(lines) -> None:
    for line in lines:
        print(f"# {line}")


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    trace = monte_carlo(cfg, threads=_resolve_threads(args))
    manifest = _manifest(args, cfg, args.out)
    report.write_regret_csv(args.out, trace, manifest)
    _echo(manifest)
    print(
        f"final regret {trace.regret_mean[-1]:.3f} +- {trace.regret_stderr[-1]:.3f} "
        f"({trace.runs} runs), final good-config fraction {trace.good_frac[-1]:.3f}"
    )
    print(f"wrote {args.out}")
    if args.plot:
        fig = report.figure_path(args.out)
        report.render_regret_figure(fig, trace)
        print(f"wrote {fig}")
    return 0


def _cmd_detector_curve(args) -> int:
    cfg = _load_config(args)
    occupant = args.occupant_rate
    if occupant is None:
        if not cfg.users:
            raise SimulationError(
                "config has no users; give --occupant-rate for the detector curve"
            )
        occupant = cfg.r_min()
    if args.length_step < 1 or args.length_min < 1 or args.length_max < args.length_min:
        raise SimulationError("invalid length grid")
    lengths = range(args.length_min, args.length_max + 1, args.length_step)
    curve = detector_error_curve(
        cfg.channels[0],
        occupant_rate=occupant,
        epsilon=cfg.resolved_epsilon(),
        lengths=lengths,
        trials=args.trials,
        seed=cfg.seed,
    )
    manifest = _manifest(args, cfg, args.out)
    manifest.append(f"detector.trials = {args.trials}")
    manifest.append(f"detector.occupant_rate = {occupant!r}")
    report.write_detector_csv(args.out, curve, manifest)
    _echo(manifest)
    for name, fit in (("false alarm", curve.fa_fit), ("miss detection", curve.md_fit)):
        if fit is None:
            print(f"{name}: too few positive rates for a decay fit")
        else:
            print(
                f"{name}: log-rate slope {fit.slope:.5f} per slot, "
                f"R^2 {fit.r_squared:.3f} over {fit.points} points"
            )
    print(f"wrote {args.out}")
    if args.plot:
        fig = report.figure_path(args.out)
        report.render_detector_figure(fig, curve)
        print(f"wrote {fig}")
    return 0


def _cmd_region_check(args) -> int:
    cfg = parse_config(args.config, require_feasible=False)
    rates = [u.rate for u in cfg.users]
    eta = cfg.eta()
    if not rates:
        print("feasible: yes (no users)")
        return 0
    feasible = in_region(rates, eta)
    print(f"feasible: {'yes' if feasible else 'no'}")
    if feasible:
        alloc = fixed_allocation(rates, eta)
        for u, ch in enumerate(alloc.assignment):
            print(f"user {u} (rate {rates[u]}) -> channel {ch} (eta {eta[ch]:.6g})")
    else:
        r_sorted = sorted(rates, reverse=True)
        e_sorted = sorted(eta, reverse=True)
        bad = next(i for i, (r, e) in enumerate(zip(r_sorted, e_sorted)) if r > e)
        print(
            f"sorted rate #{bad + 1} ({r_sorted[bad]}) exceeds "
            f"sorted eta #{bad + 1} ({e_sorted[bad]:.6g})"
        )
    return 0


def _cmd_bound_check(args) -> int:
    cfg = _load_config(args)
    rep = bound_check(cfg, threads=_resolve_threads(args))
    manifest = _manifest(args, cfg, args.out)
    report.write_bound_csv(args.out, rep, manifest)
    _echo(manifest)
    print(f"wrote {args.out}")
    if args.plot:
        fig = report.figure_path(args.out)
        report.render_bound_figure(fig, rep)
        print(f"wrote {fig}")
    if rep.all_hold:
        print(f"bound holds at all {len(rep.period)} periods (min margin {rep.margin.min():.3f})")
        return 0
    print(
        f"bound violated first at period {rep.first_violation} "
        f"(margin {rep.margin.min():.3f})",
        file=sys.stderr,
    )
    return 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
