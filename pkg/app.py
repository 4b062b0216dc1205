"""
rbm-phase - Phase transitions under the Random Batch Method

Main entry point: the `rbm-phase` command line.

Subcommands:
    cw-probs       transition rates of the Curie-Weiss chain (optionally empirical)
    cw-invariant   invariant laws by power iteration over beta and p grids
    cw-critical    critical inverse temperatures of the limit drift
    ips-run        particle-system trajectories (full, rb, mean_field_rb, effective)
    stationary     stationary branches of the double-well system
    verify         named verification suites
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

import numpy as np
import pandas as pd

from analysis import curie_weiss as cw
from analysis import mean_field_limit as mfl
from analysis import particle_sim as ips
from analysis import stationary as st
from analysis.verification import SUITES, run_suite
from numerics import (
    ConfigError,
    NumericalError,
    PreconditionError,
    Quadrature,
    stream_from_seed,
)
from results import FORMATS, ResultStore
from utils import check_config, get_setting, load_config
from utils.config import LOG_LEVEL_ENV_VAR

logger = logging.getLogger("rbm_phase")

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"
EXIT_OK = 0
EXIT_PRECONDITION = 1
EXIT_NUMERICAL = 2


def configure_logging(level: str = "WARNING") -> None:
    """Install a single stderr handler on the root logger."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(getattr(logging, str(level).upper(), logging.WARNING))


def _optional_int(text: str) -> Optional[int]:
    return None if text.lower() in ("none", "classical") else int(text)


def _sigma_grid(text: str) -> List[float]:
    """"lo:hi:n" -> n evenly spaced values."""
    try:
        lo, hi, n = text.split(":")
        return list(np.linspace(float(lo), float(hi), int(n)))
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected lo:hi:n, got {text!r}")


def _quadrature(config: dict) -> Quadrature:
    return Quadrature(
        panels=int(get_setting(config, "quadrature.panels", 64)),
        points=int(get_setting(config, "quadrature.points", 32)),
    )


def _store(args, config: dict) -> ResultStore:
    fmt = args.format or get_setting(config, "output.format", "csv")
    return ResultStore(args.out, fmt, subcommand=args.command)


def cmd_cw_probs(args, config: dict) -> int:
    """Rates per state; empirical columns when --trials is given."""
    N = args.N or int(get_setting(config, "curie_weiss.probs_N", 100))
    params = cw.CwParams(N, args.beta, p=args.p)
    stream = stream_from_seed(args.seed) if args.trials is not None else None
    table = cw.rates_table(params, trials=args.trials, stream=stream, progress=args.progress)
    run = {**params.to_dict(), "trials": args.trials, "seed": args.seed}
    _store(args, config).write_table("cw_rates", table, run)
    return EXIT_OK


def cmd_cw_invariant(args, config: dict) -> int:
    """Invariant laws over every (beta, p) pair."""
    N = args.N or int(get_setting(config, "curie_weiss.invariant_N", 1000))
    eps = args.eps or float(get_setting(config, "power_iteration.eps", 1e-9))
    max_iter = args.max_iter or int(get_setting(config, "power_iteration.max_iter", 10_000_000))
    frames = []
    for p in args.p:
        for beta in args.beta:
            params = cw.CwParams(N, beta, p=p)
            result = cw.invariant_distribution(params, eps=eps, max_iter=max_iter)
            frames.append(pd.DataFrame({
                "beta": beta,
                "p": "none" if p is None else p,
                "m": cw.MagnetizationGrid(N).states,
                "probability": result.distribution,
                "iterations": result.iterations,
            }))
            print(f"beta={beta:g} p={p}: {result.iterations} iterations", file=sys.stderr)
    run = {"N": N, "beta": args.beta, "p": args.p, "eps": eps, "max_iter": max_iter}
    _store(args, config).write_table("cw_invariant", pd.concat(frames, ignore_index=True), run)
    return EXIT_OK


def _equilibria_report(args, config: dict) -> int:
    grid_points = int(get_setting(config, "mean_field.equilibria_grid", mfl.DEFAULT_GRID_POINTS))
    reports = []
    for p in [None] + list(args.p):
        report = mfl.equilibria(mfl.LimitDrift(args.equilibria, p), grid_points=grid_points)
        reports.append(report.to_dict())
    run = {"beta": args.equilibria, "p": args.p, "grid_points": grid_points}
    ResultStore(args.out, "json", subcommand=args.command).write_report(
        "equilibria", {"reports": reports}, run)
    return EXIT_OK


def cmd_cw_critical(args, config: dict) -> int:
    """
    Critical inverse temperatures, with Monte-Carlo g_p columns on request.

    With --equilibria BETA the output is instead a JSON report of the limit
    drift's equilibria at BETA for every p (and the classical drift).
    """
    if args.equilibria is not None:
        return _equilibria_report(args, config)
    tol = args.tol or float(get_setting(config, "roots.tol", 1e-10))
    stream = stream_from_seed(args.seed) if args.mc_samples is not None else None
    table = mfl.critical_table(
        args.p, tol=tol, mc_samples=args.mc_samples, stream=stream,
        chunk_size=int(get_setting(config, "mean_field.mc_chunk", 1_000_000)),
        workers=int(get_setting(config, "mean_field.workers", 1)),
    )
    run = {"p": args.p, "tol": tol, "mc_samples": args.mc_samples, "seed": args.seed}
    _store(args, config).write_table("cw_critical", table, run)
    return EXIT_OK


def cmd_ips_run(args, config: dict) -> int:
    """Simulate one particle scheme and write its trajectory statistics."""
    stream = stream_from_seed(args.seed)
    dt_inner = args.dt_inner
    if dt_inner is None and args.scheme == "effective":
        dt_inner = float(get_setting(config, "particles.dt_inner_fraction", 0.1)) * args.delta
    cfg = ips.SimConfig(N=args.N, delta=args.delta, p=args.p, sigma=args.sigma,
                        potentials=ips.double_well(args.L_W), dt_inner=dt_inner)
    init = ips.InitSpec.parse(args.init)
    record_every = args.record_every or int(get_setting(config, "particles.record_every", 1))
    trajectory = ips.run(args.scheme, cfg, args.steps, init, stream,
                         record_every=record_every, progress=args.progress)
    run = {**cfg.to_dict(), "scheme": args.scheme, "steps": args.steps, "init": init.to_text(),
           "record_every": record_every, "seed": args.seed}
    _store(args, config).write_table("ips_trajectory", trajectory, run)
    return EXIT_OK


def cmd_stationary(args, config: dict) -> int:
    """Branch solutions over a sigma grid, nonlinear or effective."""
    if (args.delta is None) != (args.p is None):
        raise PreconditionError("--delta and --p must be given together")
    q = _quadrature(config)
    sigma_c = st.critical_sigma(args.L_W, q=q)
    fraction = float(get_setting(config, "stationary.sigma0_fraction", st.SIGMA0_FRACTION))
    sigmas = args.sigma or list(np.linspace(fraction * sigma_c, 1.5 * sigma_c, 40))
    meta = {"quadrature": q.to_dict(), "sigma_c": sigma_c}
    if args.delta is not None:
        model = st.ModelParams(args.L_W, sigma_c, delta=args.delta, p=args.p)
        estimate = model.check_smallness(
            q=q, sigma0_fraction=fraction,
            grid=int(get_setting(config, "stationary.c_lip_grid", st.C_LIP_GRID)),
            margin=float(get_setting(config, "stationary.c0_margin", st.C0_MARGIN)),
        )
        if estimate.value > 0.8 * estimate.threshold:
            logger.warning("c0 estimate %.4g is close to the threshold %g", estimate.value, estimate.threshold)
        meta["c0"] = estimate.to_dict()
        meta["sigma_c_eff"] = st.effective_critical_sigma(sigma_c, args.delta, args.p, args.L_W)
    table = st.branch_table(
        sigmas, args.L_W, delta=args.delta, p=args.p, q=q, sigma0=fraction * sigma_c,
        k_max=float(get_setting(config, "stationary.k_max", st.K_MAX)),
        near_critical_floor=float(get_setting(config, "stationary.near_critical_floor", st.NEAR_CRITICAL_FLOOR)),
    )
    run = {"sigma": [float(s) for s in sigmas], "L_W": args.L_W, "delta": args.delta, "p": args.p}
    _store(args, config).write_table("stationary_branches", table, run, extra_meta=meta)
    return EXIT_OK


def cmd_verify(args, config: dict) -> int:
    """Run a suite, print a summary to stderr and write the per-check table."""
    stream = stream_from_seed(args.seed) if args.seed is not None else None
    options = {"tol": args.tol} if args.tol is not None else {}
    report = run_suite(args.suite, stream, **options)

    print("=" * 60, file=sys.stderr)
    print(f"VERIFY: {args.suite}", file=sys.stderr)
    print("=" * 60, file=sys.stderr)
    for _, row in report.iterrows():
        print(f"{'✅' if row.passed else '❌'} {row.check}: {row.value}", file=sys.stderr)
    passed = int(report.passed.sum())
    print(f"\nTotal: {passed}/{len(report)} checks passed", file=sys.stderr)

    run = {"suite": args.suite, "seed": args.seed, **options}
    _store(args, config).write_table("verify_report", report, run)
    return EXIT_OK if passed == len(report) else EXIT_NUMERICAL


COMMANDS = {
    "cw-probs": cmd_cw_probs,
    "cw-invariant": cmd_cw_invariant,
    "cw-critical": cmd_cw_critical,
    "ips-run": cmd_ips_run,
    "stationary": cmd_stationary,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subparser per subcommand; shared flags go on every subcommand."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config (default: $RBM_PHASE_CONFIG, config.yaml, template)")
    common.add_argument("--verbose", "-v", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    common.add_argument("--progress", action="store_true", help="show progress bars")
    common.add_argument("--seed", type=int, help="64-bit seed; required by stochastic runs")
    common.add_argument("--out", help="output file (default: standard output)")
    common.add_argument("--format", choices=FORMATS, help="output format (default from config)")

    parser = argparse.ArgumentParser(prog="rbm-phase", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cw-probs", parents=[common], help="Curie-Weiss transition rates")
    p.add_argument("--N", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--trials", type=int, help="one-step trials per state for empirical columns")

    p = sub.add_parser("cw-invariant", parents=[common], help="Curie-Weiss invariant laws")
    p.add_argument("--N", type=int)
    p.add_argument("--p", type=_optional_int, nargs="+", default=[None], help="batch sizes; 'none' = classical")
    p.add_argument("--beta", type=float, nargs="+", required=True)
    p.add_argument("--eps", type=float)
    p.add_argument("--max-iter", type=int)

    p = sub.add_parser("cw-critical", parents=[common], help="critical inverse temperatures")
    p.add_argument("--p", type=int, nargs="+", default=[4, 8, 16, 32, 64, 128, 256, 512, 1024])
    p.add_argument("--tol", type=float)
    p.add_argument("--mc-samples", type=int)
    p.add_argument("--equilibria", type=float, metavar="BETA",
                   help="write a JSON report of the drift's equilibria at BETA instead of the table")

    p = sub.add_parser("ips-run", parents=[common], help="particle-system trajectory")
    p.add_argument("--scheme", choices=list(ips.STEPPERS), required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--L_W", "--lw", dest="L_W", type=float, default=1.0)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--init", default="gaussian:0,1", help="point:x | gaussian:mu,s | two-point:a[,w]")
    p.add_argument("--record-every", type=int)
    p.add_argument("--dt-inner", type=float, help="integrator step of the effective dynamics")

    p = sub.add_parser("stationary", parents=[common], help="stationary branch solutions")
    p.add_argument("--sigma", type=float, nargs="+")
    p.add_argument("--sigma-grid", type=_sigma_grid, dest="sigma_grid")
    p.add_argument("--L_W", "--lw", dest="L_W", type=float, default=1.0)
    p.add_argument("--delta", type=float)
    p.add_argument("--p", type=int)

    p = sub.add_parser("verify", parents=[common], help="verification suites")
    p.add_argument("suite", help=f"one of: {', '.join(SUITES)}")
    p.add_argument("--tol", type=float, help="root tolerance for suites that take one (critical)")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run the subcommand and map errors to exit codes."""
    args = build_parser().parse_args(argv)
    if getattr(args, "sigma_grid", None):
        args.sigma = (args.sigma or []) + args.sigma_grid

    try:
        config = load_config(args.config)
        level = {1: "INFO"}.get(args.verbose, "DEBUG") if args.verbose else (
            os.getenv(LOG_LEVEL_ENV_VAR) or get_setting(config, "logging.level", "WARNING"))
        configure_logging(level)
        problems = check_config(config)
        if problems:
            raise ConfigError("; ".join(problems))
        return COMMANDS[args.command](args, config)
    except (PreconditionError, ConfigError) as e:
        logger.error("Error running %s: %s", args.command, e)
        return EXIT_PRECONDITION
    except NumericalError as e:
        logger.error("Error running %s: %s", args.command, e)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
