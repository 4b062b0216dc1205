"""
Named verification suites for the `verify` subcommand.

Each suite returns a DataFrame with one row per check: check, value,
expected, passed.
"""

import inspect
import logging
import math
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from numerics import PreconditionError, RngStream
from . import curie_weiss as cw
from . import mean_field_limit as mfl
from . import particle_sim as ips
from . import stationary as st

logger = logging.getLogger(__name__)

COLUMNS = ["check", "value", "expected", "passed"]
CLT_P = 100
CLT_SAMPLES = 1_000_000
BATCH_RESAMPLES = 10_000
BATCH_N = 1000
BATCH_SIZES = (2, 10, 50)
MAX_Z = 5.5
MAX_FRACTION_BEYOND_3SE = 0.015
SCALING_OFFSETS = (1e-2, 3e-3, 1e-3, 3e-4)


def _row(check: str, value, expected, passed) -> Dict:
    return {"check": check, "value": value, "expected": expected, "passed": bool(passed)}


def _require_stream(stream: Optional[RngStream], suite: str) -> RngStream:
    if stream is None:
        raise PreconditionError(f"Suite {suite!r} is stochastic and requires an explicit --seed")
    return stream


def appendix_a_suite(stream: Optional[RngStream] = None, clt_samples: int = CLT_SAMPLES) -> pd.DataFrame:
    """Kurtosis bound, F1 monotonicity and the moment CLT."""
    stream = _require_stream(stream, "appendix-a")
    rows = []

    a0 = st.kurtosis_A(0.0)
    rows.append(_row("A(0)", a0, 3.0, abs(a0 - 3.0) < 1e-10))

    h = 1e-3
    slope = (-3.0 * a0 + 4.0 * st.kurtosis_A(h) - st.kurtosis_A(2.0 * h)) / (2.0 * h)
    rows.append(_row("A'(0) finite difference", slope, -24.0, abs(slope + 24.0) < 0.05 * 24.0))

    betas = np.logspace(-3, 1, 50)
    worst = max(st.kurtosis_A(b) for b in betas)
    rows.append(_row("max A(beta) on log grid (1e-3, 10]", worst, "< 3", worst < 3.0))

    sigma_c = st.critical_sigma(1.0)
    dF1 = [st.F1_and_derivative(s, 1.0)[1] for s in np.linspace(0.05, 5.0, 30)]
    rows.append(_row("max F1'(sigma) on grid", max(dF1), "< 0", max(dF1) < 0))
    F1_c = st.F1_and_derivative(sigma_c, 1.0)[0]
    rows.append(_row("F1(sigma_c)", F1_c, 1.0, abs(F1_c - 1.0) < 1e-7))

    clt = st.moment_clt_check(CLT_P, clt_samples, stream)
    rows.append(_row(f"E Z_p^2 exact (p={CLT_P})", float(clt.loc[clt.moment == 2, "exact"].iloc[0]), 1.0,
                     abs(float(clt.loc[clt.moment == 2, "exact"].iloc[0]) - 1.0) < 1e-12))
    for _, r in clt.iterrows():
        rows.append(_row(f"E|Z_p|^{int(r.moment)} Monte-Carlo (p={CLT_P})", r.estimate, r.exact, r.passed))
    return pd.DataFrame(rows, columns=COLUMNS)


def critical_suite(stream: Optional[RngStream] = None, tol: float = 1e-10) -> pd.DataFrame:
    """Critical values with their defining residuals."""
    rows = []
    beta_c = mfl.critical_beta_classic()
    rows.append(_row("classical beta_c", beta_c, 1.0, abs(beta_c - 1.0) < 1e-10))

    scaled = []
    for p in (16, 64, 256, 1024):
        value = mfl.critical_beta(p, tol)
        residual = mfl.g_p_exact(p, value)
        rows.append(_row(f"beta_c,p (p={p}, tol={tol:g})", value, "> 1", value > 1.0))
        rows.append(_row(f"g_p(beta_c,p) residual (p={p})", residual, 0.0, abs(residual) < 1e-8))
        scaled.append(math.sqrt(p) * abs(value - mfl.critical_beta_asymptotic(p)))
    rows.append(_row("sqrt(p)|beta_c,p - asymptotic| decreasing", scaled[-1], "decreasing",
                     all(b < a for a, b in zip(scaled, scaled[1:]))))

    for L_W in (0.5, 1.0, 2.0):
        sigma_c = st.critical_sigma(L_W)
        identity = L_W * st.f2(sigma_c, 0.0, L_W) / sigma_c
        rows.append(_row(f"L_W f2(sigma_c,0)/sigma_c (L_W={L_W})", identity, 1.0, abs(identity - 1.0) < 1e-8))
        raw = st.critical_sigma_raw(L_W)
        rows.append(_row(f"sigma_c raw form (L_W={L_W})", raw, sigma_c, abs(raw - sigma_c) < 1e-8))

    sigma_c = st.critical_sigma(1.0)
    formula = st.effective_critical_sigma(sigma_c, 0.1, 11, 1.0)
    mapped = st.g_eff(sigma_c, "zero", 0.1, 11, 1.0)
    rows.append(_row("g_eff(sigma_c, zero) (delta=0.1, p=11)", mapped, formula, abs(mapped - formula) < 1e-8))
    return pd.DataFrame(rows, columns=COLUMNS)


def curie_weiss_suite(stream: Optional[RngStream] = None, N: int = 200) -> pd.DataFrame:
    """Rate consistency and the invariant-measure phase picture."""
    rows = []
    for n in (10, 50, 200):
        classical = cw.CwParams(n, 2.0)
        full_batch = cw.CwParams(n, 2.0, p=n)
        worst = max(
            max(abs(a - b) for a, b in zip(cw.classical_rates(m, classical), cw.rb_rates(m, full_batch)))
            for m in cw.MagnetizationGrid(n).states
        )
        rows.append(_row(f"rb_rates(p=N) - classical (N={n})", worst, 0.0, worst < 1e-12))

    residual = cw.detailed_balance_residual(cw.CwParams(N, 1.5))
    rows.append(_row(f"detailed balance residual (N={N}, beta=1.5)", residual, 0.0, residual < 1e-12))

    gibbs = cw.gibbs_distribution(N, 1.5)
    power = cw.invariant_distribution(cw.CwParams(N, 1.5)).distribution
    gap = float(np.abs(power - gibbs).sum())
    rows.append(_row(f"power iteration vs Gibbs L1 (N={N})", gap, 0.0, gap < 1e-3))

    beta = 1.5 * mfl.critical_beta(10)
    modes = len(cw.local_maxima(cw.invariant_distribution(cw.CwParams(N, beta, p=10)).distribution))
    rows.append(_row("modes at beta=1.5 beta_c,10 (p=10)", modes, 2, modes == 2))
    modes = len(cw.local_maxima(cw.invariant_distribution(cw.CwParams(N, 0.5, p=10)).distribution))
    rows.append(_row("modes at beta=0.5 (p=10)", modes, 1, modes == 1))
    for p in (2, 3):
        for beta in (1.0, 3.0, 5.0):
            modes = len(cw.local_maxima(cw.invariant_distribution(cw.CwParams(N, beta, p=p)).distribution))
            rows.append(_row(f"modes at beta={beta} (p={p})", modes, 1, modes == 1))
    return pd.DataFrame(rows, columns=COLUMNS)


def batch_force_statistics(ens: ips.ParticleEnsemble, p: int, resamples: int, stream: RngStream,
                           L_W: float = 1.0) -> pd.DataFrame:
    """
    Per-particle mean and variance of the batch force over fresh partitions,
    with z-scores against the full force and the exact batch-force variance.

    Returns:
        DataFrame with columns mean, variance, z_mean, z_variance
    """
    potentials = ips.double_well(L_W)
    center = ips.full_force(ens, potentials)
    sums = np.zeros((4, ens.N))
    for _ in range(resamples):
        d = ips.batch_force(ens, ips.sample_partition(ens.N, p, stream), potentials) - center
        sums += (d, d ** 2, d ** 3, d ** 4)
    m1, m2, m3, m4 = sums / resamples
    variance = m2 - m1 ** 2
    central4 = m4 - 4 * m1 * m3 + 6 * m1 ** 2 * m2 - 3 * m1 ** 4
    target = ips.batch_force_variance(ens, p, L_W)
    with np.errstate(divide="ignore", invalid="ignore"):
        z_mean = np.where(variance > 0, m1 / np.sqrt(variance / resamples), 0.0)
        var_se = np.sqrt(np.maximum(central4 - variance ** 2, 0.0) / resamples)
        z_variance = np.where(var_se > 0, (variance - target) / var_se, 0.0)
    return pd.DataFrame({"mean": center + m1, "variance": variance, "z_mean": z_mean, "z_variance": z_variance})


def batch_force_suite(stream: Optional[RngStream] = None, resamples: int = BATCH_RESAMPLES,
                      N: int = BATCH_N) -> pd.DataFrame:
    """
    Unbiasedness and variance of the random-batch force on a frozen ensemble.

    With N checks per batch size, each passes when no z-score exceeds MAX_Z
    and at most MAX_FRACTION_BEYOND_3SE of them exceed 3.
    """
    stream = _require_stream(stream, "batch-force")
    ens = ips.ParticleEnsemble(stream.spawn(0).normal(N))
    rows = []
    for i, p in enumerate(BATCH_SIZES):
        stats = batch_force_statistics(ens, p, resamples, stream.spawn(i + 1))
        for column, label in (("z_mean", "mean vs full force"), ("z_variance", "variance vs exact")):
            z = np.abs(stats[column].to_numpy())
            beyond = float(np.mean(z > 3.0))
            rows.append(_row(f"batch force {label} (p={p}), fraction beyond 3 SE", beyond,
                             f"<= {MAX_FRACTION_BEYOND_3SE}",
                             beyond <= MAX_FRACTION_BEYOND_3SE and z.max() < MAX_Z))
        limit = ens.variance / (p - 1)
        ratio = float(ips.batch_force_variance(ens, p, 1.0).mean() / limit)
        rows.append(_row(f"exact / large-N variance (p={p})", ratio, (N - p) / (N - 2),
                         abs(ratio - (N - p) / (N - 2)) < 0.01))
    return pd.DataFrame(rows, columns=COLUMNS)


def scaling_suite(stream: Optional[RngStream] = None, L_W: float = 1.0) -> pd.DataFrame:
    """Square-root growth of the plus-branch mean below the critical diffusion."""
    probe = st.sqrt_scaling_probe(L_W, SCALING_OFFSETS)
    rows = [_row(f"kappa1/sqrt(sigma_c - sigma) at offset {o:g}", r, None, True)
            for o, r in zip(probe.offsets, probe.ratios)]
    rows.append(_row("relative spread of last 3 ratios", probe.spread, "< 0.05", probe.spread < 0.05))
    constant = st.sqrt_scaling_constant(L_W)
    last = probe.ratios[-1]
    rows.append(_row("predicted limit vs smallest offset", last, constant, abs(last / constant - 1.0) < 0.05))
    mirrored = st.sqrt_scaling_probe(L_W, SCALING_OFFSETS[-1:], branch="minus").ratios[0]
    rows.append(_row("minus branch ratio", mirrored, -last, mirrored == -last))
    return pd.DataFrame(rows, columns=COLUMNS)


SUITES: Dict[str, Callable[..., pd.DataFrame]] = {
    "appendix-a": appendix_a_suite,
    "critical": critical_suite,
    "curie-weiss": curie_weiss_suite,
    "batch-force": batch_force_suite,
    "scaling": scaling_suite,
}


def run_suite(name: str, stream: Optional[RngStream] = None, **kwargs) -> pd.DataFrame:
    """
    Run a named suite.

    Raises:
        PreconditionError: unknown suite name (the message lists the suites),
            or an option the suite does not take
    """
    if name not in SUITES:
        raise PreconditionError(f"Unknown suite {name!r}; available suites: {', '.join(SUITES)}")
    accepted = inspect.signature(SUITES[name]).parameters
    unknown = sorted(set(kwargs) - set(accepted))
    if unknown:
        raise PreconditionError(f"Suite {name!r} does not take {', '.join(unknown)}")
    report = SUITES[name](stream, **kwargs)
    failed: List[str] = report.loc[~report.passed, "check"].tolist()
    if failed:
        logger.warning("Suite %s: %d check(s) failed: %s", name, len(failed), "; ".join(failed))
    else:
        logger.info("Suite %s: all %d checks passed", name, len(report))
    return report
