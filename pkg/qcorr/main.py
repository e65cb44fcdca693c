"""High level command implementations consumed by the CLI.

Each ``cmd_*`` function returns its records plus a ``passed`` verdict; the CLI
turns records into text and verdicts into the exit code.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .constants import TRANSCRIPT_BOUND, b_eps_reference
from .corrfun import (
    SIGN_CHECKS,
    CorrelationFunction,
    DomainError,
    b_eps_analytic,
    correlation_function,
    series_max_error,
)
from .krivine import invert_h
from .models import BEpsRow, ChshResult, CurveRow, SeriesReport, SimulationSummary, TranscriptStats, ReducedVectorsFile
from .montecarlo import stream
from .powseries import Series
from .protocols import (
    Protocol,
    b_eps_mc,
    compress_to_span,
    estimate_correlation,
    sample_pair_with_rho,
    simulate,
    transcript_stats,
)
from .quantum import CHSH_INPUTS, chsh_game_value, chsh_vectors, load_instance, reduce_to_vectors, reduction_report

logger = logging.getLogger(__name__)

SIGMAS = 4.0
ENDPOINT_SLACK = 1e-6
CROSS_CHECK_RANGE = (-0.5, 0.5)
CROSS_CHECK_TOLERANCE = 1e-8
SERIES_TARGETS = ("ort2", "mixed", "maj4")
EXPERIMENTS = ("bneps", "transcript-bound")


def _slack(protocol: Protocol, n: int) -> float:
    tail = protocol.tail_mass(n)
    return ENDPOINT_SLACK + (0.0 if tail is None else 2.0 * tail)


# -- curve -------------------------------------------------------------------


def cmd_curve(
    protocol: Protocol,
    points: int,
    trials: int,
    seed: int,
    n: int,
    workers: int = 1,
) -> Tuple[List[CurveRow], bool]:
    """Analytic and Monte Carlo correlation on ``points`` evenly spaced rho in [-1, 1]."""
    if points < 2:
        raise ValueError(f"points must be >= 2, got {points}")
    slack = _slack(protocol, n)
    rows: List[CurveRow] = []
    passed = True
    for index, rho in enumerate(np.linspace(-1.0, 1.0, points)):
        rho = float(rho)
        analytic = protocol.analytic(rho)
        if analytic is None:
            raise DomainError(f"{protocol.label} has no analytic correlation function")
        a, b = sample_pair_with_rho(n, rho, stream(seed, index))
        estimate = estimate_correlation(protocol, a, b, trials, seed, workers, path=(index,))
        row = CurveRow(rho=rho, analytic=float(analytic), mc_mean=estimate.mean, mc_stderr=estimate.stderr, trials=trials)
        if not estimate.within(row.analytic, SIGMAS, slack):
            passed = False
            logger.warning("%s at rho=%.4f: mc %.6f vs analytic %.6f", protocol.label, rho, row.mc_mean, row.analytic)
        rows.append(row)
    logger.info("%s curve: %d points, largest deviation %.3e", protocol.label, len(rows), max(r.deviation for r in rows))
    return rows, passed


# -- series ------------------------------------------------------------------


def _target_function(target: str) -> CorrelationFunction:
    if target == "ort2":
        return correlation_function("ort", 2)
    if target == "mixed":
        return correlation_function("mixed")
    if target == "maj4":
        return correlation_function("maj", 4)
    raise DomainError(f"unknown series target {target!r}; expected one of {SERIES_TARGETS}")


def checked_series(func: CorrelationFunction, order: int) -> Tuple[Series, int, float]:
    """Series of ``func`` cross-checked pointwise; the order drops until the check passes."""
    lo, hi = CROSS_CHECK_RANGE
    current = order
    while True:
        series = func.series(current)
        error = series_max_error(series, func, lo, hi)
        if error <= CROSS_CHECK_TOLERANCE or current <= 3:
            break
        logger.warning("%s series at order %d misses pointwise values by %.2e; retrying at order %d", func.name, current, error, current - 2)
        current -= 2
    return series, current, error


def cmd_series(target: str, order: int) -> SeriesReport:
    func = _target_function(target)
    series, used, error = checked_series(func, order)
    sign_report = SIGN_CHECKS[target](used, strict=False)
    inverse = invert_h(series, used, source=target, strict=False)
    violations = inverse.violations()
    return SeriesReport(
        target=target,
        order=used,
        c=series.odd_part().tolist(),
        d=inverse.d.odd_part().tolist(),
        bound_margins=inverse.bound_margins(),
        partial_mass=inverse.partial_mass(),
        cross_check_error=error,
        sign_report=sign_report,
        bound_violations=violations,
        passed=sign_report.passed and not violations and error <= CROSS_CHECK_TOLERANCE,
    )


def render_series_text(report: SeriesReport) -> str:
    lines = [f"target: {report.target} (order {report.order})"]
    for index, value in enumerate(report.c):
        degree = 2 * index + 1
        lines.append(f"  c_{degree:<3d} = {value: .17g}   d_{degree:<3d} = {report.d[index]: .17g}   1/k - d = {report.bound_margins[index]: .3e}")
    lines.append(f"partial mass of d: {report.partial_mass:.17g}")
    lines.append(f"pointwise cross-check error: {report.cross_check_error:.3e}")
    for name, value in report.sign_report.constants.items():
        expected = report.sign_report.expected.get(name)
        suffix = "" if expected is None else f" (expected {expected:.12g})"
        lines.append(f"  {name} = {value:.12g}{suffix}")
    lines.append(f"sign check: {'passed' if report.sign_report.passed else 'FAILED'}")
    lines.extend(f"  - {item}" for item in report.sign_report.violations)
    lines.append(f"inverse coefficient bounds: {'passed' if not report.bound_violations else 'FAILED'}")
    lines.extend(f"  - {item}" for item in report.bound_violations)
    return "\n".join(lines)


# -- simulate ----------------------------------------------------------------


def cmd_simulate(
    protocol: Protocol,
    trials: int,
    seed: int,
    n: int,
    rho: Optional[float] = None,
    instance: Optional[Path] = None,
    workers: int = 1,
) -> SimulationSummary:
    """Simulate on a random pair with inner product ``rho`` or on a reduced quantum instance."""
    if (rho is None) == (instance is None):
        raise ValueError("give exactly one of rho or an instance file")
    if instance is not None:
        quantum = load_instance(instance)
        reduced = reduce_to_vectors(quantum.rho, quantum.A, quantum.B)
        a, b = compress_to_span(reduced.a, reduced.b)
        logger.info("instance %s: Tr(A x B rho) = %.12g", instance, reduced.source_expectation)
    else:
        a, b = sample_pair_with_rho(n, rho, stream(seed))
    return simulate(protocol, a, b, trials, seed, workers)


# -- chsh / reduce -----------------------------------------------------------


def cmd_chsh(protocol: Protocol, trials: int, seed: int, source: str = "explicit", workers: int = 1) -> ChshResult:
    return chsh_game_value(protocol, trials, seed, source, workers)


def cmd_reduce(instance: Path) -> ReducedVectorsFile:
    report = reduction_report(load_instance(instance))
    logger.info("reduced instance %s: discrepancy %.2e", instance, report.discrepancy)
    return report


# -- experiments -------------------------------------------------------------


def run_bneps(
    protocol: Protocol,
    eps_values: Sequence[float],
    trials: int,
    seed: int,
    n: int,
    workers: int = 1,
) -> Tuple[List[BEpsRow], bool]:
    """``B(eps)`` analytically and, when ``trials > 0``, by Monte Carlo."""
    slack = _slack(protocol, n)
    rows: List[BEpsRow] = []
    passed = True
    for eps in eps_values:
        analytic = b_eps_analytic(eps, protocol.analytic)
        reference = b_eps_reference(eps)
        mc = mc_stderr = None
        if trials > 0:
            mc, mc_stderr = b_eps_mc(protocol, n, eps, trials, seed, workers)
            if abs(mc - analytic) > SIGMAS * mc_stderr + 2.0 * slack:
                passed = False
                logger.warning("B(%g): mc %.6g vs analytic %.6g", eps, mc, analytic)
        rows.append(BEpsRow(eps=eps, analytic=analytic, mc=mc, mc_stderr=mc_stderr, reference=reference, ratio=analytic / reference))
    return rows, passed


def run_transcript_bound(
    protocol: Protocol,
    trials: int,
    seed: int,
    source: str = "explicit",
    workers: int = 1,
) -> TranscriptStats:
    """Message frequencies under uniform CHSH inputs against ``(3 - sqrt 2)/2``."""
    alice, bob = chsh_vectors(source)
    inputs = [(alice[i], bob[j]) for i, j in CHSH_INPUTS]
    stats = transcript_stats(protocol, inputs, trials, seed, workers, bound=TRANSCRIPT_BOUND)
    logger.info("%s: max transcript frequency %.6f (bound %.6f)", protocol.label, stats.max_frequency, TRANSCRIPT_BOUND)
    return stats
