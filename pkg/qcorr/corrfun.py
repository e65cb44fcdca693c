"""Correlation functions of the simulation protocols and their series checks.

A correlation function maps the inner product ``rho = <a, b>`` of the inputs to
``E[alpha * beta]``. Besides pointwise evaluation this module builds the
Maclaurin series used by the inversion step and verifies the coefficient sign
pattern (positive linear term, nonpositive higher odd terms) that makes the
inverse series have nonnegative coefficients.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, special

from .models import SignReport
from .powseries import (
    DEFAULT_MAX_ORDER,
    Parity,
    Series,
    SeriesError,
    ps_compose,
    ps_differentiate,
    ps_elem,
    ps_integrate,
    ps_mul,
)

logger = logging.getLogger(__name__)

Real = Union[float, np.ndarray]

RHO_TOLERANCE = 1e-12
QUAD_SPLIT = 0.5
QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-12
QUAD_LIMIT = 200

NEGATIVE_SLACK = 1e-15
NONPOSITIVE_SLACK = 1e-14
COEFF_SLACK = 1e-13
CONSTANT_TOLERANCE = 1e-9
IDENTITY_TOLERANCE = 1e-9


class DomainError(ValueError):
    """Raised for arguments outside a correlation function's domain."""


class SignCheckError(AssertionError):
    """A coefficient sign check failed; ``report`` holds the details."""

    def __init__(self, report: SignReport) -> None:
        shown = "; ".join(report.violations[:5])
        super().__init__(f"{report.target} sign check failed ({len(report.violations)} violations): {shown}")
        self.report = report


def _as_rho(rho: Real) -> np.ndarray:
    arr = np.asarray(rho, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(np.abs(arr) > 1.0 + RHO_TOLERANCE):
        raise DomainError(f"rho must lie in [-1, 1], got {rho!r}")
    return np.clip(arr, -1.0, 1.0)


def _result(values: np.ndarray) -> Real:
    return float(values) if np.ndim(values) == 0 else values


# -- pointwise correlation functions -----------------------------------------


def h_nocomm(rho: Real) -> Real:
    """Correlation of the shared-hyperplane protocol without communication."""
    return _result(2.0 / math.pi * np.arcsin(_as_rho(rho)))


def _check_maj_k(k: int) -> int:
    if int(k) != k or k < 0 or int(k) % 2:
        raise DomainError(f"majority needs an even k >= 0, got {k!r}")
    return int(k)


def g_maj(k: int, p: Real) -> Real:
    """``1 - 2 * P[majority of k+1 independent votes is wrong]`` when each vote is wrong with probability ``p``."""
    k = _check_maj_k(k)
    arr = np.asarray(p, dtype=float)
    if np.any(arr < -RHO_TOLERANCE) or np.any(arr > 1.0 + RHO_TOLERANCE):
        raise DomainError(f"p must lie in [0, 1], got {p!r}")
    arr = np.clip(arr, 0.0, 1.0)[..., None]
    i = np.arange(k // 2 + 1)
    terms = special.comb(k + 1, i) * (1.0 - arr) ** i * arr ** (k + 1 - i)
    return _result(1.0 - 2.0 * terms.sum(axis=-1))


def h_maj(k: int, rho: Real) -> Real:
    return g_maj(k, np.arccos(_as_rho(rho)) / math.pi)


def orthant_integrand(sigma: Real) -> Real:
    """``arccos(s^2 / (3 - 2 s^2)) / sqrt(3 - s^2)``; even in ``sigma``."""
    s2 = np.asarray(sigma, dtype=float) ** 2
    return np.arccos(np.clip(s2 / (3.0 - 2.0 * s2), -1.0, 1.0)) / np.sqrt(3.0 - s2)


def _substituted_integrand(u: float) -> float:
    # sigma = 1 - u^2 removes the square-root behaviour of arccos at sigma = 1
    return float(orthant_integrand(1.0 - u * u)) * 2.0 * u


@lru_cache(maxsize=8192)
def orthant_integral(x: float) -> float:
    """Integral of :func:`orthant_integrand` over ``[0, x]`` for ``x`` in [-1, 1]."""
    t = abs(float(x))
    if t > 1.0:
        raise DomainError(f"integration limit must lie in [-1, 1], got {x!r}")
    kwargs = dict(epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
    value, error = integrate.quad(orthant_integrand, 0.0, min(t, QUAD_SPLIT), **kwargs)
    if t > QUAD_SPLIT:
        tail, tail_error = integrate.quad(_substituted_integrand, math.sqrt(1.0 - t), math.sqrt(1.0 - QUAD_SPLIT), **kwargs)
        value += tail
        error += tail_error
    logger.debug("orthant integral to %.6f = %.15f (est. error %.1e)", x, value, error)
    return math.copysign(value, x)


def _h_ort2_scalar(rho: float) -> float:
    return 12.0 / math.pi**2 * orthant_integral(float(rho))


def h_ort(k: int, rho: Real) -> Real:
    """Correlation of the k-bit orthant protocol, k in {0, 1, 2}."""
    arr = _as_rho(rho)
    if k == 0:
        return _result(2.0 / math.pi * np.arcsin(arr))
    if k == 1:
        return _result(4.0 / math.pi * np.arcsin(arr / math.sqrt(2.0)))
    if k == 2:
        values = np.vectorize(_h_ort2_scalar, otypes=[float])(arr)
        return _result(np.clip(values, -1.0, 1.0))
    raise DomainError(f"orthant correlation is only available for k in (0, 1, 2), got {k!r}")


def h_ort_derivative(k: int, rho: Real) -> Real:
    arr = _as_rho(rho)
    with np.errstate(divide="ignore"):
        if k == 0:
            return _result(2.0 / (math.pi * np.sqrt(1.0 - arr**2)))
        if k == 1:
            return _result(4.0 / (math.pi * np.sqrt(2.0 - arr**2)))
    if k == 2:
        return _result(12.0 / math.pi**2 * orthant_integrand(arr))
    raise DomainError(f"orthant correlation is only available for k in (0, 1, 2), got {k!r}")


def mixing_p() -> float:
    """Probability of running the one-bit orthant protocol in the mixed protocol."""
    return (8.0 - 2.0 * math.pi) / (8.0 + (math.sqrt(6.0) - 2.0) * math.pi)


def h_mixed(rho: Real) -> Real:
    p = mixing_p()
    return _result(p * np.asarray(h_ort(1, rho)) + (1.0 - p) * np.asarray(h_ort(2, rho)))


def b_eps_analytic(epsilon: float, h: Optional[Callable[[float], float]] = None) -> float:
    """``2 - h(1 - eps) + h(-1 + eps)``; ``h`` defaults to the one-bit orthant correlation."""
    if not 0.0 < epsilon <= 1.0:
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon!r}")
    func = h if h is not None else (lambda rho: h_ort(1, rho))
    return 2.0 - float(func(1.0 - epsilon)) + float(func(-1.0 + epsilon))


# -- series ------------------------------------------------------------------


def _check_series_order(order: int) -> int:
    if int(order) != order or order < 1 or int(order) % 2 == 0:
        raise SeriesError(f"correlation series need an odd order >= 1, got {order!r}")
    return int(order)


def _scaled_binom(alpha: float, scale: float, order: int) -> Series:
    """Series of ``(1 - scale * t) ** alpha``."""
    return ps_elem("binom", order, alpha).scale_argument(scale)


def _w_series(order: int) -> Series:
    """Series of ``t / (3 - 2 t)``."""
    arr = np.zeros(order + 1)
    arr[1:] = (2.0 / 3.0) ** np.arange(order) / 3.0
    return Series.of(arr)


def _arccos_series(inner: Series, order: int) -> Series:
    """``arccos(inner)`` for an inner series vanishing at 0, via pi/2 - arcsin."""
    return math.pi / 2.0 - ps_compose(ps_elem("arcsin", order), inner, order)


@lru_cache(maxsize=32)
def h_ort2_series(order: int = DEFAULT_MAX_ORDER) -> Series:
    """Odd Maclaurin series of the two-bit orthant correlation.

    The derivative ``12/pi^2 * arccos(u) / sqrt(3 - x^2)`` with
    ``u = x^2 / (3 - 2x^2)`` is expanded in even powers and integrated termwise.
    """
    order = _check_series_order(order)
    half = order // 2
    u = _w_series(half).substitute_power(2, order - 1)
    inv_sqrt = _scaled_binom(-0.5, 1.0 / 3.0, half).substitute_power(2, order - 1) * (1.0 / math.sqrt(3.0))
    derivative = ps_mul(_arccos_series(u, order - 1), inv_sqrt, order - 1) * (12.0 / math.pi**2)
    return Series(ps_integrate(derivative).coeffs, Parity.ODD)


@lru_cache(maxsize=32)
def h1_series(order: int = DEFAULT_MAX_ORDER) -> Series:
    order = _check_series_order(order)
    return ps_elem("arcsin", order).scale_argument(1.0 / math.sqrt(2.0)) * (4.0 / math.pi)


@lru_cache(maxsize=32)
def h_nocomm_series(order: int = DEFAULT_MAX_ORDER) -> Series:
    order = _check_series_order(order)
    return ps_elem("arcsin", order) * (2.0 / math.pi)


@lru_cache(maxsize=32)
def h_mixed_series(order: int = DEFAULT_MAX_ORDER) -> Series:
    p = mixing_p()
    return h1_series(order) * p + h_ort2_series(order) * (1.0 - p)


def _maj_polynomial(k: int) -> Polynomial:
    """``g_maj(k, 1/2 - s)`` as a polynomial in ``s`` (odd, degree k+1)."""
    wrong = Polynomial([0.0, 1.0])
    right = Polynomial([1.0, -1.0])
    total = Polynomial([0.0])
    for i in range(k // 2 + 1):
        total = total + float(special.comb(k + 1, i)) * right**i * wrong ** (k + 1 - i)
    return (1.0 - 2.0 * total)(Polynomial([0.5, -1.0]))


@lru_cache(maxsize=32)
def h_maj_series(k: int, order: int = DEFAULT_MAX_ORDER) -> Series:
    """Series of ``h_maj(k, x) = G(arcsin(x) / pi)`` with ``G`` the majority polynomial."""
    k = _check_maj_k(k)
    order = _check_series_order(order)
    outer = Series(_maj_polynomial(k).coef, Parity.ODD)
    composed = ps_compose(outer, ps_elem("arcsin", order) * (1.0 / math.pi), order)
    return Series(composed.coeffs, Parity.ODD)


def series_max_error(
    series: Series,
    func: Callable[[np.ndarray], np.ndarray],
    lo: float = -0.8,
    hi: float = 0.8,
    points: int = 33,
) -> float:
    """Largest pointwise gap between a truncated series and a reference function."""
    grid = np.linspace(lo, hi, points)
    return float(np.max(np.abs(series(grid) - np.asarray(func(grid), dtype=float))))


# -- coefficient sign checks -------------------------------------------------


def _odd(series: Series) -> List[float]:
    return series.odd_part().tolist()


def _second_derivative_residual(h: Series, h1: Series, h2: Series, half: int) -> float:
    """Max gap between h'' and ``-(24 x / pi^2) H1(x^2) H2(x^2)`` as series."""
    order = h.max_order - 2
    lhs = ps_differentiate(ps_differentiate(h))
    product = ps_mul(h1, h2, half).substitute_power(2, order)
    rhs = ps_mul(Series.monomial(1, order), product, order) * (-24.0 / math.pi**2)
    return float(np.max(np.abs(lhs.coeffs[: order + 1] - rhs.coeffs[: order + 1])))


def _expect(
    violations: List[str],
    constants: Dict[str, float],
    expected: Dict[str, float],
    name: str,
    value: float,
    target: float,
) -> None:
    constants[name] = value
    expected[name] = target
    if abs(value - target) > CONSTANT_TOLERANCE:
        violations.append(f"{name} = {value:.12g}, expected {target:.12g}")


def _nonnegative(violations: List[str], name: str, series: Series, start: int = 0) -> None:
    for degree in range(start, series.max_order + 1):
        if series[degree] < -COEFF_SLACK:
            violations.append(f"{name}[{degree}] = {series[degree]:.3e} is negative")


def _finish(report: SignReport, strict: bool) -> SignReport:
    if report.passed:
        logger.info("%s sign check passed through order %d", report.target, report.order)
    else:
        logger.info("%s sign check found %d violations", report.target, len(report.violations))
        if strict:
            raise SignCheckError(report)
    return report


def check_h2_coeff_signs(order: int = DEFAULT_MAX_ORDER, strict: bool = True) -> SignReport:
    """Verify c_1 > 0 and c_{2k+1} < 0 for the two-bit orthant series.

    Uses ``h''(x) = -(24 x / pi^2) H1(x^2) H2(x^2)`` with
    ``H1(t) = (3-t)^(-3/2) / (3-2t)`` and
    ``H2(t) = 3 sqrt(1-t/3) / sqrt(1-t) - (3-2t)/2 * arccos(t / (3-2t))``,
    both of which must have nonnegative coefficients.
    """
    order = _check_series_order(order)
    half = order // 2
    h1 = ps_mul(
        _scaled_binom(-1.5, 1.0 / 3.0, half) * 3.0**-1.5,
        ps_elem("geom", half).scale_argument(2.0 / 3.0) * (1.0 / 3.0),
        half,
    )
    first = ps_mul(_scaled_binom(0.5, 1.0 / 3.0, half) * 3.0, ps_elem("binom", half, -0.5), half)
    second = ps_mul(Series.of([1.5, -1.0]), _arccos_series(_w_series(half), half), half)
    h2 = first - second
    series = h_ort2_series(order)
    c = _odd(series)

    violations: List[str] = []
    constants: Dict[str, float] = {}
    expected: Dict[str, float] = {}
    _expect(violations, constants, expected, "c1", c[0], 2.0 * math.sqrt(3.0) / math.pi)
    _expect(violations, constants, expected, "H1(0)", h1[0], 3.0**-2.5)
    _expect(violations, constants, expected, "H2(0)", h2[0], 3.0 - 3.0 * math.pi / 4.0)
    _expect(violations, constants, expected, "H2'(0)", h2[1], (3.0 + math.pi) / 2.0)
    if order >= 3:
        residual = _second_derivative_residual(series, h1, h2, half)
        constants["identity_residual"] = residual
        if residual > IDENTITY_TOLERANCE:
            violations.append(f"h'' identity residual {residual:.3e} exceeds {IDENTITY_TOLERANCE:.0e}")
    if not c[0] > 0.0:
        violations.append(f"c_1 = {c[0]:.3e} is not positive")
    for j, value in enumerate(c[1:], start=1):
        if not value < -NEGATIVE_SLACK:
            violations.append(f"c_{2 * j + 1} = {value:.3e} is not negative")
    _nonnegative(violations, "H1", h1)
    _nonnegative(violations, "H2", h2)

    report = SignReport(
        target="ort2",
        order=order,
        passed=not violations,
        constants=constants,
        expected=expected,
        coefficients={"c": c, "H1": h1.tolist(), "H2": h2.tolist()},
        violations=violations,
    )
    return _finish(report, strict)


def check_mixed_signs(order: int = DEFAULT_MAX_ORDER, strict: bool = True) -> SignReport:
    """Verify the sign pattern of the mixed series ``p h1 + (1-p) h2``.

    Here ``h'' = -(24 x / pi^2) H1(x^2) H2(x^2)`` with ``H1 = (2-t)^(-3/2)``,
    ``H2 = -p pi / 6 + (1-p) (3-t)^(-3/2) H3`` and ``H3'' = 3 sqrt(3) / (4 sqrt(2-t)) H4``.
    The choice of ``p`` makes ``H2(0) = 0``, so ``c_3`` vanishes.
    """
    order = _check_series_order(order)
    half = order // 2
    p = mixing_p()
    arccos_w = _arccos_series(_w_series(half), half)

    h1 = _scaled_binom(-1.5, 0.5, half) * 2.0**-1.5
    bracket = ps_mul(
        ps_mul(_scaled_binom(0.5, 1.0 / 3.0, half), ps_elem("binom", half, -0.5), half),
        ps_elem("geom", half).scale_argument(2.0 / 3.0),
        half,
    ) - arccos_w * 0.5
    h3 = ps_mul(_scaled_binom(1.5, 0.5, half) * 2.0**1.5, bracket, half)
    h2 = ps_mul(_scaled_binom(-1.5, 1.0 / 3.0, half) * 3.0**-1.5, h3, half) * (1.0 - p) - p * math.pi / 6.0
    rational = ps_mul(
        ps_mul(Series.of([79.0, -157.0, 85.0, 11.0, -20.0, 4.0]), _scaled_binom(-3.0, 2.0 / 3.0, half) * 3.0**-3, half),
        ps_mul(ps_elem("binom", half, -2.5), _scaled_binom(-0.5, 1.0 / 3.0, half) * 3.0**-0.5, half),
        half,
    )
    h4 = rational - arccos_w * (1.0 / (2.0 * math.sqrt(3.0)))
    series = h_mixed_series(order)
    c = _odd(series)

    violations: List[str] = []
    constants: Dict[str, float] = {"p": p}
    expected: Dict[str, float] = {}
    _expect(violations, constants, expected, "c1", c[0], p * 4.0 / (math.pi * math.sqrt(2.0)) + (1.0 - p) * 2.0 * math.sqrt(3.0) / math.pi)
    _expect(violations, constants, expected, "H2(0)", h2[0], 0.0)
    _expect(violations, constants, expected, "H3(0)", h3[0], (4.0 - math.pi) / math.sqrt(2.0))
    _expect(violations, constants, expected, "H3'(0)", h3[1], (20.0 + 9.0 * math.pi) / (12.0 * math.sqrt(2.0)))
    _expect(violations, constants, expected, "H4(0)", h4[0], (316.0 - 27.0 * math.pi) / (108.0 * math.sqrt(3.0)))
    if abs(h2[0]) > RHO_TOLERANCE:
        violations.append(f"H2(0) = {h2[0]:.3e} does not vanish")
    if order >= 3:
        residual = _second_derivative_residual(series, h1, h2, half)
        constants["identity_residual"] = residual
        if residual > IDENTITY_TOLERANCE:
            violations.append(f"h'' identity residual {residual:.3e} exceeds {IDENTITY_TOLERANCE:.0e}")
    if half >= 2:
        lhs = ps_differentiate(ps_differentiate(h3))
        rhs = ps_mul(_scaled_binom(-0.5, 0.5, half - 2) * 2.0**-0.5, h4, half - 2) * (3.0 * math.sqrt(3.0) / 4.0)
        residual = float(np.max(np.abs(lhs.coeffs - rhs.coeffs)))
        constants["H3_identity_residual"] = residual
        if residual > IDENTITY_TOLERANCE:
            violations.append(f"H3'' identity residual {residual:.3e} exceeds {IDENTITY_TOLERANCE:.0e}")
    if not c[0] > 0.0:
        violations.append(f"c_1 = {c[0]:.3e} is not positive")
    for j, value in enumerate(c[1:], start=1):
        if value > NONPOSITIVE_SLACK:
            violations.append(f"c_{2 * j + 1} = {value:.3e} is positive")
    _nonnegative(violations, "H1", h1)
    _nonnegative(violations, "H2", h2, start=1)
    _nonnegative(violations, "H3", h3)
    _nonnegative(violations, "H4", h4)

    report = SignReport(
        target="mixed",
        order=order,
        passed=not violations,
        constants=constants,
        expected=expected,
        coefficients={"c": c, "H1": h1.tolist(), "H2": h2.tolist(), "H3": h3.tolist(), "H4": h4.tolist()},
        violations=violations,
    )
    return _finish(report, strict)


def check_maj4_signs(order: int = DEFAULT_MAX_ORDER, strict: bool = True) -> SignReport:
    """Numeric sign check of the four-bit majority series (no closed-form argument)."""
    order = _check_series_order(order)
    series = h_maj_series(4, order)
    c = _odd(series)
    violations: List[str] = []
    constants: Dict[str, float] = {}
    expected: Dict[str, float] = {}
    _expect(violations, constants, expected, "c1", c[0], 15.0 / (4.0 * math.pi))
    if order >= 3:
        _expect(violations, constants, expected, "c3", c[1], 15.0 / (24.0 * math.pi) - 10.0 / math.pi**3)
    if not c[0] > 0.0:
        violations.append(f"c_1 = {c[0]:.3e} is not positive")
    for j, value in enumerate(c[1:], start=1):
        if value > NONPOSITIVE_SLACK:
            violations.append(f"c_{2 * j + 1} = {value:.3e} is positive")
    report = SignReport(
        target="maj4",
        order=order,
        passed=not violations,
        constants=constants,
        expected=expected,
        coefficients={"c": c},
        violations=violations,
    )
    return _finish(report, strict)


SIGN_CHECKS: Dict[str, Callable[..., SignReport]] = {
    "ort2": check_h2_coeff_signs,
    "mixed": check_mixed_signs,
    "maj4": check_maj4_signs,
}


# -- correlation function values ---------------------------------------------


@dataclass(frozen=True)
class CorrelationFunction:
    """A protocol's correlation function with its invariant checks."""

    kind: str
    k: Optional[int] = None
    evaluator: Callable[[Real], Real] = field(default=h_nocomm, repr=False, compare=False)
    tolerance: float = 1e-8

    def __call__(self, rho: Real) -> Real:
        return self.evaluator(rho)

    @property
    def name(self) -> str:
        return self.kind if self.k is None else f"{self.kind}{self.k}"

    def series(self, order: int = DEFAULT_MAX_ORDER) -> Series:
        if self.kind == "nocomm" or (self.kind == "ort" and self.k == 0):
            return h_nocomm_series(order)
        if self.kind == "ort" and self.k == 1:
            return h1_series(order)
        if self.kind == "ort" and self.k == 2:
            return h_ort2_series(order)
        if self.kind == "maj":
            return h_maj_series(int(self.k), order)
        if self.kind == "mixed":
            return h_mixed_series(order)
        raise SeriesError(f"no series available for {self.name}")

    def invariant_violations(self, points: int = 201) -> List[str]:
        """Endpoint, oddness, range and monotonicity checks on an even grid."""
        grid = np.linspace(-1.0, 1.0, points)
        values = np.asarray(self(grid), dtype=float)
        tol = self.tolerance
        problems: List[str] = []
        if abs(values[-1] - 1.0) > tol:
            problems.append(f"h(1) = {values[-1]:.12g}")
        if abs(values[0] + 1.0) > tol:
            problems.append(f"h(-1) = {values[0]:.12g}")
        oddness = float(np.max(np.abs(values + values[::-1])))
        if oddness > tol:
            problems.append(f"oddness defect {oddness:.3e}")
        if np.any(np.abs(values) > 1.0 + tol):
            problems.append("values leave [-1, 1]")
        drop = float(np.min(np.diff(values)))
        if drop < -tol:
            problems.append(f"decreasing step {drop:.3e}")
        return problems


def correlation_function(kind: str, k: Optional[int] = None) -> CorrelationFunction:
    """Build the correlation function of a protocol family."""
    if kind == "nocomm":
        return CorrelationFunction("nocomm", None, h_nocomm)
    if kind == "maj":
        k = _check_maj_k(0 if k is None else k)
        return CorrelationFunction("maj", k, lambda rho: h_maj(k, rho))
    if kind == "ort":
        if k not in (0, 1, 2):
            raise DomainError(f"orthant correlation is only available for k in (0, 1, 2), got {k!r}")
        return CorrelationFunction("ort", k, lambda rho: h_ort(k, rho), 1e-6 if k == 2 else 1e-8)
    if kind == "mixed":
        return CorrelationFunction("mixed", None, h_mixed, 1e-6)
    raise DomainError(f"unknown correlation function kind {kind!r}")
