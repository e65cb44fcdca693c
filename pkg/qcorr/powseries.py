"""Truncated formal power series in one variable.

A :class:`Series` stores the Maclaurin coefficients ``c[0..max_order]`` of a
function as a read-only float array together with a declared parity. Every
operation returns a new series; nothing is mutated in place, so series can be
cached and shared between threads.

Coefficients past an operand's ``max_order`` are treated as zero by the
module-level ``ps_*`` functions (a polynomial is a series of its own degree),
while the arithmetic operators keep the lower of the two orders.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as npoly

logger = logging.getLogger(__name__)

DEFAULT_MAX_ORDER = 61
PARITY_TOLERANCE = 1e-12

ELEMENTARY_NAMES = ("arcsin", "sqrt1m", "geom", "binom")


class SeriesError(ValueError):
    """Raised for malformed series or unsupported series operations."""


class Parity(str, Enum):
    ODD = "odd"
    EVEN = "even"
    NONE = "none"


def infer_parity(coeffs: Sequence[float]) -> Parity:
    arr = np.asarray(coeffs, dtype=float)
    if not np.any(arr[0::2]):
        return Parity.ODD
    if not np.any(arr[1::2]):
        return Parity.EVEN
    return Parity.NONE


def _product_parity(a: Parity, b: Parity) -> Parity:
    if Parity.NONE in (a, b):
        return Parity.NONE
    return Parity.EVEN if a is b else Parity.ODD


def _composed_parity(outer: Parity, inner: Parity) -> Parity:
    if outer is Parity.EVEN and inner is not Parity.NONE:
        return Parity.EVEN
    if outer is Parity.ODD and inner is Parity.ODD:
        return Parity.ODD
    if outer is Parity.ODD and inner is Parity.EVEN:
        return Parity.EVEN
    return Parity.NONE


def _padded(coeffs: np.ndarray, order: int) -> np.ndarray:
    out = np.zeros(order + 1)
    top = min(order, coeffs.size - 1)
    out[: top + 1] = coeffs[: top + 1]
    return out


def _check_order(order: int) -> int:
    if int(order) != order or order < 0:
        raise SeriesError(f"order must be a nonnegative integer, got {order!r}")
    return int(order)


@dataclass(frozen=True, eq=False)
class Series:
    """Truncated power series ``sum(coeffs[k] * x**k for k <= max_order)``."""

    coeffs: np.ndarray
    parity: Parity = Parity.NONE

    def __post_init__(self) -> None:
        arr = np.array(self.coeffs, dtype=float).ravel()
        if arr.size == 0:
            raise SeriesError("a series needs at least one coefficient")
        if not np.all(np.isfinite(arr)):
            raise SeriesError("series coefficients must be finite")
        parity = Parity(self.parity)
        scale = max(1.0, float(np.max(np.abs(arr))))
        if parity is Parity.ODD:
            stray = arr[0::2]
        elif parity is Parity.EVEN:
            stray = arr[1::2]
        else:
            stray = np.zeros(0)
        if stray.size and np.max(np.abs(stray)) > PARITY_TOLERANCE * scale:
            raise SeriesError(f"coefficients contradict declared parity {parity.value}")
        if parity is Parity.ODD:
            arr[0::2] = 0.0
        elif parity is Parity.EVEN:
            arr[1::2] = 0.0
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "parity", parity)

    # -- construction -------------------------------------------------
    @classmethod
    def of(cls, coeffs: Sequence[float], parity: Optional[Parity] = None) -> "Series":
        """Build a series, inferring parity from exact zeros when not given."""
        arr = np.asarray(coeffs, dtype=float)
        return cls(arr, parity if parity is not None else infer_parity(arr))

    @classmethod
    def zero(cls, order: int) -> "Series":
        return cls(np.zeros(_check_order(order) + 1), Parity.NONE)

    @classmethod
    def identity(cls, order: int) -> "Series":
        order = _check_order(order)
        if order < 1:
            raise SeriesError("the identity series needs order >= 1")
        return cls.monomial(1, order)

    @classmethod
    def monomial(cls, degree: int, order: int, coefficient: float = 1.0) -> "Series":
        order = _check_order(order)
        arr = np.zeros(order + 1)
        if degree <= order:
            arr[degree] = coefficient
        return cls(arr, Parity.ODD if degree % 2 else Parity.EVEN)

    # -- inspection ---------------------------------------------------
    @property
    def max_order(self) -> int:
        return self.coeffs.size - 1

    def __len__(self) -> int:
        return self.coeffs.size

    def __getitem__(self, degree: int) -> float:
        if degree < 0:
            raise IndexError("negative degree")
        if degree > self.max_order:
            return 0.0
        return float(self.coeffs[degree])

    def __repr__(self) -> str:
        return f"Series(order={self.max_order}, parity={self.parity.value}, coeffs={self.coeffs.tolist()!r})"

    def __call__(self, x):
        """Evaluate the truncated series pointwise (scalars or arrays)."""
        return npoly.polyval(x, self.coeffs)

    def odd_part(self) -> np.ndarray:
        """Coefficients of degrees 1, 3, 5, ... as an array."""
        return self.coeffs[1::2].copy()

    def tolist(self) -> list:
        return self.coeffs.tolist()

    def truncate(self, order: int) -> "Series":
        order = _check_order(order)
        return Series(_padded(self.coeffs, order), self.parity)

    def scale_argument(self, factor: float) -> "Series":
        """Series of ``x -> f(factor * x)``."""
        powers = float(factor) ** np.arange(self.coeffs.size)
        return Series(self.coeffs * powers, self.parity)

    def substitute_power(self, power: int, order: int) -> "Series":
        """Series of ``x -> f(x**power)`` truncated at ``order``."""
        order = _check_order(order)
        arr = np.zeros(order + 1)
        degrees = np.arange(self.coeffs.size) * power
        keep = degrees <= order
        arr[degrees[keep]] = self.coeffs[keep]
        return Series.of(arr)

    def allclose(self, other: "Series", atol: float = 1e-12) -> bool:
        order = max(self.max_order, other.max_order)
        return bool(np.allclose(_padded(self.coeffs, order), _padded(other.coeffs, order), rtol=0.0, atol=atol))

    # -- arithmetic ---------------------------------------------------
    def _common(self, other: "Series") -> int:
        return min(self.max_order, other.max_order)

    def __add__(self, other: Union["Series", float]) -> "Series":
        if isinstance(other, Series):
            order = self._common(other)
            parity = self.parity if self.parity is other.parity else Parity.NONE
            return Series.of(self.coeffs[: order + 1] + other.coeffs[: order + 1], None if parity is Parity.NONE else parity)
        arr = self.coeffs.copy()
        arr[0] += float(other)
        return Series.of(arr)

    __radd__ = __add__

    def __neg__(self) -> "Series":
        return Series(-self.coeffs, self.parity)

    def __sub__(self, other: Union["Series", float]) -> "Series":
        return self + (-other)

    def __rsub__(self, other: float) -> "Series":
        return (-self) + other

    def __mul__(self, other: Union["Series", float]) -> "Series":
        if isinstance(other, Series):
            return ps_mul(self, other, self._common(other))
        return Series(self.coeffs * float(other), self.parity)

    __rmul__ = __mul__

    def __truediv__(self, other: Union["Series", float]) -> "Series":
        if isinstance(other, Series):
            order = self._common(other)
            return ps_mul(self, ps_reciprocal(other, order), order)
        return Series(self.coeffs / float(other), self.parity)


def ps_mul(a: Series, b: Series, order: int) -> Series:
    """Cauchy product of ``a`` and ``b`` truncated at ``order``."""
    order = _check_order(order)
    prod = np.convolve(_padded(a.coeffs, order), _padded(b.coeffs, order))[: order + 1]
    return Series(prod, _product_parity(a.parity, b.parity))


def ps_pow_int(f: Series, power: int, order: int) -> Series:
    if power < 0:
        return ps_pow_int(ps_reciprocal(f, order), -power, order)
    result = Series.monomial(0, order)
    base = f.truncate(order)
    while power:
        if power & 1:
            result = ps_mul(result, base, order)
        power >>= 1
        if power:
            base = ps_mul(base, base, order)
    return result


def ps_reciprocal(f: Series, order: int) -> Series:
    """Series of ``1 / f``; requires a nonzero constant term."""
    order = _check_order(order)
    c = _padded(f.coeffs, order)
    if c[0] == 0.0:
        raise SeriesError("reciprocal needs a nonzero constant term")
    r = np.zeros(order + 1)
    r[0] = 1.0 / c[0]
    for n in range(1, order + 1):
        r[n] = -np.dot(c[1 : n + 1], r[n - 1 :: -1]) / c[0]
    return Series.of(r)


def ps_compose(outer: Series, inner: Series, order: int) -> Series:
    """Taylor coefficients of ``outer(inner(x))`` through degree ``order``.

    Horner evaluation in the ring of truncated series; ``inner`` must vanish
    at zero so that only finitely many terms of ``outer`` contribute.
    """
    order = _check_order(order)
    if inner[0] != 0.0:
        raise SeriesError("inner series must have zero constant term")
    inner_c = _padded(inner.coeffs, order)
    top = min(outer.max_order, order)
    acc = np.zeros(order + 1)
    for coefficient in outer.coeffs[: top + 1][::-1]:
        acc = np.convolve(acc, inner_c)[: order + 1]
        acc[0] += coefficient
    parity = _composed_parity(outer.parity, inner.parity)
    if parity is Parity.NONE:
        return Series.of(acc)
    return Series(acc, parity)


def _check_revertible(f: Series) -> float:
    if f[0] != 0.0:
        raise SeriesError("reversion needs a zero constant term")
    if f[1] == 0.0:
        raise SeriesError("reversion needs a nonzero linear coefficient")
    return f[1]


def ps_revert(f: Series, order: int) -> Series:
    """Compositional inverse ``g`` with ``f(g(x)) = x`` through ``order``.

    Solves the composition equations degree by degree: with ``g_m`` still
    zero, the degree-``m`` coefficient of ``f(g)`` must be cancelled by
    ``f_1 * g_m``.
    """
    order = _check_order(order)
    f1 = _check_revertible(f)
    odd = f.parity is Parity.ODD
    g = np.zeros(order + 1)
    if order >= 1:
        g[1] = 1.0 / f1
    for m in range(2, order + 1):
        if odd and m % 2 == 0:
            continue
        partial = ps_compose(f, Series(g), m)
        g[m] = -partial[m] / f1
    return Series.of(g, Parity.ODD if odd else None)


def ps_revert_newton(f: Series, order: int) -> Series:
    """Compositional inverse by Newton iteration on series.

    Each step ``g <- g - (f(g) - x) / f'(g)`` doubles the number of correct
    coefficients, so ``log2(order)`` compositions suffice.
    """
    order = _check_order(order)
    f1 = _check_revertible(f)
    df = ps_differentiate(f)
    g = Series.monomial(1, order, 1.0 / f1)
    correct = 1
    while correct < order:
        correct = min(2 * correct + 1, order)
        residual = ps_compose(f, g, correct) - Series.identity(correct)
        slope = ps_compose(df, g, correct)
        g = g.truncate(correct) - ps_mul(residual, ps_reciprocal(slope, correct), correct)
    g = g.truncate(order)
    return Series(g.coeffs, Parity.ODD) if f.parity is Parity.ODD else g


def ps_revert_lagrange(f: Series, order: int) -> Series:
    """Compositional inverse from Lagrange inversion.

    ``g_n = [x^(n-1)] (x / f(x))**n / n``; kept as an independent check on
    :func:`ps_revert`.
    """
    order = _check_order(order)
    f1 = _check_revertible(f)
    if order < 1:
        return Series.zero(order)
    quotient = Series.of(_padded(f.coeffs, order + 1)[1:])
    phi = ps_reciprocal(quotient, order - 1)
    g = np.zeros(order + 1)
    g[1] = 1.0 / f1
    power = phi
    for n in range(2, order + 1):
        power = ps_mul(power, phi, order - 1)
        g[n] = power[n - 1] / n
    return Series(g, Parity.ODD) if f.parity is Parity.ODD else Series.of(g)


def ps_integrate(f: Series) -> Series:
    """Termwise antiderivative with zero constant term."""
    arr = npoly.polyint(f.coeffs)
    parity = {Parity.ODD: Parity.EVEN, Parity.EVEN: Parity.ODD}.get(f.parity, Parity.NONE)
    return Series(arr, parity) if parity is not Parity.NONE else Series.of(arr)


def ps_differentiate(f: Series) -> Series:
    """Termwise derivative; the order drops by one (a constant stays a constant)."""
    if f.max_order == 0:
        return Series(np.zeros(1), Parity.EVEN)
    arr = npoly.polyder(f.coeffs)
    parity = {Parity.ODD: Parity.EVEN, Parity.EVEN: Parity.ODD}.get(f.parity, Parity.NONE)
    return Series(arr, parity) if parity is not Parity.NONE else Series.of(arr)


def ps_elem(name: str, order: int, alpha: Optional[float] = None) -> Series:
    """Maclaurin series of an elementary function.

    ``arcsin``: arcsin(x); ``sqrt1m``: sqrt(1 - x); ``geom``: 1 / (1 - x);
    ``binom``: (1 - x)**alpha.
    """
    order = _check_order(order)
    k = np.arange(order + 1)
    if name == "arcsin":
        arr = np.zeros(order + 1)
        j = np.arange((order - 1) // 2 + 1)
        # c_j / c_{j-1} = (2j-1)^2 / (2j (2j+1)) for the x^(2j+1) coefficient
        ratios = np.ones_like(j, dtype=float)
        ratios[1:] = (2 * j[1:] - 1) ** 2 / ((2 * j[1:]) * (2 * j[1:] + 1))
        arr[1::2] = np.cumprod(ratios)[: arr[1::2].size]
        return Series(arr, Parity.ODD)
    if name == "geom":
        return Series(np.ones(order + 1), Parity.NONE if order else Parity.EVEN)
    if name == "sqrt1m":
        alpha = 0.5
    elif name == "binom":
        if alpha is None:
            raise SeriesError("binom needs an exponent alpha")
    else:
        raise SeriesError(f"unknown elementary series {name!r}; expected one of {ELEMENTARY_NAMES}")
    # c_k = c_{k-1} (k - 1 - alpha) / k, finite for negative integer alpha
    ratios = np.ones(order + 1)
    ratios[1:] = (k[1:] - 1.0 - float(alpha)) / k[1:]
    return Series.of(np.cumprod(ratios))
