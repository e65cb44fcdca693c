"""Inverse correlation series and the tensor-power embedding built from it.

If ``h`` is odd with ``h(1) = 1``, a positive linear term and nonpositive
higher odd terms, then ``f = h^-1`` has nonnegative coefficients ``d_k`` that
sum to 1. Mapping ``v -> (sqrt(d_k) v^{(x)k})_k`` then gives
``<C(a), C(b)> = f(<a, b>)``, and running the original protocol on the mapped
inputs yields correlation ``h(f(rho)) = rho``. The infinite map is truncated at
degree ``K``; the dropped mass goes into one shared coordinate so the
embedded vectors stay unit length.
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np

from .constants import DEFAULT_MAX_DIM, DEFAULT_TARGET_TAIL
from .corrfun import DomainError, h_mixed_series, h_ort2_series
from .models import CorrEstimate
from .montecarlo import chunk_size_for, run_chunked, sign
from .powseries import DEFAULT_MAX_ORDER, Parity, Series, SeriesError, ps_revert

logger = logging.getLogger(__name__)

POSITIVITY_SLACK = 1e-15
BOUND_SLACK = 1e-12
MASS_SLACK = 1e-9
NORM_TOLERANCE = 1e-8


class CoefficientBoundViolation(ArithmeticError):
    """The inverse series breaks nonnegativity, the ``d_k <= 1/k`` bound or the unit mass."""

    def __init__(self, inverse: "InverseSeries", violations: List[str]) -> None:
        shown = "; ".join(violations[:5])
        super().__init__(f"inverse of {inverse.source} violates {len(violations)} coefficient bounds: {shown}")
        self.inverse = inverse
        self.violations = violations


class EmbeddingError(ValueError):
    """Input is not a unit vector, or the embedding would exceed its dimension budget."""


@dataclass(frozen=True, eq=False)
class InverseSeries:
    """Series ``f = h^-1`` with coefficients ``d_k``."""

    d: Series
    source: str = "custom"

    @property
    def order(self) -> int:
        return self.d.max_order

    def partial_mass(self, truncation: Optional[int] = None) -> float:
        top = self.order if truncation is None else min(int(truncation), self.order)
        return float(np.sum(self.d.coeffs[: top + 1]))

    def tail_mass(self, truncation: Optional[int] = None) -> float:
        return max(0.0, 1.0 - self.partial_mass(truncation))

    def bound_margins(self) -> List[float]:
        """``1/k - d_k`` for every odd degree ``k``."""
        degrees = np.arange(1, self.order + 1, 2)
        return (1.0 / degrees - self.d.coeffs[1::2]).tolist()

    def violations(self) -> List[str]:
        problems: List[str] = []
        for degree in range(1, self.order + 1):
            value = self.d[degree]
            if value < -POSITIVITY_SLACK:
                problems.append(f"d_{degree} = {value:.6g} is negative")
            if value > 1.0 / degree + BOUND_SLACK:
                problems.append(f"d_{degree} = {value:.6g} exceeds 1/{degree}")
        mass = self.partial_mass()
        if mass > 1.0 + MASS_SLACK:
            problems.append(f"partial mass {mass:.12g} exceeds 1")
        return problems

    def tail_bound(self, x: float, truncation: Optional[int] = None) -> float:
        """Bound on ``sum_{k > K} d_k |x|^k`` given nonnegative coefficients."""
        top = self.order if truncation is None else min(int(truncation), self.order)
        return self.tail_mass(top) * abs(x) ** (top + 1)

    def evaluate(self, x: float, truncation: Optional[int] = None) -> float:
        """Partial sum of ``f`` at ``x``; exact ``+-1`` at the endpoints since ``h(+-1) = +-1``."""
        if abs(x) > 1.0 + 1e-12:
            raise DomainError(f"x must lie in [-1, 1], got {x!r}")
        if abs(x) >= 1.0:
            return math.copysign(1.0, x)
        series = self.d if truncation is None else self.d.truncate(min(int(truncation), self.order))
        return float(series(x))


def invert_h(h: Series, order: Optional[int] = None, source: str = "custom", strict: bool = True) -> InverseSeries:
    """Revert an odd correlation series and run the coefficient checks on the result."""
    order = h.max_order if order is None else int(order)
    if h.parity is not Parity.ODD:
        raise SeriesError("correlation series must be odd")
    if not h[1] > 0.0:
        raise SeriesError(f"correlation series needs a positive linear coefficient, got {h[1]!r}")
    inverse = InverseSeries(ps_revert(h.truncate(order), order), source)
    problems = inverse.violations()
    if problems:
        if strict:
            raise CoefficientBoundViolation(inverse, problems)
        logger.warning("inverse of %s violates %d coefficient bounds", source, len(problems))
    else:
        logger.debug("inverse of %s: order %d, tail mass %.3e", source, order, inverse.tail_mass())
    return inverse


SOURCES = ("ort2", "mixed")


@lru_cache(maxsize=16)
def standard_inverse(source: str, order: int = DEFAULT_MAX_ORDER) -> InverseSeries:
    """Checked inverse of the two-bit orthant (``ort2``) or mixed (``mixed``) correlation series."""
    if source == "ort2":
        series = h_ort2_series(order)
    elif source == "mixed":
        series = h_mixed_series(order)
    else:
        raise DomainError(f"unknown inverse source {source!r}; expected one of {SOURCES}")
    return invert_h(series, order, source=source)


# -- embedding ---------------------------------------------------------------


def _emitted_degrees(inverse: InverseSeries, truncation: int) -> Tuple[int, ...]:
    return tuple(k for k in range(1, truncation + 1) if inverse.d[k] > 0.0)


def embedded_dimension(inverse: InverseSeries, n: int, truncation: int) -> int:
    return sum(n**k for k in _emitted_degrees(inverse, truncation)) + 1


@dataclass(frozen=True, eq=False)
class Embedding:
    """Truncated tensor-power map ``v -> (sqrt(d_k) v^{(x)k})_{k <= K} + (sqrt(tail),)``."""

    inverse: InverseSeries
    source_dim: int
    truncation: int
    degrees: Tuple[int, ...] = field(init=False)
    scales: np.ndarray = field(init=False, repr=False)
    tail_mass: float = field(init=False)

    def __post_init__(self) -> None:
        if self.truncation < 1 or self.truncation > self.inverse.order:
            raise EmbeddingError(f"truncation must lie in [1, {self.inverse.order}], got {self.truncation}")
        degrees = _emitted_degrees(self.inverse, self.truncation)
        scales = np.sqrt(np.array([self.inverse.d[k] for k in degrees]))
        scales.flags.writeable = False
        object.__setattr__(self, "degrees", degrees)
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "tail_mass", self.inverse.tail_mass(self.truncation))

    @property
    def embedded_dim(self) -> int:
        return sum(self.source_dim**k for k in self.degrees) + 1

    @property
    def bias_bound(self) -> float:
        """Bound on ``|<C(a), C(b)> - f(<a, b>)|``."""
        return 2.0 * self.tail_mass


def as_unit_vector(v, dim: Optional[int] = None) -> np.ndarray:
    """Validated unit vector: renormalized within 1e-8 of unit norm, rejected otherwise."""
    arr = np.array(v, dtype=float).ravel()
    if dim is not None and arr.size != dim:
        raise EmbeddingError(f"expected a vector of dimension {dim}, got {arr.size}")
    norm = float(np.linalg.norm(arr))
    if not math.isfinite(norm) or abs(norm - 1.0) > NORM_TOLERANCE:
        raise EmbeddingError(f"expected a unit vector, got norm {norm!r}")
    return arr / norm


def embed(v, embedding: Embedding) -> np.ndarray:
    """Map a unit vector into the truncated embedding space (unit norm result)."""
    arr = as_unit_vector(v, embedding.source_dim)
    blocks = [scale * functools.reduce(np.kron, [arr] * degree) for degree, scale in zip(embedding.degrees, embedding.scales)]
    blocks.append(np.array([math.sqrt(embedding.tail_mass)]))
    return np.concatenate(blocks)


def default_truncation(
    inverse: InverseSeries,
    n: int,
    max_dim: int = DEFAULT_MAX_DIM,
    target_tail: float = DEFAULT_TARGET_TAIL,
) -> int:
    """Smallest ``K`` with tail mass <= ``target_tail`` within the budget, else the largest feasible ``K``."""
    best: Optional[int] = None
    for truncation in range(1, inverse.order + 1):
        if inverse.d[truncation] == 0.0 and truncation > 1:
            continue
        if embedded_dimension(inverse, n, truncation) > max_dim:
            break
        best = truncation
        if inverse.tail_mass(truncation) <= target_tail:
            break
    if best is None:
        raise EmbeddingError(f"no truncation fits n={n} into {max_dim} dimensions")
    tail = inverse.tail_mass(best)
    if tail > target_tail:
        logger.info("truncation K=%d for n=%d leaves tail mass %.4f (target %.0e not reachable within %d dims)", best, n, tail, target_tail, max_dim)
    else:
        logger.info("truncation K=%d for n=%d, tail mass %.2e", best, n, tail)
    return best


def build_embedding(
    inverse: InverseSeries,
    n: int,
    truncation: Optional[int] = None,
    max_dim: int = DEFAULT_MAX_DIM,
    target_tail: float = DEFAULT_TARGET_TAIL,
) -> Embedding:
    if n < 1:
        raise EmbeddingError(f"input dimension must be >= 1, got {n}")
    if truncation is None:
        truncation = default_truncation(inverse, n, max_dim, target_tail)
    elif embedded_dimension(inverse, n, truncation) > max_dim:
        raise EmbeddingError(
            f"truncation {truncation} needs {embedded_dimension(inverse, n, truncation)} dimensions, budget is {max_dim}"
        )
    return Embedding(inverse, n, truncation)


@lru_cache(maxsize=64)
def standard_embedding(
    source: str,
    n: int,
    order: int = DEFAULT_MAX_ORDER,
    truncation: Optional[int] = None,
    max_dim: int = DEFAULT_MAX_DIM,
) -> Embedding:
    return build_embedding(standard_inverse(source, order), n, truncation, max_dim)


# -- distribution-level oracle -----------------------------------------------


def exact_corr_oracle(
    rho: float,
    inverse: InverseSeries,
    k: int = 2,
    trials: int = 10**6,
    seed: int = 0,
    workers: int = 1,
) -> CorrEstimate:
    """Correlation of the k-bit orthant protocol run on ideally embedded inputs.

    Each row of ``G`` contributes an independent normal pair with correlation
    ``f(rho)``, so the protocol is simulated on those pairs directly.
    """
    if abs(rho) > 1.0 + 1e-12:
        raise DomainError(f"rho must lie in [-1, 1], got {rho!r}")
    r = inverse.evaluate(rho)
    if abs(r) > 1.0 + 1e-12:
        raise DomainError(f"f({rho}) = {r} leaves [-1, 1]; the inverse series is not accurate here")
    r = min(1.0, max(-1.0, r))
    spread = math.sqrt(max(0.0, 1.0 - r * r))

    def work(rng: np.random.Generator, size: int) -> int:
        x = rng.standard_normal((size, k + 1))
        y = r * x + spread * rng.standard_normal((size, k + 1))
        alice = sign(x)
        alpha = alice[:, 0]
        codes = alice * alpha[:, None]
        beta = sign(np.sum(codes * y, axis=1))
        return int(np.sum(alpha.astype(np.int64) * beta))

    total = sum(run_chunked(work, trials, seed, (), chunk_size_for(2 * (k + 1)), workers))
    return CorrEstimate.from_sum(total, trials)
