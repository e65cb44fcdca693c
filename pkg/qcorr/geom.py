"""Spherical and Gaussian geometry behind the orthant protocol.

The k-bit orthant correlation equals ``2^(k+2) P - 1`` where ``P`` is the
probability that a centred Gaussian with covariance ``M'`` lands in the
positive orthant. Whitening by the Cholesky factor turns that orthant into
the cone spanned by the rows of ``C^-1``; for k = 1 the cone cuts a spherical
triangle (Girard's formula) and for k = 2 a spherical tetrahedron whose volume
follows from Schlafli's formula.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy import linalg

from .corrfun import DomainError, orthant_integral, orthant_integrand
from .models import OrthantEstimate
from .montecarlo import chunk_size_for, run_chunked

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-12
WEDGE_TOLERANCE = 1e-10
SCHLAFLI_STEP = 1e-5

Edge = Tuple[int, int]


class DegenerateSimplexError(ValueError):
    """Vertices are not unit vectors or do not span a proper cone."""


def _vectors(*vectors: Sequence[float]) -> np.ndarray:
    return np.array([np.asarray(v, dtype=float) for v in vectors])


def wedge_ip(a1, a2, a3, b1, b2, b3) -> float:
    """Inner product of ``a1^a2^a3`` and ``b1^b2^b3``: det of the pairwise inner products."""
    a = _vectors(a1, a2, a3)
    b = _vectors(b1, b2, b3)
    return float(np.linalg.det(a @ b.T))


def wedge_norm(a1, a2, a3) -> float:
    return math.sqrt(max(0.0, wedge_ip(a1, a2, a3, a1, a2, a3)))


@dataclass(frozen=True, eq=False)
class SphericalSimplex:
    """Spherical simplex given by linearly independent unit vertices."""

    vertices: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.vertices, dtype=float)
        if arr.ndim != 2 or arr.shape[0] > arr.shape[1]:
            raise DegenerateSimplexError(f"need at most dim vertices as rows, got shape {arr.shape}")
        norms = np.linalg.norm(arr, axis=1)
        if np.any(np.abs(norms - 1.0) > NORM_TOLERANCE):
            raise DegenerateSimplexError(f"vertices must be unit vectors, norms {norms.tolist()}")
        singular = np.linalg.svd(arr, compute_uv=False)
        if singular[-1] < WEDGE_TOLERANCE:
            raise DegenerateSimplexError("vertices are linearly dependent")
        arr.flags.writeable = False
        object.__setattr__(self, "vertices", arr)

    @property
    def size(self) -> int:
        return self.vertices.shape[0]

    def edge_lengths(self) -> Dict[Edge, float]:
        """Spherical edge lengths ``theta_ij = arccos <v_i, v_j>``."""
        gram = np.clip(self.vertices @ self.vertices.T, -1.0, 1.0)
        return {(i, j): float(np.arccos(gram[i, j])) for i, j in itertools.combinations(range(self.size), 2)}

    def dihedral_angles(self) -> Dict[Edge, float]:
        return dihedral_angles(self)


def edge_lengths(simplex: SphericalSimplex) -> Dict[Edge, float]:
    return simplex.edge_lengths()


def dihedral_angles(simplex: SphericalSimplex) -> Dict[Edge, float]:
    """All six dihedral angles of a spherical tetrahedron from wedge products.

    The angle at edge ``ij`` is the one between the faces ``ijk`` and ``ijl``.
    """
    if simplex.size != 4:
        raise DegenerateSimplexError(f"dihedral angles need 4 vertices, got {simplex.size}")
    v = simplex.vertices
    angles: Dict[Edge, float] = {}
    for i, j in itertools.combinations(range(4), 2):
        k, l = (m for m in range(4) if m not in (i, j))
        left = wedge_norm(v[i], v[j], v[k])
        right = wedge_norm(v[i], v[j], v[l])
        if min(left, right) < WEDGE_TOLERANCE:
            raise DegenerateSimplexError(f"face through edge {(i, j)} is degenerate")
        cosine = wedge_ip(v[i], v[j], v[k], v[i], v[j], v[l]) / (left * right)
        angles[(i, j)] = float(np.arccos(np.clip(cosine, -1.0, 1.0)))
    return angles


def girard_area(v1, v2, v3) -> float:
    """Area of the spherical triangle with vertices ``v1, v2, v3`` on the unit sphere."""
    simplex = SphericalSimplex(_vectors(v1, v2, v3))
    v = simplex.vertices
    total = 0.0
    for i in range(3):
        apex = v[i]
        p, q = (v[j] - np.dot(v[j], apex) * apex for j in range(3) if j != i)
        cosine = np.dot(p, q) / (np.linalg.norm(p) * np.linalg.norm(q))
        total += float(np.arccos(np.clip(cosine, -1.0, 1.0)))
    return total - math.pi


# -- the orthant model -------------------------------------------------------


def _check_rho(rho: float) -> float:
    if not -1.0 - 1e-12 <= rho <= 1.0 + 1e-12:
        raise DomainError(f"rho must lie in [-1, 1], got {rho!r}")
    return float(min(1.0, max(-1.0, rho)))


def _check_k(k: int) -> int:
    if int(k) != k or k < 0:
        raise DomainError(f"k must be a nonnegative integer, got {k!r}")
    return int(k)


def orthant_covariance(k: int, rho: float) -> np.ndarray:
    """Covariance ``M'`` of ``(G a, sum_i (G b)_i)``."""
    k = _check_k(k)
    size = k + 2
    cov = np.eye(size)
    cov[: k + 1, k + 1] = rho
    cov[k + 1, : k + 1] = rho
    cov[k + 1, k + 1] = k + 1
    return cov


@dataclass(frozen=True, eq=False)
class OrthantModel:
    """Gaussian orthant model with ``cholesky.T @ cholesky == covariance``."""

    k: int
    rho: float
    covariance: np.ndarray
    cholesky: np.ndarray

    def __post_init__(self) -> None:
        for name in ("covariance", "cholesky"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.k + 2


def orthant_model(k: int, rho: float) -> OrthantModel:
    k = _check_k(k)
    rho = _check_rho(rho)
    cov = orthant_covariance(k, rho)
    if abs(rho) < 1.0:
        factor = linalg.cholesky(cov, lower=False)
    else:
        # M' is singular at |rho| = 1; the upper factor keeps its closed form
        factor = np.eye(k + 2)
        factor[: k + 1, k + 1] = rho
        factor[k + 1, k + 1] = math.sqrt((k + 1) * (1.0 - rho * rho))
    return OrthantModel(k=k, rho=rho, covariance=cov, cholesky=factor)


def cone_vertices(k: int, rho: float) -> np.ndarray:
    """Rows of ``C^-1`` normalized to unit length (the cone's spherical vertices)."""
    model = orthant_model(k, rho)
    if abs(model.rho) >= 1.0:
        raise DegenerateSimplexError("the orthant cone degenerates at |rho| = 1")
    inverse = linalg.solve_triangular(model.cholesky, np.eye(model.dim), lower=False)
    return inverse / np.linalg.norm(inverse, axis=1, keepdims=True)


def orthant_cone_area(rho: float) -> float:
    """Girard area of the k = 1 cone; ``8 * area / (4 pi) - 1`` is the one-bit correlation."""
    return girard_area(*cone_vertices(1, rho))


def tetra_volume(rho: float) -> float:
    """Volume of the k = 2 orthant tetrahedron, integrating Schlafli's rate from rho = -1."""
    rho = _check_rho(rho)
    return 1.5 * (orthant_integral(rho) + orthant_integral(1.0))


def schlafli_rate(rho: float, step: float = SCHLAFLI_STEP) -> float:
    """``sum_ij theta_ij / 2 * d(lambda_ij)/d(rho)`` from the simplex geometry.

    Dihedral angles are differentiated by central differences, so ``rho`` must
    stay ``step`` away from the degenerate endpoints.
    """
    rho = _check_rho(rho)
    if abs(rho) + step >= 1.0:
        raise DegenerateSimplexError("schlafli_rate needs |rho| + step < 1")
    simplex = SphericalSimplex(cone_vertices(2, rho))
    upper = dihedral_angles(SphericalSimplex(cone_vertices(2, rho + step)))
    lower = dihedral_angles(SphericalSimplex(cone_vertices(2, rho - step)))
    lengths = simplex.edge_lengths()
    return sum(lengths[e] / 2.0 * (upper[e] - lower[e]) / (2.0 * step) for e in lengths)


def schlafli_integrand(rho: float) -> float:
    """Closed-form rate ``(3/2) arccos(rho^2 / (3 - 2 rho^2)) / sqrt(3 - rho^2)``."""
    return 1.5 * float(orthant_integrand(_check_rho(rho)))


def orthant_prob_mc(model: OrthantModel, trials: int, seed: int, workers: int = 1) -> OrthantEstimate:
    """Monte Carlo positive-orthant probability of ``N(0, M')`` and the implied correlation."""
    dim = model.dim
    factor = model.cholesky

    def work(rng: np.random.Generator, size: int) -> int:
        sample = rng.standard_normal((size, dim)) @ factor
        return int(np.count_nonzero(np.all(sample >= 0.0, axis=1)))

    hits = sum(run_chunked(work, trials, seed, (model.k,), chunk_size_for(dim), workers))
    prob = hits / trials
    prob_stderr = math.sqrt(prob * (1.0 - prob) / trials)
    scale = 2.0 ** (model.k + 2)
    logger.debug("orthant k=%d rho=%.4f: %d/%d hits", model.k, model.rho, hits, trials)
    return OrthantEstimate(
        k=model.k,
        rho=model.rho,
        probability=prob,
        probability_stderr=prob_stderr,
        correlation=scale * prob - 1.0,
        correlation_stderr=scale * prob_stderr,
        trials=trials,
    )
