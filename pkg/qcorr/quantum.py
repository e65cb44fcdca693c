"""Quantum instances, their expectation values and the reduction to unit vectors.

A quantum instance is a state ``rho`` on ``C^d (x) C^d`` with observables
``A`` and ``B`` whose squares are the identity. Stacking the real and
imaginary parts of ``(A (x) 1) sqrt(rho)`` and ``(1 (x) B) sqrt(rho)`` gives
unit vectors in ``R^(2 d^4)`` whose inner product is ``Tr(A (x) B rho)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from .constants import CHSH_CLASSICAL_BOUND, CHSH_QUANTUM_VALUE
from .models import ChshResult, InstanceFile, ReducedVectorsFile
from .protocols import Protocol, compress_to_span, estimate_correlation, split_trials

logger = logging.getLogger(__name__)

HERMITIAN_TOLERANCE = 1e-10
EIGEN_SLACK = 1e-10
TRACE_TOLERANCE = 1e-10
INVOLUTION_TOLERANCE = 1e-8
IMAGINARY_TOLERANCE = 1e-10
IDENTITY_TOLERANCE = 1e-10

CHSH_INPUTS: Tuple[Tuple[int, int], ...] = ((0, 0), (0, 1), (1, 0), (1, 1))
CHSH_SOURCES = ("explicit", "quantum")


class InstanceError(ValueError):
    """Invalid state or observable, mismatched dimensions or a non-real expectation."""


def _square(entries, label: str) -> np.ndarray:
    arr = np.array(entries, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InstanceError(f"{label} must be a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InstanceError(f"{label} has non-finite entries")
    deviation = float(np.max(np.abs(arr - arr.conj().T))) if arr.size else 0.0
    if deviation > HERMITIAN_TOLERANCE:
        raise InstanceError(f"{label} is not Hermitian (max deviation {deviation:.3g})")
    return arr


def _local_dim(size: int) -> int:
    d = math.isqrt(size)
    if d * d != size or d < 1:
        raise InstanceError(f"state size {size} is not d^2 for an integer d")
    return d


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Bipartite state on ``C^d (x) C^d``."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        arr = _square(self.entries, "state")
        _local_dim(arr.shape[0])
        trace = complex(np.trace(arr))
        if abs(trace - 1.0) > TRACE_TOLERANCE:
            raise InstanceError(f"state trace must be 1, got {trace:.12g}")
        smallest = float(np.linalg.eigvalsh(arr)[0])
        if smallest < -EIGEN_SLACK:
            raise InstanceError(f"state is not positive semidefinite (eigenvalue {smallest:.3g})")
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def d(self) -> int:
        return _local_dim(self.entries.shape[0])

    def sqrt(self) -> np.ndarray:
        """Hermitian square root with tiny negative eigenvalues clamped to zero."""
        values, vectors = np.linalg.eigh(self.entries)
        roots = np.sqrt(np.clip(values, 0.0, None))
        return (vectors * roots) @ vectors.conj().T


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian ``d x d`` matrix with ``A @ A = 1``."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        arr = _square(self.entries, "observable")
        deviation = float(np.max(np.abs(arr @ arr - np.eye(arr.shape[0]))))
        if deviation > INVOLUTION_TOLERANCE:
            raise InstanceError(f"observable must square to the identity (deviation {deviation:.3g})")
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def d(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class QuantumInstance:
    rho: DensityMatrix
    A: Observable
    B: Observable

    def __post_init__(self) -> None:
        _check_dims(self.rho, self.A, self.B)

    @property
    def d(self) -> int:
        return self.A.d


@dataclass(frozen=True, eq=False)
class ReducedVectors:
    a: np.ndarray
    b: np.ndarray
    source_expectation: float

    @property
    def inner_product(self) -> float:
        return float(np.dot(self.a, self.b))

    @property
    def discrepancy(self) -> float:
        return abs(self.inner_product - self.source_expectation)


def _check_dims(rho: DensityMatrix, A: Observable, B: Observable) -> int:
    d = rho.d
    if A.d != d or B.d != d:
        raise InstanceError(f"observables must be {d}x{d} for a {d * d}x{d * d} state, got {A.d} and {B.d}")
    return d


def expectation(rho: DensityMatrix, A: Observable, B: Observable) -> float:
    """``Tr(A (x) B rho)``, asserted real."""
    _check_dims(rho, A, B)
    value = complex(np.trace(np.kron(A.entries, B.entries) @ rho.entries))
    if abs(value.imag) > IMAGINARY_TOLERANCE:
        raise InstanceError(f"expectation has imaginary part {value.imag:.3g}")
    return value.real


def _stacked(matrix: np.ndarray) -> np.ndarray:
    flat = matrix.ravel()
    return np.concatenate([flat.real, flat.imag])


def reduce_to_vectors(rho: DensityMatrix, A: Observable, B: Observable) -> ReducedVectors:
    """Unit vectors in ``R^(2 d^4)`` with ``<a, b> = Tr(A (x) B rho)``."""
    d = _check_dims(rho, A, B)
    root = rho.sqrt()
    identity = np.eye(d)
    a = _stacked(np.kron(A.entries, identity) @ root)
    b = _stacked(np.kron(identity, B.entries) @ root)
    reduced = ReducedVectors(a=a, b=b, source_expectation=expectation(rho, A, B))
    logger.debug("reduced d=%d instance to dimension %d (discrepancy %.2e)", d, a.size, reduced.discrepancy)
    return reduced


def reduction_report(instance: QuantumInstance) -> ReducedVectorsFile:
    reduced = reduce_to_vectors(instance.rho, instance.A, instance.B)
    norms_ok = all(abs(np.linalg.norm(v) - 1.0) <= IDENTITY_TOLERANCE for v in (reduced.a, reduced.b))
    return ReducedVectorsFile(
        d=instance.d,
        a=reduced.a.tolist(),
        b=reduced.b.tolist(),
        inner_product=reduced.inner_product,
        expectation=reduced.source_expectation,
        discrepancy=reduced.discrepancy,
        passed=norms_ok and reduced.discrepancy <= IDENTITY_TOLERANCE,
    )


# -- instances ---------------------------------------------------------------

PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def epr_state() -> DensityMatrix:
    psi = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) / math.sqrt(2.0)
    return DensityMatrix(np.outer(psi, psi.conj()))


@dataclass(frozen=True, eq=False)
class ChshSetup:
    """Shared state with Alice's and Bob's two observables each."""

    rho: DensityMatrix
    alice: Tuple[Observable, Observable]
    bob: Tuple[Observable, Observable]

    def instance(self, i: int, j: int) -> QuantumInstance:
        return QuantumInstance(self.rho, self.alice[i], self.bob[j])


def chsh_instance() -> ChshSetup:
    """EPR pair with ``A0 = Z``, ``A1 = X``, ``B0 = (Z + X)/sqrt 2``, ``B1 = (Z - X)/sqrt 2``."""
    root = math.sqrt(2.0)
    return ChshSetup(
        rho=epr_state(),
        alice=(Observable(PAULI_Z), Observable(PAULI_X)),
        bob=(Observable((PAULI_Z + PAULI_X) / root), Observable((PAULI_Z - PAULI_X) / root)),
    )


def _random_observable(d: int, rng: np.random.Generator) -> Observable:
    raw = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    values, vectors = np.linalg.eigh(raw + raw.conj().T)
    signs = np.where(values >= 0.0, 1.0, -1.0)
    return Observable((vectors * signs) @ vectors.conj().T)


def random_instance(d: int, rng: np.random.Generator) -> QuantumInstance:
    """Normalized Wishart state with sign-function observables."""
    if d < 1:
        raise InstanceError(f"local dimension must be >= 1, got {d}")
    size = d * d
    g = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    state = g @ g.conj().T
    state = (state + state.conj().T) / 2.0
    return QuantumInstance(
        rho=DensityMatrix(state / np.trace(state).real),
        A=_random_observable(d, rng),
        B=_random_observable(d, rng),
    )


def _complex_rows(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def _pair_rows(matrix: np.ndarray) -> List[List[List[float]]]:
    return [[[float(z.real), float(z.imag)] for z in row] for row in matrix]


def instance_from_file(record: InstanceFile) -> QuantumInstance:
    return QuantumInstance(
        rho=DensityMatrix(_complex_rows(record.rho)),
        A=Observable(_complex_rows(record.A)),
        B=Observable(_complex_rows(record.B)),
    )


def instance_to_file(instance: QuantumInstance) -> InstanceFile:
    return InstanceFile(
        d=instance.d,
        rho=_pair_rows(instance.rho.entries),
        A=_pair_rows(instance.A.entries),
        B=_pair_rows(instance.B.entries),
    )


def load_instance(path: str | Path) -> QuantumInstance:
    """Read an instance JSON file; shape errors name the offending field."""
    text = Path(path).read_text(encoding="utf-8")
    return instance_from_file(InstanceFile.model_validate_json(text))


# -- CHSH --------------------------------------------------------------------


def chsh_sign(i: int, j: int) -> int:
    """+1 when the players win on equal outputs, -1 on the (1, 1) input."""
    return -1 if (i, j) == (1, 1) else 1


def chsh_vectors(source: str = "explicit") -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Alice's and Bob's unit vectors for the four CHSH inputs.

    ``explicit`` gives the planar vectors ``a0 = e1``, ``a1 = e2``,
    ``b0 = (e1 + e2)/sqrt 2``, ``b1 = (e1 - e2)/sqrt 2``; ``quantum`` reduces
    the EPR instance and rotates all four vectors into their common span.
    """
    if source == "explicit":
        root = math.sqrt(2.0)
        alice = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
        bob = [np.array([1.0, 1.0]) / root, np.array([1.0, -1.0]) / root]
        return alice, bob
    if source == "quantum":
        setup = chsh_instance()
        # a depends only on A_i and b only on B_j
        a0 = reduce_to_vectors(setup.rho, setup.alice[0], setup.bob[0]).a
        a1 = reduce_to_vectors(setup.rho, setup.alice[1], setup.bob[0]).a
        b0 = reduce_to_vectors(setup.rho, setup.alice[0], setup.bob[0]).b
        b1 = reduce_to_vectors(setup.rho, setup.alice[0], setup.bob[1]).b
        compressed = compress_to_span(a0, a1, b0, b1)
        return compressed[:2], compressed[2:]
    raise InstanceError(f"unknown CHSH vector source {source!r}; expected one of {CHSH_SOURCES}")


def chsh_win_rate(correlations: Dict[Tuple[int, int], float]) -> float:
    """Win probability under uniform inputs: ``1/2 + sum_ij s_ij E_ij / 8``."""
    return 0.5 + sum(chsh_sign(i, j) * correlations[(i, j)] for i, j in CHSH_INPUTS) / 8.0


def chsh_game_value(
    protocol: Protocol,
    trials: int,
    seed: int,
    source: str = "explicit",
    workers: int = 1,
) -> ChshResult:
    """CHSH win rate of ``protocol``; trials are split evenly over the four inputs."""
    alice, bob = chsh_vectors(source)
    allocation = split_trials(trials, len(CHSH_INPUTS))
    if min(allocation) < 1:
        raise ValueError(f"CHSH needs at least {len(CHSH_INPUTS)} trials, got {trials}")
    means: Dict[Tuple[int, int], float] = {}
    variance = 0.0
    for index, ((i, j), count) in enumerate(zip(CHSH_INPUTS, allocation)):
        estimate = estimate_correlation(protocol, alice[i], bob[j], count, seed, workers, path=(index,))
        means[(i, j)] = estimate.mean
        variance += estimate.stderr**2
    rate = chsh_win_rate(means)
    logger.info("CHSH with %s (%s vectors): win rate %.6f", protocol.label, source, rate)
    return ChshResult(
        protocol=protocol.label,
        source=source,
        trials=sum(allocation),
        win_rate=rate,
        stderr=math.sqrt(variance) / 8.0,
        correlations={f"{i}{j}": value for (i, j), value in means.items()},
        classical_bound=CHSH_CLASSICAL_BOUND,
        quantum_value=CHSH_QUANTUM_VALUE,
        tail_mass=protocol.tail_mass(alice[0].size),
    )
