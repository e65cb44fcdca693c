"""Two-party protocols with shared randomness and one-way communication.

Every protocol samples whole batches of runs at once. Shared randomness
(hyperplanes, the Gaussian matrix ``G``, the mixing coin) comes from the
chunk's generator; Alice's output and message and Bob's output are
deterministic functions of it and the inputs. Message bits are the values
``c_i`` in {+1, -1}; in transcripts they are written "0" for +1 and "1" for -1.
"""
from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .constants import DEFAULT_MAX_DIM, EMPTY_MESSAGE_KEY
from .corrfun import DomainError, h_maj, h_mixed, h_nocomm, h_ort, mixing_p
from .krivine import Embedding, EmbeddingError, as_unit_vector, embed, standard_embedding
from .models import CorrEstimate, SimulationSummary, Transcript, TranscriptStats
from .montecarlo import chunk_size_for, run_chunked, sign, stream
from .powseries import DEFAULT_MAX_ORDER

logger = logging.getLogger(__name__)

PROTOCOL_NAMES = ("nocomm", "maj", "ort", "transformed", "mixed", "mixed-raw", "constant")


class ProtocolError(ValueError):
    """Invalid protocol configuration or mismatched inputs."""


@dataclass(frozen=True, eq=False)
class UnitVector:
    components: np.ndarray

    def __post_init__(self) -> None:
        try:
            arr = as_unit_vector(self.components)
        except EmbeddingError as exc:
            raise ProtocolError(str(exc)) from exc
        arr.flags.writeable = False
        object.__setattr__(self, "components", arr)

    @property
    def dim(self) -> int:
        return self.components.size

    def __array__(self, dtype=None, copy=None) -> np.ndarray:
        return self.components if dtype is None else self.components.astype(dtype)


def _vector(v) -> np.ndarray:
    if isinstance(v, UnitVector):
        return v.components
    return UnitVector(np.asarray(v, dtype=float)).components


@dataclass(frozen=True, eq=False)
class TranscriptBatch:
    """Outputs and messages of ``size`` independent runs.

    ``codes`` has one row per run, padded with 0 past that run's ``lengths``.
    """

    alpha: np.ndarray
    beta: np.ndarray
    codes: np.ndarray
    lengths: np.ndarray

    @property
    def size(self) -> int:
        return self.alpha.size

    def message(self, index: int) -> str:
        bits = self.codes[index, : self.lengths[index]]
        return "".join("0" if c > 0 else "1" for c in bits)

    def transcript(self, index: int, protocol: str) -> Transcript:
        return Transcript(
            protocol=protocol,
            alpha=int(self.alpha[index]),
            beta=int(self.beta[index]),
            message=self.message(index),
        )

    def message_counts(self) -> Counter:
        counts: Counter = Counter()
        if self.codes.shape[1] == 0:
            counts[EMPTY_MESSAGE_KEY] = self.size
            return counts
        rows = np.column_stack([self.lengths, self.codes])
        unique, hits = np.unique(rows, axis=0, return_counts=True)
        for row, hit in zip(unique, hits):
            key = "".join("0" if c > 0 else "1" for c in row[1 : 1 + row[0]])
            counts[key or EMPTY_MESSAGE_KEY] += int(hit)
        return counts


def _silent(alpha: np.ndarray, beta: np.ndarray) -> TranscriptBatch:
    size = alpha.size
    return TranscriptBatch(alpha, beta, np.zeros((size, 0), dtype=np.int8), np.zeros(size, dtype=np.int64))


# -- batch samplers ----------------------------------------------------------


def nocomm_batch(a: np.ndarray, b: np.ndarray, rng: np.random.Generator, size: int) -> TranscriptBatch:
    # a Gaussian direction has the same sign pattern as a uniform point on the sphere
    lam = rng.standard_normal((size, a.size))
    return _silent(sign(lam @ a), sign(lam @ b))


def majority_batch(k: int, a: np.ndarray, b: np.ndarray, rng: np.random.Generator, size: int) -> TranscriptBatch:
    g = rng.standard_normal((size, k + 1, a.size))
    alice = sign(g @ a)
    bob = sign(g @ b)
    alpha = alice[:, 0]
    codes = alice[:, 1:] * alpha[:, None]
    votes = bob[:, 0].astype(np.int32) + np.sum(codes * bob[:, 1:], axis=1, dtype=np.int32)
    return TranscriptBatch(alpha, sign(votes), codes, np.full(size, k, dtype=np.int64))


def orthant_batch(k: int, a: np.ndarray, b: np.ndarray, rng: np.random.Generator, size: int) -> TranscriptBatch:
    g = rng.standard_normal((size, k + 1, a.size))
    alice = sign(g @ a)
    alpha = alice[:, 0]
    codes = alice * alpha[:, None]
    beta = sign(np.sum(codes * (g @ b), axis=1))
    return TranscriptBatch(alpha, beta, codes[:, 1:], np.full(size, k, dtype=np.int64))


def mixed_batch(p: float, a: np.ndarray, b: np.ndarray, rng: np.random.Generator, size: int) -> TranscriptBatch:
    short = rng.random(size) < p
    one = orthant_batch(1, a, b, rng, size)
    two = orthant_batch(2, a, b, rng, size)
    codes = two.codes.copy()
    codes[short, 0] = one.codes[short, 0]
    codes[short, 1] = 0
    return TranscriptBatch(
        np.where(short, one.alpha, two.alpha).astype(np.int8),
        np.where(short, one.beta, two.beta).astype(np.int8),
        codes,
        np.where(short, 1, 2).astype(np.int64),
    )


# -- protocols ---------------------------------------------------------------


@dataclass(frozen=True)
class Protocol:
    """Base protocol: inputs are used as given."""

    name: str = "constant"
    k: Optional[int] = None

    @property
    def message_bits(self) -> int:
        return 0

    @property
    def label(self) -> str:
        return self.name if self.k is None else f"{self.name}{self.k}"

    def floats_per_trial(self, dim: int) -> int:
        return dim

    def prepare(self, a, b) -> Tuple[np.ndarray, np.ndarray]:
        va, vb = _vector(a), _vector(b)
        if va.size != vb.size:
            raise ProtocolError(f"input dimensions differ: {va.size} vs {vb.size}")
        return va, vb

    def sample(self, a: np.ndarray, b: np.ndarray, rng: np.random.Generator, size: int) -> TranscriptBatch:
        ones = np.ones(size, dtype=np.int8)
        return _silent(ones, ones.copy())

    def analytic(self, rho: float) -> Optional[float]:
        return 1.0

    def tail_mass(self, n: int) -> Optional[float]:
        return None

    def run(self, a, b, rng: np.random.Generator) -> Transcript:
        pa, pb = self.prepare(a, b)
        return self.sample(pa, pb, rng, 1).transcript(0, self.label)


@dataclass(frozen=True)
class NoCommunication(Protocol):
    name: str = "nocomm"

    def sample(self, a, b, rng, size):
        return nocomm_batch(a, b, rng, size)

    def analytic(self, rho):
        return h_nocomm(rho)


@dataclass(frozen=True)
class Majority(Protocol):
    name: str = "maj"
    k: Optional[int] = 2

    def __post_init__(self) -> None:
        if self.k is None or self.k < 0 or self.k % 2:
            raise ProtocolError(f"majority needs an even k >= 0, got {self.k!r}")

    @property
    def message_bits(self) -> int:
        return int(self.k)

    def floats_per_trial(self, dim):
        return (self.k + 1) * dim

    def sample(self, a, b, rng, size):
        return majority_batch(self.k, a, b, rng, size)

    def analytic(self, rho):
        return h_maj(self.k, rho)


@dataclass(frozen=True)
class Orthant(Protocol):
    name: str = "ort"
    k: Optional[int] = 2

    def __post_init__(self) -> None:
        if self.k is None or self.k < 0:
            raise ProtocolError(f"orthant needs k >= 0, got {self.k!r}")

    @property
    def message_bits(self) -> int:
        return int(self.k)

    def floats_per_trial(self, dim):
        return (self.k + 1) * dim

    def sample(self, a, b, rng, size):
        return orthant_batch(self.k, a, b, rng, size)

    def analytic(self, rho):
        return h_ort(self.k, rho) if self.k <= 2 else None


@dataclass(frozen=True)
class Embedded(Protocol):
    """Shared base for protocols that first map inputs through a tensor embedding.

    With ``compress`` the embedded pair is rotated into its own span before the
    protocol runs; every protocol here depends on its inputs only through
    inner products, so the joint output law is unchanged.
    """

    source: str = "ort2"
    order: int = DEFAULT_MAX_ORDER
    truncation: Optional[int] = None
    max_dim: int = DEFAULT_MAX_DIM
    compress: bool = True
    embedding: Optional[Embedding] = field(default=None, compare=False)

    def embedding_for(self, n: int) -> Embedding:
        if self.embedding is not None:
            if self.embedding.source_dim != n:
                raise ProtocolError(f"embedding expects dimension {self.embedding.source_dim}, got {n}")
            return self.embedding
        return standard_embedding(self.source, n, self.order, self.truncation, self.max_dim)

    def prepare(self, a, b):
        va, vb = super().prepare(a, b)
        emb = self.embedding_for(va.size)
        ea, eb = embed(va, emb), embed(vb, emb)
        if self.compress:
            ea, eb = compress_to_span(ea, eb)
        return ea, eb

    def analytic(self, rho):
        return float(rho)

    def tail_mass(self, n: int) -> Optional[float]:
        return self.embedding_for(n).tail_mass


@dataclass(frozen=True)
class Transformed(Embedded):
    name: str = "transformed"
    source: str = "ort2"

    @property
    def message_bits(self) -> int:
        return 2

    def floats_per_trial(self, dim):
        return 3 * dim

    def sample(self, a, b, rng, size):
        return orthant_batch(2, a, b, rng, size)


@dataclass(frozen=True)
class Mixed(Embedded):
    name: str = "mixed"
    source: str = "mixed"

    @property
    def message_bits(self) -> int:
        return 2

    def floats_per_trial(self, dim):
        return 5 * dim + 1

    def sample(self, a, b, rng, size):
        return mixed_batch(mixing_p(), a, b, rng, size)


@dataclass(frozen=True)
class MixedRaw(Protocol):
    """The mixed protocol on unembedded inputs; its correlation is ``h_mixed``."""

    name: str = "mixed-raw"

    @property
    def message_bits(self) -> int:
        return 2

    def floats_per_trial(self, dim):
        return 5 * dim + 1

    def sample(self, a, b, rng, size):
        return mixed_batch(mixing_p(), a, b, rng, size)

    def analytic(self, rho):
        return h_mixed(rho)


def make_protocol(
    name: str,
    k: Optional[int] = None,
    order: int = DEFAULT_MAX_ORDER,
    truncation: Optional[int] = None,
    max_dim: int = DEFAULT_MAX_DIM,
    compress: bool = True,
) -> Protocol:
    """Build a protocol by its command-line name."""
    if name == "nocomm":
        return NoCommunication()
    if name == "maj":
        return Majority(k=2 if k is None else k)
    if name == "ort":
        return Orthant(k=2 if k is None else k)
    if name == "transformed":
        return Transformed(order=order, truncation=truncation, max_dim=max_dim, compress=compress)
    if name == "mixed":
        return Mixed(order=order, truncation=truncation, max_dim=max_dim, compress=compress)
    if name == "mixed-raw":
        return MixedRaw()
    if name == "constant":
        return Protocol()
    raise ProtocolError(f"unknown protocol {name!r}; expected one of {PROTOCOL_NAMES}")


# -- single runs -------------------------------------------------------------


def run_nocomm(a, b, rng: np.random.Generator) -> Transcript:
    return NoCommunication().run(a, b, rng)


def run_majority(k: int, a, b, rng: np.random.Generator) -> Transcript:
    return Majority(k=k).run(a, b, rng)


def run_orthant(k: int, a, b, rng: np.random.Generator) -> Transcript:
    return Orthant(k=k).run(a, b, rng)


def run_transformed(a, b, e: Embedding, rng: np.random.Generator) -> Transcript:
    """Two-bit orthant protocol on the full embedded vectors ``C(a)``, ``C(b)``."""
    return Transformed(embedding=e, compress=False).run(a, b, rng)


def run_mixed(a, b, rng: np.random.Generator) -> Transcript:
    return Mixed().run(a, b, rng)


# -- estimation --------------------------------------------------------------


@dataclass
class RunTally:
    trials: int = 0
    product_sum: int = 0
    alice_plus: int = 0
    bob_plus: int = 0
    bits_sum: int = 0
    max_bits: int = 0
    messages: Counter = field(default_factory=Counter)

    @classmethod
    def from_batch(cls, batch: TranscriptBatch) -> "RunTally":
        return cls(
            trials=batch.size,
            product_sum=int(np.sum(batch.alpha.astype(np.int64) * batch.beta)),
            alice_plus=int(np.count_nonzero(batch.alpha > 0)),
            bob_plus=int(np.count_nonzero(batch.beta > 0)),
            bits_sum=int(np.sum(batch.lengths)),
            max_bits=int(np.max(batch.lengths)) if batch.size else 0,
            messages=batch.message_counts(),
        )

    def merge(self, other: "RunTally") -> "RunTally":
        return RunTally(
            trials=self.trials + other.trials,
            product_sum=self.product_sum + other.product_sum,
            alice_plus=self.alice_plus + other.alice_plus,
            bob_plus=self.bob_plus + other.bob_plus,
            bits_sum=self.bits_sum + other.bits_sum,
            max_bits=max(self.max_bits, other.max_bits),
            messages=self.messages + other.messages,
        )

    def estimate(self) -> CorrEstimate:
        return CorrEstimate.from_sum(self.product_sum, self.trials)

    def frequencies(self) -> Dict[str, float]:
        return {key: count / self.trials for key, count in sorted(self.messages.items())}


def tally_run(
    protocol: Protocol,
    a,
    b,
    trials: int,
    seed: int,
    path: Sequence[int] = (),
    workers: int = 1,
) -> RunTally:
    pa, pb = protocol.prepare(a, b)
    chunk = chunk_size_for(protocol.floats_per_trial(pa.size))

    def work(rng: np.random.Generator, size: int) -> RunTally:
        return RunTally.from_batch(protocol.sample(pa, pb, rng, size))

    parts = run_chunked(work, trials, seed, path, chunk, workers)
    return reduce(RunTally.merge, parts, RunTally())


def estimate_correlation(
    protocol: Protocol,
    a,
    b,
    trials: int,
    seed: int,
    workers: int = 1,
    path: Sequence[int] = (),
) -> CorrEstimate:
    return tally_run(protocol, a, b, trials, seed, path, workers).estimate()


def simulate(protocol: Protocol, a, b, trials: int, seed: int, workers: int = 1) -> SimulationSummary:
    va, vb = _vector(a), _vector(b)
    tally = tally_run(protocol, va, vb, trials, seed, (), workers)
    tail = protocol.tail_mass(va.size)
    return SimulationSummary(
        protocol=protocol.label,
        rho=float(np.dot(va, vb)),
        n=va.size,
        estimate=tally.estimate(),
        avg_message_bits=tally.bits_sum / tally.trials,
        max_message_bits=tally.max_bits,
        frequencies=tally.frequencies(),
        alice_plus_rate=tally.alice_plus / tally.trials,
        bob_plus_rate=tally.bob_plus / tally.trials,
        tail_mass=tail,
        bias_bound=None if tail is None else 2.0 * tail,
    )


def split_trials(trials: int, parts: int) -> List[int]:
    """Even allocation of ``trials`` over ``parts`` strata (earlier strata take the remainder)."""
    base, rest = divmod(int(trials), int(parts))
    return [base + (1 if index < rest else 0) for index in range(parts)]


def transcript_stats(
    protocol: Protocol,
    inputs: Sequence[Tuple[object, object]],
    trials: int,
    seed: int,
    workers: int = 1,
    bound: Optional[float] = None,
) -> TranscriptStats:
    """Message frequencies when the input pair is uniform over ``inputs``.

    Trials are split evenly over the pairs, so the mixture weights are exact.
    """
    if not inputs:
        raise ProtocolError("transcript_stats needs at least one input pair")
    allocation = split_trials(trials, len(inputs))
    if min(allocation) < 1:
        raise ProtocolError(f"need at least {len(inputs)} trials for {len(inputs)} input pairs")
    tally = RunTally()
    for index, ((a, b), count) in enumerate(zip(inputs, allocation)):
        tally = tally.merge(tally_run(protocol, a, b, count, seed, (index,), workers))
    freqs = tally.frequencies()
    top = max(freqs.values())
    stderr = math.sqrt(top * (1.0 - top) / tally.trials)
    return TranscriptStats(
        protocol=protocol.label,
        trials=tally.trials,
        frequencies=freqs,
        max_frequency=top,
        max_frequency_stderr=stderr,
        avg_message_bits=tally.bits_sum / tally.trials,
        max_message_bits=tally.max_bits,
        bound=bound,
        passed=None if bound is None else top <= bound + 4.0 * stderr,
    )


# -- inputs ------------------------------------------------------------------


def sample_unit_vector(n: int, rng: np.random.Generator) -> UnitVector:
    if n < 1:
        raise ProtocolError(f"dimension must be >= 1, got {n}")
    while True:
        z = rng.standard_normal(n)
        norm = np.linalg.norm(z)
        if norm > 1e-12:
            return UnitVector(z / norm)


def sample_pair_with_rho(n: int, rho: float, rng: np.random.Generator) -> Tuple[UnitVector, UnitVector]:
    """Uniformly oriented pair with ``<a, b> = rho``."""
    if n < 2:
        raise ProtocolError(f"pair sampling needs n >= 2, got {n}")
    if not -1.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [-1, 1], got {rho!r}")
    a = sample_unit_vector(n, rng).components
    while True:
        z = rng.standard_normal(n)
        perp = z - np.dot(z, a) * a
        norm = np.linalg.norm(perp)
        if norm > 1e-8:
            break
    b = rho * a + math.sqrt(1.0 - rho * rho) * (perp / norm)
    return UnitVector(a), UnitVector(b)


def compress_to_span(*vectors) -> List[np.ndarray]:
    """Coordinates of the vectors in an orthonormal basis of their span; inner products are kept."""
    matrix = np.column_stack([np.asarray(v, dtype=float) for v in vectors])
    basis = linalg.orth(matrix)
    return [basis.T @ matrix[:, index] for index in range(matrix.shape[1])]


def b_eps_mc(
    protocol: Protocol,
    n: int,
    eps: float,
    trials: int,
    seed: int,
    workers: int = 1,
) -> Tuple[float, float]:
    """Monte Carlo ``2 - E[ab | rho = 1-eps] + E[ab | rho = -1+eps]`` and its standard error."""
    if not 0.0 < eps <= 1.0:
        raise DomainError(f"eps must lie in (0, 1], got {eps!r}")
    estimates = []
    for index, rho in enumerate((1.0 - eps, -1.0 + eps)):
        a, b = sample_pair_with_rho(n, rho, stream(seed, index))
        estimates.append(estimate_correlation(protocol, a, b, trials, seed, workers, path=(index,)))
    value = 2.0 - estimates[0].mean + estimates[1].mean
    return value, math.hypot(estimates[0].stderr, estimates[1].stderr)
