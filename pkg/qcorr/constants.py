"""Shared constants for qcorr commands and experiments."""

from __future__ import annotations

import math
from typing import Tuple

CHSH_CLASSICAL_BOUND = 0.75
CHSH_QUANTUM_VALUE = 0.5 + 1.0 / (2.0 * math.sqrt(2.0))
TRANSCRIPT_BOUND = (3.0 - math.sqrt(2.0)) / 2.0

DEFAULT_N = 3
DEFAULT_POINTS = 41
DEFAULT_TRIALS = 10**6
DEFAULT_SEED = 0
DEFAULT_ORDER = 41
DEFAULT_WORKERS = 1
DEFAULT_MAX_DIM = 4096
DEFAULT_TARGET_TAIL = 1e-3
DEFAULT_EPS: Tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4)

CURVE_HEADER: Tuple[str, ...] = ("rho", "analytic", "mc_mean", "mc_stderr", "trials")

EMPTY_MESSAGE_KEY = "-"


def b_eps_reference(eps: float) -> float:
    """Small-eps limit 8 * eps / pi of B(eps) for the one-bit orthant protocol."""
    return 8.0 * eps / math.pi
