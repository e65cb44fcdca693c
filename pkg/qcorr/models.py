"""Pydantic records shared across qcorr: estimates, reports and file schemas."""
from __future__ import annotations

import math
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator


class CorrEstimate(BaseModel):
    """Monte Carlo estimate of E[alpha * beta]."""

    mean: float
    stderr: float
    trials: int = Field(ge=1)

    @classmethod
    def from_sum(cls, total: float, trials: int) -> "CorrEstimate":
        mean = float(total) / trials
        # a single trial has no spread estimate; keep the 0 convention
        stderr = math.sqrt(max(0.0, 1.0 - mean * mean) / trials) if trials > 1 else 0.0
        return cls(mean=mean, stderr=stderr, trials=trials)

    def within(self, target: float, sigmas: float = 4.0, slack: float = 0.0) -> bool:
        return abs(self.mean - target) <= sigmas * self.stderr + slack


class OrthantEstimate(BaseModel):
    k: int
    rho: float
    probability: float
    probability_stderr: float
    correlation: float
    correlation_stderr: float
    trials: int


class Transcript(BaseModel):
    """One protocol run: both outputs and the bits Alice sent ("0" for +1, "1" for -1)."""

    protocol: str
    alpha: int
    beta: int
    message: str = ""

    @field_validator("alpha", "beta")
    @classmethod
    def _pm_one(cls, value: int) -> int:
        if value not in (-1, 1):
            raise ValueError("outputs must be -1 or +1")
        return value

    @field_validator("message")
    @classmethod
    def _bitstring(cls, value: str) -> str:
        if set(value) - {"0", "1"}:
            raise ValueError("message must be a string of 0/1 bits")
        return value

    @property
    def message_bits(self) -> int:
        return len(self.message)


class TranscriptStats(BaseModel):
    protocol: str
    trials: int
    frequencies: Dict[str, float] = Field(default_factory=dict)
    max_frequency: float = 0.0
    max_frequency_stderr: float = 0.0
    avg_message_bits: float = 0.0
    max_message_bits: int = 0
    bound: Optional[float] = None
    passed: Optional[bool] = None


class SimulationSummary(BaseModel):
    protocol: str
    rho: float
    n: int
    estimate: CorrEstimate
    avg_message_bits: float
    max_message_bits: int
    frequencies: Dict[str, float] = Field(default_factory=dict)
    alice_plus_rate: float
    bob_plus_rate: float
    tail_mass: Optional[float] = None
    bias_bound: Optional[float] = None


class CurveRow(BaseModel):
    rho: float
    analytic: float
    mc_mean: float
    mc_stderr: float
    trials: int

    @property
    def deviation(self) -> float:
        return abs(self.mc_mean - self.analytic)


class SignReport(BaseModel):
    """Outcome of a coefficient sign check on a correlation-function series."""

    target: str
    order: int
    passed: bool
    constants: Dict[str, float] = Field(default_factory=dict)
    expected: Dict[str, float] = Field(default_factory=dict)
    coefficients: Dict[str, List[float]] = Field(default_factory=dict)
    violations: List[str] = Field(default_factory=list)


class SeriesReport(BaseModel):
    target: str
    order: int
    c: List[float]
    d: List[float]
    bound_margins: List[float]
    partial_mass: float
    cross_check_error: float
    sign_report: SignReport
    bound_violations: List[str] = Field(default_factory=list)
    passed: bool


class ChshResult(BaseModel):
    protocol: str
    source: str
    trials: int
    win_rate: float
    stderr: float
    correlations: Dict[str, float]
    classical_bound: float
    quantum_value: float
    tail_mass: Optional[float] = None


class BEpsRow(BaseModel):
    eps: float
    analytic: float
    mc: Optional[float] = None
    mc_stderr: Optional[float] = None
    reference: float
    ratio: float


Pair = List[float]


def _check_matrix(rows: List[List[Pair]], size: int, label: str) -> None:
    if len(rows) != size:
        raise ValueError(f"{label} must have {size} rows, got {len(rows)}")
    for index, row in enumerate(rows):
        if len(row) != size:
            raise ValueError(f"{label} row {index} must have {size} entries, got {len(row)}")
        for column, entry in enumerate(row):
            if len(entry) != 2:
                raise ValueError(f"{label}[{index}][{column}] must be a [re, im] pair")


class InstanceFile(BaseModel):
    """Quantum instance on disk: complex matrices row-major as [re, im] pairs."""

    d: int = Field(ge=1)
    rho: List[List[Pair]]
    A: List[List[Pair]]
    B: List[List[Pair]]

    @model_validator(mode="after")
    def _shapes(self) -> "InstanceFile":
        _check_matrix(self.rho, self.d * self.d, "rho")
        _check_matrix(self.A, self.d, "A")
        _check_matrix(self.B, self.d, "B")
        return self


class ReducedVectorsFile(BaseModel):
    d: int
    a: List[float]
    b: List[float]
    inner_product: float
    expectation: float
    discrepancy: float
    passed: bool
