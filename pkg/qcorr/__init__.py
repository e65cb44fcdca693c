"""Classical protocols simulating quantum two-outcome correlations with two bits of communication."""
from __future__ import annotations

import logging

from .models import ChshResult, CorrEstimate, CurveRow, InstanceFile, SignReport, Transcript
from .powseries import Series

logging.getLogger(__name__).addHandler(logging.NullHandler())

__all__ = [
    "ChshResult",
    "CorrEstimate",
    "CurveRow",
    "InstanceFile",
    "Series",
    "SignReport",
    "Transcript",
]
