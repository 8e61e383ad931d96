"""Quasilinearization (QLM) solver for s-wave bound states in Riccati form."""

from qlmriccati.errors import (
    DomainError,
    ExtrapolationError,
    MaxIterExceeded,
    NoBoundState,
    NonConvergence,
    NonFinite,
    NonFiniteSample,
    NoSignChange,
    QLMError,
)
from qlmriccati.potential import Family, PotentialSpec, coulomb, custom, yukawa

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "ExtrapolationError",
    "Family",
    "MaxIterExceeded",
    "NoBoundState",
    "NoSignChange",
    "NonConvergence",
    "NonFinite",
    "NonFiniteSample",
    "PotentialSpec",
    "QLMError",
    "coulomb",
    "custom",
    "yukawa",
]
