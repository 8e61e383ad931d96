"""Radial potentials in atomic units and the Riccati wavenumber k^2(r)."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from qlmriccati.errors import DomainError


class Family(str, enum.Enum):
    YUKAWA = "yukawa"
    COULOMB = "coulomb"
    CUSTOM = "custom"


@dataclass(frozen=True)
class PotentialSpec:
    """A central potential U(r).

    Attributes:
        family: Yukawa, Coulomb or Custom.
        g: Coupling strength (Hartree * Bohr).
        lam: Screening parameter lambda (1/Bohr). Ignored for Coulomb.
        m: Particle mass (electron masses).
        custom_eval: U(r) for ``Family.CUSTOM``; must accept numpy arrays.
        decay_scale: Slowest asymptotic decay rate of the bound state
            (1/Bohr). Required for custom potentials, where it sets the
            quadrature truncation radius.
    """

    family: Family = Family.YUKAWA
    g: float = 1.0
    lam: float = 0.0
    m: float = 1.0
    custom_eval: Optional[Callable] = None
    decay_scale: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not self.m > 0:
            raise DomainError("mass must be positive")
        if self.family is Family.CUSTOM:
            if self.custom_eval is None:
                raise DomainError("custom potential needs custom_eval")
            if self.decay_scale is None or not self.decay_scale > 0:
                raise DomainError("custom potential needs a positive decay_scale hint")
        else:
            if not self.g > 0:
                raise DomainError("coupling g must be positive")
            if not self.lam >= 0:
                raise DomainError("screening lambda must be >= 0")

    @property
    def mu(self) -> float:
        """Coulomb strength scale mu = m g."""
        return self.m * self.g

    @property
    def screening(self) -> float:
        return 0.0 if self.family is Family.COULOMB else self.lam

    def describe(self) -> str:
        if self.family is Family.CUSTOM:
            return f"custom(m={self.m!r}, decay_scale={self.decay_scale!r})"
        return f"{self.family.value}(g={self.g!r}, lambda={self.screening!r}, m={self.m!r})"


def yukawa(lam: float, g: float = 1.0, m: float = 1.0) -> PotentialSpec:
    return PotentialSpec(Family.YUKAWA, g=g, lam=lam, m=m)


def coulomb(g: float = 1.0, m: float = 1.0) -> PotentialSpec:
    return PotentialSpec(Family.COULOMB, g=g, lam=0.0, m=m)


def custom(func: Callable, decay_scale: float, m: float = 1.0, g: float = 1.0) -> PotentialSpec:
    """Wrap an arbitrary U(r). ``g`` is only used as the 1/r strength hint."""
    return PotentialSpec(Family.CUSTOM, g=g, m=m, custom_eval=func, decay_scale=decay_scale)


def evaluate(spec: PotentialSpec, r):
    """U(r) in Hartree. ``r`` must be strictly positive (scalar or array)."""
    arr = np.asarray(r, dtype=float)
    if not np.all(arr > 0):
        raise DomainError("the potential is evaluated only at r > 0")
    if spec.family is Family.CUSTOM:
        out = np.asarray(spec.custom_eval(arr), dtype=float)
    elif spec.family is Family.COULOMB:
        out = -spec.g / arr
    else:
        # (-g * e^{-lam r}) / r reduces to -g / r bit-for-bit when lam == 0
        out = -spec.g * np.exp(-spec.lam * arr) / arr
    return out if out.ndim else float(out)


def local_wavenumber_sq(spec: PotentialSpec, E: float, r):
    """k^2(r) = 2m [U(r) - E]."""
    u = evaluate(spec, r)
    return 2.0 * spec.m * (u - E)
