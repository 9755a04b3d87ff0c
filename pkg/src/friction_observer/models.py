"""Plant models: stiction plus Coulomb, hydro-mechanical, and LuGre.

All quantities are SI by convention (unchecked). Motor inertia is lumped
into the input and the friction coefficients, so every model is written per
unit mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import _kernels as K


def _require_finite(**values: float) -> None:
    for name, v in values.items():
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")


def _require_positive(**values: float) -> None:
    for name, v in values.items():
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"{name} must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class FrictionParams:
    """Viscous (``theta1``), Coulomb (``theta2``) and tanh sharpness (``vartheta``)."""

    theta1: float
    theta2: float
    vartheta: float

    def __post_init__(self):
        _require_positive(theta1=self.theta1, theta2=self.theta2, vartheta=self.vartheta)


@dataclass(frozen=True)
class MechState:
    x1: float
    x2: float

    def __post_init__(self):
        _require_finite(x1=self.x1, x2=self.x2)


@dataclass(frozen=True)
class HydroParams:
    a1: float
    a2: float
    a3: float
    friction: FrictionParams

    def __post_init__(self):
        _require_positive(a1=self.a1, a2=self.a2, a3=self.a3)


@dataclass(frozen=True)
class HydroState:
    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        _require_finite(x1=self.x1, x2=self.x2, x3=self.x3)


@dataclass(frozen=True)
class LuGreParams:
    sigma0: float
    sigma1: float
    sigma2: float
    FC: float
    FS: float
    vS: float

    def __post_init__(self):
        _require_positive(sigma0=self.sigma0, sigma1=self.sigma1, sigma2=self.sigma2,
                          FC=self.FC, FS=self.FS, vS=self.vS)
        if self.FS < self.FC:
            raise ValueError(f"FS ({self.FS}) must be >= FC ({self.FC})")

    @classmethod
    def table1(cls) -> "LuGreParams":
        """Canonical LuGre coefficients used in the benchmark runs."""
        return cls(sigma0=1e5, sigma1=math.sqrt(1e5), sigma2=0.4, FC=1.0, FS=1.5, vS=0.001)

    def g(self, x2: float) -> float:
        """Stribeck curve; lies in [FC, FS], equal to FS at rest."""
        return K.lugre_g(x2, self.FC, self.FS, self.vS)


@dataclass(frozen=True)
class LuGreState:
    x1: float
    x2: float
    z: float

    def __post_init__(self):
        _require_finite(x1=self.x1, x2=self.x2, z=self.z)


def mech_rhs(s: MechState, p: FrictionParams, u: float) -> MechState:
    """Vector field of the stiction plus Coulomb plant.

    Returns the time derivative packed as a ``MechState``:
    ``(x2, -theta1*x2 - theta2*tanh(vartheta*x2) + u)``.
    """
    return MechState(s.x2, K.mech_accel(s.x2, p.theta1, p.theta2, p.vartheta, u))


def hydro_rhs(s: HydroState, p: HydroParams, u: float) -> HydroState:
    f = p.friction
    dx2 = K.mech_accel(s.x2, f.theta1, f.theta2, f.vartheta, 0.0) + p.a1 * s.x3
    dx3 = -p.a2 * s.x2 - p.a3 * s.x3 + u
    return HydroState(s.x2, dx2, dx3)


def lugre_rhs(s: LuGreState, p: LuGreParams, u: float) -> LuGreState:
    """LuGre plant; the bristle rate is evaluated once and fed into the acceleration."""
    dz, dx2 = K.lugre_rates(s.x2, s.z, p.sigma0, p.sigma1, p.sigma2, p.FC, p.FS, p.vS, u)
    return LuGreState(s.x2, dx2, dz)
