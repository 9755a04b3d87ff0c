"""Certainty-equivalent tracking law and reference generators.

The ground-truth counterparts (ideal law, deviation signal) live in
``friction_observer.diagnostics`` so a controller cannot be built on them by
accident.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from . import _kernels as K
from .models import _require_positive
from .observer import ObserverOutput

# Ordered parameter names and defaults per generator kind; the order is the
# packing order consumed by the compiled reference kernel.
REFERENCE_KINDS: dict[str, tuple[int, dict[str, float]]] = {
    "constant": (K.REF_CONSTANT, {"value": 0.0}),
    "sinusoid": (K.REF_SINUSOID, {"amplitude": 1.0, "omega": 1.0, "phase": 0.0, "offset": 0.0}),
    "chirp": (K.REF_CHIRP, {"amplitude": 1.0, "rate": 0.01}),
    "step_plus_ramp": (K.REF_STEP_PLUS_RAMP, {
        "step_time": 0.0, "step_height": 1.0, "ramp_start": 50.0, "ramp_slope": 0.02,
        "blend": 0.1, "offset": 0.0,
    }),
}


@dataclass(frozen=True)
class ControllerGains:
    """Target error polynomial ``s**2 + alpha2*s + alpha1``."""

    alpha1: float
    alpha2: float

    def __post_init__(self):
        _require_positive(alpha1=self.alpha1, alpha2=self.alpha2)

    def closed_loop_poles(self) -> np.ndarray:
        return np.roots([1.0, self.alpha2, self.alpha1])


@dataclass(frozen=True)
class ReferenceSample:
    r: float
    dr: float
    ddr: float


@dataclass(frozen=True)
class ReferenceGenerator:
    """Immutable reference (or open-loop input) signal.

    ``params`` may omit keys; missing ones take the kind's defaults. Unknown
    keys raise ``ValueError``.

    The step-plus-ramp kind blends each breakpoint with a quintic over
    ``[breakpoint, breakpoint + blend]`` so that the second derivative exists
    everywhere.
    """

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in REFERENCE_KINDS:
            raise ValueError(f"unknown reference kind {self.kind!r}; "
                             f"expected one of {sorted(REFERENCE_KINDS)}")
        defaults = REFERENCE_KINDS[self.kind][1]
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ValueError(f"unknown parameter(s) {sorted(unknown)} for kind {self.kind!r}")
        merged = {**defaults, **{k: float(v) for k, v in self.params.items()}}
        for k, v in merged.items():
            if not math.isfinite(v):
                raise ValueError(f"{k} must be finite")
        if self.kind == "step_plus_ramp" and not merged["blend"] > 0:
            raise ValueError("blend must be positive")
        object.__setattr__(self, "params", MappingProxyType(merged))

    def packed(self) -> tuple[int, np.ndarray]:
        code, defaults = REFERENCE_KINDS[self.kind]
        return code, np.array([self.params[k] for k in defaults], dtype=np.float64)

    def sample(self, t: float) -> ReferenceSample:
        code, p = self.packed()
        return ReferenceSample(*K.reference(code, p, float(t)))

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}


def sample_reference(gen: ReferenceGenerator, t: float) -> ReferenceSample:
    if t < 0:
        raise ValueError("t must be non-negative")
    return gen.sample(t)


def control(out: ObserverOutput, x1: float, ref: ReferenceSample, g: ControllerGains,
            vartheta: float) -> float:
    """Certainty-equivalent tracking law using only ``x1`` and observer estimates."""
    return K.control_law(out.x2hat, out.theta1hat, out.theta2hat, x1, ref.r, ref.dr, ref.ddr,
                         g.alpha1, g.alpha2, vartheta)
