"""Immersion-and-invariance adaptive velocity observer.

Each estimate is a proportional term, algebraic in the measured position or
in the velocity estimate, plus an integrated term. Only the integral states
are integrated; the estimates are always reconstructed algebraically, so the
proportional-integral identities hold exactly at every sample.

The hydro-mechanical variant adds a pressure-estimate state and replaces
the input in the velocity channel by ``a1 * x3hat``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import _kernels as K
from .models import HydroParams, _require_positive

K1_MIN_MARGIN = 1e-6


class ConfigurationError(ValueError):
    """Observer state or gains do not match the requested variant."""


class CertificateInfeasible(ValueError):
    """The Lyapunov weight cannot make the pressure-error decay rate positive."""


@dataclass(frozen=True)
class ObserverGains:
    k1: float
    vartheta: float

    def __post_init__(self):
        _require_positive(k1=self.k1, vartheta=self.vartheta)


@dataclass(frozen=True)
class ObserverState:
    x2I: float = 0.0
    theta1I: float = 0.0
    theta2I: float = 0.0
    x3hat: Optional[float] = None


@dataclass(frozen=True)
class ObserverOutput:
    x2hat: float
    theta1hat: float
    theta2hat: float
    # k1 + theta1 > k1 since theta1 > 0; the true rate needs theta1.
    gamma1_lower: float


@dataclass(frozen=True)
class ErrorVector:
    """Estimation errors ``estimate - truth``. Diagnostics only."""

    x2tilde: float
    theta1tilde: float
    theta2tilde: float
    x3tilde: Optional[float] = None


@dataclass(frozen=True)
class HydroGainCertificate:
    alpha1_lyap: float
    alpha2_lyap: float
    alpha3_lyap: float
    k1_min: float


def logcosh(y: float) -> float:
    """``log(cosh(y))`` without overflow for large ``|y|``."""
    return K.logcosh(y)


def observer_output(os: ObserverState, x1: float, g: ObserverGains) -> ObserverOutput:
    x2hat, th1, th2 = K.observer_output(os.x2I, os.theta1I, os.theta2I, x1, g.k1, g.vartheta)
    return ObserverOutput(x2hat, th1, th2, g.k1)


def observer_rhs(os: ObserverState, x1: float, u: float, g: ObserverGains) -> ObserverState:
    """Time derivative of the integral states for the mechanical plant."""
    out = observer_output(os, x1, g)
    d = K.observer_rates(out.x2hat, out.theta1hat, out.theta2hat, g.k1, g.vartheta, u)
    return ObserverState(*d)


def hydro_observer_rhs(os: ObserverState, x1: float, u: float, g: ObserverGains,
                       p: HydroParams) -> ObserverState:
    """Time derivative for the hydro-mechanical variant.

    The velocity channel is driven by ``a1 * x3hat`` instead of ``u``; the
    pressure estimate copies the linear pressure dynamics.
    """
    if os.x3hat is None:
        raise ConfigurationError("hydro observer requires ObserverState.x3hat")
    out = observer_output(os, x1, g)
    d = K.observer_rates(out.x2hat, out.theta1hat, out.theta2hat, g.k1, g.vartheta,
                         p.a1 * os.x3hat)
    dx3hat = -p.a2 * out.x2hat - p.a3 * os.x3hat + u
    return ObserverState(d[0], d[1], d[2], dx3hat)


def lyapunov_H(e: ErrorVector, vartheta: float) -> float:
    return 0.5 * (vartheta * e.x2tilde ** 2 + e.theta1tilde ** 2 + e.theta2tilde ** 2)


def lyapunov_U(e: ErrorVector, vartheta: float, alpha1_lyap: float) -> float:
    """``H`` plus the weighted squared pressure error."""
    if e.x3tilde is None:
        raise ConfigurationError("lyapunov_U requires ErrorVector.x3tilde")
    return lyapunov_H(e, vartheta) + 0.5 * alpha1_lyap * e.x3tilde ** 2


def alpha2_lyap(k1: float, theta1: float, theta2: float, vartheta: float,
                a2: float, alpha1_lyap: float) -> float:
    """Velocity-error decay coefficient of the hydro certificate."""
    gamma1 = k1 + theta1
    return (vartheta * gamma1 + theta2 * vartheta ** 2 - 0.5 * theta2 ** 2 * vartheta ** 2
            - 0.5 * alpha1_lyap ** 2 * a2 ** 2)


def k1_min(theta2_upper: float, vartheta: float, p: HydroParams, alpha1_lyap: float) -> float:
    """Smallest observer gain certifying the hydro variant.

    Worst case is taken over theta1 -> 0 and theta2 in (0, theta2_upper]:
    ``theta2**2*vartheta**2/2 - theta2*vartheta**2`` is convex in theta2, so
    its supremum sits at an endpoint, i.e. at ``theta2_upper`` or at the
    ``theta2 -> 0`` limit where it vanishes. A relative margin keeps the
    inequality strict.

    Raises
    ------
    CertificateInfeasible
        If ``alpha1_lyap <= 1/a1``.
    """
    _require_positive(theta2_upper=theta2_upper, vartheta=vartheta)
    if not alpha1_lyap > 1.0 / p.a1:
        raise CertificateInfeasible(
            f"alpha1_lyap={alpha1_lyap} must exceed 1/a1={1.0 / p.a1}")
    worst = max(0.0, 0.5 * theta2_upper ** 2 * vartheta ** 2 - theta2_upper * vartheta ** 2)
    base = (worst + 0.5 * alpha1_lyap ** 2 * p.a2 ** 2) / vartheta
    return base * (1.0 + K1_MIN_MARGIN)


def hydro_certificate(k1: float, theta2_upper: float, vartheta: float, p: HydroParams,
                      alpha1_lyap: float) -> HydroGainCertificate:
    """Bundle the certificate quantities for a chosen ``k1``.

    ``alpha2_lyap`` is reported at its worst case (theta1 = 0, worst theta2).
    """
    kmin = k1_min(theta2_upper, vartheta, p, alpha1_lyap)
    a2_worst = min(alpha2_lyap(k1, 0.0, theta2_upper, vartheta, p.a2, alpha1_lyap),
                   alpha2_lyap(k1, 0.0, 0.0, vartheta, p.a2, alpha1_lyap))
    return HydroGainCertificate(alpha1_lyap=alpha1_lyap, alpha2_lyap=a2_worst,
                                alpha3_lyap=alpha1_lyap * p.a1 - 1.0, k1_min=kmin)
