"""Ground-truth diagnostics: ideal control law and its deviation.

These need the true velocity and friction coefficients, which a deployed
controller never has. They exist to audit simulated runs.
"""

from __future__ import annotations

from .controller import ControllerGains, ReferenceSample
from .models import FrictionParams, MechState
from .observer import ErrorVector
from . import _kernels as K


def ideal_control(x: MechState, p: FrictionParams, ref: ReferenceSample,
                  g: ControllerGains) -> float:
    return K.ideal_control(x.x1, x.x2, p.theta1, p.theta2, p.vartheta,
                           ref.r, ref.dr, ref.ddr, g.alpha1, g.alpha2)


def epsilon_t(x2_true: float, e: ErrorVector, p: FrictionParams, alpha2: float) -> float:
    """Deviation ``u - u*`` written in terms of the estimation errors."""
    return K.epsilon_t(x2_true, e.x2tilde, e.theta1tilde, e.theta2tilde,
                       p.theta1, p.theta2, p.vartheta, alpha2)


def error_vector(x2_true: float, x2hat: float, theta1hat: float, theta2hat: float,
                 p: FrictionParams, x3tilde: float | None = None) -> ErrorVector:
    return ErrorVector(x2hat - x2_true, theta1hat - p.theta1, theta2hat - p.theta2, x3tilde)
