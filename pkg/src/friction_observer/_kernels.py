"""Scalar kernels shared by the public API and the compiled integrator.

Every formula lives here exactly once. The public dataclass functions in
``models``, ``observer`` and ``controller`` unpack their records and call
these; the engine calls them from inside its jitted RK4 loop.
"""

import math

from numba import njit

LOG2 = math.log(2.0)

# Reference / input generator kinds (index into the packed parameter vector).
REF_CONSTANT = 0
REF_SINUSOID = 1
REF_CHIRP = 2
REF_STEP_PLUS_RAMP = 3

# Plant kinds.
PLANT_MECH = 0
PLANT_HYDRO = 1
PLANT_LUGRE = 2


@njit
def logcosh(y):
    a = abs(y)
    if a < 1.0:
        # cosh(y) - 1 = 2 sinh(y/2)^2 avoids cancellation near zero
        return math.log1p(2.0 * math.sinh(0.5 * a) ** 2)
    return a + math.log1p(math.exp(-2.0 * a)) - LOG2


@njit
def friction(x2, theta1, theta2, vartheta):
    return theta1 * x2 + theta2 * math.tanh(vartheta * x2)


@njit
def mech_accel(x2, theta1, theta2, vartheta, u):
    return -friction(x2, theta1, theta2, vartheta) + u


@njit
def lugre_g(x2, fc, fs, vs):
    q = x2 / vs
    return fc + (fs - fc) * math.exp(-q * q)


@njit
def lugre_rates(x2, z, sigma0, sigma1, sigma2, fc, fs, vs, u):
    """Return (dz, dx2); dz is reused inside dx2."""
    dz = x2 - sigma0 * abs(x2) * z / lugre_g(x2, fc, fs, vs)
    dx2 = -sigma2 * x2 - sigma1 * dz - sigma0 * z + u
    return dz, dx2


@njit
def observer_output(x2I, theta1I, theta2I, x1, k1, vartheta):
    x2hat = x2I + k1 * x1
    theta1hat = theta1I - (vartheta / (2.0 * k1)) * x2hat * x2hat
    theta2hat = theta2I - logcosh(vartheta * x2hat) / k1
    return x2hat, theta1hat, theta2hat


@njit
def observer_rates(x2hat, theta1hat, theta2hat, k1, vartheta, drive):
    """Integral-state rates. ``drive`` is u (mech) or a1*x3hat (hydro)."""
    th = math.tanh(vartheta * x2hat)
    dx2I = -(theta1hat + k1) * x2hat - theta2hat * th + drive
    common = (vartheta / k1) * (dx2I + k1 * x2hat)
    return dx2I, common * x2hat, common * th


@njit
def control_law(x2hat, theta1hat, theta2hat, x1, r, dr, ddr, alpha1, alpha2, vartheta):
    return (theta1hat * x2hat + theta2hat * math.tanh(vartheta * x2hat) + ddr
            - alpha1 * (x1 - r) - alpha2 * (x2hat - dr))


@njit
def ideal_control(x1, x2, theta1, theta2, vartheta, r, dr, ddr, alpha1, alpha2):
    return (theta1 * x2 + theta2 * math.tanh(vartheta * x2) + ddr
            - alpha1 * (x1 - r) - alpha2 * (x2 - dr))


@njit
def epsilon_t(x2, x2tilde, theta1tilde, theta2tilde, theta1, theta2, vartheta, alpha2):
    # The damping term enters as -alpha2*x2tilde: u - u* carries
    # -alpha2*(x2hat - dr) + alpha2*(x2 - dr).
    th_hat = math.tanh(vartheta * (x2 + x2tilde))
    return (theta1 * x2tilde + theta1tilde * (x2 + x2tilde) + theta2tilde * th_hat
            + theta2 * (th_hat - math.tanh(vartheta * x2)) - alpha2 * x2tilde)


@njit
def _smoothstep(xi):
    """Quintic C2 step on [0, 1] with its first two derivatives."""
    if xi <= 0.0:
        return 0.0, 0.0, 0.0
    if xi >= 1.0:
        return 1.0, 0.0, 0.0
    x2 = xi * xi
    x3 = x2 * xi
    s = x3 * (10.0 + xi * (6.0 * xi - 15.0))
    ds = 30.0 * x2 * (1.0 - xi) * (1.0 - xi)
    dds = 60.0 * xi * (1.0 - 3.0 * xi + 2.0 * x2)
    return s, ds, dds


@njit
def _smoothramp(xi):
    """Integral of the quintic step: a ramp whose kink is blended over [0, 1]."""
    if xi <= 0.0:
        return 0.0
    if xi >= 1.0:
        return xi - 0.5
    x4 = xi * xi * xi * xi
    return x4 * (2.5 - 3.0 * xi + xi * xi)


@njit
def reference(kind, p, t):
    """Return (r, dr, ddr) for a packed generator ``p`` at time ``t``."""
    if kind == REF_CONSTANT:
        return p[0], 0.0, 0.0
    if kind == REF_SINUSOID:
        amp, w, phase, offset = p[0], p[1], p[2], p[3]
        arg = w * t + phase
        return offset + amp * math.sin(arg), amp * w * math.cos(arg), -amp * w * w * math.sin(arg)
    if kind == REF_CHIRP:
        amp, c = p[0], p[1]
        arg = c * t * t
        s = math.sin(arg)
        co = math.cos(arg)
        return (amp * co, -2.0 * amp * c * t * s,
                -2.0 * amp * c * s - 4.0 * amp * c * c * t * t * co)
    # step plus ramp: [step_time, step_height, ramp_start, ramp_slope, blend, offset]
    ts, h, tr, slope, tau, offset = p[0], p[1], p[2], p[3], p[4], p[5]
    s, ds, dds = _smoothstep((t - ts) / tau)
    xi = (t - tr) / tau
    q, dq, ddq = _smoothstep(xi)
    r = offset + h * s + slope * tau * _smoothramp(xi)
    dr = h * ds / tau + slope * q
    ddr = h * dds / (tau * tau) + slope * dq / tau
    return r, dr, ddr

