"""Fixed-step RK4 integration of plant + observer + controller.

The stacked state is ``plant ⊕ observer integral states``. Observer
estimates and the control are recomputed algebraically at every RK4 stage,
never held over a step.
"""

from __future__ import annotations

import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from numba import njit

from . import _kernels as K
from .controller import ControllerGains, ReferenceGenerator
from .models import FrictionParams, HydroParams, LuGreParams
from .observer import ObserverGains, ObserverState, _require_positive

log = logging.getLogger(__name__)

PlantParams = Union[FrictionParams, HydroParams, LuGreParams]

PLANT_STATE_NAMES = {
    "mech": ("x1", "x2"),
    "hydro": ("x1", "x2", "x3"),
    "lugre": ("x1", "x2", "z"),
}
# Also the documented stability ceiling; larger steps are allowed with a warning.
DEFAULT_DT = {"mech": 1e-4, "hydro": 1e-4, "lugre": 1e-5}
H_TOL = 1e-9

_KIND_CODE = {"mech": K.PLANT_MECH, "hydro": K.PLANT_HYDRO, "lugre": K.PLANT_LUGRE}


class IntegrationDiverged(RuntimeError):
    def __init__(self, t: float, log: Optional["TrajectoryLog"] = None):
        super().__init__(f"integration diverged at t={t!r}")
        self.t = t
        self.log = log


def plant_kind(p: PlantParams) -> str:
    if isinstance(p, FrictionParams):
        return "mech"
    if isinstance(p, HydroParams):
        return "hydro"
    if isinstance(p, LuGreParams):
        return "lugre"
    raise TypeError(f"not a plant parameter record: {type(p).__name__}")


def log_columns(kind: str) -> tuple[str, ...]:
    obs = ("x2I", "theta1I", "theta2I") + (("x3hat",) if kind == "hydro" else ())
    cols = (("t",) + PLANT_STATE_NAMES[kind] + obs
            + ("hat_x2", "hat_theta1", "hat_theta2", "u", "u_star", "epsilon_t",
               "r", "dr", "ddr", "e1", "tilde_x2", "tilde_theta1", "tilde_theta2", "H"))
    if kind == "hydro":
        cols += ("tilde_x3", "U")
    return cols


@dataclass(frozen=True)
class ClosedLoopSystem:
    """Plant, observer, and either a tracking controller or a fixed input.

    With ``open_loop_input`` set the controller is bypassed and ``u(t)`` is
    the generator's ``r`` channel. The hydro plant is only supported open
    loop: the tracking law acts on the velocity channel, which the hydro
    input does not drive directly.
    """

    plant: PlantParams
    observer: ObserverGains
    controller: Optional[ControllerGains] = None
    reference: ReferenceGenerator = field(default_factory=lambda: ReferenceGenerator("constant"))
    open_loop_input: Optional[ReferenceGenerator] = None
    alpha1_lyap: Optional[float] = None

    def __post_init__(self):
        kind = plant_kind(self.plant)
        if self.open_loop_input is None and self.controller is None:
            raise ValueError("either controller gains or an open-loop input is required")
        if kind == "hydro" and self.open_loop_input is None:
            raise ValueError("hydro plant requires an open-loop input")
        if kind == "hydro" and self.alpha1_lyap is None:
            object.__setattr__(self, "alpha1_lyap", 2.0 / self.plant.a1)

    @property
    def kind(self) -> str:
        return plant_kind(self.plant)

    @property
    def closed_loop(self) -> bool:
        return self.open_loop_input is None

    def reference_friction(self) -> FrictionParams:
        """Coefficients the diagnostics compare the estimates against.

        For LuGre runs the viscous and Coulomb estimates are compared with
        ``sigma2`` and ``FC``. The observer's sharpness is used throughout
        so that ``u - u_star`` and ``epsilon_t`` are the same expression.
        """
        p = self.plant
        if isinstance(p, LuGreParams):
            return FrictionParams(p.sigma2, p.FC, self.observer.vartheta)
        f = p.friction if isinstance(p, HydroParams) else p
        return FrictionParams(f.theta1, f.theta2, self.observer.vartheta)

    def packed(self):
        p = self.plant
        if isinstance(p, FrictionParams):
            pp = [p.theta1, p.theta2, p.vartheta]
        elif isinstance(p, HydroParams):
            f = p.friction
            pp = [f.theta1, f.theta2, f.vartheta, p.a1, p.a2, p.a3]
        else:
            pp = [p.sigma0, p.sigma1, p.sigma2, p.FC, p.FS, p.vS]
        truth = self.reference_friction()
        c = self.controller
        gains = [self.observer.k1, self.observer.vartheta,
                 c.alpha1 if c else 0.0, c.alpha2 if c else 0.0,
                 self.alpha1_lyap if self.alpha1_lyap is not None else 0.0]
        refk, refp = self.reference.packed()
        if self.open_loop_input is not None:
            ink, inp = self.open_loop_input.packed()
        else:
            ink, inp = K.REF_CONSTANT, np.zeros(1)
        return (_KIND_CODE[self.kind], np.array(pp, float), np.array([truth.theta1, truth.theta2]),
                np.array(gains, float), self.closed_loop, refk, refp, ink, inp)


@dataclass(frozen=True)
class SimConfig:
    t_end: float
    dt: Optional[float] = None
    log_every: int = 100
    seed: Optional[int] = None

    def __post_init__(self):
        _require_positive(t_end=self.t_end)
        if self.dt is not None:
            _require_positive(dt=self.dt)
            if self.t_end < self.dt:
                raise ValueError("t_end must be >= dt")
        if int(self.log_every) != self.log_every or self.log_every < 1:
            raise ValueError("log_every must be a positive integer")

    def step(self, kind: str) -> float:
        return self.dt if self.dt is not None else DEFAULT_DT[kind]


@dataclass(frozen=True)
class InitialState:
    plant: tuple[float, ...]
    observer: ObserverState = ObserverState()


def random_initial_state(kind: str, seed: int, low: float = -2.0, high: float = 2.0) -> InitialState:
    """Uniform draw over the box ``[low, high]`` for every plant and observer state."""
    rng = np.random.default_rng(seed)
    n_plant = len(PLANT_STATE_NAMES[kind])
    n_obs = 4 if kind == "hydro" else 3
    v = rng.uniform(low, high, n_plant + n_obs).tolist()
    obs = ObserverState(*v[n_plant:n_plant + 3], x3hat=v[-1] if kind == "hydro" else None)
    return InitialState(tuple(v[:n_plant]), obs)


@dataclass
class TrajectoryLog:
    columns: tuple[str, ...]
    data: np.ndarray
    header: dict = field(default_factory=dict)
    diverged_at: Optional[float] = None

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def __len__(self) -> int:
        return self.data.shape[0]

    def to_csv(self, path=None) -> str:
        """Serialize to CSV; floats use the shortest round-trip repr."""
        buf = io.StringIO()
        for key, value in self.header.items():
            buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.data.tolist():
            buf.write(",".join(map(repr, row)) + "\n")
        if self.diverged_at is not None:
            buf.write(f"# DIVERGED at t={self.diverged_at!r}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "TrajectoryLog":
        header, rows, columns, diverged = {}, [], None, None
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("# DIVERGED at t="):
                    diverged = float(line.split("=", 1)[1])
                elif line.startswith("#"):
                    key, _, value = line[1:].strip().partition(": ")
                    header[key] = json.loads(value)
                elif columns is None:
                    columns = tuple(line.split(","))
                else:
                    rows.append([float(x) for x in line.split(",")])
        if columns is None:
            raise ValueError(f"{path}: no header row")
        data = np.array(rows, dtype=float).reshape(len(rows), len(columns))
        return cls(columns, data, header, diverged)


@njit
def _inputs(closed, t, x1, x2h, th1h, th2h, gains, refk, refp, ink, inp):
    r, dr, ddr = K.reference(refk, refp, t)
    if closed:
        u = K.control_law(x2h, th1h, th2h, x1, r, dr, ddr, gains[2], gains[3], gains[1])
    else:
        u = K.reference(ink, inp, t)[0]
    return u, r, dr, ddr


@njit
def _field(kind, t, y, pp, gains, closed, refk, refp, ink, inp, dy):
    npl = 2 if kind == K.PLANT_MECH else 3
    k1 = gains[0]
    vth = gains[1]
    x1 = y[0]
    x2 = y[1]
    x2h, th1h, th2h = K.observer_output(y[npl], y[npl + 1], y[npl + 2], x1, k1, vth)
    u, r, dr, ddr = _inputs(closed, t, x1, x2h, th1h, th2h, gains, refk, refp, ink, inp)
    dy[0] = x2
    drive = u
    if kind == K.PLANT_MECH:
        dy[1] = K.mech_accel(x2, pp[0], pp[1], pp[2], u)
    elif kind == K.PLANT_HYDRO:
        x3 = y[2]
        x3h = y[6]
        dy[1] = K.mech_accel(x2, pp[0], pp[1], pp[2], 0.0) + pp[3] * x3
        dy[2] = -pp[4] * x2 - pp[5] * x3 + u
        dy[6] = -pp[4] * x2h - pp[5] * x3h + u
        drive = pp[3] * x3h
    else:
        dz, dx2 = K.lugre_rates(x2, y[2], pp[0], pp[1], pp[2], pp[3], pp[4], pp[5], u)
        dy[1] = dx2
        dy[2] = dz
    a, b, c = K.observer_rates(x2h, th1h, th2h, k1, vth, drive)
    dy[npl] = a
    dy[npl + 1] = b
    dy[npl + 2] = c


@njit
def _log_row(kind, t, y, truth, gains, closed, refk, refp, ink, inp, row):
    npl = 2 if kind == K.PLANT_MECH else 3
    n = y.shape[0]
    k1 = gains[0]
    vth = gains[1]
    row[0] = t
    for i in range(n):
        row[1 + i] = y[i]
    x1 = y[0]
    x2 = y[1]
    x2h, th1h, th2h = K.observer_output(y[npl], y[npl + 1], y[npl + 2], x1, k1, vth)
    u, r, dr, ddr = _inputs(closed, t, x1, x2h, th1h, th2h, gains, refk, refp, ink, inp)
    x2t = x2h - x2
    th1t = th1h - truth[0]
    th2t = th2h - truth[1]
    if closed:
        ustar = K.ideal_control(x1, x2, truth[0], truth[1], vth, r, dr, ddr, gains[2], gains[3])
        eps = K.epsilon_t(x2, x2t, th1t, th2t, truth[0], truth[1], vth, gains[3])
    else:
        ustar = math.nan
        eps = math.nan
    H = 0.5 * (vth * x2t * x2t + th1t * th1t + th2t * th2t)
    j = 1 + n
    vals = (x2h, th1h, th2h, u, ustar, eps, r, dr, ddr, x1 - r, x2t, th1t, th2t, H)
    for i in range(14):
        row[j + i] = vals[i]
    if kind == K.PLANT_HYDRO:
        x3t = y[6] - y[2]
        row[j + 14] = x3t
        row[j + 15] = H + 0.5 * gains[4] * x3t * x3t


@njit(nogil=True)
def _integrate(kind, pp, truth, gains, closed, refk, refp, ink, inp, y0, dt, n_steps,
               log_every, ncols):
    n = y0.shape[0]
    n_rows = n_steps // log_every + 1
    out = np.full((n_rows, ncols), np.nan)
    y = y0.copy()
    s1 = np.empty(n)
    s2 = np.empty(n)
    s3 = np.empty(n)
    s4 = np.empty(n)
    tmp = np.empty(n)
    _log_row(kind, 0.0, y, truth, gains, closed, refk, refp, ink, inp, out[0])
    row = 1
    for i in range(n_steps):
        t = i * dt
        h2 = 0.5 * dt
        _field(kind, t, y, pp, gains, closed, refk, refp, ink, inp, s1)
        for j in range(n):
            tmp[j] = y[j] + h2 * s1[j]
        _field(kind, t + h2, tmp, pp, gains, closed, refk, refp, ink, inp, s2)
        for j in range(n):
            tmp[j] = y[j] + h2 * s2[j]
        _field(kind, t + h2, tmp, pp, gains, closed, refk, refp, ink, inp, s3)
        for j in range(n):
            tmp[j] = y[j] + dt * s3[j]
        _field(kind, t + dt, tmp, pp, gains, closed, refk, refp, ink, inp, s4)
        ok = True
        for j in range(n):
            y[j] = y[j] + (dt / 6.0) * (s1[j] + 2.0 * s2[j] + 2.0 * s3[j] + s4[j])
            if not math.isfinite(y[j]):
                ok = False
        if not ok:
            return out, row, (i + 1) * dt
        if (i + 1) % log_every == 0:
            _log_row(kind, (i + 1) * dt, y, truth, gains, closed, refk, refp, ink, inp, out[row])
            row += 1
    return out, row, -1.0


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], y, t: float, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of ``y' = f(t, y)``.

    Raises ``IntegrationDiverged`` if the update is not finite.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    y = np.asarray(y, dtype=float)
    k1 = np.asarray(f(t, y), dtype=float)
    k2 = np.asarray(f(t + dt / 2, y + dt / 2 * k1), dtype=float)
    k3 = np.asarray(f(t + dt / 2, y + dt / 2 * k2), dtype=float)
    k4 = np.asarray(f(t + dt, y + dt * k3), dtype=float)
    y_next = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(y_next)):
        raise IntegrationDiverged(t + dt)
    return y_next


def _stack_initial(sys: ClosedLoopSystem, init: InitialState) -> np.ndarray:
    names = PLANT_STATE_NAMES[sys.kind]
    if len(init.plant) != len(names):
        raise ValueError(f"{sys.kind} plant expects initial state {names}, got {init.plant}")
    o = init.observer
    y = list(map(float, init.plant)) + [o.x2I, o.theta1I, o.theta2I]
    if sys.kind == "hydro":
        y.append(0.0 if o.x3hat is None else float(o.x3hat))
    elif o.x3hat is not None:
        raise ValueError("x3hat is only meaningful for the hydro plant")
    y = np.array(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state must be finite")
    return y


def simulate(sys: ClosedLoopSystem, cfg: SimConfig, init: Optional[InitialState] = None,
             header: Optional[dict] = None) -> TrajectoryLog:
    """Integrate the closed loop and return the decimated log.

    Raises ``IntegrationDiverged`` (with the partial log attached) if the
    state stops being finite.
    """
    kind = sys.kind
    if init is None:
        init = InitialState((0.0,) * len(PLANT_STATE_NAMES[kind]))
    dt = cfg.step(kind)
    if dt > DEFAULT_DT[kind] * (1 + 1e-12):
        log.warning("dt=%g exceeds the documented ceiling %g for the %s plant",
                    dt, DEFAULT_DT[kind], kind)
    n_steps = int(round(cfg.t_end / dt))
    cols = log_columns(kind)
    y0 = _stack_initial(sys, init)
    out, rows, t_div = _integrate(*sys.packed(), y0, dt, n_steps, int(cfg.log_every), len(cols))
    meta = dict(header or {})
    meta.setdefault("seed", cfg.seed)
    if t_div >= 0:
        tl = TrajectoryLog(cols, out[:rows], meta, diverged_at=t_div)
        raise IntegrationDiverged(t_div, tl)
    return TrajectoryLog(cols, out, meta)


@dataclass(frozen=True)
class Metrics:
    rms_e1: float
    max_abs_e1: float
    rms_x2tilde: float
    final_theta1_error: float
    final_theta2_error: float
    H_monotonicity_violations: int
    # hydro runs only
    U_monotonicity_violations: Optional[int] = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def monotonicity_violations(values: np.ndarray, tol: float = H_TOL) -> int:
    """Count per-sample increases larger than ``tol * max(1, value)``."""
    v = np.asarray(values, dtype=float)
    inc = np.diff(v)
    return int(np.count_nonzero(inc > tol * np.maximum(1.0, v[:-1])))


def metrics(tl: TrajectoryLog, window: Optional[tuple[float, float]] = None) -> Metrics:
    t = tl["t"]
    t0, t1 = window if window is not None else (t[0], t[-1])
    if t0 < t[0] - 1e-12 or t1 > t[-1] + 1e-12 or t1 < t0:
        raise ValueError(f"window {(t0, t1)} outside log span [{t[0]}, {t[-1]}]")
    slack = 1e-9 * max(1.0, abs(t1))
    mask = (t >= t0 - slack) & (t <= t1 + slack)
    if not mask.any():
        raise ValueError("empty metrics window")
    e1 = tl["e1"][mask]
    x2t = tl["tilde_x2"][mask]
    return Metrics(
        rms_e1=float(np.sqrt(np.mean(e1 ** 2))),
        max_abs_e1=float(np.max(np.abs(e1))),
        rms_x2tilde=float(np.sqrt(np.mean(x2t ** 2))),
        final_theta1_error=float(tl["tilde_theta1"][mask][-1]),
        final_theta2_error=float(tl["tilde_theta2"][mask][-1]),
        H_monotonicity_violations=monotonicity_violations(tl["H"][mask]),
        U_monotonicity_violations=(monotonicity_violations(tl["U"][mask])
                                   if "U" in tl.columns else None),
    )
