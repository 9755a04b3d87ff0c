"""Scenario files: strict JSON parsing and canonical serialization.

A scenario describes one plant, an observer (optionally a sweep over
``k1``), either tracking-controller gains or a fixed open-loop input, a
reference, initial conditions, simulation settings and outputs. Unknown
keys are rejected; every error names the offending JSON path.

Minimal example::

    {"name": "demo", "plant": {"kind": "mech"}, "observer": {"k1": 1.0},
     "controller": {"alpha1": 100, "alpha2": 100},
     "reference": {"kind": "chirp"}, "sim": {"t_end": 10}}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Union

from .controller import REFERENCE_KINDS, ControllerGains, ReferenceGenerator
from .engine import PLANT_STATE_NAMES, InitialState, SimConfig, random_initial_state
from .models import FrictionParams, HydroParams, LuGreParams
from .observer import ObserverState

PlantParams = Union[FrictionParams, HydroParams, LuGreParams]

_PLANT_DEFAULTS = {
    "mech": {"theta1": 0.4, "theta2": 1.0, "vartheta": 100.0},
    "hydro": {"a1": 1.0, "a2": 1.0, "a3": 1.0, "theta1": 0.4, "theta2": 1.0, "vartheta": 100.0},
    "lugre": {"sigma0": 1e5, "sigma1": math.sqrt(1e5), "sigma2": 0.4,
              "FC": 1.0, "FS": 1.5, "vS": 0.001},
}
EXCITATION_MODES = ("pe", "intervals", "conservative")


class ScenarioError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class ObserverSection:
    vartheta: float = 100.0
    k1: tuple[float, ...] = ()
    k1_auto: bool = False
    theta2_upper: Optional[float] = None
    alpha1_lyap: Optional[float] = None
    x3hat: bool = False


@dataclass(frozen=True)
class InitialSection:
    plant: Optional[tuple[float, ...]] = None
    observer: ObserverState = ObserverState()
    random_box: Optional[tuple[float, float]] = None


@dataclass(frozen=True)
class ExcitationSpec:
    mode: str
    T: Optional[float] = None
    mu: Optional[float] = None
    stride: Optional[float] = None
    windows: Optional[tuple[tuple[float, float], ...]] = None
    partition: Optional[tuple[float, ...]] = None


@dataclass(frozen=True)
class OutputSection:
    directory: str = "out"
    emit_plots: bool = False
    excitation: Optional[ExcitationSpec] = None
    metrics_window: Optional[tuple[float, float]] = None


@dataclass(frozen=True)
class Scenario:
    name: str
    plant: PlantParams
    observer: ObserverSection
    reference: ReferenceGenerator
    sim: SimConfig
    controller: Optional[ControllerGains] = None
    open_loop_input: Optional[ReferenceGenerator] = None
    initial: InitialSection = InitialSection()
    output: OutputSection = field(default_factory=OutputSection)

    @property
    def plant_kind(self) -> str:
        if isinstance(self.plant, FrictionParams):
            return "mech"
        return "hydro" if isinstance(self.plant, HydroParams) else "lugre"


# -- helpers -----------------------------------------------------------------

def _obj(value: Any, path: str, allowed: set[str], required: tuple[str, ...] = ()) -> dict:
    if not isinstance(value, dict):
        raise ScenarioError(path, f"expected an object, got {type(value).__name__}")
    for key in value:
        if key not in allowed:
            raise ScenarioError(f"{path}.{key}", f"unknown key (allowed: {sorted(allowed)})")
    for key in required:
        if key not in value:
            raise ScenarioError(f"{path}.{key}", "missing required key")
    return value


def _num(value: Any, path: str, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(path, f"expected a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        raise ScenarioError(path, "must be finite")
    if positive and not v > 0:
        raise ScenarioError(path, f"must be positive, got {v}")
    return v


def _bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ScenarioError(path, f"expected true/false, got {value!r}")
    return value


def _int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(path, f"expected an integer, got {value!r}")
    return value


def _numlist(value: Any, path: str, length: Optional[int] = None) -> tuple[float, ...]:
    if not isinstance(value, list):
        raise ScenarioError(path, "expected a list of numbers")
    if length is not None and len(value) != length:
        raise ScenarioError(path, f"expected {length} entries, got {len(value)}")
    return tuple(_num(v, f"{path}[{i}]") for i, v in enumerate(value))


def _wrap(path: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError(path, str(exc)) from None


# -- sections ----------------------------------------------------------------

def _parse_plant(d: Any) -> PlantParams:
    kind = _obj(d, "plant", {"kind"} | set().union(*_PLANT_DEFAULTS.values()), ("kind",))["kind"]
    if kind not in _PLANT_DEFAULTS:
        raise ScenarioError("plant.kind", f"expected one of {sorted(_PLANT_DEFAULTS)}, got {kind!r}")
    defaults = _PLANT_DEFAULTS[kind]
    _obj(d, "plant", {"kind"} | set(defaults))
    # every plant coefficient is a positive magnitude
    v = {k: _num(d.get(k, dv), f"plant.{k}", positive=True) for k, dv in defaults.items()}
    if kind == "lugre":
        return _wrap("plant", LuGreParams, **v)
    fr = _wrap("plant", FrictionParams, v["theta1"], v["theta2"], v["vartheta"])
    if kind == "mech":
        return fr
    return _wrap("plant", HydroParams, v["a1"], v["a2"], v["a3"], fr)


def _parse_generator(d: Any, path: str) -> ReferenceGenerator:
    _obj(d, path, {"kind"} | set().union(*(p for _, p in REFERENCE_KINDS.values())), ("kind",))
    kind = d["kind"]
    if kind not in REFERENCE_KINDS:
        raise ScenarioError(f"{path}.kind",
                            f"expected one of {sorted(REFERENCE_KINDS)}, got {kind!r}")
    _obj(d, path, {"kind"} | set(REFERENCE_KINDS[kind][1]))
    params = {k: _num(v, f"{path}.{k}") for k, v in d.items() if k != "kind"}
    return _wrap(path, ReferenceGenerator, kind, params)


def _parse_observer(d: Any, plant_kind: str) -> ObserverSection:
    _obj(d, "observer", {"k1", "vartheta", "k1_auto", "theta2_upper", "alpha1_lyap", "x3hat"})
    k1_auto = _bool(d.get("k1_auto", False), "observer.k1_auto")
    theta2_upper = d.get("theta2_upper")
    if theta2_upper is not None:
        theta2_upper = _num(theta2_upper, "observer.theta2_upper", positive=True)
    alpha1_lyap = d.get("alpha1_lyap")
    if alpha1_lyap is not None:
        alpha1_lyap = _num(alpha1_lyap, "observer.alpha1_lyap", positive=True)
    x3hat = _bool(d.get("x3hat", False), "observer.x3hat")
    if plant_kind == "hydro" and not x3hat:
        raise ScenarioError("observer.x3hat", "hydro plant requires x3hat: true")
    if plant_kind != "hydro" and x3hat:
        raise ScenarioError("observer.x3hat", "x3hat is only valid with the hydro plant")
    raw = d.get("k1")
    if k1_auto:
        if raw is not None:
            raise ScenarioError("observer.k1", "give either k1 or k1_auto, not both")
        if plant_kind != "hydro":
            raise ScenarioError("observer.k1_auto", "automatic gain requires the hydro plant")
        if theta2_upper is None:
            raise ScenarioError("observer.theta2_upper", "missing required key (k1_auto is true)")
        k1: tuple[float, ...] = ()
    else:
        if raw is None:
            raise ScenarioError("observer.k1", "missing required key")
        if isinstance(raw, list):
            if not raw:
                raise ScenarioError("observer.k1", "sweep list is empty")
            k1 = tuple(_num(v, f"observer.k1[{i}]", positive=True) for i, v in enumerate(raw))
        else:
            k1 = (_num(raw, "observer.k1", positive=True),)
    return ObserverSection(
        vartheta=_num(d.get("vartheta", 100.0), "observer.vartheta", positive=True),
        k1=k1, k1_auto=k1_auto, theta2_upper=theta2_upper, alpha1_lyap=alpha1_lyap, x3hat=x3hat)


def _parse_controller(d: Any):
    _obj(d, "controller", {"alpha1", "alpha2", "open_loop_input"})
    if "open_loop_input" in d:
        if "alpha1" in d or "alpha2" in d:
            raise ScenarioError("controller", "give either alpha1/alpha2 or open_loop_input")
        return None, _parse_generator(d["open_loop_input"], "controller.open_loop_input")
    _obj(d, "controller", {"alpha1", "alpha2"}, ("alpha1", "alpha2"))
    return ControllerGains(_num(d["alpha1"], "controller.alpha1", positive=True),
                           _num(d["alpha2"], "controller.alpha2", positive=True)), None


def _parse_initial(d: Any, plant_kind: str) -> InitialSection:
    _obj(d, "initial", {"plant", "observer", "random_box"})
    n = len(PLANT_STATE_NAMES[plant_kind])
    plant = _numlist(d["plant"], "initial.plant", n) if "plant" in d else None
    obs_d = _obj(d.get("observer", {}), "initial.observer", {"x2I", "theta1I", "theta2I", "x3hat"})
    if "x3hat" in obs_d and plant_kind != "hydro":
        raise ScenarioError("initial.observer.x3hat", "only valid with the hydro plant")
    obs = ObserverState(
        _num(obs_d.get("x2I", 0.0), "initial.observer.x2I"),
        _num(obs_d.get("theta1I", 0.0), "initial.observer.theta1I"),
        _num(obs_d.get("theta2I", 0.0), "initial.observer.theta2I"),
        _num(obs_d["x3hat"], "initial.observer.x3hat") if "x3hat" in obs_d else None)
    box = None
    if "random_box" in d:
        box = _numlist(d["random_box"], "initial.random_box", 2)
        if not box[0] < box[1]:
            raise ScenarioError("initial.random_box", "need low < high")
        if plant is not None or "observer" in d:
            raise ScenarioError("initial.random_box", "cannot be combined with explicit states")
    return InitialSection(plant, obs, box)


def _parse_sim(d: Any) -> SimConfig:
    _obj(d, "sim", {"t_end", "dt", "log_every", "seed"}, ("t_end",))
    dt = d.get("dt")
    seed = d.get("seed")
    cfg_args = dict(
        t_end=_num(d["t_end"], "sim.t_end", positive=True),
        dt=None if dt is None else _num(dt, "sim.dt", positive=True),
        log_every=_int(d.get("log_every", 100), "sim.log_every"),
        seed=None if seed is None else _int(seed, "sim.seed"),
    )
    return _wrap("sim", SimConfig, **cfg_args)


def _parse_excitation(d: Any) -> ExcitationSpec:
    p = "output.excitation"
    _obj(d, p, {"mode", "T", "mu", "stride", "windows", "partition"}, ("mode",))
    mode = d["mode"]
    if mode == "pe":
        _obj(d, p, {"mode", "T", "mu", "stride"}, ("T", "mu"))
        stride = d.get("stride")
        return ExcitationSpec("pe", T=_num(d["T"], f"{p}.T", positive=True),
                              mu=_num(d["mu"], f"{p}.mu", positive=True),
                              stride=None if stride is None else _num(stride, f"{p}.stride", True))
    if mode == "intervals":
        _obj(d, p, {"mode", "windows"}, ("windows",))
        if not isinstance(d["windows"], list) or not d["windows"]:
            raise ScenarioError(f"{p}.windows", "expected a non-empty list of [t_k, T_k]")
        return ExcitationSpec("intervals", windows=tuple(
            _numlist(w, f"{p}.windows[{i}]", 2) for i, w in enumerate(d["windows"])))
    if mode == "conservative":
        _obj(d, p, {"mode", "partition"}, ("partition",))
        return ExcitationSpec("conservative", partition=_numlist(d["partition"], f"{p}.partition"))
    raise ScenarioError(f"{p}.mode", f"expected one of {list(EXCITATION_MODES)}, got {mode!r}")


def _parse_output(d: Any) -> OutputSection:
    _obj(d, "output", {"directory", "emit_plots", "excitation", "metrics_window"})
    directory = d.get("directory", "out")
    if not isinstance(directory, str) or not directory:
        raise ScenarioError("output.directory", "expected a non-empty string")
    mw = d.get("metrics_window")
    if mw is not None:
        mw = _numlist(mw, "output.metrics_window", 2)
        if not mw[0] < mw[1]:
            raise ScenarioError("output.metrics_window", "need t0 < t1")
    exc = d.get("excitation")
    return OutputSection(directory, _bool(d.get("emit_plots", False), "output.emit_plots"),
                         None if exc is None else _parse_excitation(exc), mw)


def parse_scenario(text: Union[str, bytes]) -> Scenario:
    """Parse and validate a scenario document.

    Raises ``ScenarioError`` for malformed JSON, unknown or missing keys, and
    violated invariants; the message starts with the JSON path at fault.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ScenarioError("$", f"not UTF-8: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("$", f"JSON syntax error: {exc}") from None
    _obj(doc, "$", {"name", "plant", "observer", "controller", "reference", "initial", "sim",
                    "output"}, ("name", "plant", "observer", "controller", "sim"))
    if not isinstance(doc["name"], str) or not doc["name"]:
        raise ScenarioError("name", "expected a non-empty string")
    plant = _parse_plant(doc["plant"])
    kind = ("mech" if isinstance(plant, FrictionParams)
            else "hydro" if isinstance(plant, HydroParams) else "lugre")
    observer = _parse_observer(doc["observer"], kind)
    controller, open_loop = _parse_controller(doc["controller"])
    if kind == "hydro" and open_loop is None:
        raise ScenarioError("controller.open_loop_input",
                            "hydro plant is supported only with an open-loop input")
    reference = (_parse_generator(doc["reference"], "reference") if "reference" in doc
                 else ReferenceGenerator("constant"))
    initial = _parse_initial(doc.get("initial", {}), kind)
    if initial.random_box is not None and "seed" not in doc["sim"]:
        raise ScenarioError("sim.seed", "missing required key (initial.random_box is set)")
    return Scenario(name=doc["name"], plant=plant, observer=observer, reference=reference,
                    sim=_parse_sim(doc["sim"]), controller=controller,
                    open_loop_input=open_loop, initial=initial,
                    output=_parse_output(doc.get("output", {})))


def scenario_to_dict(s: Scenario) -> dict:
    """Canonical document with every default written out."""
    p = s.plant
    if isinstance(p, LuGreParams):
        plant = {"kind": "lugre", "sigma0": p.sigma0, "sigma1": p.sigma1, "sigma2": p.sigma2,
                 "FC": p.FC, "FS": p.FS, "vS": p.vS}
    else:
        f = p.friction if isinstance(p, HydroParams) else p
        plant = {"kind": s.plant_kind, "theta1": f.theta1, "theta2": f.theta2,
                 "vartheta": f.vartheta}
        if isinstance(p, HydroParams):
            plant.update(a1=p.a1, a2=p.a2, a3=p.a3)
    o = s.observer
    observer: dict = {"vartheta": o.vartheta, "k1_auto": o.k1_auto, "x3hat": o.x3hat}
    if not o.k1_auto:
        observer["k1"] = list(o.k1)
    for key in ("theta2_upper", "alpha1_lyap"):
        if getattr(o, key) is not None:
            observer[key] = getattr(o, key)
    if s.open_loop_input is not None:
        controller = {"open_loop_input": s.open_loop_input.to_dict()}
    else:
        controller = {"alpha1": s.controller.alpha1, "alpha2": s.controller.alpha2}
    ini = s.initial
    if ini.random_box is not None:
        initial: dict = {"random_box": list(ini.random_box)}
    else:
        obs = {"x2I": ini.observer.x2I, "theta1I": ini.observer.theta1I,
               "theta2I": ini.observer.theta2I}
        if ini.observer.x3hat is not None:
            obs["x3hat"] = ini.observer.x3hat
        initial = {"observer": obs}
        if ini.plant is not None:
            initial["plant"] = list(ini.plant)
    sim = {"t_end": s.sim.t_end, "log_every": s.sim.log_every}
    if s.sim.dt is not None:
        sim["dt"] = s.sim.dt
    if s.sim.seed is not None:
        sim["seed"] = s.sim.seed
    out: dict = {"directory": s.output.directory, "emit_plots": s.output.emit_plots}
    if s.output.metrics_window is not None:
        out["metrics_window"] = list(s.output.metrics_window)
    e = s.output.excitation
    if e is not None:
        exc: dict = {"mode": e.mode}
        if e.mode == "pe":
            exc.update(T=e.T, mu=e.mu)
            if e.stride is not None:
                exc["stride"] = e.stride
        elif e.mode == "intervals":
            exc["windows"] = [list(w) for w in e.windows]
        else:
            exc["partition"] = list(e.partition)
        out["excitation"] = exc
    return {"name": s.name, "plant": plant, "observer": observer, "controller": controller,
            "reference": s.reference.to_dict(), "initial": initial, "sim": sim, "output": out}


def serialize_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2, sort_keys=True)


def initial_state(s: Scenario) -> InitialState:
    kind = s.plant_kind
    ini = s.initial
    if ini.random_box is not None:
        return random_initial_state(kind, s.sim.seed, *ini.random_box)
    plant = ini.plant if ini.plant is not None else (0.0,) * len(PLANT_STATE_NAMES[kind])
    obs = ini.observer
    if kind == "hydro" and obs.x3hat is None:
        obs = ObserverState(obs.x2I, obs.theta1I, obs.theta2I, 0.0)
    return InitialState(plant, obs)
