import copy
import json
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from friction_observer.scenario import (ScenarioError, initial_state, parse_scenario,
                                        scenario_to_dict, serialize_scenario)

SCENARIOS = sorted((Path(__file__).parent.parent / "scenarios").glob("*.json"))

MINIMAL = {
    "name": "m",
    "plant": {"kind": "mech"},
    "observer": {"k1": 1},
    "controller": {"alpha1": 100, "alpha2": 100},
    "sim": {"t_end": 1},
}

HYDRO = {
    "name": "h",
    "plant": {"kind": "hydro", "a1": 1, "a2": 1, "a3": 1},
    "observer": {"k1_auto": True, "theta2_upper": 2.0, "alpha1_lyap": 2.0, "x3hat": True},
    "controller": {"open_loop_input": {"kind": "sinusoid"}},
    "initial": {"plant": [0, 0.5, 0], "observer": {"x3hat": 0.1}},
    "sim": {"t_end": 1, "dt": 1e-4, "log_every": 10},
    "output": {"directory": "o", "emit_plots": True, "metrics_window": [0, 1],
               "excitation": {"mode": "pe", "T": 0.5, "mu": 0.1, "stride": 0.1}},
}


def parse(doc):
    return parse_scenario(json.dumps(doc))


def error_path(doc):
    with pytest.raises(ScenarioError) as info:
        parse(doc)
    return info.value.path


class TestParse:
    def test_minimal_defaults(self):
        s = parse(MINIMAL)
        assert s.plant_kind == "mech"
        assert (s.plant.theta1, s.plant.theta2, s.plant.vartheta) == (0.4, 1.0, 100.0)
        assert s.observer.k1 == (1.0,) and s.observer.vartheta == 100.0
        assert s.reference.kind == "constant"
        assert s.sim.log_every == 100 and s.sim.dt is None
        assert s.output.directory == "out" and not s.output.emit_plots

    def test_lugre_defaults_are_table_values(self):
        doc = {**MINIMAL, "plant": {"kind": "lugre"}}
        p = parse(doc).plant
        assert (p.sigma0, p.sigma2, p.FC, p.FS, p.vS) == (1e5, 0.4, 1.0, 1.5, 1e-3)

    def test_sweep(self):
        s = parse({**MINIMAL, "observer": {"k1": [1, 3, 7]}})
        assert s.observer.k1 == (1.0, 3.0, 7.0)

    @pytest.mark.parametrize("path", SCENARIOS, ids=lambda p: p.stem)
    def test_shipped_scenarios_parse(self, path):
        parse_scenario(path.read_bytes())


class TestErrors:
    def test_hydro_auto_gain_needs_bound(self):
        doc = copy.deepcopy(HYDRO)
        del doc["observer"]["theta2_upper"]
        assert error_path(doc) == "observer.theta2_upper"

    def test_hydro_needs_open_loop(self):
        doc = copy.deepcopy(HYDRO)
        doc["controller"] = {"alpha1": 1, "alpha2": 1}
        assert error_path(doc) == "controller.open_loop_input"

    def test_random_box_needs_seed(self):
        doc = {**MINIMAL, "initial": {"random_box": [-2, 2]}}
        assert error_path(doc) == "sim.seed"

    @pytest.mark.parametrize("section,value,path", [
        ("plant", {"kind": "mech", "theta1": -1}, "plant.theta1"),
        ("plant", {"kind": "robot"}, "plant.kind"),
        ("observer", {"k1": []}, "observer.k1"),
        ("observer", {"k1": [1, "x"]}, "observer.k1[1]"),
        ("observer", {"k1": 1, "x3hat": True}, "observer.x3hat"),
        ("controller", {"alpha1": 1}, "controller.alpha2"),
        ("reference", {"kind": "chirp", "rat": 1}, "reference.rat"),
        ("reference", {"kind": "step_plus_ramp", "blend": 0}, "reference"),
        ("initial", {"plant": [0, 0, 0]}, "initial.plant"),
        ("sim", {"t_end": 1, "log_every": 1.5}, "sim.log_every"),
        ("sim", {"t_end": 1e-6, "dt": 1e-4}, "sim"),
        ("output", {"metrics_window": [5, 1]}, "output.metrics_window"),
        ("output", {"excitation": {"mode": "pe", "T": 1}}, "output.excitation.mu"),
        ("output", {"excitation": {"mode": "fft"}}, "output.excitation.mode"),
    ])
    def test_error_names_path(self, section, value, path):
        assert error_path({**MINIMAL, section: value}) == path

    def test_bad_json(self):
        with pytest.raises(ScenarioError, match="JSON"):
            parse_scenario("{")

    def test_booleans_are_not_numbers(self):
        assert error_path({**MINIMAL, "observer": {"k1": True}}) == "observer.k1"


def _key_paths(doc, prefix=()):
    if isinstance(doc, dict):
        for k, v in doc.items():
            yield prefix + (k,)
            yield from _key_paths(v, prefix + (k,))


def _vocabulary():
    words = set()
    for d in [MINIMAL, HYDRO] + [json.loads(p.read_text()) for p in SCENARIOS]:
        words |= {p[-1] for p in _key_paths(scenario_to_dict(parse(d)))}
        words |= {p[-1] for p in _key_paths(d)}
    return words | {"sigma0", "sigma1", "sigma2", "FC", "FS", "vS", "phase", "offset", "value",
                    "a1", "a2", "a3", "theta1", "theta2"}


VOCAB = _vocabulary()
FUZZ_DOCS = [HYDRO, json.loads(SCENARIOS[0].read_text()), json.loads(SCENARIOS[-1].read_text())]


class TestStrictKeys:
    @given(st.integers(0, 2), st.data())
    def test_misspelled_key_rejected(self, which, data):
        doc = copy.deepcopy(FUZZ_DOCS[which])
        paths = list(_key_paths(doc))
        path = data.draw(st.sampled_from(paths))
        key = path[-1]
        op = data.draw(st.sampled_from(["insert", "delete", "replace", "case"]))
        i = data.draw(st.integers(0, len(key) - 1))
        c = data.draw(st.sampled_from("abcxyz_019"))
        new = {"insert": key[:i] + c + key[i:], "delete": key[:i] + key[i + 1:],
               "replace": key[:i] + c + key[i + 1:], "case": key.swapcase()}[op]
        if new in VOCAB or new == key:
            return
        parent = doc
        for k in path[:-1]:
            parent = parent[k]
        parent[new] = parent.pop(key)
        with pytest.raises(ScenarioError) as info:
            parse(doc)
        prefix = ".".join(path[:-1])
        assert info.value.path.startswith(prefix or "")


class TestRoundTrip:
    @pytest.mark.parametrize("doc", [MINIMAL, HYDRO] + [json.loads(p.read_text())
                                                        for p in SCENARIOS])
    def test_parse_serialize_identity(self, doc):
        s = parse(doc)
        again = parse_scenario(serialize_scenario(s))
        assert again == s
        assert serialize_scenario(again) == serialize_scenario(s)

    def test_initial_state(self):
        s = parse(HYDRO)
        init = initial_state(s)
        assert init.plant == (0.0, 0.5, 0.0) and init.observer.x3hat == 0.1

    def test_random_initial_state_is_seeded(self):
        doc = {**MINIMAL, "initial": {"random_box": [-1, 1]}, "sim": {"t_end": 1, "seed": 5}}
        assert initial_state(parse(doc)) == initial_state(parse(doc))
