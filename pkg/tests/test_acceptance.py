"""End-to-end acceptance checks, one test per criterion (criterion 6 has two clauses).

Run with ``pytest tests/test_acceptance.py``; a PASS/FAIL line per criterion is
printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from friction_observer.controller import ControllerGains, ReferenceGenerator
from friction_observer.engine import (ClosedLoopSystem, InitialState, SimConfig, metrics,
                                      monotonicity_violations, random_initial_state, simulate)
from friction_observer.excitation import (RegressorSeries, check_pe, gram_over_window)
from friction_observer.models import FrictionParams, HydroParams, LuGreParams
from friction_observer.observer import ObserverGains, ObserverState, k1_min, logcosh

P = FrictionParams(0.4, 1.0, 100.0)
SINE = ReferenceGenerator("sinusoid")
CHIRP = ReferenceGenerator("chirp")
STEP = ReferenceGenerator("step_plus_ramp", {"blend": 1.0})
ALPHA = ControllerGains(100.0, 100.0)
LUGRE_INIT = InitialState((0.1, 0.5, 0.0))
FINAL_WINDOW = (80.0, 100.0)


def mech_observer_run(init, t_end=50.0):
    sys_ = ClosedLoopSystem(P, ObserverGains(1.0, 100.0), open_loop_input=SINE)
    return simulate(sys_, SimConfig(t_end=t_end, dt=1e-4), init)


@pytest.fixture(scope="module")
def lugre_chirp(compiled):
    runs = {}
    for k1 in (1.0, 3.0, 7.0):
        sys_ = ClosedLoopSystem(LuGreParams.table1(), ObserverGains(k1, 100.0), ALPHA, CHIRP)
        t0 = time.perf_counter()
        runs[k1] = simulate(sys_, SimConfig(t_end=100.0, dt=1e-5), LUGRE_INIT)
        runs[k1].header["wall"] = time.perf_counter() - t0
    return runs


@pytest.fixture(scope="module")
def lugre_step(compiled):
    sys_ = ClosedLoopSystem(LuGreParams.table1(), ObserverGains(7.0, 100.0), ALPHA, STEP)
    return simulate(sys_, SimConfig(t_end=100.0, dt=1e-5), LUGRE_INIT)


@pytest.fixture(scope="module")
def hydro_run(compiled):
    hp = HydroParams(1.0, 1.0, 1.0, P)
    k1 = k1_min(2.0, 100.0, hp, 2.0)
    sys_ = ClosedLoopSystem(hp, ObserverGains(k1, 100.0), open_loop_input=SINE, alpha1_lyap=2.0)
    tl = simulate(sys_, SimConfig(t_end=50.0, dt=1e-4),
                  InitialState((0.0, 0.5, 0.0), ObserverState(x3hat=0.0)))
    return k1, tl


@pytest.fixture(scope="module")
def observer_logs(compiled):
    return [mech_observer_run(InitialState((0.0, 0.5)))] + [
        mech_observer_run(random_initial_state("mech", seed)) for seed in range(3)]


@pytest.mark.criterion("1 observer convergence, matched mech plant")
def test_observer_convergence(compiled, record_property):
    t0 = time.perf_counter()
    tl = mech_observer_run(InitialState((0.0, 0.5)))
    wall = time.perf_counter() - t0
    err = abs(tl["tilde_x2"][-1])
    viol = monotonicity_violations(tl["H"], 1e-9)
    record_property("|x2tilde(50)|", f"{err:.2e}")
    record_property("violations", viol)
    record_property("wall_s", f"{wall:.2f}")
    assert tl["t"][-1] == pytest.approx(50.0)
    assert err < 1e-3
    assert viol == 0
    assert wall < 5.0


@pytest.mark.criterion("2 randomized Lyapunov suite, 20 seeds")
def test_randomized_lyapunov(compiled, record_property):
    t0 = time.perf_counter()
    counts = [monotonicity_violations(mech_observer_run(random_initial_state("mech", s))["H"])
              for s in range(20)]
    wall = time.perf_counter() - t0
    record_property("total_violations", sum(counts))
    record_property("wall_s", f"{wall:.1f}")
    assert counts == [0] * 20
    assert wall < 60.0


@pytest.mark.criterion("3 RK4 order ratio")
def test_rk4_order(compiled, record_property):
    sys_ = ClosedLoopSystem(P, ObserverGains(1.0, 100.0), ALPHA, CHIRP)
    init = InitialState((0.1, 0.5))
    t0 = time.perf_counter()

    def final_state(dt):
        tl = simulate(sys_, SimConfig(t_end=1.0, dt=dt, log_every=int(round(1.0 / dt))), init)
        assert tl["t"][-1] == pytest.approx(1.0)
        return tl.data[-1, 1:6]

    ref = final_state(1e-5)
    e_coarse = np.linalg.norm(final_state(1e-3) - ref)
    e_fine = np.linalg.norm(final_state(5e-4) - ref)
    wall = time.perf_counter() - t0
    ratio = e_coarse / e_fine
    record_property("ratio", f"{ratio:.2f}")
    record_property("wall_s", f"{wall:.2f}")
    assert 13.0 <= ratio <= 19.0
    assert wall < 5.0


@pytest.mark.criterion("4a chirp rms(e1) < 0.01 at k1=7")
def test_chirp_tracking(lugre_chirp, record_property):
    rms = metrics(lugre_chirp[7.0], FINAL_WINDOW).rms_e1
    record_property("rms_e1", f"{rms:.3e}")
    record_property("wall_s", f"{lugre_chirp[7.0].header['wall']:.1f}")
    assert rms < 0.01
    assert all(tl.header["wall"] < 120.0 for tl in lugre_chirp.values())


@pytest.mark.criterion("4b chirp error decreases with adaptation gain")
def test_chirp_gain_monotone(lugre_chirp, record_property):
    rms = {k: metrics(tl, FINAL_WINDOW).rms_e1 for k, tl in lugre_chirp.items()}
    record_property("rms_e1", ", ".join(f"k1={k:g}:{v:.3e}" for k, v in rms.items()))
    assert rms[7.0] < rms[1.0]


@pytest.mark.criterion("4c chirp parameter estimates at t=100, k1=7")
def test_chirp_parameters(lugre_chirp, record_property):
    tl = lugre_chirp[7.0]
    p = LuGreParams.table1()
    d1 = abs(tl["hat_theta1"][-1] - p.sigma2)
    d2 = abs(tl["hat_theta2"][-1] - p.FC)
    record_property("|theta1hat-sigma2|", f"{d1:.3e}")
    record_property("|theta2hat-FC|", f"{d2:.3e}")
    assert d1 < 0.1
    assert d2 < 0.15


@pytest.mark.criterion("5 step-plus-ramp tracking, k1=7")
def test_step_plus_ramp(lugre_step, record_property):
    rms = metrics(lugre_step, FINAL_WINDOW).rms_e1
    record_property("rms_e1", f"{rms:.3e}")
    assert lugre_step.diverged_at is None
    assert np.isfinite(lugre_step.data).all()
    assert lugre_step["t"][-1] == pytest.approx(100.0)
    assert rms < 0.02


@pytest.mark.criterion("6a hydro observer convergence at k1_min")
def test_hydro_convergence(hydro_run, record_property):
    k1, tl = hydro_run
    err = abs(tl["tilde_x2"][-1]) + abs(tl["tilde_x3"][-1])
    record_property("k1", f"{k1:.8g}")
    record_property("|x2tilde|+|x3tilde|", f"{err:.2e}")
    assert k1 == pytest.approx(0.02 * (1 + 1e-6), rel=1e-12)
    assert err < 1e-3


@pytest.mark.criterion("6b hydro U monotone at k1_min")
def test_hydro_lyapunov_monotone(hydro_run, record_property):
    _, tl = hydro_run
    U = tl["U"]
    viol = monotonicity_violations(U)
    record_property("violations", viol)
    record_property("max_increase", f"{np.diff(U).max():.2e}")
    assert viol == 0


@pytest.mark.criterion("7 excitation analytics")
def test_excitation(record_property):
    h = 1e-3
    t = np.arange(0.0, 2 * math.pi + h, h)
    rot = RegressorSeries(t, np.column_stack([np.cos(t), np.sin(t)]))
    gram = gram_over_window(rot, 0.0, 2 * math.pi).gram
    gram_err = np.abs(gram - math.pi * np.eye(2)).max()

    tc = np.linspace(0.0, 10.0, 1001)
    const = RegressorSeries(tc, np.column_stack([np.ones_like(tc), np.zeros_like(tc)]))
    rank_one_fails = all(not check_pe(const, 2.0, mu, 0.1).satisfied
                         for mu in (1e-15, 1e-9, 1e-3, 1.0, 1e3))

    rng = np.random.default_rng(2024)
    tr = np.cumsum(rng.uniform(1e-3, 2e-2, 5000))
    rs = RegressorSeries(tr, rng.normal(size=(tr.size, 2)))
    worst = 0.0
    for _ in range(100):
        i, j, k = np.sort(rng.choice(tr.size, 3, replace=False))
        whole = gram_over_window(rs, tr[i], tr[k]).gram
        parts = gram_over_window(rs, tr[i], tr[j]).gram + gram_over_window(rs, tr[j], tr[k]).gram
        worst = max(worst, np.abs(whole - parts).max() / max(1.0, np.abs(whole).max()))
    record_property("gram_err", f"{gram_err:.1e}")
    record_property("additivity_err", f"{worst:.1e}")
    assert gram_err < 1e-6
    assert rank_one_fails
    assert worst < 1e-12


@pytest.mark.criterion("8 k1_min certificate over 200 random draws")
def test_k1_min_certificate(record_property):
    rng = np.random.default_rng(8)
    th1 = np.linspace(0.0, 5.0, 26)
    worst = math.inf
    for _ in range(200):
        vth = rng.uniform(0.5, 300.0)
        a1 = rng.uniform(0.1, 5.0)
        a2 = rng.uniform(0.0, 5.0)
        alpha1 = (1.0 / a1) * rng.uniform(1.01, 10.0)
        th2u = rng.uniform(0.01, 6.0)
        hp = HydroParams(a1, max(a2, 1e-12), 1.0, P)
        k = k1_min(th2u, vth, hp, alpha1)
        th2 = np.concatenate([np.geomspace(1e-12, th2u, 2000), np.linspace(0, th2u, 2001)[1:]])
        T1, T2 = np.meshgrid(th1, th2)
        alpha2 = (vth * (k + T1) + T2 * vth ** 2 - 0.5 * T2 ** 2 * vth ** 2
                  - 0.5 * alpha1 ** 2 * hp.a2 ** 2)
        worst = min(worst, float(alpha2.min()))
        assert alpha2.min() > 0, (vth, a1, a2, alpha1, th2u)
    record_property("min_alpha2", f"{worst:.3e}")


@pytest.mark.criterion("9 identity suite along logged trajectories")
def test_identities(lugre_chirp, lugre_step, observer_logs, hydro_run, record_property):
    logs = list(lugre_chirp.items()) + [(7.0, lugre_step)] + [(1.0, tl) for tl in observer_logs]
    logs.append((hydro_run[0], hydro_run[1]))
    worst_obs, worst_pi, worst_eps = 0.0, 0.0, 0.0
    for k1, tl in logs:
        x2h = tl["hat_x2"]
        worst_obs = max(worst_obs, np.abs(x2h - tl["x2I"] - k1 * tl["x1"]).max())
        r1 = tl["hat_theta1"] + 100.0 / (2 * k1) * x2h ** 2 - tl["theta1I"]
        lc = np.array([logcosh(100.0 * v) for v in x2h])
        r2 = tl["hat_theta2"] + lc / k1 - tl["theta2I"]
        scale = 1.0 + np.abs(tl["theta1I"]) + np.abs(tl["theta2I"])
        worst_pi = max(worst_pi, (np.abs(r1) / scale).max(), (np.abs(r2) / scale).max())
        if not np.isnan(tl["u_star"]).all():
            worst_eps = max(worst_eps, np.abs(tl["u"] - tl["u_star"] - tl["epsilon_t"]).max())
    record_property("output", f"{worst_obs:.1e}")
    record_property("pi", f"{worst_pi:.1e}")
    record_property("u-u*-eps", f"{worst_eps:.1e}")
    assert worst_obs <= 1e-12
    assert worst_pi <= 1e-12
    assert worst_eps <= 1e-12
