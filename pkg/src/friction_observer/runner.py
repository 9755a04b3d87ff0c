"""Run a parsed scenario: fan out over ``k1``, write logs, metrics and a manifest."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .engine import ClosedLoopSystem, IntegrationDiverged, TrajectoryLog, metrics, simulate
from .excitation import RegressorSeries, check_pe, conservative_check, interval_excitation
from .observer import ObserverGains, hydro_certificate, k1_min
from .plotting import FIGURES, emit_plot_script
from .scenario import Scenario, initial_state, scenario_to_dict

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_IO = 4


@dataclass
class RunResult:
    name: str
    k1: float
    log_path: Path
    metrics_path: Optional[Path]
    excitation_path: Optional[Path]
    diverged_at: Optional[float] = None
    metrics: Optional[dict] = None


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def resolve_gains(s: Scenario) -> list[float]:
    o = s.observer
    if not o.k1_auto:
        return list(o.k1)
    a1 = o.alpha1_lyap if o.alpha1_lyap is not None else 2.0 / s.plant.a1
    return [k1_min(o.theta2_upper, o.vartheta, s.plant, a1)]


def build_system(s: Scenario, k1: float) -> ClosedLoopSystem:
    return ClosedLoopSystem(plant=s.plant, observer=ObserverGains(k1, s.observer.vartheta),
                            controller=s.controller, reference=s.reference,
                            open_loop_input=s.open_loop_input,
                            alpha1_lyap=s.observer.alpha1_lyap)


def _excitation(s: Scenario, tl: TrajectoryLog, path: Path) -> None:
    spec = s.output.excitation
    rs = RegressorSeries.from_log(tl, s.observer.vartheta)
    if spec.mode == "pe":
        res = check_pe(rs, spec.T, spec.mu, spec.stride)
        width = spec.T
        n = int((rs.span[1] - rs.span[0]) // width)
        report = interval_excitation(rs, [(rs.span[0] + k * width, width) for k in range(n)])
        report.pe_verdict = res
        report.write_csv(path)
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(f"# pe_satisfied: {json.dumps(res.satisfied)}\n")
            fh.write(f"# pe_worst_window: [{res.worst.t_start!r}, {res.worst.t_end!r}]\n")
            fh.write(f"# pe_worst_lambda_min: {res.worst.lambda_min!r}\n")
            fh.write(f"# pe_windows_checked: {len(res.starts)}\n")
    elif spec.mode == "intervals":
        interval_excitation(rs, list(spec.windows)).write_csv(path)
    else:
        conservative_check(rs, list(spec.partition)).write_csv(path)


def _one_run(s: Scenario, k1: float, out_dir: Path, header: dict) -> RunResult:
    name = f"{s.name}_k1_{k1:g}"
    run_dir = out_dir / name
    run_dir.mkdir(parents=True, exist_ok=True)
    log_path = run_dir / "log.csv"
    system = build_system(s, k1)
    meta = {**header, "run": name, "k1": k1}
    if s.plant_kind == "hydro" and s.observer.theta2_upper is not None:
        cert = hydro_certificate(k1, s.observer.theta2_upper, s.observer.vartheta, s.plant,
                                 system.alpha1_lyap)
        meta["certificate"] = {"alpha1_lyap": cert.alpha1_lyap, "alpha2_lyap": cert.alpha2_lyap,
                               "alpha3_lyap": cert.alpha3_lyap, "k1_min": cert.k1_min}
    if s.controller is not None:
        meta["closed_loop_poles"] = [str(p) for p in s.controller.closed_loop_poles()]
    try:
        tl = simulate(system, s.sim, initial_state(s), header=meta)
    except IntegrationDiverged as exc:
        exc.log.to_csv(log_path)
        log.error("%s diverged at t=%g", name, exc.t)
        return RunResult(name, k1, log_path, None, None, diverged_at=exc.t)
    tl.to_csv(log_path)
    m = metrics(tl, s.output.metrics_window).to_dict()
    metrics_path = run_dir / "metrics.json"
    metrics_path.write_text(json.dumps(m, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    exc_path = None
    if s.output.excitation is not None:
        exc_path = run_dir / "excitation.csv"
        _excitation(s, tl, exc_path)
    return RunResult(name, k1, log_path, metrics_path, exc_path, metrics=m)


def run(s: Scenario, out_dir: Optional[Path] = None, jobs: int = 1) -> int:
    """Execute every sweep point and write the artifacts; return the exit status."""
    out_dir = Path(out_dir if out_dir is not None else s.output.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = {"scenario": scenario_to_dict(s), "seed": s.sim.seed}
    gains = resolve_gains(s)
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(lambda k: _one_run(s, k, out_dir, header), gains))

    files: list[Path] = []
    for r in results:
        files += [p for p in (r.log_path, r.metrics_path, r.excitation_path) if p is not None]
    comparison = out_dir / "comparison.json"
    comparison.write_text(json.dumps(
        {r.name: {"k1": r.k1, "diverged_at": r.diverged_at, "metrics": r.metrics}
         for r in results}, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    files.append(comparison)

    ok_logs = {f"k1={r.k1:g}": r.log_path for r in results if r.diverged_at is None}
    if s.output.emit_plots and ok_logs:
        plot_dir = out_dir / "plots"
        plot_dir.mkdir(exist_ok=True)
        figures = [f for f in FIGURES if s.controller is not None
                   or f not in ("tracking", "tracking_error", "control")]
        pe_T = s.output.excitation.T if (s.output.excitation is not None
                                          and s.output.excitation.mode == "pe") else 10.0
        for fig in figures:
            script = plot_dir / f"{fig}.py"
            script.write_text(emit_plot_script(ok_logs, fig, vartheta=s.observer.vartheta,
                                               pe_window=pe_T, relative_to=plot_dir),
                              encoding="utf-8")
            files.append(script)

    manifest = {
        "scenario": s.name,
        "seed": s.sim.seed,
        "runs": [{"name": r.name, "k1": r.k1, "diverged_at": r.diverged_at,
                  "log": r.log_path.relative_to(out_dir).as_posix()} for r in results],
        "files": {p.relative_to(out_dir).as_posix(): sha256_file(p) for p in files},
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")
    return EXIT_DIVERGED if any(r.diverged_at is not None for r in results) else EXIT_OK
