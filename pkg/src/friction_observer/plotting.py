"""Emit self-contained matplotlib scripts for the standard figure set.

Scripts are plain text: they read the logged CSVs with numpy and draw with
matplotlib, so nothing here imports a plotting library.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Mapping

FIGURES: dict[str, tuple[str, ...]] = {
    "tracking": ("t", "r", "x1"),
    "tracking_error": ("t", "e1"),
    "observer": ("t", "x2", "hat_x2", "tilde_x2"),
    "parameters": ("t", "tilde_theta1", "tilde_theta2"),
    "control": ("t", "u", "u_star"),
    "pe": ("t", "hat_x2"),
}

_PRELUDE = '''\
#!/usr/bin/env python
"""Generated figure script: {figure}."""
import sys
from pathlib import Path

import matplotlib
if "--show" not in sys.argv:
    matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

LOGS = {logs}
OUT = {out!r}


BASE = Path(__file__).resolve().parent


def load(path):
    with open(BASE / path, encoding="utf-8") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    return np.genfromtxt(rows, delimiter=",", names=True)

'''

_BODIES = {
    "tracking": '''\
fig, ax = plt.subplots()
for i, (label, path) in enumerate(LOGS.items()):
    d = load(path)
    if i == 0:
        ax.plot(d["t"], d["r"], "k--", label="r")
    ax.plot(d["t"], d["x1"], label=f"x1 ({label})")
ax.set_xlabel("t [s]")
ax.set_ylabel("position")
ax.legend()
''',
    "tracking_error": '''\
fig, ax = plt.subplots()
zoom = ax.inset_axes([0.55, 0.55, 0.4, 0.4])
for label, path in LOGS.items():
    d = load(path)
    err = -d["e1"]
    ax.plot(d["t"], err, label=label)
    tail = d["t"] >= 0.8 * d["t"][-1]
    zoom.plot(d["t"][tail], err[tail])
ax.set_xlabel("t [s]")
ax.set_ylabel("r - x1")
ax.legend()
''',
    "observer": '''\
fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True)
for i, (label, path) in enumerate(LOGS.items()):
    d = load(path)
    if i == 0:
        ax1.plot(d["t"], d["x2"], "k--", label="x2")
    ax1.plot(d["t"], d["hat_x2"], label=f"hat x2 ({label})")
    ax2.plot(d["t"], -d["tilde_x2"], label=label)
ax1.legend()
ax2.set_ylabel("x2 - hat x2")
ax2.set_xlabel("t [s]")
''',
    "parameters": '''\
fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True)
for label, path in LOGS.items():
    d = load(path)
    ax1.plot(d["t"], d["tilde_theta1"], label=label)
    ax2.plot(d["t"], d["tilde_theta2"], label=label)
ax1.set_ylabel("tilde theta1")
ax2.set_ylabel("tilde theta2")
ax2.set_xlabel("t [s]")
ax1.legend()
''',
    "control": '''\
fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True)
for label, path in LOGS.items():
    d = load(path)
    ax1.plot(d["t"], d["u"], label=label)
    ax2.plot(d["t"], d["u"] - d["u_star"], label=label)
ax1.set_ylabel("u")
ax2.set_ylabel("u - u*")
ax2.set_xlabel("t [s]")
ax1.legend()
''',
    "pe": '''\
VARTHETA = {vartheta!r}
WINDOW = {window!r}
fig, ax = plt.subplots()
for label, path in LOGS.items():
    d = load(path)
    t = d["t"]
    phi = np.column_stack([d["hat_x2"], np.tanh(VARTHETA * d["hat_x2"])])
    ent = np.column_stack([phi[:, 0] ** 2, phi[:, 0] * phi[:, 1], phi[:, 1] ** 2])
    inc = 0.5 * np.diff(t)[:, None] * (ent[1:] + ent[:-1])
    C = np.vstack([np.zeros((1, 3)), np.cumsum(inc, axis=0)])
    starts = t[t + WINDOW <= t[-1] + 1e-12]
    G = np.column_stack([np.interp(starts + WINDOW, t, C[:, j]) - np.interp(starts, t, C[:, j])
                         for j in range(3)])
    tr = G[:, 0] + G[:, 2]
    det = G[:, 0] * G[:, 2] - G[:, 1] ** 2
    lam = 0.5 * (tr - np.sqrt(np.maximum(tr ** 2 - 4 * det, 0.0)))
    ax.plot(starts, lam, label=label)
ax.set_xlabel("window start [s]")
ax.set_ylabel("lambda_min of Gram over T={{:g}} s".format(WINDOW))
ax.legend()
''',
}

_EPILOGUE = '''
fig.tight_layout()
fig.savefig(BASE / OUT)
if "--show" in sys.argv:
    plt.show()
'''


def _header_columns(path: Path) -> tuple[str, ...]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                return tuple(line.strip().split(","))
    raise ValueError(f"{path}: no header row")


def emit_plot_script(log_paths: Mapping[str, str | Path], figure: str, *,
                     out_image: str | None = None, vartheta: float = 100.0,
                     pe_window: float = 10.0, relative_to: str | Path | None = None) -> str:
    """Return the text of a script that renders ``figure`` from the given logs.

    Raises ``KeyError`` for an unknown figure and ``ValueError`` if a log
    lacks a column the figure needs. With ``relative_to`` (the directory the
    script will live in) log paths are stored relative to it.
    """
    if figure not in FIGURES:
        raise KeyError(f"unknown figure {figure!r}; expected one of {sorted(FIGURES)}")
    if not log_paths:
        raise ValueError("no logs given")
    for label, path in log_paths.items():
        cols = _header_columns(Path(path))
        missing = [c for c in FIGURES[figure] if c not in cols]
        if missing:
            raise ValueError(f"log {label!r} ({path}) lacks columns {missing} for {figure!r}")
    if relative_to is not None:
        base = Path(relative_to).resolve()
        resolved = {k: os.path.relpath(Path(v).resolve(), base) for k, v in log_paths.items()}
    else:
        resolved = {k: str(Path(v).resolve()) for k, v in log_paths.items()}
    logs = json.dumps(resolved, indent=4)
    body = _BODIES[figure]
    if figure == "pe":
        body = body.format(vartheta=float(vartheta), window=float(pe_window))
    return (_PRELUDE.format(figure=figure, logs=logs, out=out_image or f"{figure}.png")
            + body + _EPILOGUE)
