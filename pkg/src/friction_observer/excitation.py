"""Excitation analysis of the regressor ``phi = (x2hat, tanh(vartheta*x2hat))``.

Gram matrices ``∫ phi phi^T`` are approximated with the trapezoidal rule on
the logged grid; the minimum eigenvalue uses the closed form for symmetric
2x2 matrices.

A finite log can only *evidence* that a sum of excitation levels diverges.
Reports give partial sums and their least-squares growth slope; they never
claim divergence.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

DIVERGENCE_DISCLAIMER = (
    "partial sums over a finite record; growth is evidence of, not proof of, divergence")


class ExcitationError(ValueError):
    pass


@dataclass(frozen=True)
class RegressorSeries:
    times: np.ndarray
    phi: np.ndarray  # shape (n, 2)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if t.ndim != 1 or phi.shape != (t.shape[0], 2):
            raise ExcitationError("times must be (n,) and phi (n, 2)")
        if t.shape[0] < 2:
            raise ExcitationError("need at least two samples")
        if not np.all(np.diff(t) > 0):
            raise ExcitationError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_estimates(cls, times, x2hat, vartheta: float) -> "RegressorSeries":
        x2hat = np.asarray(x2hat, dtype=float)
        return cls(np.asarray(times, dtype=float),
                   np.column_stack([x2hat, np.tanh(vartheta * x2hat)]))

    @classmethod
    def from_log(cls, log, vartheta: float) -> "RegressorSeries":
        """Build from a ``TrajectoryLog``; the tanh channel is recomputed."""
        return cls.from_estimates(log["t"], log["hat_x2"], vartheta)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.phi, axis=1)))


@dataclass(frozen=True)
class GramWindow:
    t_start: float
    t_end: float
    gram: np.ndarray
    lambda_min: float


@dataclass(frozen=True)
class PEResult:
    satisfied: bool
    T: float
    mu: float
    worst: GramWindow
    starts: np.ndarray
    lambda_series: np.ndarray


@dataclass
class ExcitationReport:
    windows: list[GramWindow]
    lambda_series: np.ndarray
    sum_lambda_sq: np.ndarray
    growth_slope: float
    pe_verdict: Optional[PEResult] = None
    mu_series: Optional[np.ndarray] = None
    normalized_terms: Optional[np.ndarray] = None
    normalized_sums: Optional[np.ndarray] = None
    note: str = field(default=DIVERGENCE_DISCLAIMER)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            fh.write(f"# {self.note}\n")
            fh.write(f"# growth_slope: {self.growth_slope!r}\n")
            cols = ["window", "t_start", "t_end", "lambda_min", "sum_lambda_sq"]
            if self.normalized_terms is not None:
                cols += ["normalized_term", "normalized_sum"]
            w.writerow(cols)
            for k, win in enumerate(self.windows):
                row = [k, repr(win.t_start), repr(win.t_end), repr(float(self.lambda_series[k])),
                       repr(float(self.sum_lambda_sq[k]))]
                if self.normalized_terms is not None:
                    row += [repr(float(self.normalized_terms[k])),
                            repr(float(self.normalized_sums[k]))]
                w.writerow(row)


def lambda_min_2x2(g: np.ndarray) -> float:
    tr = g[0, 0] + g[1, 1]
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    return 0.5 * (tr - math.sqrt(max(tr * tr - 4.0 * det, 0.0)))


def _outer(phi: np.ndarray) -> np.ndarray:
    """Per-sample (phi1^2, phi1*phi2, phi2^2)."""
    return np.column_stack([phi[:, 0] ** 2, phi[:, 0] * phi[:, 1], phi[:, 1] ** 2])


def _gram_from_entries(a: float, b: float, c: float) -> np.ndarray:
    return np.array([[a, b], [b, c]])


def _check_window(rs: RegressorSeries, t0: float, t1: float) -> None:
    lo, hi = rs.span
    eps = 1e-9 * max(1.0, abs(lo), abs(hi))
    if not t0 < t1:
        raise ExcitationError(f"empty window [{t0}, {t1}]")
    if t0 < lo - eps or t1 > hi + eps:
        raise ExcitationError(f"window [{t0}, {t1}] outside series span [{lo}, {hi}]")


def gram_over_window(rs: RegressorSeries, t0: float, t1: float) -> GramWindow:
    """Trapezoidal ``∫_{t0}^{t1} phi phi^T dt``.

    Window ends that fall between samples are handled by linear
    interpolation of ``phi``.
    """
    _check_window(rs, t0, t1)
    lo, hi = rs.span
    C = _cumulative_entries(rs)
    a, b, c = _cumulative_at(rs, C, np.array([min(t1, hi)]))[0] - \
        _cumulative_at(rs, C, np.array([max(t0, lo)]))[0]
    g = _gram_from_entries(a, b, c)
    return GramWindow(float(t0), float(t1), g, lambda_min_2x2(g))


def _cumulative_entries(rs: RegressorSeries) -> np.ndarray:
    ent = _outer(rs.phi)
    inc = 0.5 * np.diff(rs.times)[:, None] * (ent[1:] + ent[:-1])
    return np.vstack([np.zeros((1, 3)), np.cumsum(inc, axis=0)])


def _cumulative_at(rs: RegressorSeries, C: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Running integral at arbitrary times, trapezoid on the interpolated ``phi``."""
    t = rs.times
    i = np.clip(np.searchsorted(t, s, side="right") - 1, 0, t.size - 1)
    phi_s = np.column_stack([np.interp(s, t, rs.phi[:, 0]), np.interp(s, t, rs.phi[:, 1])])
    ent = _outer(rs.phi)
    return C[i] + 0.5 * (s - t[i])[:, None] * (ent[i] + _outer(phi_s))


def sliding_lambda_min(rs: RegressorSeries, T: float, stride: Optional[float] = None):
    """``lambda_min`` of the width-``T`` Gram for window starts every ``stride``.

    Uses a running trapezoid integral, so it is linear in the series length.
    Returns ``(starts, lambdas)``.
    """
    lo, hi = rs.span
    if not T > 0:
        raise ExcitationError("T must be positive")
    if T > hi - lo + 1e-9 * max(1.0, hi):
        raise ExcitationError(f"window width {T} exceeds series span {hi - lo}")
    if stride is None:
        stride = float(np.median(np.diff(rs.times)))
    n = int(math.floor((hi - lo - T) / stride + 1e-9)) + 1
    starts = lo + stride * np.arange(n)
    ends = np.minimum(starts + T, hi)
    C = _cumulative_entries(rs)
    G = _cumulative_at(rs, C, ends) - _cumulative_at(rs, C, starts)
    tr = G[:, 0] + G[:, 2]
    det = G[:, 0] * G[:, 2] - G[:, 1] ** 2
    lam = 0.5 * (tr - np.sqrt(np.maximum(tr * tr - 4.0 * det, 0.0)))
    return starts, lam


def check_pe(rs: RegressorSeries, T: float, mu: float, stride: Optional[float] = None) -> PEResult:
    """Sliding-window persistence-of-excitation check at level ``mu``."""
    if not mu > 0:
        raise ExcitationError("mu must be positive")
    starts, lam = sliding_lambda_min(rs, T, stride)
    k = int(np.argmin(lam))
    worst = gram_over_window(rs, float(starts[k]), float(min(starts[k] + T, rs.span[1])))
    return PEResult(bool(np.all(lam >= mu)), T, mu, worst, starts, lam)


def _growth_slope(partial: np.ndarray) -> float:
    if partial.shape[0] < 2:
        return 0.0
    k = np.arange(partial.shape[0], dtype=float)
    return float(np.polyfit(k, partial, 1)[0])


def interval_excitation(rs: RegressorSeries,
                        windows: Sequence[tuple[float, float]]) -> ExcitationReport:
    """Excitation levels over a user-chosen sequence of ``(t_k, T_k)`` windows."""
    if len(windows) == 0:
        raise ExcitationError("no windows given")
    prev_end = -math.inf
    grams = []
    for tk, Tk in windows:
        if not Tk > 0:
            raise ExcitationError(f"window width must be positive, got {Tk}")
        if tk < prev_end - 1e-12 * max(1.0, abs(prev_end)):
            raise ExcitationError(f"window starting at {tk} overlaps the previous one")
        grams.append(gram_over_window(rs, tk, tk + Tk))
        prev_end = tk + Tk
    lam = np.array([g.lambda_min for g in grams])
    partial = np.cumsum(lam ** 2)
    return ExcitationReport(grams, lam, partial, _growth_slope(partial))


def conservative_check(rs: RegressorSeries, partition: Sequence[float]) -> ExcitationReport:
    """Normalized terms ``mu_k / (1 + |phi|_inf^4 * (t_{k+1} - t_k))`` and partial sums.

    The sup norm is taken over the whole series.
    """
    tk = np.asarray(partition, dtype=float)
    if tk.ndim != 1 or tk.shape[0] < 2:
        raise ExcitationError("partition needs at least two points")
    if not np.all(np.diff(tk) > 0):
        raise ExcitationError("partition must be strictly increasing")
    grams = [gram_over_window(rs, float(a), float(b)) for a, b in zip(tk[:-1], tk[1:])]
    mu = np.array([g.lambda_min for g in grams])
    terms = mu / (1.0 + rs.sup_norm() ** 4 * np.diff(tk))
    sums = np.cumsum(terms)
    partial = np.cumsum(mu ** 2)
    return ExcitationReport(grams, mu, partial, _growth_slope(sums), mu_series=mu,
                            normalized_terms=terms, normalized_sums=sums)
