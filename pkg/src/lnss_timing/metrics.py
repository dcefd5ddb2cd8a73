"""Run statistics: RMS timing errors and the lunar UERE."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .constants import SPEED_OF_LIGHT
from .measurements import ErrorBudget

METRIC_FIELDS = ("orbit", "clock", "m", "max_ecop_s", "vis1_pct", "vis4_pct", "rms_bias_us",
                 "rms_drift_nsps", "uere_m")


def rms(errors) -> float:
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        raise ValueError("rms of an empty series")
    return float(np.sqrt(np.mean(e**2)))


@dataclass(frozen=True)
class UEREBreakdown:
    sigma_clk: float
    sigma_gd: float
    sigma_eph: float
    sigma_rec: float
    total: float


def lunar_uere(sigma_clk: float, budget: ErrorBudget | None = None) -> UEREBreakdown:
    budget = budget or ErrorBudget()
    if sigma_clk < 0 or math.isnan(sigma_clk):
        raise ValueError("sigma_clk must be non-negative")
    parts = (sigma_clk, budget.sigma_gd, budget.sigma_eph_lnss, budget.sigma_rec)
    return UEREBreakdown(*parts, total=math.sqrt(sum(p * p for p in parts)))


def steady_state_slice(epochs, discard_s: float = 86400.0) -> slice:
    """Index range after the warm-up; falls back to the whole run if it is shorter."""
    t = np.asarray(epochs)
    start = int(np.searchsorted(t, t[0] + discard_s)) if t.size else 0
    return slice(start if start < t.size else 0, None)


def timing_errors(history, discard_s: float = 86400.0) -> tuple[float, float]:
    """RMS bias (m) and drift (m/s) estimation errors over the steady-state window."""
    sl = steady_state_slice(history.epochs, discard_s)
    return rms(history.bias_error[sl]), rms(history.drift_error[sl])


def case_metrics(orbit: str, clock: str, m: int, history, max_ecop_s: float, vis1: float, vis4: float,
                 budget: ErrorBudget | None = None, discard_s: float = 86400.0) -> dict:
    rb, rd = timing_errors(history, discard_s)
    return {
        "orbit": orbit,
        "clock": clock,
        "m": int(m),
        "max_ecop_s": float(max_ecop_s),
        "vis1_pct": round(float(vis1), 6),
        "vis4_pct": round(float(vis4), 6),
        "rms_bias_us": rb / SPEED_OF_LIGHT * 1e6,
        "rms_drift_nsps": rd / SPEED_OF_LIGHT * 1e9,
        "uere_m": lunar_uere(rb, budget).total,
    }


def write_metrics_json(metrics: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=False)
        fh.write("\n")


def breakdown_dict(b: UEREBreakdown) -> dict:
    return asdict(b)
