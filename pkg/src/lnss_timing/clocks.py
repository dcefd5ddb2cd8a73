"""Onboard clock grades, clock-error truth simulation and Allan deviation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .constants import SECONDS_PER_DAY, SPEED_OF_LIGHT

C2 = SPEED_OF_LIGHT**2


@dataclass(frozen=True)
class ClockSpec:
    name: str
    h0: float  # s
    h_minus1: float
    h_minus2: float  # 1/s
    tdev_per_day: float  # s
    size_cm3: float = float("nan")
    weight_kg: float = float("nan")
    power_w: float = float("nan")

    def __post_init__(self):
        if min(self.h0, self.h_minus1, self.h_minus2) < 0:
            raise ValueError(f"{self.name}: PSD coefficients must be non-negative")
        if self.tdev_per_day < 0:
            raise ValueError(f"{self.name}: TDEV must be non-negative")

    @property
    def drift_mps(self) -> float:
        """Deterministic bias drift implied by the one-day TDEV, m/s."""
        return SPEED_OF_LIGHT * self.tdev_per_day / SECONDS_PER_DAY


_CATALOG = (
    ClockSpec("CSAC", 1.3e-20, 1.0e-24, 3.7e-29, 1.5e-6, 17.0, 0.035, 0.1),
    ClockSpec("MAC", 4.7e-22, 1.2e-25, 1.7e-30, 1.7e-7, 50.0, 0.084, 5.0),
    ClockSpec("PRS-10", 1.3e-22, 2.3e-26, 3.3e-31, 7.0e-8, 155.0, 0.6, 14.4),
    ClockSpec("RAFS", 8.0e-24, 0.0, 0.0, 4.8e-9, 1645.0, 6.35, 39.0),
    ClockSpec("DSAC", 1.8e-27, 0.0, 0.0, 4.0e-11, 17000.0, 16.0, 47.0),
)
CLOCK_NAMES = tuple(c.name for c in _CATALOG)


def clock_catalog() -> list[ClockSpec]:
    """The five clock grades, smallest SWaP first."""
    return list(_CATALOG)


def get_clock(name: str, catalog=None) -> ClockSpec:
    for spec in catalog or _CATALOG:
        if spec.name.upper() == name.upper():
            return spec
    raise ValueError(f"unknown clock {name!r}; expected one of {', '.join(CLOCK_NAMES)}")


def load_clock_csv(path) -> list[ClockSpec]:
    """Read ``name,h0,hm1,hm2,tdev_day,size,weight,power`` rows."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            try:
                out.append(ClockSpec(row["name"].strip(), float(row["h0"]), float(row["hm1"]),
                                     float(row["hm2"]), float(row["tdev_day"]), float(row["size"]),
                                     float(row["weight"]), float(row["power"])))
            except KeyError as exc:
                raise ValueError(f"{path}: missing column {exc}") from None
    return out


def save_clock_csv(specs, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "h0", "hm1", "hm2", "tdev_day", "size", "weight", "power"])
        for s in specs:
            w.writerow([s.name, repr(s.h0), repr(s.h_minus1), repr(s.h_minus2), repr(s.tdev_per_day),
                        repr(s.size_cm3), repr(s.weight_kg), repr(s.power_w)])


# --- process noise -------------------------------------------------------------------

def process_noise_q(spec: ClockSpec, tau: float, hm2_squared: bool = True) -> np.ndarray:
    """Filter process-noise covariance for the (bias m, drift m/s) state.

    ``hm2_squared=True`` keeps h_-2 squared in the tau^3 term; pass False
    for the conventional linear form.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    h0, h1, h2 = spec.h0, spec.h_minus1, spec.h_minus2
    pi2 = math.pi**2
    h2_cubic = h2**2 if hm2_squared else h2
    q11 = h0 / 2.0 * tau + 2.0 * h1 * tau**2 + (2.0 / 3.0) * pi2 * h2_cubic * tau**3
    q12 = h1 * tau + pi2 * h2 * tau**2
    q22 = h0 / (2.0 * tau) + 4.0 * h1 + (8.0 / 3.0) * pi2 * h2 * tau
    return C2 * np.array([[q11, q12], [q12, q22]])


def truth_noise_q(spec: ClockSpec, tau: float) -> np.ndarray:
    """Power-law discretisation used to generate true clock errors.

    White FM only perturbs the bias (a random walk in phase), so the
    simulated Allan deviation follows sqrt(h0 / 2 tau); random-walk FM
    drives the drift. Flicker FM is folded into the bias term.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    h0, h1, h2 = spec.h0, spec.h_minus1, spec.h_minus2
    pi2 = math.pi**2
    q11 = h0 / 2.0 * tau + 2.0 * h1 * tau**2 + (2.0 / 3.0) * pi2 * h2 * tau**3
    q12 = pi2 * h2 * tau**2
    q22 = 2.0 * pi2 * h2 * tau
    return C2 * np.array([[q11, q12], [q12, q22]])


def psd_sqrt(q: np.ndarray) -> np.ndarray:
    """Matrix L with L @ L.T == q, for symmetric PSD q (eigen square root)."""
    q = 0.5 * (q + q.T)
    w, v = np.linalg.eigh(q)
    scale = max(abs(w).max(), 1e-300)
    if w.min() < -1e-10 * scale:
        raise ValueError(f"covariance is not positive semi-definite (eigenvalues {w})")
    return v * np.sqrt(np.clip(w, 0.0, None))


# --- truth simulation -------------------------------------------------------------------

@dataclass
class ClockTruthSeries:
    epochs: np.ndarray  # s
    bias: np.ndarray  # m
    drift: np.ndarray  # m/s
    seed: int | None = None

    def __len__(self):
        return len(self.epochs)


def simulate_truth(spec: ClockSpec, n_epochs: int, tau: float = 60.0, seed=0,
                   drift_sign: float = 1.0, truth_noise: str = "power_law") -> ClockTruthSeries:
    """True clock bias and drift on a grid of ``n_epochs`` samples spaced ``tau``.

    The state starts at (0, d) with d from the TDEV spec and evolves as
    x_k = A x_(k-1) + w_k. ``truth_noise`` selects the covariance of w:
    "power_law" (see truth_noise_q) or "filter" (the filter's own Q).
    ``seed`` may be an int, a SeedSequence or a Generator.
    """
    if n_epochs < 1:
        raise ValueError("n_epochs must be at least 1")
    if truth_noise == "power_law":
        q = truth_noise_q(spec, tau)
    elif truth_noise == "filter":
        q = process_noise_q(spec, tau)
    else:
        raise ValueError(f"unknown truth_noise {truth_noise!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    L = psd_sqrt(q)
    t = np.arange(n_epochs) * tau
    d = drift_sign * spec.drift_mps

    w = rng.standard_normal((n_epochs, 2)) @ L.T
    w[0] = 0.0
    dd = np.cumsum(w[:, 1])
    db = np.cumsum(w[:, 0])
    db[1:] += tau * np.cumsum(dd[:-1])
    return ClockTruthSeries(t, d * t + db, d + dd, seed if isinstance(seed, int) else None)


# --- Allan deviation ------------------------------------------------------------------------

def allan_deviation(series, tau0: float, taus=None, series_type: str = "bias"):
    """Overlapping Allan deviation.

    ``series`` is a clock bias in metres ("bias"), a time error in seconds
    ("phase") or fractional frequency ("frequency"). ``taus`` are averaging
    times, rounded to multiples of tau0; by default octave spacing.
    Returns (taus, adev).
    """
    x = np.asarray(series, dtype=float)
    if series_type == "bias":
        x = x / SPEED_OF_LIGHT
    elif series_type == "frequency":
        x = np.concatenate([[0.0], np.cumsum(x) * tau0])
    elif series_type != "phase":
        raise ValueError(f"unknown series_type {series_type!r}")
    n = x.size
    if taus is None:
        ms = 2 ** np.arange(int(np.log2(max(n // 3, 1))) + 1)
    else:
        ms = np.unique(np.maximum(np.round(np.asarray(taus, dtype=float) / tau0).astype(int), 1))
    if ms.size == 0 or n < 3 * ms.max():
        raise ValueError(f"series of {n} samples too short for averaging factor {ms.max() if ms.size else 0}")
    adev = np.empty(ms.size)
    for j, m in enumerate(ms):
        d2 = x[2 * m:] - 2.0 * x[m:-m] + x[:-2 * m]
        adev[j] = math.sqrt(np.mean(d2**2) / (2.0 * (m * tau0) ** 2))
    return ms * tau0, adev
