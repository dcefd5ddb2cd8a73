"""Pseudorange and pseudorange-rate residuals seen by the lunar receiver."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .constants import GPS_CA_CHIP_LENGTH, GPS_L1_WAVELENGTH


@dataclass(frozen=True)
class TrackingLoopConfig:
    dll_bandwidth: float = 0.5  # Hz
    correlator_spacing: float = 0.3  # chips
    integration_time: float = 0.02  # s
    frontend_bandwidth: float = 26e6  # Hz
    pll_bandwidth: float = 0.5  # Hz
    chip_length: float = GPS_CA_CHIP_LENGTH  # m
    carrier_wavelength: float = GPS_L1_WAVELENGTH  # m

    def __post_init__(self):
        for name in ("dll_bandwidth", "integration_time", "frontend_bandwidth", "pll_bandwidth",
                     "chip_length", "carrier_wavelength"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.correlator_spacing <= 1.0:
            raise ValueError("correlator spacing must lie in (0, 1] chips")


@dataclass(frozen=True)
class ErrorBudget:
    sigma_uere_earth: float = 0.5  # m
    sigma_eph_lnss: float = 3.0
    sigma_gd: float = 0.15
    sigma_rec: float = 0.1

    def __post_init__(self):
        for name, value in vars(self).items():
            if value < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass
class MeasurementBatch:
    epoch: float
    prns: np.ndarray
    pseudorange_residual: np.ndarray  # m
    rate_residual: np.ndarray  # m/s
    cn0: np.ndarray  # dB-Hz
    eph_error: float  # m, common to every channel

    def __len__(self):
        return len(self.prns)

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.pseudorange_residual, self.rate_residual])


def _cn0_hz(cn0_linear):
    c = np.asarray(cn0_linear, dtype=float)
    if np.any(~(c > 0)):
        raise ValueError("C/N0 must be positive")
    return c


def dll_variance(cn0_linear, cfg: TrackingLoopConfig | None = None):
    """Thermal-noise code tracking variance (m^2) of a non-coherent early-minus-late power DLL."""
    cfg = cfg or TrackingLoopConfig()
    c = _cn0_hz(cn0_linear)
    d, T = cfg.correlator_spacing, cfg.integration_time
    chips2 = cfg.dll_bandwidth * d / (2.0 * c) * (1.0 + 2.0 / ((2.0 - d) * T * c))
    out = chips2 * cfg.chip_length**2
    return float(out) if out.ndim == 0 else out


def pll_rate_variance(cn0_linear, cfg: TrackingLoopConfig | None = None):
    """Thermal-noise range-rate variance (m^2/s^2) from carrier frequency tracking."""
    cfg = cfg or TrackingLoopConfig()
    c = _cn0_hz(cn0_linear)
    T = cfg.integration_time
    sigma_f = 1.0 / (2.0 * math.pi * T) * np.sqrt(4.0 * cfg.pll_bandwidth / c * (1.0 + 1.0 / (T * c)))
    out = (cfg.carrier_wavelength * sigma_f) ** 2
    return float(out) if out.ndim == 0 else out


def db_to_linear(cn0_dbhz):
    return 10.0 ** (np.asarray(cn0_dbhz, dtype=float) / 10.0)


def channel_variances(cn0_dbhz, budget: ErrorBudget, cfg: TrackingLoopConfig):
    """Per-channel (pseudorange, rate) variances assumed by the filter."""
    c = db_to_linear(cn0_dbhz)
    var_rho = dll_variance(c, cfg) + budget.sigma_uere_earth**2 + budget.sigma_eph_lnss**2
    return np.atleast_1d(var_rho), np.atleast_1d(pll_rate_variance(c, cfg))


def simulate_batch(tracked, bias: float, drift: float, budget: ErrorBudget | None = None,
                   cfg: TrackingLoopConfig | None = None, seed=None, epoch: float | None = None
                   ) -> MeasurementBatch:
    """Draw one epoch of residuals for the tracked channels.

    ``tracked`` is a sequence of LinkSample-like objects (``prn``, ``cn0``,
    ``epoch``). The ephemeris error is drawn once and shared by all
    channels; code and carrier noise are independent per channel.
    """
    budget = budget or ErrorBudget()
    cfg = cfg or TrackingLoopConfig()
    if len(tracked) == 0:
        raise ValueError("no tracked channels to measure")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    prns = np.array([s.prn for s in tracked])
    cn0 = np.array([s.cn0 for s in tracked], dtype=float)
    if epoch is None:
        epoch = float(tracked[0].epoch)
    return draw_batch(epoch, prns, cn0, bias, drift, budget, cfg, rng)


def draw_batch(epoch, prns, cn0, bias, drift, budget: ErrorBudget, cfg: TrackingLoopConfig,
               rng: np.random.Generator) -> MeasurementBatch:
    """Array form of :func:`simulate_batch`; same draw order."""
    c = db_to_linear(cn0)
    sd_code = np.sqrt(dll_variance(c, cfg) + budget.sigma_uere_earth**2)
    sd_rate = np.sqrt(pll_rate_variance(c, cfg))
    rho, rate, e_eph = draw_residuals(bias, drift, sd_code, sd_rate, budget.sigma_eph_lnss, rng)
    return MeasurementBatch(float(epoch), np.asarray(prns), rho, rate, np.asarray(cn0, dtype=float), e_eph)


def draw_residuals(bias, drift, sd_code, sd_rate, sigma_eph, rng):
    """Shared ephemeris error first, then per-channel code noise, then rate noise."""
    e_eph = sigma_eph * rng.standard_normal()
    n = sd_code * rng.standard_normal(len(sd_code))
    m = sd_rate * rng.standard_normal(len(sd_rate))
    return bias + e_eph + n, drift + m, float(e_eph)


def measurement_covariance(batch: MeasurementBatch, budget: ErrorBudget | None = None,
                           cfg: TrackingLoopConfig | None = None) -> np.ndarray:
    """Diagonal R ordered [all pseudoranges, then all rates]."""
    budget = budget or ErrorBudget()
    cfg = cfg or TrackingLoopConfig()
    var_rho, var_rate = channel_variances(batch.cn0, budget, cfg)
    return np.diag(np.concatenate([var_rho, var_rate]))


def write_residuals_csv(batches, path) -> None:
    """Debug dump, one row per channel."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch_s", "prn", "cn0_dbhz", "pseudorange_residual_m", "rate_residual_mps", "eph_error_m"])
        for b in batches:
            for i in range(len(b)):
                w.writerow([b.epoch, int(b.prns[i]), f"{b.cn0[i]:.3f}", repr(float(b.pseudorange_residual[i])),
                            repr(float(b.rate_residual[i])), repr(b.eph_error)])
