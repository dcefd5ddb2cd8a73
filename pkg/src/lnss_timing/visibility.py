"""Earth-GPS to lunar-orbiter link geometry, C/N0 and the tracked-satellite timeline."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .constants import BOLTZMANN, GPS_L1_FREQ, R_EARTH, R_MOON, SPEED_OF_LIGHT
from .gps import gps_positions, transmit_gain
from .orbits.ephemeris import EphemerisModel

BLOCK_CODES = ("none", "earth", "moon", "earth_atmosphere")
_NONE, _EARTH, _MOON, _ATMOS = range(4)


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class ReceiverConfig:
    peak_gain: float = 14.0  # dBi
    beamwidth_3db: float = 12.2  # deg, full width
    gain_floor: float = -10.0  # dBi
    lna_gain: float = 30.0  # dB; cancels out of C/N0, kept for completeness
    noise_figure: float = 2.0  # dB
    antenna_noise_temp: float = 113.0  # K
    acq_threshold: float = 15.0  # dB-Hz
    min_track_duration: float = 40.0  # s
    earth_mask_altitude: float = 100.0  # km above R_EARTH
    carrier_freq: float = GPS_L1_FREQ

    def __post_init__(self):
        if not 0.0 < self.beamwidth_3db < 180.0:
            raise ValueError(f"beamwidth {self.beamwidth_3db} deg outside (0, 180)")
        if self.acq_threshold <= 0 or self.min_track_duration <= 0:
            raise ValueError("tracking thresholds must be positive")
        if self.earth_mask_altitude < 0:
            raise ValueError("earth mask altitude must be non-negative")


@dataclass(frozen=True)
class LinkSample:
    epoch: float  # s
    prn: int
    range: float  # m
    range_rate: float  # m/s
    cn0: float  # dB-Hz
    blocked_by: str
    tracked: bool


# --- geometry and link budget -----------------------------------------------------

def segment_blocked_by_sphere(p1, p2, center, radius):
    """True where the open segment p1-p2 passes closer than ``radius`` to ``center``.

    Broadcasts over leading axes; the last axis holds xyz.
    """
    p1, p2, center = (np.asarray(x, dtype=float) for x in (p1, p2, center))
    d = p2 - p1
    dd = np.sum(d * d, axis=-1)
    if np.any(dd == 0):
        raise ValueError("segment endpoints coincide")
    s = np.sum((center - p1) * d, axis=-1) / dd
    closest = p1 + np.clip(s, 0.0, 1.0)[..., None] * d
    dist = np.linalg.norm(center - closest, axis=-1)
    out = (s > 0.0) & (s < 1.0) & (dist < radius)
    return bool(out) if out.ndim == 0 else out


def receiver_gain(cfg: ReceiverConfig, off_boresight_deg):
    theta = np.asarray(off_boresight_deg, dtype=float)
    g = cfg.peak_gain - 3.0 * (theta / (cfg.beamwidth_3db / 2.0)) ** 2
    g = np.maximum(g, cfg.gain_floor)
    return float(g) if g.ndim == 0 else g


def free_space_path_loss(range_m, freq=GPS_L1_FREQ):
    return 20.0 * np.log10(4.0 * math.pi * np.asarray(range_m, dtype=float) * freq / SPEED_OF_LIGHT)


def system_noise_temp(cfg: ReceiverConfig) -> float:
    return cfg.antenna_noise_temp + 290.0 * (10.0 ** (cfg.noise_figure / 10.0) - 1.0)


def noise_density_dbw(cfg: ReceiverConfig) -> float:
    return 10.0 * math.log10(BOLTZMANN * system_noise_temp(cfg))


def compute_cn0(range_m, tx_power_dbw, tx_gain_db, rx_gain_dbi, cfg: ReceiverConfig):
    r = np.asarray(range_m, dtype=float)
    if np.any(r <= 0):
        raise ValueError("range must be positive")
    cn0 = (tx_power_dbw + tx_gain_db + rx_gain_dbi - free_space_path_loss(r, cfg.carrier_freq)
           - noise_density_dbw(cfg))
    return float(cn0) if np.ndim(cn0) == 0 else cn0


def _angle_deg(u, v):
    cosang = np.sum(u * v, axis=-1) / (np.linalg.norm(u, axis=-1) * np.linalg.norm(v, axis=-1))
    return np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))


def min_run_samples(min_duration: float, dt: float) -> int:
    return max(1, math.ceil(min_duration / dt - 1e-9))


def apply_run_length(above, n_min: int):
    """Keep only True runs of at least ``n_min`` samples along the last axis."""
    above = np.asarray(above, dtype=bool)
    if n_min <= 1:
        return above.copy()
    out = np.zeros_like(above)
    for idx in np.ndindex(above.shape[:-1]):
        row = above[idx]
        edges = np.diff(np.concatenate([[0], row.astype(np.int8), [0]]))
        starts, ends = np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)
        for s, e in zip(starts, ends):
            if e - s >= n_min:
                out[idx + (slice(s, e),)] = True
    return out


# --- timeline -------------------------------------------------------------------------

@dataclass
class VisibilityTimeline:
    """Per-satellite link arrays on a uniform grid; rows follow ``prns``."""

    times: np.ndarray  # (n_t,)
    prns: np.ndarray  # (n_sat,)
    cn0: np.ndarray  # dB-Hz, (n_sat, n_t)
    range_m: np.ndarray
    range_rate: np.ndarray  # m/s
    blocked: np.ndarray  # int codes into BLOCK_CODES
    tracked: np.ndarray  # bool
    grid_step: float = 0.0  # s; only consulted for single-epoch timelines

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.size > 1:
            dt = np.diff(self.times)
            if np.any(dt <= 0) or not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-9):
                raise GridError("timeline epochs must be strictly increasing and uniform")

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else float(self.grid_step)

    @property
    def n_tracked(self) -> np.ndarray:
        return self.tracked.sum(axis=0)

    def __len__(self):
        return self.times.size

    def samples_at(self, k: int, tracked_only: bool = True) -> list[LinkSample]:
        rows = np.flatnonzero(self.tracked[:, k]) if tracked_only else range(len(self.prns))
        return [LinkSample(float(self.times[k]), int(self.prns[i]), float(self.range_m[i, k]),
                           float(self.range_rate[i, k]), float(self.cn0[i, k]),
                           BLOCK_CODES[self.blocked[i, k]], bool(self.tracked[i, k])) for i in rows]

    @classmethod
    def from_counts(cls, counts, dt: float = 60.0) -> "VisibilityTimeline":
        """Synthetic timeline with the given number of tracked channels per epoch."""
        counts = np.asarray(counts, dtype=int)
        n_sat = max(int(counts.max(initial=0)), 1)
        tracked = np.arange(n_sat)[:, None] < counts[None, :]
        shape = tracked.shape
        return cls(np.arange(counts.size) * dt, np.arange(1, n_sat + 1), np.full(shape, 30.0),
                   np.full(shape, 3.85e8), np.zeros(shape), np.zeros(shape, dtype=int), tracked, dt)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch_s", "n_tracked", *(f"cn0_dbhz_prn{p:02d}" for p in self.prns)])
            counts = self.n_tracked
            for k, t in enumerate(self.times):
                cells = [f"{self.cn0[i, k]:.3f}" if self.tracked[i, k] else "" for i in range(len(self.prns))]
                w.writerow([f"{t:.1f}", int(counts[k]), *cells])


def build_visibility_timeline(lnss_traj, gps_sats, eph: EphemerisModel | None = None,
                              cfg: ReceiverConfig | None = None) -> VisibilityTimeline:
    """Evaluate every GPS-to-orbiter link on the trajectory's time grid.

    ``lnss_traj`` is a Moon-centred inertial Trajectory (km, km/s).
    """
    eph = eph or EphemerisModel()
    cfg = cfg or ReceiverConfig()
    t = np.asarray(lnss_traj.times, dtype=float)
    if t.size > 1:
        dt = np.diff(t)
        if np.any(dt <= 0) or not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-9):
            raise GridError("trajectory samples are not on a uniform grid")
    r_l = np.asarray(lnss_traj.positions, dtype=float)[None]  # (1, n_t, 3)
    v_l = np.asarray(lnss_traj.velocities, dtype=float)[None]
    r_e = eph.earth_position(t)[None]
    v_e = eph.earth_velocity(t)[None]

    g_pos, g_vel = gps_positions(gps_sats, t)  # Earth-centred
    r_g = r_e + g_pos
    v_g = v_e + g_vel

    los = r_l - r_g  # transmitter to receiver
    rng_km = np.linalg.norm(los, axis=-1)
    rate = np.sum((v_l - v_g) * los, axis=-1) / rng_km * 1e3

    tx_angle = _angle_deg(-g_pos, los)
    rx_angle = _angle_deg(r_e - r_l, -los)
    power = np.array([s.transmit_power for s in gps_sats])[:, None]
    g_tx = np.stack([transmit_gain(s.pattern, tx_angle[i]) for i, s in enumerate(gps_sats)])
    cn0 = compute_cn0(rng_km * 1e3, power, g_tx, receiver_gain(cfg, rx_angle), cfg)

    blocked = np.zeros(cn0.shape, dtype=int)
    center_e = np.broadcast_to(r_e, r_g.shape)
    atmos = segment_blocked_by_sphere(r_g, np.broadcast_to(r_l, r_g.shape), center_e,
                                      R_EARTH + cfg.earth_mask_altitude)
    solid = segment_blocked_by_sphere(r_g, np.broadcast_to(r_l, r_g.shape), center_e, R_EARTH)
    moon = segment_blocked_by_sphere(r_g, np.broadcast_to(r_l, r_g.shape), np.zeros(3), R_MOON)
    blocked[atmos] = _ATMOS
    blocked[solid] = _EARTH
    blocked[moon & (blocked == _NONE)] = _MOON

    above = (blocked == _NONE) & (cn0 >= cfg.acq_threshold)
    step = float(t[1] - t[0]) if t.size > 1 else cfg.min_track_duration
    tracked = apply_run_length(above, min_run_samples(cfg.min_track_duration, step))
    prns = np.array([s.prn for s in gps_sats])
    return VisibilityTimeline(t, prns, cn0, rng_km * 1e3, rate, blocked, tracked, step)


# --- statistics ---------------------------------------------------------------------------

def _counts(tl):
    counts = tl.n_tracked if isinstance(tl, VisibilityTimeline) else np.asarray(tl)
    if counts.size == 0:
        raise ValueError("empty timeline")
    return counts


def longest_zero_run(counts) -> int:
    zero = np.concatenate([[0], (np.asarray(counts) == 0).astype(np.int8), [0]])
    edges = np.diff(zero)
    starts, ends = np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)
    return int((ends - starts).max(initial=0))


def max_ecop(tl, dt: float | None = None) -> float:
    """Longest outage with no tracked satellite, in seconds.

    Accepts a timeline or a bare count series (then ``dt`` is required).
    """
    counts = _counts(tl)
    if dt is None:
        if not isinstance(tl, VisibilityTimeline):
            raise ValueError("dt is required for a bare count series")
        dt = tl.step
    return longest_zero_run(counts) * dt


def visibility_percent(tl, k: int) -> float:
    counts = _counts(tl)
    return 100.0 * np.count_nonzero(counts >= k) / counts.size
