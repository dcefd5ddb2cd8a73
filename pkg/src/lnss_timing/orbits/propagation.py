"""Fixed-step RK4 propagation of a lunar orbiter under point-mass gravity.

The Moon is the central body; the Earth and Sun enter as third bodies with
both the direct and the indirect (frame acceleration) terms.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ..constants import MU_EARTH, MU_MOON, MU_SUN
from ..frames import Epoch, FrameId, StateVector
from .ephemeris import EphemerisModel


class PropagationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ForceModelConfig:
    include_earth_third_body: bool = True
    include_sun_third_body: bool = True
    mu_moon: float = MU_MOON
    mu_earth: float = MU_EARTH
    mu_sun: float = MU_SUN
    step: float = 20.0  # s

    def __post_init__(self):
        if min(self.mu_moon, self.mu_earth, self.mu_sun) <= 0:
            raise ValueError("gravitational parameters must be positive")
        if not self.step > 0:
            raise ValueError("integrator step must be positive")


@dataclass
class Trajectory:
    """Sampled state history on a uniform time grid."""

    times: np.ndarray  # s since scenario start, shape (n,)
    positions: np.ndarray  # km, (n, 3)
    velocities: np.ndarray  # km/s, (n, 3)
    frame: FrameId = FrameId.MOON_INERTIAL

    def __len__(self):
        return len(self.times)

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def state(self, k: int) -> StateVector:
        return StateVector(self.positions[k], self.velocities[k], self.frame, Epoch(float(self.times[k])))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch_s", "x_km", "y_km", "z_km", "vx_kmps", "vy_kmps", "vz_kmps", "frame"])
            for t, r, v in zip(self.times, self.positions, self.velocities):
                w.writerow([repr(float(t)), *(repr(float(x)) for x in r), *(repr(float(x)) for x in v),
                            self.frame.value])

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        rows = []
        frame = FrameId.MOON_INERTIAL
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                rows.append([float(row[k]) for k in ("epoch_s", "x_km", "y_km", "z_km",
                                                     "vx_kmps", "vy_kmps", "vz_kmps")])
                frame = FrameId(row["frame"])
        arr = np.array(rows).reshape(-1, 7)
        return cls(arr[:, 0], arr[:, 1:4], arr[:, 4:7], frame)


def rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_sample(f, y0, t0, t_out, max_step):
    """Integrate ``y' = f(t, y)`` from ``t0`` and return states at ``t_out``.

    Each interval between consecutive output times is split into the
    fewest equal sub-steps no longer than ``max_step``.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    out = np.empty((len(t_out), y.size))
    for j, t_next in enumerate(t_out):
        span = t_next - t
        if span < 0:
            raise ValueError("output times must be non-decreasing and start at or after t0")
        n = max(1, math.ceil(span / max_step - 1e-9)) if span > 0 else 0
        h = span / n if n else 0.0
        for _ in range(n):
            y = rk4_step(f, t, y, h)
            t += h
        t = float(t_next)
        if not np.all(np.isfinite(y)):
            raise PropagationError(f"non-finite state at t={t}")
        out[j] = y
    return out


def third_body_acceleration(r, r_body, mu_body):
    """Direct plus indirect perturbation of a third body at ``r_body``."""
    d = r_body - r
    return mu_body * (d / np.linalg.norm(d) ** 3 - r_body / np.linalg.norm(r_body) ** 3)


def make_dynamics(cfg: ForceModelConfig, eph: EphemerisModel):
    """Right-hand side for the state (x, y, z, vx, vy, vz).

    Written with scalar math because it runs four times per RK4 step; the
    third-body positions follow the same circular model as ``eph``.
    """
    mu = cfg.mu_moon
    mu_e, mu_s = cfg.mu_earth, cfg.mu_sun
    use_e, use_s = cfg.include_earth_third_body, cfg.include_sun_third_body
    d_e, w_e, ph_e = eph.earth_moon_distance, eph.rate, eph.earth_phase
    d_s, w_s, ph_s = eph.sun_distance, eph.sun_rate, eph.sun_phase
    bary = MU_EARTH / (MU_EARTH + MU_MOON)
    sqrt = math.sqrt

    def third(x, y, z, bx, by, bz, mu_b):
        dx, dy, dz = bx - x, by - y, bz - z
        d3 = sqrt(dx * dx + dy * dy + dz * dz) ** 3
        b3 = sqrt(bx * bx + by * by + bz * bz) ** 3
        return mu_b * (dx / d3 - bx / b3), mu_b * (dy / d3 - by / b3), mu_b * (dz / d3 - bz / b3)

    def f(t, s):
        x, y, z = float(s[0]), float(s[1]), float(s[2])
        r3 = sqrt(x * x + y * y + z * z) ** 3
        ax, ay, az = -mu * x / r3, -mu * y / r3, -mu * z / r3
        ex = ey = 0.0
        if use_e or use_s:
            a = ph_e + w_e * t
            ex, ey = d_e * math.cos(a), d_e * math.sin(a)
        if use_e:
            px, py, pz = third(x, y, z, ex, ey, 0.0, mu_e)
            ax, ay, az = ax + px, ay + py, az + pz
        if use_s:
            a = ph_s + w_s * t
            sx, sy = d_s * math.cos(a) + bary * ex, d_s * math.sin(a) + bary * ey
            px, py, pz = third(x, y, z, sx, sy, 0.0, mu_s)
            ax, ay, az = ax + px, ay + py, az + pz
        return np.array([s[3], s[4], s[5], ax, ay, az])

    return f


def propagate_numeric(s0: StateVector, duration: float, cfg: ForceModelConfig | None = None,
                      eph: EphemerisModel | None = None, sample_interval: float = 60.0) -> Trajectory:
    """RK4 propagation sampled every ``sample_interval`` seconds (inclusive of t0)."""
    cfg = cfg or ForceModelConfig()
    eph = eph or EphemerisModel()
    if s0.frame is not FrameId.MOON_INERTIAL:
        raise ValueError(f"initial state must be MOON_INERTIAL, got {s0.frame.value}")
    ratio = sample_interval / cfg.step
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ValueError(f"step {cfg.step} s does not divide the sample interval {sample_interval} s")
    n = int(math.floor(duration / sample_interval + 1e-9)) + 1
    t0 = s0.epoch.seconds
    times = t0 + sample_interval * np.arange(n)
    f = make_dynamics(cfg, eph)
    states = rk4_sample(f, s0.as_array(), t0, times, cfg.step)
    return Trajectory(times, states[:, :3], states[:, 3:], FrameId.MOON_INERTIAL)


def specific_energy(pos, vel, mu=MU_MOON):
    pos = np.asarray(pos)
    vel = np.asarray(vel)
    return 0.5 * np.sum(vel**2, axis=-1) - mu / np.linalg.norm(pos, axis=-1)
