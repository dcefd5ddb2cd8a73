"""Keplerian elements and closed-form two-body propagation."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..constants import MU_MOON, R_MOON
from ..frames import Epoch, FrameId, StateVector


class KeplerConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class KeplerianElements:
    """Osculating elements; distances in km, angles in degrees."""

    semi_major_axis: float
    eccentricity: float
    inclination: float
    arg_perigee: float
    raan: float
    mean_anomaly: float
    gravitational_parameter: float = MU_MOON

    def __post_init__(self):
        if not self.semi_major_axis > 0:
            raise ValueError(f"semi-major axis must be positive, got {self.semi_major_axis}")
        if not 0.0 <= self.eccentricity < 1.0:
            raise ValueError(f"eccentricity must be in [0, 1), got {self.eccentricity}")
        if not self.gravitational_parameter > 0:
            raise ValueError("gravitational parameter must be positive")
        for name in ("inclination", "arg_perigee", "raan", "mean_anomaly"):
            object.__setattr__(self, name, float(getattr(self, name)) % 360.0)

    @classmethod
    def from_altitude(cls, altitude, eccentricity, inclination, arg_perigee, raan,
                      mean_anomaly, body_radius=R_MOON, mu=MU_MOON):
        """Build elements from a mean altitude above the body (a = R + altitude)."""
        return cls(body_radius + altitude, eccentricity, inclination, arg_perigee,
                   raan, mean_anomaly, mu)

    @property
    def mean_motion(self) -> float:
        return math.sqrt(self.gravitational_parameter / self.semi_major_axis**3)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.mean_motion


def solve_kepler(mean_anomaly, eccentricity, tol=1e-12, max_iter=50):
    """Eccentric anomaly from mean anomaly (radians), vectorised Newton."""
    M = np.asarray(mean_anomaly, dtype=float)
    e = np.asarray(eccentricity, dtype=float)
    E = np.where(e < 0.8, M, np.pi * np.ones_like(M))
    for _ in range(max_iter):
        f = E - e * np.sin(E) - M
        dE = f / (1.0 - e * np.cos(E))
        E = E - dE
        if np.all(np.abs(dE) < tol):
            return E
    raise KeplerConvergenceError(f"Kepler's equation did not converge in {max_iter} iterations")


def elements_to_rv(a, e, i, raan, argp, M, mu):
    """Vectorised element-to-Cartesian conversion; all angles in radians.

    Returns position and velocity arrays with a trailing axis of length 3.
    """
    a, e, i, raan, argp, M = np.broadcast_arrays(*(np.asarray(x, dtype=float)
                                                   for x in (a, e, i, raan, argp, M)))
    E = solve_kepler(np.mod(M, 2.0 * np.pi), e)
    cosE, sinE = np.cos(E), np.sin(E)
    sq = np.sqrt(1.0 - e**2)
    # perifocal coordinates
    xp = a * (cosE - e)
    yp = a * sq * sinE
    r = a * (1.0 - e * cosE)
    vfac = np.sqrt(mu * a) / r
    vxp = -vfac * sinE
    vyp = vfac * sq * cosE

    cO, sO = np.cos(raan), np.sin(raan)
    cw, sw = np.cos(argp), np.sin(argp)
    ci, si = np.cos(i), np.sin(i)
    p_hat = np.stack([cO * cw - sO * sw * ci, sO * cw + cO * sw * ci, sw * si], axis=-1)
    q_hat = np.stack([-cO * sw - sO * cw * ci, -sO * sw + cO * cw * ci, cw * si], axis=-1)
    pos = xp[..., None] * p_hat + yp[..., None] * q_hat
    vel = vxp[..., None] * p_hat + vyp[..., None] * q_hat
    return pos, vel


def kepler_to_cartesian(el: KeplerianElements, epoch: Epoch | None = None,
                        frame: FrameId = FrameId.MOON_INERTIAL) -> StateVector:
    pos, vel = elements_to_rv(el.semi_major_axis, el.eccentricity, math.radians(el.inclination),
                              math.radians(el.raan), math.radians(el.arg_perigee),
                              math.radians(el.mean_anomaly), el.gravitational_parameter)
    return StateVector(pos, vel, frame, epoch or Epoch(0.0))


def propagate_kepler(el: KeplerianElements, dt: float, epoch0: Epoch | None = None,
                     frame: FrameId = FrameId.MOON_INERTIAL) -> StateVector:
    """Advance the mean anomaly by n*dt and convert."""
    epoch0 = epoch0 or Epoch(0.0)
    m = el.mean_anomaly + math.degrees(el.mean_motion * dt)
    return kepler_to_cartesian(replace(el, mean_anomaly=m), epoch0 + dt, frame)


def cartesian_to_elements(pos, vel, mu=MU_MOON) -> KeplerianElements:
    """Osculating elements of a bound orbit (used for diagnostics and tests)."""
    r = np.asarray(pos, dtype=float)
    v = np.asarray(vel, dtype=float)
    rn = np.linalg.norm(r)
    h = np.cross(r, v)
    hn = np.linalg.norm(h)
    n_vec = np.cross([0.0, 0.0, 1.0], h)
    nn = np.linalg.norm(n_vec)
    e_vec = np.cross(v, h) / mu - r / rn
    e = np.linalg.norm(e_vec)
    energy = 0.5 * v @ v - mu / rn
    a = -mu / (2.0 * energy)
    inc = math.acos(np.clip(h[2] / hn, -1, 1))
    raan = math.atan2(n_vec[1], n_vec[0]) if nn > 1e-12 else 0.0
    if e > 1e-12:
        argp = math.atan2(np.cross(n_vec, e_vec) @ h / hn, n_vec @ e_vec) if nn > 1e-12 \
            else math.atan2(e_vec[1], e_vec[0])
        nu = math.atan2(np.cross(e_vec, r) @ h / hn, e_vec @ r)
    else:
        argp = 0.0
        ref = n_vec if nn > 1e-12 else np.array([1.0, 0.0, 0.0])
        nu = math.atan2(np.cross(ref, r) @ h / hn, ref @ r)
    E = 2.0 * math.atan2(math.sqrt(1 - e) * math.sin(nu / 2), math.sqrt(1 + e) * math.cos(nu / 2))
    M = E - e * math.sin(E)
    return KeplerianElements(a, e, math.degrees(inc), math.degrees(argp), math.degrees(raan),
                             math.degrees(M), mu)
