"""The four studied lunar orbits and a uniform way to sample them."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..frames import Epoch, FrameId, StateVector, em_rotating_to_moon_inertial
from .cr3bp import TIME_UNIT, Cr3bpState, default_nrho, sample_periodic_orbit
from .ephemeris import EphemerisModel, earth_sun_states
from .kepler import KeplerianElements, kepler_to_cartesian
from .propagation import ForceModelConfig, Trajectory, propagate_numeric

ORBIT_NAMES = ("ELFO", "LLO", "PCO", "NRHO")

# altitude km, e, i, argp, raan, M (deg); osculating at scenario start
KEPLER_ORBITS = {
    "ELFO": KeplerianElements.from_altitude(9750.5, 0.7, 63.5, 90.0, 0.0, 0.0),
    "LLO": KeplerianElements.from_altitude(100.0, 0.0, 28.5, 0.0, 0.0, 0.0),
    "PCO": KeplerianElements.from_altitude(3000.0, 0.0, 75.0, 0.0, 90.0, 0.0),
}

_nrho_cache: dict = {}


def nrho_orbit() -> tuple[Cr3bpState, float]:
    """Corrected NRHO initial state and period (nondim), computed once per process."""
    if "orbit" not in _nrho_cache:
        _nrho_cache["orbit"] = default_nrho()
    return _nrho_cache["orbit"]


def nrho_trajectory(times, eph: EphemerisModel | None = None) -> Trajectory:
    eph = eph or EphemerisModel()
    orbit, period = nrho_orbit()
    times = np.asarray(times, dtype=float)
    states = sample_periodic_orbit(orbit, period, times / TIME_UNIT)
    pos = np.empty((len(times), 3))
    vel = np.empty((len(times), 3))
    for k, t in enumerate(times):
        rot = Cr3bpState(states[k], orbit.mu).to_moon_centered()
        sv = StateVector(rot[0], rot[1], FrameId.MOON_EM_ROTATING, Epoch(float(t)))
        earth, _ = earth_sun_states(eph, Epoch(float(t)))
        inert = em_rotating_to_moon_inertial(sv, earth)
        pos[k], vel[k] = inert.position, inert.velocity
    return Trajectory(times, pos, vel, FrameId.MOON_INERTIAL)


def build_orbit_trajectory(name: str, duration: float, step: float = 60.0,
                           overrides: dict | None = None, cfg: ForceModelConfig | None = None,
                           eph: EphemerisModel | None = None) -> Trajectory:
    """Sample one of ELFO, LLO, PCO or NRHO on a uniform grid from t=0 to ``duration``.

    ``overrides`` replaces Keplerian fields (e.g. ``{"inclination": 60}``);
    it does not apply to the NRHO.
    """
    key = name.upper()
    if key not in ORBIT_NAMES:
        raise ValueError(f"unknown orbit {name!r}; expected one of {', '.join(ORBIT_NAMES)}")
    eph = eph or EphemerisModel()
    if key == "NRHO":
        if overrides:
            raise ValueError("the NRHO has no Keplerian overrides")
        n = int(round(duration / step)) + 1
        return nrho_trajectory(np.arange(n) * step, eph)
    el = KEPLER_ORBITS[key]
    if overrides:
        el = replace(el, **overrides)
    s0 = kepler_to_cartesian(el, Epoch(0.0))
    return propagate_numeric(s0, duration, cfg, eph, sample_interval=step)
