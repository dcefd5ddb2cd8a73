"""Analytic circular ephemeris of the Earth and Sun as seen from the Moon."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..constants import AU, EARTH_MOON_DISTANCE, MU_EARTH, MU_MOON, SIDEREAL_YEAR
from ..frames import Epoch, FrameId, StateVector


@dataclass(frozen=True)
class EphemerisModel:
    """Circular Earth-Moon motion plus a circular heliocentric barycentre.

    The Earth moves in the inertial x-y plane at ``earth_moon_distance`` with
    angular rate ``rate`` (defaults to the two-body mean motion), starting at
    ``earth_phase`` radians from +x. The Sun is placed in the same plane.
    """

    earth_moon_distance: float = EARTH_MOON_DISTANCE
    rate: float = math.sqrt((MU_EARTH + MU_MOON) / EARTH_MOON_DISTANCE**3)
    earth_phase: float = 0.0
    sun_distance: float = AU
    sun_rate: float = 2.0 * math.pi / SIDEREAL_YEAR
    sun_phase: float = math.pi

    def __post_init__(self):
        if self.earth_moon_distance <= 0 or self.rate <= 0:
            raise ValueError("Earth-Moon distance and rate must be positive")

    @property
    def sidereal_month(self) -> float:
        return 2.0 * math.pi / self.rate

    def earth_position(self, t):
        """Moon-centred Earth position(s) in km for scalar or array ``t`` (s)."""
        ang = self.earth_phase + self.rate * np.asarray(t, dtype=float)
        d = self.earth_moon_distance
        return np.stack([d * np.cos(ang), d * np.sin(ang), np.zeros_like(ang)], axis=-1)

    def earth_velocity(self, t):
        ang = self.earth_phase + self.rate * np.asarray(t, dtype=float)
        s = self.earth_moon_distance * self.rate
        return np.stack([-s * np.sin(ang), s * np.cos(ang), np.zeros_like(ang)], axis=-1)

    def sun_position(self, t):
        # Sun relative to the barycentre, then shifted to the Moon's centre.
        t = np.asarray(t, dtype=float)
        ang = self.sun_phase + self.sun_rate * t
        sun_bary = np.stack([self.sun_distance * np.cos(ang), self.sun_distance * np.sin(ang),
                             np.zeros_like(ang)], axis=-1)
        moon_to_bary = (MU_EARTH / (MU_EARTH + MU_MOON)) * self.earth_position(t)
        return sun_bary + moon_to_bary

    def sun_velocity(self, t):
        t = np.asarray(t, dtype=float)
        ang = self.sun_phase + self.sun_rate * t
        s = self.sun_distance * self.sun_rate
        v_bary = np.stack([-s * np.sin(ang), s * np.cos(ang), np.zeros_like(ang)], axis=-1)
        return v_bary + (MU_EARTH / (MU_EARTH + MU_MOON)) * self.earth_velocity(t)


def earth_sun_states(eph: EphemerisModel, epoch: Epoch) -> tuple[StateVector, StateVector]:
    t = epoch.seconds
    earth = StateVector(eph.earth_position(t), eph.earth_velocity(t), FrameId.MOON_INERTIAL, epoch)
    sun = StateVector(eph.sun_position(t), eph.sun_velocity(t), FrameId.MOON_INERTIAL, epoch)
    return earth, sun
