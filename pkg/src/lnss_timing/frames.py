"""Epochs, state vectors and the frame transforms used by the simulator.

One inertial orientation is used throughout: the x-y plane is the Moon's
orbital plane about the Earth and +z is the orbital angular momentum.
MOON_INERTIAL and EARTH_INERTIAL share those axes and differ only by origin.
MOON_EM_ROTATING is centred on the Moon with +x along the Earth-to-Moon line
and +z along the orbital angular momentum (the usual restricted three-body
orientation).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

DEFAULT_ANCHOR_UTC = "2025-11-09T00:00:00.000"


class FrameId(str, enum.Enum):
    MOON_INERTIAL = "MOON_INERTIAL"
    MOON_EM_ROTATING = "MOON_EM_ROTATING"
    EARTH_INERTIAL = "EARTH_INERTIAL"


class FrameError(ValueError):
    """Raised for frame or epoch mismatches and degenerate frame bases."""


@dataclass(frozen=True, order=True)
class Epoch:
    """Uniform scenario time in seconds past a calendar anchor.

    Leap seconds and TDB/UTC offsets are not modelled; every epoch of a
    scenario lives on the same continuous time line.
    """

    seconds: float
    anchor_utc: str = field(default=DEFAULT_ANCHOR_UTC, compare=False)

    def __post_init__(self):
        if not np.isfinite(self.seconds):
            raise ValueError(f"epoch seconds must be finite, got {self.seconds}")

    def __add__(self, dt: float) -> "Epoch":
        return Epoch(self.seconds + float(dt), self.anchor_utc)

    def __sub__(self, other):
        if isinstance(other, Epoch):
            return self.seconds - other.seconds
        return Epoch(self.seconds - float(other), self.anchor_utc)


@dataclass(frozen=True)
class StateVector:
    position: np.ndarray  # km
    velocity: np.ndarray  # km/s
    frame: FrameId
    epoch: Epoch

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float).reshape(3)
        vel = np.asarray(self.velocity, dtype=float).reshape(3)
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(vel))):
            raise ValueError("state vector components must be finite")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "velocity", vel)
        object.__setattr__(self, "frame", FrameId(self.frame))
        if not isinstance(self.epoch, Epoch):
            object.__setattr__(self, "epoch", Epoch(float(self.epoch)))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity])


def em_rotating_basis(earth_pos, earth_vel):
    """Rotation matrix (columns = rotating axes in inertial coordinates) and
    the inertial angular-velocity vector of the Earth-Moon rotating frame.

    ``earth_pos``/``earth_vel`` are the Earth's Moon-centred inertial state.
    """
    r = np.asarray(earth_pos, dtype=float)
    v = np.asarray(earth_vel, dtype=float)
    rn = np.linalg.norm(r)
    h = np.cross(r, v)
    hn = np.linalg.norm(h)
    if rn == 0.0 or hn == 0.0:
        raise FrameError("degenerate Earth-Moon basis (zero position or angular momentum)")
    x_hat = -r / rn
    z_hat = h / hn
    y_hat = np.cross(z_hat, x_hat)
    rot = np.column_stack([x_hat, y_hat, z_hat])
    omega = h / rn**2
    return rot, omega


def _check_earth_state(state: StateVector, earth: StateVector):
    if earth.frame is not FrameId.MOON_INERTIAL:
        raise FrameError(f"Earth state must be MOON_INERTIAL, got {earth.frame.value}")
    if earth.epoch.seconds != state.epoch.seconds:
        raise FrameError("Earth state epoch does not match the state epoch")


def em_rotating_to_moon_inertial(state: StateVector, earth_state_moon_inertial: StateVector) -> StateVector:
    """Express a Moon-centred rotating-frame state in the Moon-inertial frame."""
    if state.frame is not FrameId.MOON_EM_ROTATING:
        raise FrameError(f"expected MOON_EM_ROTATING, got {state.frame.value}")
    _check_earth_state(state, earth_state_moon_inertial)
    rot, omega = em_rotating_basis(earth_state_moon_inertial.position, earth_state_moon_inertial.velocity)
    r_in = rot @ state.position
    v_in = rot @ state.velocity + np.cross(omega, r_in)
    return StateVector(r_in, v_in, FrameId.MOON_INERTIAL, state.epoch)


def moon_inertial_to_em_rotating(state: StateVector, earth_state_moon_inertial: StateVector) -> StateVector:
    """Inverse of :func:`em_rotating_to_moon_inertial`."""
    if state.frame is not FrameId.MOON_INERTIAL:
        raise FrameError(f"expected MOON_INERTIAL, got {state.frame.value}")
    _check_earth_state(state, earth_state_moon_inertial)
    rot, omega = em_rotating_basis(earth_state_moon_inertial.position, earth_state_moon_inertial.velocity)
    r_rot = rot.T @ state.position
    v_rot = rot.T @ (state.velocity - np.cross(omega, state.position))
    return StateVector(r_rot, v_rot, FrameId.MOON_EM_ROTATING, state.epoch)


def translate_frame_center(state: StateVector, new_center_state: StateVector,
                           frame: FrameId | None = None) -> StateVector:
    """Re-express ``state`` about ``new_center_state`` by vector subtraction.

    Both states must share the inertial axis orientation and epoch. The
    returned frame label defaults to ``state.frame``; pass ``frame`` to
    relabel (e.g. EARTH_INERTIAL -> MOON_INERTIAL after subtracting the
    Moon's Earth-centred state).
    """
    if state.epoch.seconds != new_center_state.epoch.seconds:
        raise FrameError("cannot translate between states at different epochs")
    if FrameId.MOON_EM_ROTATING in (state.frame, new_center_state.frame):
        raise FrameError("translation is only defined between inertial frames")
    return StateVector(
        state.position - new_center_state.position,
        state.velocity - new_center_state.velocity,
        frame or state.frame,
        state.epoch,
    )
