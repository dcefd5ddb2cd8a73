"""Circular restricted three-body problem in the Earth-Moon rotating frame.

Nondimensional units: length = Earth-Moon distance, time = 1/mean motion.
The barycentre is the origin, the Earth sits at (-mu, 0, 0) and the Moon at
(1 - mu, 0, 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..constants import CR3BP_MU, EARTH_MOON_DISTANCE, MU_EARTH, MU_MOON
from .propagation import PropagationError, rk4_sample, rk4_step

LENGTH_UNIT = EARTH_MOON_DISTANCE  # km
TIME_UNIT = math.sqrt(EARTH_MOON_DISTANCE**3 / (MU_EARTH + MU_MOON))  # s
VELOCITY_UNIT = LENGTH_UNIT / TIME_UNIT  # km/s

# 60 s in nondimensional time; keeps the NRHO perilune pass well resolved.
DEFAULT_STEP = 60.0 / TIME_UNIT


class CorrectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class Cr3bpState:
    state: np.ndarray  # x, y, z, vx, vy, vz (nondimensional, barycentric rotating)
    mu: float = CR3BP_MU

    def __post_init__(self):
        s = np.asarray(self.state, dtype=float).reshape(6)
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mass ratio must be in (0, 1), got {self.mu}")
        object.__setattr__(self, "state", s)

    @classmethod
    def from_moon_centered(cls, pos_km, vel_kms, mu=CR3BP_MU):
        """From a dimensional Moon-centred Earth-Moon rotating state."""
        pos = np.asarray(pos_km, dtype=float) / LENGTH_UNIT
        pos = pos + np.array([1.0 - mu, 0.0, 0.0])
        vel = np.asarray(vel_kms, dtype=float) / VELOCITY_UNIT
        return cls(np.concatenate([pos, vel]), mu)

    def to_moon_centered(self):
        """Dimensional (km, km/s) Moon-centred rotating position and velocity."""
        pos = (self.state[:3] - np.array([1.0 - self.mu, 0.0, 0.0])) * LENGTH_UNIT
        return pos, self.state[3:] * VELOCITY_UNIT


def _accel(s, mu):
    x, y, z, vx, vy = s[0], s[1], s[2], s[3], s[4]
    r1 = math.sqrt((x + mu) ** 2 + y * y + z * z)
    r2 = math.sqrt((x - 1 + mu) ** 2 + y * y + z * z)
    c1 = (1 - mu) / r1**3
    c2 = mu / r2**3
    ax = 2 * vy + x - c1 * (x + mu) - c2 * (x - 1 + mu)
    ay = -2 * vx + y - c1 * y - c2 * y
    az = -c1 * z - c2 * z
    return ax, ay, az, r1, r2


def eom(t, s, mu=CR3BP_MU):
    ax, ay, az, _, _ = _accel(s, mu)
    return np.array([s[3], s[4], s[5], ax, ay, az])


def eom_stm(t, s, mu=CR3BP_MU):
    """State plus flattened 6x6 variational equations (42 components)."""
    x, y, z = s[0], s[1], s[2]
    ax, ay, az, r1, r2 = _accel(s, mu)
    a = 1 - mu
    r13, r23 = r1**3, r2**3
    r15, r25 = r1**5, r2**5
    dx1, dx2 = x + mu, x - 1 + mu
    uxx = 1 - a / r13 - mu / r23 + 3 * a * dx1**2 / r15 + 3 * mu * dx2**2 / r25
    uyy = 1 - a / r13 - mu / r23 + 3 * a * y**2 / r15 + 3 * mu * y**2 / r25
    uzz = -a / r13 - mu / r23 + 3 * a * z**2 / r15 + 3 * mu * z**2 / r25
    uxy = 3 * a * dx1 * y / r15 + 3 * mu * dx2 * y / r25
    uxz = 3 * a * dx1 * z / r15 + 3 * mu * dx2 * z / r25
    uyz = 3 * a * y * z / r15 + 3 * mu * y * z / r25
    phi = s[6:].reshape(6, 6)
    dphi = np.empty((6, 6))
    dphi[0:3] = phi[3:6]
    hess = np.array([[uxx, uxy, uxz], [uxy, uyy, uyz], [uxz, uyz, uzz]])
    dphi[3:6] = hess @ phi[0:3]
    dphi[3] += 2.0 * phi[4]
    dphi[4] -= 2.0 * phi[3]
    out = np.empty(42)
    out[:6] = (s[3], s[4], s[5], ax, ay, az)
    out[6:] = dphi.ravel()
    return out


def jacobi_constant(s, mu=CR3BP_MU):
    s = np.asarray(s, dtype=float)
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    r1 = np.sqrt((x + mu) ** 2 + y**2 + z**2)
    r2 = np.sqrt((x - 1 + mu) ** 2 + y**2 + z**2)
    v2 = np.sum(s[..., 3:6] ** 2, axis=-1)
    return x**2 + y**2 + 2 * (1 - mu) / r1 + 2 * mu / r2 - v2


def collinear_points(mu=CR3BP_MU):
    """x coordinates of L1, L2, L3 from a 1-D root solve on the x-axis."""
    def dudx(x):
        r1 = abs(x + mu)
        r2 = abs(x - 1 + mu)
        return x - (1 - mu) * (x + mu) / r1**3 - mu * (x - 1 + mu) / r2**3

    eps = 1e-9
    l1 = brentq(dudx, -mu + eps + 0.5, 1 - mu - eps, xtol=1e-15)
    l2 = brentq(dudx, 1 - mu + eps, 2.0, xtol=1e-15)
    l3 = brentq(dudx, -2.0, -mu - eps, xtol=1e-15)
    return l1, l2, l3


def propagate_cr3bp(s0: Cr3bpState, duration: float, n_samples: int = 2,
                    max_step: float = DEFAULT_STEP):
    """RK4 integration; returns (times, states) sampled uniformly over ``duration``.

    A negative ``duration`` integrates backwards in time.
    """
    times = np.linspace(0.0, duration, n_samples)
    sign = 1.0 if duration >= 0 else -1.0

    def f(t, y):
        return sign * eom(t, y, s0.mu)

    states = rk4_sample(f, s0.state, 0.0, np.abs(times), max_step)
    if not np.all(np.isfinite(states)):
        raise PropagationError("CR3BP integration diverged")
    return times, states


def flow_with_stm(state, duration, mu=CR3BP_MU, max_step=DEFAULT_STEP):
    """Final state and state transition matrix after ``duration``."""
    n = max(1, math.ceil(abs(duration) / max_step))
    h = duration / n
    y = np.concatenate([np.asarray(state, dtype=float), np.eye(6).ravel()])
    t = 0.0
    for _ in range(n):
        y = rk4_step(lambda tt, yy: eom_stm(tt, yy, mu), t, y, h)
        t += h
    if not np.all(np.isfinite(y)):
        raise PropagationError("CR3BP variational integration diverged")
    return y[:6], y[6:].reshape(6, 6)


def refine_periodic_nrho(guess: Cr3bpState, half_period_guess: float, tol: float = 1e-10,
                         max_iter: int = 25, max_step: float = DEFAULT_STEP, vary: str = "x",
                         history: list | None = None):
    """Single-shooting correction of a symmetric halo orbit.

    The guess is projected onto the x-z plane with a perpendicular crossing
    (y = vx = vz = 0). Newton iterations on (x0 or z0, vy0, T/2) drive
    (y, vx, vz) at T/2 to zero using the state transition matrix. ``vary``
    picks the free position coordinate; the other one is held fixed. Near
    perilune the z0/vy0 columns are almost collinear, so the default varies
    x0 and keeps the perilune height. Steps are halved until the residual
    norm drops. Returns the corrected state and the full period; residuals
    (max-abs) of each iteration are appended to ``history`` if given.
    """
    if vary not in ("x", "z"):
        raise ValueError(f"vary must be 'x' or 'z', got {vary!r}")
    col = 0 if vary == "x" else 2
    mu = guess.mu
    s = guess.state.copy()
    s[[1, 3, 5]] = 0.0
    half = float(half_period_guess)

    def residual(state, h):
        sf, phi = flow_with_stm(state, h, mu, max_step)
        return sf[[1, 3, 5]], sf, phi

    g, sf, phi = residual(s, half)
    for _ in range(max_iter):
        err = float(np.max(np.abs(g)))
        if history is not None:
            history.append(err)
        if err < tol:
            return Cr3bpState(s, mu), 2.0 * half
        deriv = eom(0.0, sf, mu)
        jac = np.column_stack([phi[[1, 3, 5], col], phi[[1, 3, 5], 4], deriv[[1, 3, 5]]])
        if not np.all(np.isfinite(jac)) or np.linalg.cond(jac) > 1e12:
            raise CorrectionError("singular differential-correction matrix")
        step = np.linalg.solve(jac, -g)
        lam = 1.0
        while True:
            trial = s.copy()
            trial[col] += lam * step[0]
            trial[4] += lam * step[1]
            h_trial = half + lam * step[2]
            if h_trial > 0:
                try:
                    g_t, sf_t, phi_t = residual(trial, h_trial)
                except PropagationError:
                    g_t = None
                if g_t is not None and np.linalg.norm(g_t) < np.linalg.norm(g):
                    break
            lam *= 0.5
            if lam < 1e-6:
                raise CorrectionError("line search failed to reduce the periodicity residual")
        s, half, g, sf, phi = trial, h_trial, g_t, sf_t, phi_t
    raise CorrectionError(f"no convergence in {max_iter} iterations (residual {err:.3e})")


def sample_periodic_orbit(orbit: Cr3bpState, period: float, times, max_step: float = DEFAULT_STEP):
    """States of a periodic orbit at nondimensional ``times`` (sorted, >= 0).

    Integration restarts from the corrected initial state every revolution
    so the unstable manifold never gets a chance to grow.
    """
    times = np.asarray(times, dtype=float)
    out = np.empty((len(times), 6))
    rev = np.floor(times / period + 1e-12).astype(int)
    f = lambda t, y: eom(t, y, orbit.mu)  # noqa: E731
    for k in np.unique(rev):
        idx = np.nonzero(rev == k)[0]
        local = np.clip(times[idx] - k * period, 0.0, None)
        out[idx] = rk4_sample(f, orbit.state, 0.0, local, max_step)
    return out


# Reference L2 southern NRHO state in the Moon-centred rotating frame.
NRHO_REFERENCE_POSITION = np.array([-125.952, 120.961, 4357.681])  # km
NRHO_REFERENCE_VELOCITY = np.array([-0.042, 1.468, -0.003])  # km/s


def first_xz_crossing(s0: Cr3bpState, t_max: float = 3.0, max_step: float = DEFAULT_STEP) -> float:
    """Time of the first y sign change after t = 0 (linear interpolation)."""
    f = lambda t, y: eom(t, y, s0.mu)  # noqa: E731
    y = s0.state.copy()
    t = 0.0
    while t < t_max:
        y_next = rk4_step(f, t, y, max_step)
        # skip the start point itself, which usually lies on the plane
        if t > 0 and y[1] * y_next[1] < 0:
            return t + max_step * y[1] / (y[1] - y_next[1])
        y, t = y_next, t + max_step
    raise CorrectionError(f"no x-z plane crossing within {t_max} time units")


def default_nrho(max_step: float = DEFAULT_STEP):
    """Corrected L2 southern NRHO seeded from the reference perilune state."""
    guess = Cr3bpState.from_moon_centered(NRHO_REFERENCE_POSITION, NRHO_REFERENCE_VELOCITY)
    projected = guess.state.copy()
    projected[[1, 3, 5]] = 0.0
    half = first_xz_crossing(Cr3bpState(projected, guess.mu), max_step=max_step)
    return refine_periodic_nrho(guess, half_period_guess=half, max_step=max_step)
