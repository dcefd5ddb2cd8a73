"""Two-state (bias, drift) timing Kalman filter driven by intermittent Earth-GPS residuals."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .clocks import ClockSpec, process_noise_q
from .measurements import ErrorBudget, TrackingLoopConfig, db_to_linear, dll_variance, draw_residuals, pll_rate_variance

# independent random streams derived from one master seed
STREAM_TRUTH, STREAM_MEAS, STREAM_INIT = 0, 1, 2


class FilterError(RuntimeError):
    pass


@dataclass(frozen=True)
class FilterConfig:
    tau: float = 60.0
    m: int = 1
    init_sigma_bias: float = 10.0  # m
    init_sigma_drift: float = 0.01  # m/s
    hm2_squared: bool = True

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    @property
    def initial_covariance(self) -> np.ndarray:
        return np.diag([self.init_sigma_bias**2, self.init_sigma_drift**2])


def transition(tau: float) -> np.ndarray:
    return np.array([[1.0, tau], [0.0, 1.0]])


def symmetrize(P):
    return 0.5 * (P + P.T)


def time_update(x, P, spec_or_q, tau: float = 60.0):
    """Propagate one step. ``spec_or_q`` is a ClockSpec or a ready 2x2 Q."""
    q = process_noise_q(spec_or_q, tau) if isinstance(spec_or_q, ClockSpec) else np.asarray(spec_or_q)
    A = transition(tau)
    return A @ np.asarray(x, dtype=float), symmetrize(A @ P @ A.T + q)


def observation_matrix(n: int) -> np.ndarray:
    C = np.zeros((2 * n, 2))
    C[:n, 0] = 1.0
    C[n:, 1] = 1.0
    return C


def measurement_update(x, P, z, R):
    """Standard Kalman correction; ``z`` holds N pseudorange then N rate residuals."""
    z = np.asarray(z, dtype=float)
    R = np.asarray(R, dtype=float)
    if z.size == 0 or z.size % 2:
        raise ValueError("measurement vector must hold N pseudoranges and N rates")
    C = observation_matrix(z.size // 2)
    S = C @ P @ C.T + R
    try:
        K = np.linalg.solve(S, C @ P).T  # S symmetric, so (S^-1 C P)^T = P C^T S^-1
    except np.linalg.LinAlgError as exc:
        raise FilterError(f"innovation covariance is singular: {exc}") from None
    x_new = x + K @ (z - C @ x)
    P_new = symmetrize((np.eye(2) - K @ C) @ P)
    return x_new, P_new


@dataclass
class FilterHistory:
    epochs: np.ndarray
    est: np.ndarray  # (n, 2) bias m, drift m/s
    truth: np.ndarray  # (n, 2)
    cov: np.ndarray  # (n, 2, 2)
    n_meas_used: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def bias_error(self) -> np.ndarray:
        return self.est[:, 0] - self.truth[:, 0]

    @property
    def drift_error(self) -> np.ndarray:
        return self.est[:, 1] - self.truth[:, 1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch_s", "est_bias_m", "est_drift_mps", "true_bias_m", "true_drift_mps",
                        "p11", "p22", "n_meas_used"])
            for k in range(len(self.epochs)):
                w.writerow([f"{self.epochs[k]:.1f}", repr(float(self.est[k, 0])), repr(float(self.est[k, 1])),
                            repr(float(self.truth[k, 0])), repr(float(self.truth[k, 1])),
                            repr(float(self.cov[k, 0, 0])), repr(float(self.cov[k, 1, 1])),
                            int(self.n_meas_used[k])])


def run_filter(timeline, truth, spec: ClockSpec, cfg: FilterConfig | None = None,
               budget: ErrorBudget | None = None, loopcfg: TrackingLoopConfig | None = None,
               seed: int = 0, x0=None, P0=None) -> FilterHistory:
    """Filter a whole scenario.

    Epoch 0 carries the initial estimate; every later epoch is time-updated,
    then measurement-updated when k % m == 0 and a satellite is tracked.
    The recorded estimate is the posterior where an update happened and
    the prior otherwise. ``x0``/``P0`` default to truth plus a draw from the
    initial covariance.
    """
    cfg = cfg or FilterConfig()
    budget = budget or ErrorBudget()
    loopcfg = loopcfg or TrackingLoopConfig()
    t = np.asarray(truth.epochs, dtype=float)
    n = t.size
    if len(timeline.times) != n or not np.allclose(timeline.times, t):
        raise ValueError("timeline and truth are not on the same grid")
    if n > 1 and not np.isclose(t[1] - t[0], cfg.tau):
        raise ValueError(f"grid step {t[1] - t[0]} s does not match tau {cfg.tau} s")

    truth_x = np.column_stack([truth.bias, truth.drift])
    P = cfg.initial_covariance if P0 is None else np.array(P0, dtype=float)
    if x0 is None:
        rng0 = np.random.default_rng([seed, STREAM_INIT])
        x = truth_x[0] + np.sqrt(np.diag(P)) * rng0.standard_normal(2)
    else:
        x = np.array(x0, dtype=float)
    q = process_noise_q(spec, cfg.tau, cfg.hm2_squared)
    tracked = np.asarray(timeline.tracked)
    counts = tracked.sum(axis=0)
    # per-link noise levels for the whole run, evaluated once
    cn0_lin = db_to_linear(np.where(tracked, timeline.cn0, 30.0))
    var_code = dll_variance(cn0_lin, loopcfg) + budget.sigma_uere_earth**2
    var_rate = pll_rate_variance(cn0_lin, loopcfg)
    var_eph = budget.sigma_eph_lnss**2

    est = np.empty((n, 2))
    cov = np.empty((n, 2, 2))
    used = np.zeros(n, dtype=int)
    for k in range(n):
        if k > 0:
            x, P = time_update(x, P, q, cfg.tau)
        if k % cfg.m == 0 and counts[k] > 0:
            rows = tracked[:, k]
            vc, vr = var_code[rows, k], var_rate[rows, k]
            rho, rate, _ = draw_residuals(truth_x[k, 0], truth_x[k, 1], np.sqrt(vc), np.sqrt(vr),
                                          budget.sigma_eph_lnss, np.random.default_rng([seed, STREAM_MEAS, k]))
            R = np.diag(np.concatenate([vc + var_eph, vr]))
            x, P = measurement_update(x, P, np.concatenate([rho, rate]), R)
            used[k] = rho.size
        est[k] = x
        cov[k] = P
    return FilterHistory(t, est, truth_x, cov, used, {"clock": spec.name, "m": cfg.m, "seed": seed})
