import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lnss_timing.clocks import ClockSpec, get_clock, process_noise_q, simulate_truth
from lnss_timing.kalman import (FilterConfig, FilterError, measurement_update, observation_matrix, run_filter,
                                time_update)
from lnss_timing.visibility import VisibilityTimeline

RAFS = get_clock("RAFS")
CSAC = get_clock("CSAC")


def _random_psd(rng, n, scale=1.0):
    a = rng.standard_normal((n, n)) * scale
    return a @ a.T + 1e-6 * np.eye(n)


def _constant_timeline(n_epochs, n_sats, cn0=30.0):
    tl = VisibilityTimeline.from_counts(np.full(n_epochs, n_sats))
    tl.cn0[:] = cn0
    return tl


# --- time update ----------------------------------------------------------------

def test_time_update_examples():
    zero_q = np.zeros((2, 2))
    x, _ = time_update([0.0, 0.0], np.eye(2), zero_q, 60.0)
    np.testing.assert_array_equal(x, [0.0, 0.0])
    x, _ = time_update([0.0, 1.0], np.eye(2), zero_q, 60.0)
    np.testing.assert_array_equal(x, [60.0, 1.0])


def test_time_update_from_zero_covariance_gives_q():
    _, P = time_update([0.0, 0.0], np.zeros((2, 2)), RAFS, 60.0)
    np.testing.assert_array_equal(P, process_noise_q(RAFS, 60.0))


def test_time_update_covariance_oracle(rng):
    P = _random_psd(rng, 2)
    q = process_noise_q(CSAC, 60.0)
    _, P1 = time_update([0, 0], P, q, 60.0)
    # element-wise expansion of A P A^T
    p11, p12, p22 = P[0, 0], P[0, 1], P[1, 1]
    expected = np.array([[p11 + 120 * p12 + 3600 * p22, p12 + 60 * p22], [p12 + 60 * p22, p22]]) + q
    np.testing.assert_allclose(P1, expected, rtol=1e-12)


# --- measurement update ---------------------------------------------------------------

def test_perfect_measurement_pins_bias():
    P = np.diag([100.0, 1e-4])
    x, _ = measurement_update(np.array([0.0, 0.0]), P, [100.0, 0.0], np.diag([1e-12, 1e-12]))
    assert x[0] == pytest.approx(100.0, abs=1e-6)


def test_zero_innovation_is_a_fixpoint(rng):
    x = np.array([3.0, -0.2])
    P = _random_psd(rng, 2)
    C = observation_matrix(3)
    R = np.diag(rng.uniform(1, 10, 6))
    x1, _ = measurement_update(x, P, C @ x, R)
    np.testing.assert_array_equal(x1, x)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10_000))
def test_update_matches_information_form(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(2) * 10
    P = _random_psd(rng, 2, 3.0)
    R = np.diag(rng.uniform(0.01, 50.0, 2 * n))
    z = rng.standard_normal(2 * n) * 5
    x1, P1 = measurement_update(x, P, z, R)
    C = observation_matrix(n)
    Rinv = np.diag(1 / np.diag(R))
    P_info = np.linalg.inv(np.linalg.inv(P) + C.T @ Rinv @ C)
    x_info = P_info @ (np.linalg.solve(P, x) + C.T @ Rinv @ z)
    np.testing.assert_allclose(P1, P_info, rtol=1e-6, atol=1e-9)
    np.testing.assert_allclose(x1, x_info, rtol=1e-6, atol=1e-8)
    assert np.trace(P1) <= np.trace(P) + 1e-12
    assert np.array_equal(P1, P1.T)


def test_degenerate_update_raises():
    with pytest.raises(FilterError):
        measurement_update(np.zeros(2), np.zeros((2, 2)), [1.0, 0.0], np.zeros((2, 2)))
    with pytest.raises(ValueError):
        measurement_update(np.zeros(2), np.eye(2), [1.0, 0.0, 3.0], np.eye(3))


def test_filter_config_validation():
    with pytest.raises(ValueError):
        FilterConfig(m=0)
    with pytest.raises(ValueError):
        FilterConfig(m=1.5)


# --- whole runs ---------------------------------------------------------------------------

def test_update_schedule_for_m5():
    n = 60
    counts = np.ones(n, dtype=int)
    counts[10] = 0
    tl = VisibilityTimeline.from_counts(counts)
    truth = simulate_truth(CSAC, n, seed=0)
    hist = run_filter(tl, truth, CSAC, FilterConfig(m=5), seed=0)
    updated = np.flatnonzero(hist.n_meas_used)
    assert list(updated) == [k for k in range(0, n, 5) if k != 10]


def test_no_visibility_is_pure_prediction():
    n = 200
    tl = VisibilityTimeline.from_counts(np.zeros(n, dtype=int))
    truth = simulate_truth(CSAC, n, seed=2)
    x0, P0 = np.array([5.0, 0.1]), np.diag([100.0, 1e-4])
    hist = run_filter(tl, truth, CSAC, x0=x0, P0=P0)
    q = process_noise_q(CSAC, 60.0)
    x, P = x0.copy(), P0.copy()
    for k in range(1, n):
        x, P = time_update(x, P, q, 60.0)
    np.testing.assert_allclose(hist.est[-1], x, rtol=1e-12)
    np.testing.assert_allclose(hist.cov[-1], P, rtol=1e-12)
    assert hist.n_meas_used.sum() == 0


def test_tracking_beats_free_running():
    n = 1441
    truth = simulate_truth(CSAC, n, seed=4)
    tracked = run_filter(_constant_timeline(n, 4), truth, CSAC, seed=4)
    free = run_filter(_constant_timeline(n, 0), truth, CSAC, seed=4)
    rms = lambda e: np.sqrt(np.mean(e**2))  # noqa: E731
    assert rms(tracked.bias_error) * 10 < rms(free.bias_error)


def test_covariance_stays_symmetric_psd():
    n = 1441
    counts = (np.arange(n) // 37) % 3  # intermittent visibility
    tl = VisibilityTimeline.from_counts(counts)
    tl.cn0[:] = 18.0
    for spec in (CSAC, RAFS, get_clock("DSAC")):
        hist = run_filter(tl, simulate_truth(spec, n, seed=1), spec, seed=1)
        assert np.array_equal(hist.cov, np.transpose(hist.cov, (0, 2, 1)))
        assert np.linalg.eigvalsh(hist.cov).min() >= -1e-9


def test_more_frequent_updates_give_smaller_steady_covariance():
    n = 2881
    tl = _constant_timeline(n, 3, cn0=20.0)
    truth = simulate_truth(CSAC, n, seed=0)
    tr = {m: np.mean(np.trace(run_filter(tl, truth, CSAC, FilterConfig(m=m)).cov[1440:], axis1=1, axis2=2))
          for m in (1, 60)}
    assert tr[1] <= tr[60]


def test_unbiased_under_matched_model():
    n = 240
    tl = _constant_timeline(n, 2, cn0=25.0)
    final = []
    for seed in range(50):
        truth = simulate_truth(RAFS, n, seed=seed, truth_noise="filter")
        final.append(run_filter(tl, truth, RAFS, seed=seed).bias_error[-1])
    final = np.array(final)
    assert abs(final.mean()) < 3 * final.std(ddof=1) / np.sqrt(final.size)


def test_determinism_and_grid_checks(tmp_path):
    n = 100
    tl = _constant_timeline(n, 2)
    truth = simulate_truth(CSAC, n, seed=0)
    a = run_filter(tl, truth, CSAC, seed=8)
    b = run_filter(tl, truth, CSAC, seed=8)
    np.testing.assert_array_equal(a.est, b.est)
    with pytest.raises(ValueError):
        run_filter(_constant_timeline(n + 1, 2), truth, CSAC)
    with pytest.raises(ValueError):
        run_filter(tl, truth, CSAC, FilterConfig(tau=30.0))
    a.to_csv(tmp_path / "h.csv")
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "epoch_s,est_bias_m,est_drift_mps,true_bias_m,true_drift_mps,p11,p22,n_meas_used"
    assert len(lines) == n + 1


def test_noise_free_clock_with_perfect_start_stays_put():
    spec = ClockSpec("ideal", 0.0, 0.0, 0.0, 1e-7)
    n = 50
    truth = simulate_truth(spec, n)
    hist = run_filter(_constant_timeline(n, 0), truth, spec, x0=[0.0, spec.drift_mps], P0=np.zeros((2, 2)))
    np.testing.assert_allclose(hist.bias_error, 0.0, atol=1e-9)
