import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lnss_timing.measurements import (ErrorBudget, TrackingLoopConfig, dll_variance, measurement_covariance,
                                      pll_rate_variance, simulate_batch, write_residuals_csv)

CFG = TrackingLoopConfig()
ZERO = ErrorBudget(0.0, 0.0, 0.0, 0.0)


def _links(cn0s, epoch=0.0):
    return [SimpleNamespace(prn=i + 1, cn0=c, epoch=epoch) for i, c in enumerate(cn0s)]


def test_dll_at_20_dbhz():
    # hand evaluation: 0.5*0.3/(2*100) * (1 + 2/(1.7*0.02*100))
    chips2 = 0.5 * 0.3 / 200 * (1 + 2 / 3.4)
    assert math.sqrt(chips2) == pytest.approx(0.0345, abs=5e-5)
    assert dll_variance(100.0) == pytest.approx(chips2 * 293.0523**2, rel=1e-5)
    assert math.sqrt(dll_variance(100.0)) == pytest.approx(10.1, abs=0.05)


def test_pll_regression_constant():
    sigma_f = 1 / (2 * math.pi * 0.02) * math.sqrt(4 * 0.5 / 100 * (1 + 1 / 2))
    lam = 299792458.0 / 1575.42e6
    assert pll_rate_variance(100.0) == pytest.approx((lam * sigma_f) ** 2, rel=1e-12)
    assert pll_rate_variance(100.0) == pytest.approx(0.0687939, rel=1e-5)


def test_limits_and_errors():
    assert dll_variance(1e15) < 1e-9
    assert pll_rate_variance(1e15) < 1e-9
    for fn in (dll_variance, pll_rate_variance):
        with pytest.raises(ValueError):
            fn(0.0)
        with pytest.raises(ValueError):
            fn(np.array([10.0, -1.0]))


def test_monotone_on_grid():
    c = np.logspace(0, 7, 400)
    assert np.all(np.diff(dll_variance(c)) < 0)
    assert np.all(np.diff(pll_rate_variance(c)) < 0)


def test_pll_bandwidth_scaling():
    half = TrackingLoopConfig(pll_bandwidth=0.25)
    ratio = pll_rate_variance(1e6, half) / pll_rate_variance(1e6)
    assert ratio == pytest.approx(0.5, rel=0.02)


def test_config_validation():
    with pytest.raises(ValueError):
        TrackingLoopConfig(correlator_spacing=1.5)
    with pytest.raises(ValueError):
        TrackingLoopConfig(integration_time=0.0)
    with pytest.raises(ValueError):
        ErrorBudget(sigma_eph_lnss=-1.0)


QUIET = TrackingLoopConfig(dll_bandwidth=1e-30, pll_bandwidth=1e-30)


def test_noise_free_batch():
    b = simulate_batch(_links([20.0, 25.0, 30.0]), 12.5, 0.003, ZERO, QUIET, seed=1)
    np.testing.assert_allclose(b.pseudorange_residual, 12.5, atol=1e-12)
    np.testing.assert_allclose(b.rate_residual, 0.003, atol=1e-12)


def test_shared_ephemeris_error():
    budget = ErrorBudget(0.0, 3.0, 0.0, 0.0)
    b = simulate_batch(_links([20.0, 25.0, 30.0, 18.0]), 5.0, 0.0, budget, QUIET, seed=3)
    diffs = b.pseudorange_residual - 5.0
    np.testing.assert_allclose(diffs, diffs[0], atol=1e-9)
    assert diffs[0] == pytest.approx(b.eph_error, abs=1e-9)
    assert b.eph_error != 0.0


def test_batch_determinism_and_errors():
    a = simulate_batch(_links([20.0, 22.0]), 0.0, 0.0, seed=9)
    b = simulate_batch(_links([20.0, 22.0]), 0.0, 0.0, seed=9)
    np.testing.assert_array_equal(a.z, b.z)
    with pytest.raises(ValueError):
        simulate_batch([], 0.0, 0.0, seed=1)


def test_ensemble_moments():
    budget = ErrorBudget()
    cn0 = 20.0
    var_dll = dll_variance(10 ** (cn0 / 10))
    rng = np.random.default_rng(77)
    rho = np.array([simulate_batch(_links([cn0]), 100.0, 0.5, budget, CFG, rng).pseudorange_residual[0]
                    for _ in range(10_000)])
    expected = 9.0 + var_dll + 0.25
    assert np.var(rho) == pytest.approx(expected, rel=0.05)
    assert abs(np.mean(rho) - 100.0) < 3 * math.sqrt(expected / rho.size)


def test_covariance_structure():
    b = simulate_batch(_links([20.0]), 0.0, 0.0, seed=1)
    R = measurement_covariance(b)
    assert R.shape == (2, 2) and R[0, 1] == 0.0
    b = simulate_batch(_links([25.0, 25.0, 18.0]), 0.0, 0.0, seed=1)
    R = measurement_covariance(b)
    assert R.shape == (6, 6)
    assert np.count_nonzero(R - np.diag(np.diag(R))) == 0
    d = np.diag(R)
    assert d[0] == d[1] and d[3] == d[4]
    assert np.all(d[:3] >= 9.0) and np.all(d > 0)
    assert d[0] == pytest.approx(dll_variance(10**2.5) + 0.25 + 9.0)
    assert d[3] == pytest.approx(pll_rate_variance(10**2.5))


@given(st.lists(st.floats(5.0, 60.0), min_size=1, max_size=12))
def test_covariance_floor(cn0s):
    R = measurement_covariance(simulate_batch(_links(cn0s), 0.0, 0.0, seed=0))
    assert np.all(np.diag(R)[: len(cn0s)] >= 9.0)


def test_debug_csv(tmp_path):
    b = simulate_batch(_links([20.0, 21.0], epoch=120.0), 1.0, 0.0, seed=1)
    write_residuals_csv([b], tmp_path / "r.csv")
    assert len((tmp_path / "r.csv").read_text().splitlines()) == 3
