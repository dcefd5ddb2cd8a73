import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lnss_timing.frames import (Epoch, FrameError, FrameId, StateVector, em_rotating_basis,
                                em_rotating_to_moon_inertial, moon_inertial_to_em_rotating,
                                translate_frame_center)
from lnss_timing.orbits.ephemeris import EphemerisModel, earth_sun_states

finite = st.floats(-1e5, 1e5, allow_nan=False)


def test_epoch_arithmetic():
    e = Epoch(100.0)
    assert (e + 60).seconds == 160.0
    assert (e + 60) - e == 60.0
    assert (e - 40).seconds == 60.0
    assert Epoch(1.0) < Epoch(2.0)
    with pytest.raises(ValueError):
        Epoch(float("nan"))


def test_state_vector_validation():
    sv = StateVector([1, 2, 3], [0, 0, 1], FrameId.MOON_INERTIAL, 5.0)
    assert sv.position.shape == (3,) and sv.epoch == Epoch(5.0)
    np.testing.assert_array_equal(sv.as_array(), [1, 2, 3, 0, 0, 1])
    with pytest.raises(ValueError):
        StateVector([1, 2, np.inf], [0, 0, 0], FrameId.MOON_INERTIAL, Epoch(0))


def test_rotating_basis_orthonormal():
    eph = EphemerisModel()
    rot, omega = em_rotating_basis(eph.earth_position(1234.0), eph.earth_velocity(1234.0))
    np.testing.assert_allclose(rot.T @ rot, np.eye(3), atol=1e-14)
    assert np.isclose(np.linalg.det(rot), 1.0)
    # x axis points from the Earth towards the Moon
    np.testing.assert_allclose(rot[:, 0], -eph.earth_position(1234.0) / 384400.0, atol=1e-14)
    np.testing.assert_allclose(np.linalg.norm(omega), eph.rate, rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(finite, min_size=6, max_size=6), st.floats(0, 3e6))
def test_rotating_inertial_round_trip(vals, t):
    eph = EphemerisModel()
    epoch = Epoch(t)
    earth, _ = earth_sun_states(eph, epoch)
    s = StateVector(vals[:3], np.array(vals[3:]) * 1e-4, FrameId.MOON_EM_ROTATING, epoch)
    back = moon_inertial_to_em_rotating(em_rotating_to_moon_inertial(s, earth), earth)
    np.testing.assert_allclose(back.position, s.position, atol=1e-8)
    np.testing.assert_allclose(back.velocity, s.velocity, atol=1e-12)


def test_earth_is_fixed_in_rotating_frame():
    eph = EphemerisModel()
    for t in (0.0, 5e5, 1.7e6):
        earth, _ = earth_sun_states(eph, Epoch(t))
        rot_earth = moon_inertial_to_em_rotating(earth, earth)
        np.testing.assert_allclose(rot_earth.position, [-384400.0, 0, 0], atol=1e-8)
        np.testing.assert_allclose(rot_earth.velocity, 0.0, atol=1e-12)


def test_frame_errors():
    eph = EphemerisModel()
    earth, _ = earth_sun_states(eph, Epoch(0.0))
    s = StateVector([1, 0, 0], [0, 0, 0], FrameId.MOON_INERTIAL, Epoch(10.0))
    with pytest.raises(FrameError):
        moon_inertial_to_em_rotating(s, earth)  # epoch mismatch
    with pytest.raises(FrameError):
        em_rotating_to_moon_inertial(s, earth)  # wrong input frame
    rot = StateVector([1, 0, 0], [0, 0, 0], FrameId.MOON_EM_ROTATING, Epoch(0.0))
    with pytest.raises(FrameError):
        translate_frame_center(rot, earth)


def test_translate_frame_center():
    moon_from_earth = StateVector([384400.0, 0, 0], [0, 1.0, 0], FrameId.EARTH_INERTIAL, Epoch(0))
    sat = StateVector([384400.0 + 2000.0, 0, 0], [0, 2.6, 0], FrameId.EARTH_INERTIAL, Epoch(0))
    rel = translate_frame_center(sat, moon_from_earth, FrameId.MOON_INERTIAL)
    np.testing.assert_allclose(rel.position, [2000.0, 0, 0])
    np.testing.assert_allclose(rel.velocity, [0, 1.6, 0])
    assert rel.frame is FrameId.MOON_INERTIAL
