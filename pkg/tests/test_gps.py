import math
from collections import Counter
from dataclasses import fields

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lnss_timing.frames import Epoch, FrameId
from lnss_timing.gps import (DEFAULT_PATTERNS, AlmanacRecord, AntennaPattern, YumaParseError, assign_blocks,
                             block_counts, format_yuma, gps_positions, gps_state_at, load_pattern_csv,
                             parse_yuma, save_pattern_csv, synthesize_constellation, transmit_gain)

NUMERIC = [f.name for f in fields(AlmanacRecord)]


def test_empty_text_gives_no_records():
    assert parse_yuma("") == []


def test_single_hand_written_block(data_dir):
    (rec,) = parse_yuma((data_dir / "single_block.alm").read_text())
    assert rec.prn == 7
    assert rec.sqrt_a == 5153.6
    assert rec.e == 0.01234
    assert rec.raan_rate == -8.0e-9
    assert rec.mean_anomaly == -2.5
    assert rec.week == 356 and rec.healthy
    assert rec.semi_major_axis_km == pytest.approx(5153.6**2 / 1000)


def test_fixture_has_31_records(almanac_text):
    recs = parse_yuma(almanac_text)
    assert len(recs) == 31
    assert [r.prn for r in recs] == [p for p in range(1, 33) if p != 4]
    unhealthy = [r.prn for r in recs if not r.healthy]
    assert unhealthy == [17]
    for r in recs:
        assert 26000 < r.semi_major_axis_km < 27000
        assert 0 <= r.e < 0.1


def _printed_precision(text):
    """Spacing of the last printed digit of a numeric token."""
    mant = text.lower().split("e")[0]
    exp = int(text.lower().split("e")[1]) if "e" in text.lower() else 0
    decimals = len(mant.split(".")[1]) if "." in mant else 0
    return 10.0 ** (exp - decimals)


def test_round_trip_to_printed_precision(almanac_text):
    original = parse_yuma(almanac_text)
    again = parse_yuma(format_yuma(original))
    assert len(again) == len(original)
    # precision of every value as printed in the fixture
    values = [line.split(":", 1)[1].strip() for line in almanac_text.splitlines()
              if ":" in line and not line.startswith("*")]
    per_record = len(values) // len(original)
    for k, (a, b) in enumerate(zip(original, again)):
        toks = values[k * per_record:(k + 1) * per_record]
        for name, tok in zip(["prn", "health", "e", "toa", "inclination", "raan_rate", "sqrt_a", "raan",
                              "arg_perigee", "mean_anomaly", "af0", "af1", "week"], toks):
            assert abs(getattr(a, name) - getattr(b, name)) <= 0.5 * _printed_precision(tok), name


def test_keys_are_case_insensitive_and_unknown_keys_ignored(data_dir):
    text = (data_dir / "single_block.alm").read_text()
    text = text.replace("Eccentricity", "ECCENTRICITY").replace("Mean Anom", "mean anom")
    text += "\n"
    text = text.replace("week:", "Some Vendor Field:   12\nweek:")
    (rec,) = parse_yuma(text)
    assert rec.e == 0.01234 and rec.mean_anomaly == -2.5


def test_malformed_value_reports_prn_and_line(data_dir):
    text = (data_dir / "single_block.alm").read_text().replace("5153.6", "51x3.6")
    with pytest.raises(YumaParseError, match=r"PRN 7 line 8"):
        parse_yuma(text)


def test_missing_mandatory_field(data_dir):
    lines = [ln for ln in (data_dir / "single_block.alm").read_text().splitlines() if "SQRT" not in ln]
    with pytest.raises(YumaParseError, match="sqrt_a"):
        parse_yuma("\n".join(lines))


def test_synthetic_constellation_shape():
    recs = synthesize_constellation()
    assert len(recs) == 31
    assert len({round(r.raan, 9) for r in recs}) == 6
    raans = sorted({round(math.degrees(r.raan) % 360, 6) for r in recs})
    np.testing.assert_allclose(np.diff(raans), 60.0)
    for r in recs:
        assert r.semi_major_axis_km == pytest.approx(26560.0, rel=1e-12)
        assert r.e == 0.01 and r.inclination == pytest.approx(math.radians(55))
    assert synthesize_constellation(seed=3) == synthesize_constellation(seed=3)
    assert synthesize_constellation(seed=3) != synthesize_constellation(seed=4)
    with pytest.raises(ValueError):
        synthesize_constellation(n_planes=2, n_sats=13)


@pytest.mark.parametrize("seed", [0, 1, 7])
def test_in_plane_separation_exceeds_20_degrees(seed):
    recs = synthesize_constellation(seed=seed)
    pos, vel = gps_positions(recs, [0.0])
    by_plane = {}
    for r, p, v in zip(recs, pos[:, 0], vel[:, 0]):
        by_plane.setdefault(round(r.raan, 9), []).append(p)
    for plane in by_plane.values():
        for i in range(len(plane)):
            for j in range(i + 1, len(plane)):
                cosang = np.dot(plane[i], plane[j]) / np.linalg.norm(plane[i]) / np.linalg.norm(plane[j])
                assert math.degrees(math.acos(np.clip(cosang, -1, 1))) > 20.0


def test_block_histogram_31(almanac_text):
    sats = assign_blocks(parse_yuma(almanac_text))
    assert Counter(s.block for s in sats) == {"IIR": 8, "IIRM": 7, "IIF": 12, "III": 4}
    assert [s.block for s in sats[:8]] == ["IIR"] * 8 and sats[-1].block == "III"
    assert all(10 <= s.transmit_power <= 20 for s in sats)


def test_block_histogram_independent_of_input_order(almanac_text, rng):
    recs = parse_yuma(almanac_text)
    shuffled = [recs[i] for i in rng.permutation(len(recs))]
    a = {s.prn: s.block for s in assign_blocks(recs)}
    b = {s.prn: s.block for s in assign_blocks(shuffled)}
    assert a == b


def test_four_records_one_per_block():
    assert block_counts(4) == {"IIR": 1, "IIRM": 1, "IIF": 1, "III": 1}


@given(st.integers(1, 60))
def test_block_assignment_is_a_partition(n):
    counts = block_counts(n)
    assert sum(counts.values()) == n
    assert all(v >= 0 for v in counts.values())
    if n >= 4:
        assert all(v >= 1 for v in counts.values())


def test_state_at_zero_and_radius_bounds():
    recs = synthesize_constellation()
    sat = assign_blocks(recs)[0]
    s = gps_state_at(sat, Epoch(0.0))
    assert s.frame is FrameId.EARTH_INERTIAL
    pos, _ = gps_positions(recs, np.arange(0, 86400, 600.0))
    r = np.linalg.norm(pos, axis=-1)
    assert r.min() > 26000 and r.max() < 27200


def test_sidereal_period_repeats_in_plane():
    rec = synthesize_constellation()[5]
    period = 2 * math.pi * math.sqrt((rec.semi_major_axis_km) ** 3 / 398600.4418)
    assert period == pytest.approx(43082, abs=5)
    p0, _ = gps_positions([rec], [0.0])
    p1, _ = gps_positions([rec], [period])
    # RAAN drift over one period moves the satellite by well under 50 km
    assert np.linalg.norm(p1 - p0) < 50.0


def test_transmit_gain_rules():
    p = DEFAULT_PATTERNS["IIR"]
    assert transmit_gain(p, 10.0) == p.fill_gain_db
    for a, g in zip(p.angles_deg, p.gains_db):
        assert transmit_gain(p, a) == pytest.approx(g)
    a0, a1 = p.angles_deg[3], p.angles_deg[4]
    g0, g1 = p.gains_db[3], p.gains_db[4]
    assert transmit_gain(p, 0.5 * (a0 + a1)) == pytest.approx(0.5 * (g0 + g1))
    assert transmit_gain(p, 120.0) == -30.0
    np.testing.assert_allclose(transmit_gain(p, np.array([5.0, 45.0])), [p.fill_gain_db, -8.0])


@settings(max_examples=100)
@given(st.floats(16.0, 89.999))
def test_transmit_gain_is_continuous(a):
    p = DEFAULT_PATTERNS["IIF"]
    h = 1e-7
    assert abs(transmit_gain(p, a + h) - transmit_gain(p, a)) < 1e-4


def test_pattern_validation_and_csv(tmp_path):
    with pytest.raises(ValueError):
        AntennaPattern((16.0, 16.0), (0.0, 1.0), 0.0)
    with pytest.raises(ValueError):
        AntennaPattern((16.0, 95.0), (0.0, 1.0), 0.0)
    with pytest.raises(ValueError):
        AntennaPattern((16.0, 30.0), (0.0, float("inf")), 0.0)
    p = DEFAULT_PATTERNS["IIF"]
    save_pattern_csv(p, tmp_path / "p.csv")
    text = (tmp_path / "p.csv").read_text()
    assert "#fill_gain_db=" in text and "angle_deg,gain_db" in text
    assert load_pattern_csv(tmp_path / "p.csv") == p
    (tmp_path / "bad.csv").write_text("angle_deg,gain_db\n16,0\n30,-3\n")
    with pytest.raises(ValueError, match="fill_gain_db"):
        load_pattern_csv(tmp_path / "bad.csv")


def test_pattern_power_override(tmp_path):
    p = AntennaPattern((16.0, 90.0), (-1.0, -20.0), -1.0, tx_power_dbw=17.5)
    sats = assign_blocks(synthesize_constellation(), patterns={"III": p})
    assert {s.transmit_power for s in sats if s.block == "III"} == {17.5}
