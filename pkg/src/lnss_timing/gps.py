"""Earth-GPS space segment: almanacs, block metadata and transmit patterns."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .constants import MU_EARTH
from .frames import Epoch, FrameId, StateVector
from .orbits.kepler import elements_to_rv

BLOCKS = ("IIR", "IIRM", "IIF", "III")
BLOCK_COUNTS_31 = {"IIR": 8, "IIRM": 7, "IIF": 12, "III": 4}

FILL_ANGLE_DEG = 16.0
BACKLOBE_GAIN_DB = -30.0


class YumaParseError(ValueError):
    pass


@dataclass(frozen=True)
class AlmanacRecord:
    """One YUMA almanac entry. ``sqrt_a`` is in sqrt(m) as printed in YUMA files."""

    prn: int
    e: float
    toa: float
    inclination: float  # rad
    raan_rate: float  # rad/s
    sqrt_a: float  # sqrt(m)
    raan: float  # rad
    arg_perigee: float  # rad
    mean_anomaly: float  # rad
    af0: float = 0.0
    af1: float = 0.0
    week: int = 0
    health: int = 0

    @property
    def semi_major_axis_km(self) -> float:
        return self.sqrt_a**2 / 1000.0

    @property
    def healthy(self) -> bool:
        return self.health == 0


# --- YUMA text format -------------------------------------------------------

_HEADER = re.compile(r"^\*+\s*week\s+(\d+)\s+almanac\s+for\s+prn-?\s*(\d+)\s*\*+\s*$", re.I)

# (label prefix, field name, converter); matched on the lower-cased label
_FIELDS = [
    ("id", "prn", int),
    ("health", "health", int),
    ("eccentricity", "e", float),
    ("time of applicability", "toa", float),
    ("orbital inclination", "inclination", float),
    ("rate of right ascen", "raan_rate", float),
    ("sqrt(a)", "sqrt_a", float),
    ("right ascen at week", "raan", float),
    ("argument of perigee", "arg_perigee", float),
    ("mean anom", "mean_anomaly", float),
    ("af0", "af0", float),
    ("af1", "af1", float),
    ("week", "week", int),
]
_MANDATORY = ("e", "toa", "inclination", "raan_rate", "sqrt_a", "raan", "arg_perigee", "mean_anomaly")

_LABELS = {
    "prn": "ID:", "health": "Health:", "e": "Eccentricity:",
    "toa": "Time of Applicability(s):", "inclination": "Orbital Inclination(rad):",
    "raan_rate": "Rate of Right Ascen(r/s):", "sqrt_a": "SQRT(A)  (m 1/2):",
    "raan": "Right Ascen at Week(rad):", "arg_perigee": "Argument of Perigee(rad):",
    "mean_anomaly": "Mean Anom(rad):", "af0": "Af0(s):", "af1": "Af1(s/s):", "week": "week:",
}


def _lookup(label: str):
    label = " ".join(label.lower().split())
    for prefix, name, conv in _FIELDS:
        if label.startswith(prefix):
            return name, conv
    return None


def _to_int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"not an integer: {text}")
    return int(value)


def parse_yuma(text: str) -> list[AlmanacRecord]:
    """Parse YUMA almanac text into records, in file order.

    Unknown keys are ignored; unhealthy satellites are kept (see
    ``AlmanacRecord.healthy``).
    """
    records = []
    block = None
    header_prn = None

    def finish(lineno):
        if block is None:
            return
        missing = [k for k in _MANDATORY if k not in block]
        if missing:
            raise YumaParseError(f"PRN {block.get('prn', header_prn)} (block ending line {lineno}): "
                                 f"missing field(s) {', '.join(missing)}")
        block.setdefault("prn", header_prn)
        records.append(AlmanacRecord(**block))

    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        m = _HEADER.match(line)
        if m:
            finish(lineno - 1)
            header_prn = int(m.group(2))
            block = {"week": int(m.group(1))}
            continue
        if block is None or ":" not in line:
            continue
        label, _, value = line.partition(":")
        hit = _lookup(label)
        if hit is None:
            continue
        name, conv = hit
        try:
            block[name] = _to_int(value.strip()) if conv is int else float(value.strip())
        except ValueError:
            raise YumaParseError(f"PRN {block.get('prn', header_prn)} line {lineno}: "
                                 f"malformed value for {label.strip()!r}: {value.strip()!r}") from None
    finish(len(lines))
    return records


def format_yuma(records) -> str:
    out = []
    for r in records:
        out.append(f"******** Week {r.week} almanac for PRN-{r.prn:02d} ********")
        for name in ("prn", "health", "e", "toa", "inclination", "raan_rate", "sqrt_a", "raan",
                     "arg_perigee", "mean_anomaly", "af0", "af1", "week"):
            value = getattr(r, name)
            if name == "prn":
                text = f"{value:02d}"
            elif name == "health":
                text = f"{value:03d}"
            elif name == "week":
                text = f"{value}"
            else:
                text = f"{value: .10E}"
            out.append(f"{_LABELS[name]:<28}{text}")
        out.append("")
    return "\n".join(out)


# --- constellation ------------------------------------------------------------

def synthesize_constellation(n_planes: int = 6, n_sats: int = 31, seed: int = 0,
                             semi_major_axis_km: float = 26560.0, inclination_deg: float = 55.0,
                             eccentricity: float = 0.01) -> list[AlmanacRecord]:
    """A reproducible Walker-like stand-in for a broadcast almanac.

    Planes are 60 deg apart in RAAN (for six planes); satellites are spread
    evenly in argument of latitude within each plane, with a per-plane
    phase offset. The seed only jitters the phasing (by under 1.5 deg) and
    the argument of perigee.
    """
    if n_sats > 6 * n_planes:
        raise ValueError(f"{n_sats} satellites do not fit in {n_planes} planes of at most 6")
    rng = np.random.default_rng(seed)
    per_plane = [n_sats // n_planes + (1 if k < n_sats % n_planes else 0) for k in range(n_planes)]
    sqrt_a = math.sqrt(semi_major_axis_km * 1000.0)
    records = []
    prn = 1
    for k, count in enumerate(per_plane):
        raan = 2.0 * math.pi * k / n_planes
        offset = 2.0 * math.pi * k / n_sats
        for j in range(count):
            u = offset + 2.0 * math.pi * j / count + rng.uniform(-1.5, 1.5) * math.pi / 180.0
            argp = rng.uniform(0.0, 2.0 * math.pi)
            records.append(AlmanacRecord(
                prn=prn, e=eccentricity, toa=0.0, inclination=math.radians(inclination_deg),
                raan_rate=-8.0e-9, sqrt_a=sqrt_a, raan=_wrap_pi(raan), arg_perigee=_wrap_pi(argp),
                mean_anomaly=_wrap_pi(u - argp)))
            prn += 1
    return records


def _wrap_pi(x: float) -> float:
    return (x + math.pi) % (2.0 * math.pi) - math.pi


# --- transmit antenna ---------------------------------------------------------

@dataclass(frozen=True)
class AntennaPattern:
    """Azimuth-averaged gain table for off-boresight angles 16-90 deg."""

    angles_deg: tuple
    gains_db: tuple
    fill_gain_db: float
    tx_power_dbw: float | None = None

    def __post_init__(self):
        a = np.asarray(self.angles_deg, dtype=float)
        g = np.asarray(self.gains_db, dtype=float)
        if a.shape != g.shape or a.size < 2:
            raise ValueError("pattern needs matching angle/gain knots (at least two)")
        if np.any(np.diff(a) <= 0) or a[0] < 0 or a[-1] > 90:
            raise ValueError("pattern angles must be strictly increasing within [0, 90]")
        if not np.all(np.isfinite(g)):
            raise ValueError("pattern gains must be finite")
        object.__setattr__(self, "angles_deg", tuple(a.tolist()))
        object.__setattr__(self, "gains_db", tuple(g.tolist()))


def parametric_pattern(fill_gain_db: float, sidelobe_db: float, tx_power_dbw: float | None = None,
                       null_db: float = -25.0, edge_db: float = -20.0) -> AntennaPattern:
    """Main-lobe edge falling to a null near 30 deg, flat side lobe to 60 deg."""
    angles = (16.0, 22.0, 27.0, 30.0, 32.0, 60.0, 90.0)
    gains = (fill_gain_db, fill_gain_db - 4.0, fill_gain_db - 12.0, null_db, sidelobe_db,
             sidelobe_db, edge_db)
    return AntennaPattern(angles, gains, fill_gain_db, tx_power_dbw)


DEFAULT_PATTERNS = {
    "IIR": parametric_pattern(-2.0, -8.0, 15.0),
    "IIRM": parametric_pattern(-2.0, -8.0, 15.0),
    "IIF": parametric_pattern(-1.0, -5.0, 16.0),
    "III": parametric_pattern(-1.0, -5.0, 16.0),
}
DEFAULT_TX_POWER_DBW = {"IIR": 15.0, "IIRM": 15.0, "IIF": 16.0, "III": 16.0}


def transmit_gain(p: AntennaPattern, off_boresight_deg):
    """Transmit gain in dB; vectorised over the angle."""
    ang = np.asarray(off_boresight_deg, dtype=float)
    g = np.interp(ang, p.angles_deg, p.gains_db)
    g = np.where(ang < FILL_ANGLE_DEG, p.fill_gain_db, g)
    g = np.where(ang > 90.0, BACKLOBE_GAIN_DB, g)
    return float(g) if g.ndim == 0 else g


def load_pattern_csv(path) -> AntennaPattern:
    meta = {}
    angles, gains = [], []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip().lower()] = float(value)
                continue
            if line.lower().startswith("angle_deg"):
                continue
            a, g = line.split(",")[:2]
            angles.append(float(a))
            gains.append(float(g))
    if "fill_gain_db" not in meta:
        raise ValueError(f"{path}: missing '#fill_gain_db=' metadata line")
    return AntennaPattern(tuple(angles), tuple(gains), meta["fill_gain_db"], meta.get("tx_power_dbw"))


def save_pattern_csv(p: AntennaPattern, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"#fill_gain_db={p.fill_gain_db!r}\n")
        if p.tx_power_dbw is not None:
            fh.write(f"#tx_power_dbw={p.tx_power_dbw!r}\n")
        fh.write("angle_deg,gain_db\n")
        for a, g in zip(p.angles_deg, p.gains_db):
            fh.write(f"{a!r},{g!r}\n")


# --- satellites -----------------------------------------------------------------

@dataclass(frozen=True)
class GpsSatellite:
    prn: int
    block: str
    transmit_power: float  # dBW
    pattern: AntennaPattern = field(repr=False)
    elements: AlmanacRecord = field(repr=False)

    def __post_init__(self):
        if self.block not in BLOCKS:
            raise ValueError(f"unknown block {self.block!r}")
        if not 10.0 <= self.transmit_power <= 20.0:
            raise ValueError(f"transmit power {self.transmit_power} dBW outside [10, 20]")


def block_counts(n: int) -> dict[str, int]:
    """Largest-remainder split of ``n`` satellites over the block mix.

    With at least four satellites every block keeps one member.
    """
    total = sum(BLOCK_COUNTS_31.values())
    quotas = {b: n * c / total for b, c in BLOCK_COUNTS_31.items()}
    counts = {b: int(math.floor(q)) for b, q in quotas.items()}
    leftover = n - sum(counts.values())
    for b in sorted(BLOCKS, key=lambda b: (-(quotas[b] - counts[b]), BLOCKS.index(b)))[:leftover]:
        counts[b] += 1
    if n >= len(BLOCKS):
        for b in BLOCKS:
            while counts[b] == 0:
                donor = max(BLOCKS, key=lambda x: (counts[x], -BLOCKS.index(x)))
                counts[donor] -= 1
                counts[b] += 1
    return counts


def assign_blocks(records, patterns: dict | None = None, tx_power: dict | None = None) -> list[GpsSatellite]:
    """Assign blocks in PRN order (IIR first, III last)."""
    patterns = {**DEFAULT_PATTERNS, **(patterns or {})}
    tx_power = {**DEFAULT_TX_POWER_DBW, **(tx_power or {})}
    ordered = sorted(records, key=lambda r: r.prn)
    counts = block_counts(len(ordered))
    labels = [b for b in BLOCKS for _ in range(counts[b])]
    sats = []
    for rec, block in zip(ordered, labels):
        pat = patterns[block]
        power = pat.tx_power_dbw if pat.tx_power_dbw is not None else tx_power[block]
        sats.append(GpsSatellite(rec.prn, block, power, pat, rec))
    return sats


def gps_positions(sats, times, mu=MU_EARTH):
    """Earth-centred positions and velocities, shape (n_sats, n_times, 3).

    Almanac elements are taken to apply at scenario time zero.
    """
    t = np.asarray(times, dtype=float)[None, :]
    el = sats if isinstance(sats[0], AlmanacRecord) else [s.elements for s in sats]
    col = lambda name: np.array([getattr(r, name) for r in el], dtype=float)[:, None]  # noqa: E731
    a = col("sqrt_a") ** 2 / 1000.0
    n = np.sqrt(mu / a**3)
    M = col("mean_anomaly") + n * t
    raan = col("raan") + col("raan_rate") * t
    return elements_to_rv(a, col("e"), col("inclination"), raan, col("arg_perigee"), M, mu)


def gps_state_at(sat: GpsSatellite, epoch: Epoch) -> StateVector:
    pos, vel = gps_positions([sat], [epoch.seconds])
    return StateVector(pos[0, 0], vel[0, 0], FrameId.EARTH_INERTIAL, epoch)
