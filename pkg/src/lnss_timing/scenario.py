"""Case-study orchestration: configuration, single cases and the orbit x clock x m sweep."""

from __future__ import annotations

import csv
import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .clocks import CLOCK_NAMES, get_clock, load_clock_csv, simulate_truth
from .gps import assign_blocks, load_pattern_csv, parse_yuma, synthesize_constellation
from .kalman import STREAM_TRUTH, FilterConfig, run_filter
from .measurements import ErrorBudget, TrackingLoopConfig
from .metrics import METRIC_FIELDS, case_metrics, write_metrics_json
from .orbits.catalog import ORBIT_NAMES, build_orbit_trajectory
from .visibility import ReceiverConfig, build_visibility_timeline, max_ecop, visibility_percent

OUTPUT_ENV = "LNSS_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


class CaseError(RuntimeError):
    pass


@dataclass(frozen=True)
class OrbitChoice:
    name: str
    overrides: tuple = ()  # sorted (key, value) pairs, hashable

    @property
    def label(self) -> str:
        return self.name


@dataclass(frozen=True)
class ScenarioConfig:
    start_epoch_utc: str = "2025-11-09T00:00:00Z"
    duration_days: float = 7.0
    grid_step: float = 60.0
    orbits: tuple = (OrbitChoice("ELFO"),)
    clocks: tuple = ("CSAC",)
    m_values: tuple = (1,)
    seeds: tuple = (0,)
    almanac: str | None = None
    antenna_patterns: tuple = ()  # (block, csv path) pairs
    clock_catalog: str | None = None
    output_dir: str = "lnss_out"
    error_budget: ErrorBudget = field(default_factory=ErrorBudget)
    receiver: ReceiverConfig = field(default_factory=ReceiverConfig)
    tracking_loop: TrackingLoopConfig = field(default_factory=TrackingLoopConfig)
    init_sigma_bias: float = 10.0
    init_sigma_drift: float = 0.01
    hm2_squared: bool = True
    truth_noise: str = "power_law"
    drift_sign: float = 1.0
    warmup_s: float = 86400.0
    constellation_seed: int = 0
    workers: int = 1

    @property
    def n_epochs(self) -> int:
        return int(round(self.duration_days * 86400.0 / self.grid_step)) + 1

    def case_ids(self) -> list[tuple]:
        return [(o.name, c, m, s) for o in self.orbits for c in self.clocks
                for m in self.m_values for s in self.seeds]

    def orbit(self, name: str) -> OrbitChoice:
        for o in self.orbits:
            if o.name == name.upper():
                return o
        return OrbitChoice(name.upper())

    def filter_config(self, m: int) -> FilterConfig:
        return FilterConfig(self.grid_step, m, self.init_sigma_bias, self.init_sigma_drift, self.hm2_squared)

    def clock(self, name: str):
        catalog = load_clock_csv(self.clock_catalog) if self.clock_catalog else None
        return get_clock(name, catalog)


# --- loading ---------------------------------------------------------------------------

_SIMPLE = {"start_epoch_utc": str, "duration_days": float, "grid_step": float, "almanac": str,
           "clock_catalog": str, "output_dir": str, "init_sigma_bias": float, "init_sigma_drift": float,
           "hm2_squared": bool, "truth_noise": str, "drift_sign": float, "warmup_s": float,
           "constellation_seed": int, "workers": int}
_NESTED = {"error_budget": ErrorBudget, "receiver": ReceiverConfig, "tracking_loop": TrackingLoopConfig}
_LISTS = ("orbits", "clocks", "m_values", "seeds", "antenna_patterns")


def _typed(name, value, kind):
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{name}: expected true/false, got {value!r}")
        return value
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    if kind is float and (isinstance(value, bool) or not isinstance(value, (int, float))):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    if kind is str and not isinstance(value, str):
        raise ConfigError(f"{name}: expected a string, got {value!r}")
    return kind(value)


def _nested(name, value, cls):
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: expected an object")
    known = {f.name for f in fields(cls)}
    unknown = set(value) - known
    if unknown:
        raise ConfigError(f"{name}: unknown field(s) {', '.join(sorted(unknown))}")
    for k, v in value.items():
        _typed(f"{name}.{k}", v, float)
    try:
        return replace(cls(), **{k: float(v) for k, v in value.items()})
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _orbits(value):
    out = []
    for i, item in enumerate(value):
        if isinstance(item, str):
            name, overrides = item, {}
        elif isinstance(item, dict) and "name" in item:
            name, overrides = item["name"], item.get("overrides", {})
        else:
            raise ConfigError(f"orbits[{i}]: expected a name or {{\"name\": ..., \"overrides\": {{...}}}}")
        if not isinstance(name, str) or name.upper() not in ORBIT_NAMES:
            raise ConfigError(f"orbits[{i}]: unknown orbit {name!r}; expected one of {', '.join(ORBIT_NAMES)}")
        allowed = {"semi_major_axis", "eccentricity", "inclination", "arg_perigee", "raan", "mean_anomaly"}
        bad = set(overrides) - allowed
        if bad:
            raise ConfigError(f"orbits[{i}].overrides: unknown field(s) {', '.join(sorted(bad))}")
        if overrides and name.upper() == "NRHO":
            raise ConfigError(f"orbits[{i}]: the NRHO takes no Keplerian overrides")
        out.append(OrbitChoice(name.upper(), tuple(sorted((k, float(v)) for k, v in overrides.items()))))
    return tuple(out)


def config_from_dict(raw: dict, base_dir: str | Path = ".") -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(raw) - set(_SIMPLE) - set(_NESTED) - set(_LISTS)
    if unknown:
        raise ConfigError(f"unknown field(s): {', '.join(sorted(unknown))}")
    kw = {}
    for k, kind in _SIMPLE.items():
        if k in raw and raw[k] is not None:
            kw[k] = _typed(k, raw[k], kind)
    for k, cls in _NESTED.items():
        if k in raw:
            kw[k] = _nested(k, raw[k], cls)
    for k in _LISTS:
        if k in raw and not isinstance(raw[k], (list, dict) if k == "antenna_patterns" else list):
            raise ConfigError(f"{k}: expected a list")
        if k in raw and len(raw[k]) == 0:
            raise ConfigError(f"{k}: must not be empty")
    if "orbits" in raw:
        kw["orbits"] = _orbits(raw["orbits"])
    if "clocks" in raw:
        names = []
        for i, c in enumerate(raw["clocks"]):
            if not isinstance(c, str):
                raise ConfigError(f"clocks[{i}]: expected a name")
            names.append(c)
        kw["clocks"] = tuple(names)
    if "m_values" in raw:
        ms = tuple(_typed(f"m_values[{i}]", m, int) for i, m in enumerate(raw["m_values"]))
        if any(m < 1 for m in ms):
            raise ConfigError(f"m_values: every m must be a positive integer, got {list(ms)}")
        kw["m_values"] = ms
    if "seeds" in raw:
        kw["seeds"] = tuple(_typed(f"seeds[{i}]", s, int) for i, s in enumerate(raw["seeds"]))
    if "antenna_patterns" in raw:
        if not isinstance(raw["antenna_patterns"], dict):
            raise ConfigError("antenna_patterns: expected an object mapping block to CSV path")
        kw["antenna_patterns"] = tuple(sorted(raw["antenna_patterns"].items()))

    base = Path(base_dir)
    for k in ("almanac", "clock_catalog"):
        if kw.get(k):
            p = base / kw[k]
            if not p.is_file():
                raise ConfigError(f"{k}: file not found: {p}")
            kw[k] = str(p)
    pats = []
    for block, path in kw.get("antenna_patterns", ()):
        if block not in ("IIR", "IIRM", "IIF", "III"):
            raise ConfigError(f"antenna_patterns: unknown block {block!r}")
        p = base / path
        if not p.is_file():
            raise ConfigError(f"antenna_patterns.{block}: file not found: {p}")
        pats.append((block, str(p)))
    if pats:
        kw["antenna_patterns"] = tuple(pats)

    cfg = ScenarioConfig(**kw)
    if not cfg.duration_days > 0:
        raise ConfigError("duration_days must be positive")
    if not cfg.grid_step > 0:
        raise ConfigError("grid_step must be positive")
    if cfg.truth_noise not in ("power_law", "filter"):
        raise ConfigError("truth_noise must be 'power_law' or 'filter'")
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")
    for c in cfg.clocks:
        try:
            cfg.clock(c)
        except ValueError as exc:
            raise ConfigError(f"clocks: {exc}") from None
    if cfg.clock_catalog is None:
        kw_clocks = tuple(get_clock(c).name for c in cfg.clocks)
        cfg = replace(cfg, clocks=kw_clocks)
    env_out = os.environ.get(OUTPUT_ENV)
    if env_out:
        cfg = replace(cfg, output_dir=env_out)
    return cfg


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(raw, path.parent)


# --- shared inputs ---------------------------------------------------------------------------

_cache: dict = {}
_cache_lock = threading.Lock()


def gps_segment(cfg: ScenarioConfig):
    if cfg.almanac:
        records = [r for r in parse_yuma(Path(cfg.almanac).read_text()) if r.healthy]
    else:
        records = synthesize_constellation(seed=cfg.constellation_seed)
    patterns = {block: load_pattern_csv(path) for block, path in cfg.antenna_patterns}
    return assign_blocks(records, patterns)


def visibility_for(cfg: ScenarioConfig, orbit: str):
    """Trajectory and timeline for one orbit; memoised on the inputs that shape them."""
    choice = cfg.orbit(orbit)
    key = (choice, cfg.duration_days, cfg.grid_step, cfg.almanac, cfg.antenna_patterns,
           cfg.constellation_seed, cfg.receiver)
    with _cache_lock:
        if key in _cache:
            return _cache[key]
    traj = build_orbit_trajectory(choice.name, (cfg.n_epochs - 1) * cfg.grid_step, cfg.grid_step,
                                  dict(choice.overrides) or None)
    tl = build_visibility_timeline(traj, gps_segment(cfg), cfg=cfg.receiver)
    with _cache_lock:
        _cache[key] = (traj, tl)
    return traj, tl


def clear_cache():
    with _cache_lock:
        _cache.clear()


# --- cases -------------------------------------------------------------------------------------

@dataclass
class CaseStudyResult:
    orbit: str
    clock: str
    m: int
    seed: int
    metrics: dict | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def sort_key(self):
        return (ORBIT_NAMES.index(self.orbit) if self.orbit in ORBIT_NAMES else 99,
                CLOCK_NAMES.index(self.clock) if self.clock in CLOCK_NAMES else 99, self.clock,
                self.m, self.seed)

    def row(self) -> dict:
        out = {"orbit": self.orbit, "clock": self.clock, "m": self.m, "seed": self.seed}
        for k in METRIC_FIELDS[3:]:
            out[k] = self.metrics[k] if self.metrics else None
        out["status"] = "ok" if self.ok else "error"
        out["error"] = self.error or ""
        return out


def case_dir(cfg: ScenarioConfig, orbit, clock, m, seed) -> Path:
    return Path(cfg.output_dir) / f"{orbit}_{clock}_m{m}_s{seed}"


def run_case(cfg: ScenarioConfig, orbit: str, clock: str, m: int, seed: int = 0,
             write: bool = True) -> CaseStudyResult:
    """Trajectory, timeline, truth clock, filter and metrics for one case."""
    orbit = orbit.upper()
    try:
        spec = cfg.clock(clock)
        _, tl = visibility_for(cfg, orbit)
        truth = simulate_truth(spec, len(tl), cfg.grid_step, np.random.default_rng([seed, STREAM_TRUTH]),
                               cfg.drift_sign, cfg.truth_noise)
        hist = run_filter(tl, truth, spec, cfg.filter_config(m), cfg.error_budget, cfg.tracking_loop, seed)
        metrics = case_metrics(orbit, spec.name, m, hist, max_ecop(tl), visibility_percent(tl, 1),
                               visibility_percent(tl, 4), cfg.error_budget, cfg.warmup_s)
        if not np.isfinite(metrics["uere_m"]):
            raise FloatingPointError("filter diverged (non-finite UERE)")
    except Exception as exc:
        raise CaseError(f"case {orbit}:{clock}:m={m}:seed={seed}: {exc}") from exc
    if write:
        d = case_dir(cfg, orbit, spec.name, m, seed)
        d.mkdir(parents=True, exist_ok=True)
        hist.to_csv(d / "history.csv")
        write_metrics_json(metrics, d / "metrics.json")
    return CaseStudyResult(orbit, spec.name, m, seed, metrics)


def _safe_case(cfg, ident, write):
    try:
        return run_case(cfg, *ident, write=write)
    except CaseError as exc:
        return CaseStudyResult(*ident, error=str(exc))


def run_sweep(cfg: ScenarioConfig, write: bool = True, workers: int | None = None) -> list[CaseStudyResult]:
    """Every (orbit, clock, m, seed) combination; failures are kept as error rows."""
    workers = workers or cfg.workers
    ids = cfg.case_ids()
    # timelines are shared by all cases of an orbit, so build them up front
    for orbit in dict.fromkeys(o for o, *_ in ids):
        try:
            visibility_for(cfg, orbit)
        except Exception:
            pass  # reported per case below
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: _safe_case(cfg, i, write), ids))
    else:
        results = [_safe_case(cfg, i, write) for i in ids]
    results.sort(key=CaseStudyResult.sort_key)
    if write:
        write_sweep_outputs(cfg, results)
    return results


# --- reporting -----------------------------------------------------------------------------------

ROW_FIELDS = ("orbit", "clock", "m", "seed", *METRIC_FIELDS[3:], "status", "error")


def sweep_csv_text(results) -> str:
    lines = [",".join(ROW_FIELDS)]
    for r in results:
        row = r.row()
        cells = []
        for k in ROW_FIELDS:
            v = row[k]
            if v is None:
                cells.append("")
            elif isinstance(v, float):
                cells.append(f"{v:.6g}")
            else:
                cells.append(str(v).replace(",", ";").replace("\n", " "))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_sweep_outputs(cfg: ScenarioConfig, results) -> None:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(sweep_csv_text(results))
    with open(out / "sweep.json", "w") as fh:
        json.dump([r.row() for r in results], fh, indent=2)
        fh.write("\n")
    ok = [r for r in results if r.ok]

    # visibility table, one row per orbit
    with open(out / "table_visibility.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["orbit", "max_ecop_s", "vis1_pct", "vis4_pct"])
        seen = set()
        for r in ok:
            if r.orbit not in seen:
                seen.add(r.orbit)
                w.writerow([r.orbit, r.metrics["max_ecop_s"], f"{r.metrics['vis1_pct']:.2f}",
                            f"{r.metrics['vis4_pct']:.2f}"])

    # timing-error table: clock rows, orbit columns, averaged over seeds, per m
    orbits = list(dict.fromkeys(r.orbit for r in ok))
    clocks = list(dict.fromkeys(r.clock for r in ok))
    ms = sorted({r.m for r in ok})
    with open(out / "table_timing.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "clock", "quantity", *orbits])
        for m in ms:
            for c in clocks:
                for q in ("rms_bias_us", "rms_drift_nsps", "uere_m"):
                    cells = []
                    for o in orbits:
                        vals = [r.metrics[q] for r in ok if (r.orbit, r.clock, r.m) == (o, c, m)]
                        cells.append(f"{np.mean(vals):.6g}" if vals else "")
                    w.writerow([m, c, q, *cells])

    # gnuplot-ready two-column files
    plots = out / "plots"
    plots.mkdir(exist_ok=True)
    for o in orbits:
        for c in clocks:
            pts = [(m, np.mean([r.metrics["uere_m"] for r in ok if (r.orbit, r.clock, r.m) == (o, c, m)]))
                   for m in ms if any((r.orbit, r.clock, r.m) == (o, c, m) for r in ok)]
            with open(plots / f"uere_vs_m_{o}_{c}.dat", "w") as fh:
                fh.write("# m uere_m\n")
                for m, u in pts:
                    fh.write(f"{m} {u:.6f}\n")
        try:
            _, tl = visibility_for(cfg, o)
        except Exception:
            continue
        with open(plots / f"n_tracked_{o}.dat", "w") as fh:
            fh.write("# hours n_tracked\n")
            for t, n in zip(tl.times, tl.n_tracked):
                fh.write(f"{t / 3600.0:.4f} {int(n)}\n")
        tl.to_csv(out / f"timeline_{o}.csv")
