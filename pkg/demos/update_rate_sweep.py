"""Sparser measurement updates: how fast does the UERE grow?

Sweeps the update period m (in 60 s epochs) for a CSAC and a RAFS on the
low lunar orbit, averaging a few seeds. Writes a two-column data file per
clock under ``lnss_out/update_rate`` for plotting.

Run with ``python demos/update_rate_sweep.py``.
"""
# %%
from pathlib import Path

import numpy as np

from lnss_timing.scenario import config_from_dict, run_case

cfg = config_from_dict({"duration_days": 7})
periods = [1, 2, 5, 10, 30, 60, 120]
seeds = range(3)
out = Path("lnss_out/update_rate")
out.mkdir(parents=True, exist_ok=True)

# %%
for clock in ("CSAC", "RAFS"):
    rows = []
    for m in periods:
        uere = [run_case(cfg, "LLO", clock, m, seed=s, write=False).metrics["uere_m"] for s in seeds]
        rows.append((m * cfg.grid_step / 60.0, np.mean(uere)))
        print(f"{clock} m={m:4d}  mean UERE {np.mean(uere):7.2f} m  (spread {np.ptp(uere):.2f})")
    np.savetxt(out / f"uere_vs_period_{clock}.dat", rows, header="update_period_min uere_m", fmt="%.6g")
