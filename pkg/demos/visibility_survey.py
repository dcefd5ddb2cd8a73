"""How much of Earth-GPS can each lunar orbit see?

Builds a 7-day trajectory per orbit, runs the link budget against the
synthetic 31-satellite constellation and prints the outage statistics.
Run with ``python demos/visibility_survey.py``.
"""
# %%
import numpy as np

from lnss_timing.orbits.catalog import ORBIT_NAMES
from lnss_timing.scenario import config_from_dict, visibility_for
from lnss_timing.visibility import BLOCK_CODES, max_ecop, visibility_percent

cfg = config_from_dict({"duration_days": 7})

# %% one timeline per orbit; the first call per orbit propagates the trajectory
timelines = {name: visibility_for(cfg, name)[1] for name in ORBIT_NAMES}

print(f"{'orbit':6s} {'max ECOP [s]':>13s} {'>=1 [%]':>8s} {'>=4 [%]':>8s} {'mean n':>7s}")
for name, tl in timelines.items():
    print(f"{name:6s} {max_ecop(tl):13.0f} {visibility_percent(tl, 1):8.1f} "
          f"{visibility_percent(tl, 4):8.1f} {tl.n_tracked.mean():7.1f}")

# %% why links are lost: count blocked link-epochs by obstruction
for name, tl in timelines.items():
    codes, counts = np.unique(tl.blocked, return_counts=True)
    share = {BLOCK_CODES[c]: n / tl.blocked.size for c, n in zip(codes, counts)}
    print(name, ", ".join(f"{k} {100 * v:.1f}%" for k, v in share.items()))

# %% C/N0 of tracked links; anything tracked sits above the acquisition threshold
for name, tl in timelines.items():
    cn0 = tl.cn0[tl.tracked]
    if cn0.size:
        print(f"{name}: tracked C/N0 median {np.median(cn0):.1f} dB-Hz, "
              f"min {cn0.min():.1f}, max {cn0.max():.1f}")
