"""Clock grades side by side: noise levels, Allan deviation and the filtered result.

Run with ``python demos/clock_comparison.py``.
"""
# %%
import numpy as np

from lnss_timing.clocks import allan_deviation, clock_catalog, process_noise_q, simulate_truth
from lnss_timing.constants import SPEED_OF_LIGHT
from lnss_timing.scenario import config_from_dict, run_case

catalog = clock_catalog()

# %% process noise over one 60 s step, in metres
for spec in catalog:
    q = process_noise_q(spec, 60.0)
    print(f"{spec.name:7s} sqrt(Q00) {np.sqrt(q[0, 0]):.3e} m  sqrt(Q11) {np.sqrt(q[1, 1]):.3e} m/s  "
          f"{spec.power_w:5.1f} W  {spec.weight_kg:6.3f} kg")

# %% Allan deviation of one simulated week (drift removed by the estimator's second difference)
taus = [60, 600, 3600, 21600]
for spec in catalog:
    tr = simulate_truth(spec, 7 * 1440 + 1, 60.0, seed=0)
    t, adev = allan_deviation(tr.bias, 60.0, taus)
    print(f"{spec.name:7s} " + "  ".join(f"{a:.2e}" for a in adev))

# %% free-running wander after a week versus the filtered bias error on ELFO
cfg = config_from_dict({"duration_days": 7})
for spec in catalog:
    res = run_case(cfg, "ELFO", spec.name, 1, write=False)
    free = SPEED_OF_LIGHT * spec.tdev_per_day * 7
    print(f"{spec.name:7s} free-running {free:10.2f} m   filtered RMS bias "
          f"{res.metrics['rms_bias_us'] * 1e-6 * SPEED_OF_LIGHT:6.2f} m   UERE {res.metrics['uere_m']:.2f} m")
