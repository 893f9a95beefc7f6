"""
Where the energy goes
=====================

Per-state energy of an end device in one round, and what it means for
battery lifetime as the polling interval grows.
"""

# %%
import numpy as np

from odtdma.airtime import PRESETS
from odtdma.energy import Battery, PowerModel, lifetime, standby_lifetime
from odtdma.metrics import metrics_row
from odtdma.trial import TrialConfig, run_trial

model, battery = PowerModel(), Battery()
print(f"standby only: {standby_lifetime(model, battery):.1f} years")
print(f"calibration: p_mcu_active = {model.p_mcu_active} W, v_supply = {model.v_supply} V")

# %%
# One TDMA round on setting 3. The last device waits longest for its slot.
trace = run_trial(TrialConfig(setting=PRESETS[3], n_rounds=2))
for ed in ("ed1", "ed9"):
    led = trace.meters[ed].rounds[1]
    parts = {s.value: round(1e3 * e, 3) for s, e in led.energy_j.items() if e > 0}
    print(ed, parts, "mJ")

# %%
# Lifetime against the polling interval, both protocols.
for proto in ("odtdma", "lbt"):
    for sid in (1, 2, 3):
        lives = [metrics_row(run_trial(TrialConfig(protocol=proto, setting=PRESETS[sid], ipi_us=ipi * 1_000_000,
                                                   seed=1))).lifetime_years for ipi in (10, 30, 60)]
        print(f"{proto:<6} setting {sid}: " + "  ".join(f"{x:6.2f}" for x in lives), "years at 10/30/60 s")

# %%
# The curve from the closed form: lifetime is battery energy over mean power.
e_round = np.mean([np.mean(v[1:]) for v in trace.ed_round_energies().values()])
for ipi in (10, 60, 600, 3600):
    print(f"IPI {ipi:5d} s: {lifetime(e_round, ipi * 1_000_000, model, battery):7.2f} years")
