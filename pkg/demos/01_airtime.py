"""
Airtime and slot arithmetic
===========================

How long a frame stays on air for each radio setting, and how wide a TDMA
slot is once the guard time is added.
"""

# %%
from odtdma.airtime import PARAMETRIC, PRESETS, RadioSetting, WuBParams, lora_time_on_air, slot_width, wub_airtime
from odtdma.units import MS, to_ms

for sid, s in PRESETS.items():
    print(f"setting {sid}: {s.bitrate_bps / 1000:.3f} kbps, 8 B on air for {to_ms(lora_time_on_air(8, s)):g} ms")

# %%
# Presets are table driven at 8 B. Longer payloads add payload bits over the
# bitrate, which is an approximation of the symbol-quantised truth.
for n in (8, 16, 32, 64):
    print(n, "B:", [to_ms(lora_time_on_air(n, s)) for s in PRESETS.values()])

# %%
# A parametric setting runs the symbol-count formula instead.
sf7 = RadioSetting(id=4, mode=PARAMETRIC, sf=7, bw_hz=125_000, cr=1)
print("SF7/125 kHz/4:5, 8 B:", to_ms(lora_time_on_air(8, sf7)), "ms")
for sf in range(7, 13):
    s = RadioSetting(id=4, mode=PARAMETRIC, sf=sf, bw_hz=125_000, cr=1, low_data_rate_optimize=sf >= 11)
    print(f"  SF{sf}: {to_ms(lora_time_on_air(8, s)):8.3f} ms")

# %%
# The wake-up beacon is 2 B at 1 kbps on the wake-up radio.
print("wake-up beacon:", to_ms(wub_airtime(WuBParams())), "ms")

# %%
# Slot stride = airtime + guard.
for sid, s in PRESETS.items():
    print(f"setting {sid}: slot {to_ms(slot_width(s, 8, 6 * MS)):g} ms")
