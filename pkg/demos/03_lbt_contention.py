"""
Listen-Before-Talk under contention
===================================

The same wake-up chain, but each end device backs off at random, probes
the channel with CAD, and sends on a free probe. CAD only sees preambles,
so a probe during someone else's payload reads free and both frames die.
"""

# %%
from collections import Counter

from odtdma.airtime import PRESETS
from odtdma.metrics import pdr
from odtdma.trial import TrialConfig, run_trial

trace = run_trial(TrialConfig(protocol="lbt", setting=PRESETS[1], n_eds=9, seed=3))
print("PDR", round(pdr(trace), 3))

# %%
# What did the probes see, and why were packets lost?
kinds = Counter(rec["result"] for rec in trace.log.records if rec["kind"] == "cad")
print("CAD outcomes:", dict(kinds))
collided = sum(1 for r in trace.rounds for d in r.data if d.status.value == "collided")
abandoned = sum(len(r.abandoned) for r in trace.rounds)
print("collided frames:", collided, " gave up before the deadline:", abandoned)

# %%
# Faster settings spend less time on air, so collisions get rarer.
for sid in (1, 2, 3):
    vals = [pdr(run_trial(TrialConfig(protocol="lbt", setting=PRESETS[sid], seed=s))) for s in range(1, 6)]
    print(f"setting {sid}: mean PDR {sum(vals) / len(vals):.3f}")

# %%
# With a fixed 1 ms probe and the full 2 s window, the slow setting is far
# worse: a short probe rarely meets a preamble.
from odtdma.lbt import LITERAL

lit = TrialConfig(protocol="lbt", setting=PRESETS[1], lbt=LITERAL, preamble_fraction=0.25, seed=3)
print("literal LBT, setting 1: PDR", round(pdr(run_trial(lit)), 3))
