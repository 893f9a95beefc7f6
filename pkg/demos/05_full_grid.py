"""
The full comparison grid
========================

Both MACs, three radio settings, polling every 10 to 60 s, ten seeds.
Produces the three panel tables the command line ``report`` writes.
"""

# %%
import tempfile
from pathlib import Path

from odtdma.config import load
from odtdma.report import Report
from odtdma.sweep import run_sweep

cfg = load(Path(__file__).resolve().parents[1] / "configs" / "grid.toml").validate()
axes = cfg.sweep_axes()
rows = run_sweep(cfg.base_trial(), axes["ipis"], axes["settings"], axes["protocols"], axes["seeds"],
                 settings_table=axes["settings_table"])
print(len(rows), "trials")

# %%
rep = Report(rows)
for name, (header, body) in rep.panels().items():
    print(name)
    print("  ", header)
    for row in body[:4]:
        print("  ", [round(x, 3) if isinstance(x, float) else x for x in row])

# %%
print(rep.summary())

# %%
out = Path(tempfile.mkdtemp())
rep.write(out)
print("panels in", out)
