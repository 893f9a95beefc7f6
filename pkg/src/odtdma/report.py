"""metrics.csv writing and reading, and the three comparison panels."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from .errors import ConfigError
from .metrics import SCHEMA_VERSION, MetricsRow
from .trial import LBT, ODTDMA

# (csv header, MetricsRow attribute); order is part of the schema
COLUMNS = [
    ("schema_version", None),
    ("protocol", "protocol"),
    ("setting_id", "setting_id"),
    ("ipi[s]", "ipi_s"),
    ("n_eds[count]", "n_eds"),
    ("seed", "seed"),
    ("pdr[fraction]", "pdr"),
    ("latency_mean[ms]", "latency_mean_ms"),
    ("latency_p50[ms]", "latency_p50_ms"),
    ("latency_p95[ms]", "latency_p95_ms"),
    ("ed_round_energy_mean[mJ]", "ed_round_energy_mean_mj"),
    ("lifetime[years]", "lifetime_years"),
    ("rounds[count]", "rounds"),
    ("generated[packets]", "generated"),
    ("delivered[packets]", "delivered"),
    ("p_mcu_active[W]", "p_mcu_active_w"),
    ("v_supply[V]", "v_supply_v"),
    ("power_model_id", "power_model_id"),
    ("trace_digest", "trace_digest"),
    ("flags", "flags"),
]
HEADER = [h for h, _ in COLUMNS]
_FLOATS = {"ipi_s", "pdr", "latency_mean_ms", "latency_p50_ms", "latency_p95_ms",
           "ed_round_energy_mean_mj", "lifetime_years", "p_mcu_active_w", "v_supply_v"}
_INTS = {"setting_id", "n_eds", "seed", "rounds", "generated", "delivered"}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".10g")
    if isinstance(value, list):
        return ";".join(value)
    return str(value)


def metrics_csv(rows: Iterable[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in rows:
        w.writerow([SCHEMA_VERSION if attr is None else _fmt(getattr(r, attr)) for _, attr in COLUMNS])
    return buf.getvalue()


def write_metrics(rows: Iterable[MetricsRow], path: str | Path):
    Path(path).write_text(metrics_csv(rows), encoding="utf-8")


def read_metrics(path: str | Path) -> List[MetricsRow]:
    """Parse a metrics.csv; a schema version other than ours is an error."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "schema_version" not in reader.fieldnames:
            raise ConfigError(f"{path}: not a metrics file (no schema_version column)")
        rows = []
        for rec in reader:
            if rec["schema_version"] != str(SCHEMA_VERSION):
                raise ConfigError(f"{path}: schema version {rec['schema_version']} is incompatible "
                                  f"with {SCHEMA_VERSION}")
            missing = [h for h in HEADER if h not in rec]
            if missing:
                raise ConfigError(f"{path}: missing columns {missing}")
            kw = {}
            for header, attr in COLUMNS[1:]:
                raw = rec[header]
                if attr in _FLOATS:
                    kw[attr] = float(raw) if raw != "" else None
                elif attr in _INTS:
                    kw[attr] = int(raw) if raw != "" else 0
                elif attr == "flags":
                    kw[attr] = raw.split(";") if raw else []
                else:
                    kw[attr] = raw
            rows.append(MetricsRow(**kw))
    return rows


def _mean(values: Sequence[Optional[float]]) -> Optional[float]:
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


def _group(rows, key):
    out: Dict[tuple, List[MetricsRow]] = defaultdict(list)
    for r in rows:
        out[key(r)].append(r)
    return out


def _ratio(num, den):
    if num is None or den is None or den == 0:
        return None
    return num / den


class Report:
    """Seed-averaged panels built from one or more metrics files.

    Ratios are LBT over On-demand TDMA for latency and TDMA over LBT for
    lifetime, so both read as "how much better TDMA is". They are left out
    when only one protocol is present or when rows mix power models.
    """

    def __init__(self, rows: List[MetricsRow]):
        if not rows:
            raise ConfigError("no metrics rows to report on")
        self.rows = rows
        self.protocols = sorted({r.protocol for r in rows})
        self.power_ids = sorted({r.power_model_id for r in rows})
        self.notes: List[str] = []
        self.ratios = True
        if not (ODTDMA in self.protocols and LBT in self.protocols):
            self.ratios = False
            self.notes.append(f"only protocol(s) {', '.join(self.protocols)} present; ratios omitted")
        if len(self.power_ids) > 1:
            self.ratios = False
            self.notes.append("rows come from different power models "
                              f"({', '.join(self.power_ids)}); refusing to merge ratio columns")

    def _table(self, key, attr):
        groups = _group(self.rows, lambda r: key(r) + (r.protocol,))
        keys = sorted({k[:-1] for k in groups})
        return keys, {k: _mean([getattr(r, attr) for r in v]) for k, v in groups.items()}

    def pdr_vs_ipi(self):
        keys, means = self._table(lambda r: (r.setting_id, r.n_eds, r.ipi_s), "pdr")
        header = ["setting_id", "n_eds[count]", "ipi[s]"] + [f"pdr_{p}[fraction]" for p in self.protocols]
        body = [list(k) + [means.get(k + (p,)) for p in self.protocols] for k in keys]
        return header, body

    def latency_vs_n(self):
        keys, means = self._table(lambda r: (r.setting_id, r.n_eds), "latency_mean_ms")
        header = ["setting_id", "n_eds[count]"] + [f"latency_{p}[ms]" for p in self.protocols]
        if self.ratios:
            header.append("latency_ratio_lbt_over_odtdma[x]")
        body = []
        for k in keys:
            row = list(k) + [means.get(k + (p,)) for p in self.protocols]
            if self.ratios:
                row.append(_ratio(means.get(k + (LBT,)), means.get(k + (ODTDMA,))))
            body.append(row)
        return header, body

    def lifetime_vs_ipi(self):
        keys, means = self._table(lambda r: (r.setting_id, r.n_eds, r.ipi_s), "lifetime_years")
        header = ["setting_id", "n_eds[count]", "ipi[s]"] + [f"lifetime_{p}[years]" for p in self.protocols]
        if self.ratios:
            header.append("lifetime_ratio_odtdma_over_lbt[x]")
        body = []
        for k in keys:
            row = list(k) + [means.get(k + (p,)) for p in self.protocols]
            if self.ratios:
                row.append(_ratio(means.get(k + (ODTDMA,)), means.get(k + (LBT,))))
            body.append(row)
        return header, body

    def panels(self) -> Dict[str, tuple]:
        return {
            "pdr_vs_ipi.csv": self.pdr_vs_ipi(),
            "latency_vs_n.csv": self.latency_vs_n(),
            "lifetime_vs_ipi.csv": self.lifetime_vs_ipi(),
        }

    def summary(self) -> str:
        lines = ["power model calibration constants:"]
        seen = {}
        for r in self.rows:
            seen.setdefault(r.power_model_id, (r.p_mcu_active_w, r.v_supply_v))
        for pid, (p_mcu, v) in sorted(seen.items()):
            lines.append(f"  {pid}: p_mcu_active = {_fmt(p_mcu)} W, v_supply = {_fmt(v)} V")
        lines.append("")
        for p in self.protocols:
            mine = [r for r in self.rows if r.protocol == p]
            aborted = sum(1 for r in mine if "aborted" in r.flags)
            lines.append(f"{p}: {len(mine)} trials, mean PDR {_fmt3(_mean([r.pdr for r in mine]))}, "
                         f"mean latency {_fmt3(_mean([r.latency_mean_ms for r in mine]))} ms"
                         + (f", {aborted} aborted" if aborted else ""))
        if self.ratios:
            lines.append("")
            _, lat = self.latency_vs_n()
            for row in lat:
                lines.append(f"setting {row[0]}, N={row[1]}: latency LBT/TDMA = {_fmt3(row[-1])}x")
            _, life = self.lifetime_vs_ipi()
            for row in life:
                lines.append(f"setting {row[0]}, N={row[1]}, IPI {_fmt(row[2])} s: "
                             f"lifetime TDMA/LBT = {_fmt3(row[-1])}x")
        if self.notes:
            lines.append("")
            lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines) + "\n"

    def write(self, out_dir: str | Path):
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, (header, body) in self.panels().items():
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            for row in body:
                w.writerow([_fmt(float(x)) if isinstance(x, float) else _fmt(x) for x in row])
            (out_dir / name).write_text(buf.getvalue(), encoding="utf-8")
        (out_dir / "summary.txt").write_text(self.summary(), encoding="utf-8")


def _fmt3(x) -> str:
    return "n/a" if x is None else f"{x:.3f}"


def load_report(paths: Sequence[str | Path]) -> Report:
    rows: List[MetricsRow] = []
    for p in paths:
        rows.extend(read_metrics(p))
    return Report(rows)
