"""Packet delivery ratio, round-trip latency and device lifetime from traces."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .energy import Battery, PowerModel, lifetime
from .trial import RoundRecord, TrialTrace
from .units import MS, S

SCHEMA_VERSION = 1

FLAG_PARTIAL_LATENCY = "latency-over-delivered-only"
FLAG_BROKEN_CHAIN = "beacon-chain-failed"
FLAG_NO_LATENCY = "no-latency-sample"
FLAG_ABORTED = "aborted"


@dataclass
class MetricsRow:
    protocol: str
    setting_id: int
    ipi_s: float
    n_eds: int
    seed: int
    pdr: Optional[float]
    latency_mean_ms: Optional[float]
    latency_p50_ms: Optional[float]
    latency_p95_ms: Optional[float]
    ed_round_energy_mean_mj: Optional[float]
    lifetime_years: Optional[float]
    rounds: int = 0
    generated: int = 0
    delivered: int = 0
    trace_digest: str = ""
    power_model_id: str = ""
    p_mcu_active_w: Optional[float] = None
    v_supply_v: Optional[float] = None
    flags: List[str] = field(default_factory=list)
    ed_lifetimes_years: List[float] = field(default_factory=list)

    def __post_init__(self):
        if self.pdr is not None and not 0.0 <= self.pdr <= 1.0:
            raise ValueError(f"pdr out of range: {self.pdr}")


def pdr(trace: TrialTrace) -> Optional[float]:
    """Delivered data frames at the sink over generated data packets.

    Every end device generates one packet per round, whether or not the
    command and beacon reached it.
    """
    gen = sum(r.generated for r in trace.rounds)
    if gen == 0:
        return None
    return sum(len(r.delivered) for r in trace.rounds) / gen


def round_trip_latency(trace: TrialTrace, rnd: RoundRecord | int) -> Optional[int]:
    """Command start to end of the last delivered data frame, in µs.

    None when nothing of the round arrived.
    """
    if isinstance(rnd, int):
        rnd = trace.rounds[rnd]
    delivered = rnd.delivered
    if not delivered:
        return None
    return max(d.end for d in delivered) - rnd.start


def latency_samples(trace: TrialTrace) -> tuple[list[int], list[str]]:
    samples, flags = [], set()
    for rnd in trace.rounds:
        if not rnd.triggered:
            flags.add(FLAG_BROKEN_CHAIN)
        lat = round_trip_latency(trace, rnd)
        if lat is None:
            flags.add(FLAG_NO_LATENCY)
            continue
        if len(rnd.delivered) < rnd.generated:
            flags.add(FLAG_PARTIAL_LATENCY)
        samples.append(lat)
    return samples, sorted(flags)


def device_lifetime_row(trace: TrialTrace, model: PowerModel, battery: Battery) -> tuple[float, list[float], float]:
    """(cluster-mean lifetime, per-ED lifetimes, mean ED round energy mJ).

    Each ED's mean active energy per round is spread over the IPI; the
    cluster figure uses the mean of those energies. A trace with no rounds
    gives the standby lifetime.
    """
    per_ed = trace.ed_round_energies()
    ipi = trace.cfg.ipi_us
    means = [float(np.mean(v)) if v else 0.0 for v in per_ed.values()]
    cluster_energy = float(np.mean(means)) if means else 0.0
    per_ed_life = [lifetime(e, ipi, model, battery) for e in means]
    return lifetime(cluster_energy, ipi, model, battery), per_ed_life, cluster_energy


def power_model_id(model: PowerModel, battery: Battery) -> str:
    blob = json.dumps({"power": asdict(model), "battery": asdict(battery)}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def metrics_row(trace: TrialTrace, seed_label: Optional[int] = None) -> MetricsRow:
    cfg = trace.cfg
    samples, flags = latency_samples(trace)
    life, per_ed, energy = device_lifetime_row(trace, cfg.power, cfg.battery)
    lat = np.array(samples, dtype=float) / MS if samples else None
    return MetricsRow(
        protocol=cfg.protocol,
        setting_id=cfg.setting.id,
        ipi_s=cfg.ipi_us / S,
        n_eds=cfg.n_eds,
        seed=cfg.seed if seed_label is None else seed_label,
        pdr=pdr(trace),
        latency_mean_ms=float(lat.mean()) if lat is not None else None,
        latency_p50_ms=float(np.percentile(lat, 50)) if lat is not None else None,
        latency_p95_ms=float(np.percentile(lat, 95)) if lat is not None else None,
        ed_round_energy_mean_mj=energy,
        lifetime_years=life,
        rounds=len(trace.rounds),
        generated=sum(r.generated for r in trace.rounds),
        delivered=sum(len(r.delivered) for r in trace.rounds),
        trace_digest=trace.digest,
        power_model_id=power_model_id(cfg.power, cfg.battery),
        p_mcu_active_w=cfg.power.p_mcu_active,
        v_supply_v=cfg.power.v_supply,
        flags=flags,
        ed_lifetimes_years=per_ed,
    )


def aborted_row(protocol: str, setting_id: int, ipi_us: int, n_eds: int, seed: int, reason: str,
                model: PowerModel, battery: Battery) -> MetricsRow:
    return MetricsRow(
        protocol=protocol, setting_id=setting_id, ipi_s=ipi_us / S, n_eds=n_eds, seed=seed,
        pdr=None, latency_mean_ms=None, latency_p50_ms=None, latency_p95_ms=None,
        ed_round_energy_mean_mj=None, lifetime_years=None,
        power_model_id=power_model_id(model, battery), p_mcu_active_w=model.p_mcu_active,
        v_supply_v=model.v_supply, flags=[FLAG_ABORTED], trace_digest=reason[:80],
    )
