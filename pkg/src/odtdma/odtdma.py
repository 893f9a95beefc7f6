"""On-demand TDMA: sink command, cluster-head broadcast wake-up, slotted upload.

A round runs in three steps. The sink sends a LoRa command to one cluster
head. The cluster head broadcasts a single wake-up beacon on the wake-up
radio, which both wakes and synchronises every end device of the cluster.
Each end device then sends its data frame straight to the sink in the slot
fixed by its 1-based ID::

    slot_start = wub_arrival + (toa_pkt + guard) * node_id
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence

from .airtime import RadioSetting, WuBParams, lora_time_on_air
from .errors import ConfigError, DomainError, ProtocolViolation
from .units import MS

ANCHOR_BEACON_END_PLUS_DELAY = "beacon_end_plus_delay"
ANCHOR_BEACON_END = "beacon_end"
ANCHORS = (ANCHOR_BEACON_END_PLUS_DELAY, ANCHOR_BEACON_END)

RADIO_OFF = "off"
RADIO_RX = "rx"


@dataclass(frozen=True)
class SlotSchedule:
    wub_arrival_time: int
    toa_pkt: int
    guard: int
    node_id: int
    slot_start: int

    def __post_init__(self):
        if self.node_id < 1:
            raise DomainError("node_id must be >= 1")
        if self.slot_start != self.wub_arrival_time + (self.toa_pkt + self.guard) * self.node_id:
            raise DomainError("slot_start does not match the slot equation")


@dataclass(frozen=True)
class TdmaParams:
    guard_us: int = 6 * MS
    anchor: str = ANCHOR_BEACON_END_PLUS_DELAY
    ch_processing_delay_us: int = 0
    cmd_payload_bytes: int = 8
    data_payload_bytes: int = 8
    ed_radio_policy: str = RADIO_OFF

    def __post_init__(self):
        if self.guard_us < 0:
            raise ConfigError("guard must be >= 0")
        if self.anchor not in ANCHORS:
            raise ConfigError(f"anchor must be one of {ANCHORS}, got {self.anchor!r}")
        if self.ch_processing_delay_us < 0:
            raise ConfigError("ch_processing_delay must be >= 0")
        if self.cmd_payload_bytes < 1 or self.data_payload_bytes < 1:
            raise ConfigError("payloads must be >= 1 B")
        if self.ed_radio_policy not in (RADIO_OFF, RADIO_RX):
            raise ConfigError(f"ed_radio_policy must be 'off' or 'rx', got {self.ed_radio_policy!r}")


@dataclass(frozen=True)
class RoundConfig:
    cluster_id: int
    n_end_devices: int
    setting: RadioSetting
    wub: WuBParams = WuBParams()
    data_payload_bytes: int = 8
    cmd_payload_bytes: int = 8
    ch_processing_delay: int = 0
    guard: int = 6 * MS

    def __post_init__(self):
        if self.n_end_devices < 1:
            raise ConfigError("n_end_devices must be >= 1")
        if self.data_payload_bytes < 1 or self.cmd_payload_bytes < 1:
            raise ConfigError("payloads must be >= 1 B")


def compute_slot_start(wub_arrival_time: int, toa_pkt: int, guard: int, node_id: int) -> int:
    if node_id < 1:
        raise DomainError(f"node ids are 1-based, got {node_id}")
    if toa_pkt <= 0:
        raise DomainError("toa_pkt must be > 0")
    if guard < 0:
        raise DomainError("guard must be >= 0")
    return wub_arrival_time + (toa_pkt + guard) * node_id


def round_schedule(cfg: RoundConfig, wub_arrival_times: Dict[int, int] | Sequence[int]) -> List[SlotSchedule]:
    """Slot of every end device in one round.

    ``wub_arrival_times`` maps node id to arrival time; a plain sequence is
    read as ids 1..n in order.
    """
    if isinstance(wub_arrival_times, dict):
        items = list(wub_arrival_times.items())
    else:
        items = list(enumerate(wub_arrival_times, start=1))
    ids = [i for i, _ in items]
    if len(set(ids)) != len(ids):
        raise ConfigError("duplicate end-device ids")
    if sorted(ids) != list(range(1, cfg.n_end_devices + 1)):
        raise ConfigError(f"expected one arrival time for each id 1..{cfg.n_end_devices}")
    toa = lora_time_on_air(cfg.data_payload_bytes, cfg.setting)
    out = [
        SlotSchedule(t, toa, cfg.guard, i, compute_slot_start(t, toa, cfg.guard, i))
        for i, t in items
    ]
    return sorted(out, key=lambda s: s.node_id)


def closed_form_latency(setting: RadioSetting, n_eds: int, params: TdmaParams, wub: WuBParams) -> int:
    """Round-trip latency with zero jitter and drift, in µs.

    command airtime + CH processing + beacon airtime + wake-up delay
    + n slots + one data airtime.
    """
    from .airtime import wub_airtime

    toa_cmd = lora_time_on_air(params.cmd_payload_bytes, setting)
    toa_pkt = lora_time_on_air(params.data_payload_bytes, setting)
    return (
        toa_cmd
        + params.ch_processing_delay_us
        + wub_airtime(wub)
        + wub.wakeup_delay_us
        + (toa_pkt + params.guard_us) * n_eds
        + toa_pkt
    )


class SinkState:
    """Round bookkeeping on the sink side: one round in flight at a time."""

    def __init__(self, clusters: Sequence[int]):
        self.clusters = set(clusters)
        self.in_flight = False
        self.deadline = 0
        self.round_start = None

    def initiate_round(self, now: int, cluster_id: int, deadline: int):
        if cluster_id not in self.clusters:
            raise ConfigError(f"unknown cluster {cluster_id}")
        if self.in_flight and now < self.deadline:
            raise ProtocolViolation(f"round already in flight until {self.deadline}")
        self.in_flight = True
        self.deadline = deadline
        self.round_start = now
        return now

    def close_round(self):
        self.in_flight = False
