"""One cluster, one sink: run rounds of either MAC and record what happened.

Topology is fixed to the testbed layout: a sink with only a LoRa radio, one
cluster head and N end devices carrying both a LoRa transceiver and a
wake-up receiver. Commands go sink -> CH over LoRa, the beacon goes
CH -> EDs over the wake-up radio, and data goes ED -> sink over LoRa
directly (single hop). The CH keeps its LoRa radio in receive to hear
commands; its energy and the sink's are metered but never enter the
end-device lifetime.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

from .airtime import (
    PRESETS,
    RadioSetting,
    WuBParams,
    lora_time_on_air,
    preamble_duration,
    wub_airtime,
)
from .channel import Channel, FrameKind, Radio, Status, Transmission, CadResult
from .energy import Battery, NodeMeter, PowerModel, PowerState
from .engine import STREAM_BACKOFF, ClockModel, ClockSpec, EventQueue, TraceLog, node_rng
from .errors import ConfigError, ProtocolViolation, TrialAborted
from .lbt import LbtParams, draw_backoff
from .odtdma import (
    ANCHOR_BEACON_END,
    RADIO_RX,
    SinkState,
    TdmaParams,
    closed_form_latency,
    compute_slot_start,
)
from .units import S

log = logging.getLogger(__name__)

ODTDMA = "odtdma"
LBT = "lbt"
PROTOCOLS = (ODTDMA, LBT)

SINK = "sink"
CH = "ch1"
CLUSTER_ID = 1

# node indices for random-stream spawn keys: sink 0, CH 1, ED i -> 1 + i
_SINK_INDEX = 0
_CH_INDEX = 1


@dataclass(frozen=True)
class TrialConfig:
    protocol: str = ODTDMA
    setting: RadioSetting = PRESETS[3]
    n_eds: int = 9
    ipi_us: int = 10 * S
    n_rounds: Optional[int] = None
    min_packets: int = 300
    seed: int = 0
    tdma: TdmaParams = TdmaParams()
    wub: WuBParams = WuBParams()
    lbt: LbtParams = LbtParams()
    clock: ClockSpec = ClockSpec()
    preamble_fraction: float = 0.4
    power: PowerModel = PowerModel()
    battery: Battery = Battery()
    keep_records: bool = True

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if self.n_eds < 1:
            raise ConfigError("n_eds must be >= 1")
        if self.ipi_us <= 0:
            raise ConfigError("ipi must be > 0")
        if self.n_rounds is not None and self.n_rounds < 1:
            raise ConfigError("n_rounds must be >= 1")
        if self.min_packets < 1:
            raise ConfigError("min_packets must be >= 1")

    @property
    def rounds(self) -> int:
        if self.n_rounds is not None:
            return self.n_rounds
        return math.ceil(self.min_packets / self.n_eds)

    def expected_tdma_round(self) -> int:
        return closed_form_latency(self.setting, self.n_eds, self.tdma, self.wub)


@dataclass
class DataRecord:
    ed: int
    start: int
    end: int
    status: Status


@dataclass
class RoundRecord:
    index: int
    start: int
    generated: int
    cmd_status: Optional[Status] = None
    wub_start: Optional[int] = None
    wub_end: Optional[int] = None
    data: List[DataRecord] = field(default_factory=list)
    abandoned: List[int] = field(default_factory=list)

    @property
    def delivered(self) -> List[DataRecord]:
        return [d for d in self.data if d.status is Status.DELIVERED]

    @property
    def triggered(self) -> bool:
        return self.wub_end is not None


@dataclass
class TrialTrace:
    cfg: TrialConfig
    rounds: List[RoundRecord]
    meters: Dict[str, NodeMeter]
    end_time: int
    digest: str
    log: TraceLog

    def ed_names(self) -> List[str]:
        return [f"ed{i}" for i in range(1, self.cfg.n_eds + 1)]

    def ed_round_energies(self) -> Dict[str, List[float]]:
        """Active energy (mJ) per end device per round."""
        return {n: [r.active_energy_mj() for r in self.meters[n].rounds] for n in self.ed_names()}


class _EndDevice:
    SLEEP, DECODING, ACTIVE = "sleep", "decoding", "active"

    def __init__(self, trial: "_Trial", node_id: int):
        self.trial = trial
        self.node_id = node_id
        self.name = f"ed{node_id}"
        self.index = 1 + node_id
        self.clock = ClockModel.draw(trial.cfg.seed, self.index, trial.cfg.clock)
        self.meter = trial.meters[self.name]
        self.state = self.SLEEP
        self.round = None

    def on_beacon_start(self, t: int, rnd: RoundRecord):
        if self.state != self.SLEEP:
            raise ProtocolViolation(f"{self.name}: wake-up beacon at {t} while still {self.state}")
        self.state = self.DECODING
        self.meter.set_state(t, PowerState.WURX_DECODE)

    def on_beacon_end(self, t: int, rnd: RoundRecord):
        cfg = self.trial.cfg
        jitter = self.clock.draw_jitter()
        wake = t + cfg.wub.wakeup_delay_us + jitter
        self.state = self.ACTIVE
        self.round = rnd
        self.meter.set_state(t, PowerState.MCU_ACTIVE)
        self.trial.trace.add(t, "wake", node=self.name, wake=wake, jitter=jitter)
        self.trial.queue.schedule(wake, lambda: self.on_awake(t, wake), self.name, "awake")

    def on_awake(self, beacon_end: int, wake: int):
        raise NotImplementedError

    def transmit(self, t: int):
        tr = self.trial
        tx = Transmission(
            self.name, FrameKind.DATA, t, t + tr.pre_pkt, t + tr.toa_pkt, Radio.LORA,
            round_index=self.round.index, dest=SINK,
        )
        h = tr.channel.begin_transmission(tx)
        self.meter.set_state(t, PowerState.LORA_TX)
        tr.trace.add(t, "tx", node=self.name, frame="data", round=self.round.index, end=tx.end, h=h)
        tr.queue.schedule(tx.end, lambda: self._tx_end(h), self.name, "tx_end")

    def _tx_end(self, h: int):
        t = self.trial.queue.now
        self.go_to_sleep(t)
        self.trial.sink_receive_data(h)

    def go_to_sleep(self, t: int):
        self.meter.set_state(t, PowerState.SLEEP)
        self.state = self.SLEEP


class TdmaEndDevice(_EndDevice):
    def on_awake(self, beacon_end: int, wake: int):
        tr = self.trial
        p = tr.cfg.tdma
        if p.anchor == ANCHOR_BEACON_END:
            arrival = beacon_end + (wake - beacon_end - tr.cfg.wub.wakeup_delay_us)
        else:
            arrival = wake
        # the beacon re-synchronises the local clock
        self.clock.resync(arrival)
        local_slot = compute_slot_start(self.clock.local_time(arrival), tr.toa_pkt, p.guard_us, self.node_id)
        slot = self.clock.true_time_of(local_slot)
        if slot < wake:
            tr.trace.add(wake, "late_slot", node=self.name, slot=slot)
            slot = wake
        tr.trace.add(wake, "slot", node=self.name, arrival=arrival, slot=slot, round=self.round.index)
        if p.ed_radio_policy == RADIO_RX:
            self.meter.set_state(wake, PowerState.LORA_RX)
        tr.queue.schedule(slot, lambda: self.transmit(slot), self.name, "slot")


class LbtEndDevice(_EndDevice):
    def __init__(self, trial, node_id):
        super().__init__(trial, node_id)
        self.rng = node_rng(trial.cfg.seed, self.index, STREAM_BACKOFF)
        self.attempts = 0
        self.deadline = 0

    def on_awake(self, beacon_end: int, wake: int):
        tr = self.trial
        self.attempts = 0
        self.deadline = self.round.start + (tr.cfg.lbt.round_deadline_us or tr.cfg.ipi_us)
        self._next_attempt(wake)

    def _next_attempt(self, t: int):
        tr = self.trial
        p = tr.cfg.lbt
        lo, hi = p.backoff_window(tr.toa_pkt)
        probe = t + draw_backoff(self.rng, lo, hi)
        cad = tr.cad_us
        out_of_tries = p.max_attempts is not None and self.attempts >= p.max_attempts
        if out_of_tries or probe + cad + tr.toa_pkt > self.deadline:
            tr.trace.add(t, "abandon", node=self.name, round=self.round.index, attempts=self.attempts)
            self.round.abandoned.append(self.node_id)
            self.go_to_sleep(t)
            return
        self.attempts += 1
        tr.queue.schedule(probe, lambda: self._cad_start(probe), self.name, "cad_start")

    def _cad_start(self, t: int):
        self.meter.set_state(t, PowerState.LORA_CAD)
        end = t + self.trial.cad_us
        self.trial.queue.schedule(end, lambda: self._cad_end(t), self.name, "cad_end")

    def _cad_end(self, probe_start: int):
        tr = self.trial
        t = tr.queue.now
        res = tr.channel.cad_probe(probe_start, tr.cad_us)
        tr.trace.add(t, "cad", node=self.name, result=res.value)
        if res is CadResult.FREE:
            self.transmit(t)
        else:
            self.meter.set_state(t, PowerState.MCU_ACTIVE)
            self._next_attempt(t)


class _Trial:
    def __init__(self, cfg: TrialConfig):
        self.cfg = cfg
        self.queue = EventQueue()
        self.channel = Channel()
        self.trace = TraceLog(keep=cfg.keep_records)
        self.toa_pkt = lora_time_on_air(cfg.tdma.data_payload_bytes, cfg.setting)
        self.toa_cmd = lora_time_on_air(cfg.tdma.cmd_payload_bytes, cfg.setting)
        self.pre_pkt = preamble_duration(self.toa_pkt, cfg.setting, cfg.preamble_fraction)
        self.pre_cmd = preamble_duration(self.toa_cmd, cfg.setting, cfg.preamble_fraction)
        self.wub_us = wub_airtime(cfg.wub)
        self.cad_us = cfg.lbt.cad_window(self.toa_pkt)
        self.meters: Dict[str, NodeMeter] = {
            SINK: NodeMeter(cfg.power, 0, PowerState.LORA_RX),
            CH: NodeMeter(cfg.power, 0, PowerState.LORA_RX),
        }
        for i in range(1, cfg.n_eds + 1):
            self.meters[f"ed{i}"] = NodeMeter(cfg.power, 0, PowerState.SLEEP)
        ed_cls = TdmaEndDevice if cfg.protocol == ODTDMA else LbtEndDevice
        self.eds = [ed_cls(self, i) for i in range(1, cfg.n_eds + 1)]
        self.sink = SinkState([CLUSTER_ID])
        self.rounds: List[RoundRecord] = []
        self.handles_to_round: Dict[int, RoundRecord] = {}

    def _on_dispatch(self, ev):
        self.channel.advance(ev.fire_time)

    def run(self) -> TrialTrace:
        cfg = self.cfg
        n = cfg.rounds
        if cfg.protocol == ODTDMA and cfg.expected_tdma_round() >= cfg.ipi_us:
            log.warning("IPI %d us is not longer than the TDMA round (%d us)", cfg.ipi_us, cfg.expected_tdma_round())
        for r in range(n):
            t = r * cfg.ipi_us
            self.queue.schedule(t, lambda r=r, t=t: self.start_round(r, t), SINK, "round")
        end_time = n * cfg.ipi_us
        try:
            self.queue.run(until=end_time, on_dispatch=self._on_dispatch)
        except ProtocolViolation as exc:
            self.trace.add(self.queue.now, "abort", reason=str(exc))
            raise TrialAborted(str(exc), self.trace.tail()) from exc
        if len(self.queue):
            pending = self.queue.peek_time()
            self.trace.add(end_time, "abort", reason=f"event pending at {pending} past trial end")
            raise TrialAborted(f"event pending at {pending} past trial end {end_time}", self.trace.tail())
        for m in self.meters.values():
            m.close(end_time)
        self.trace.add(end_time, "end")
        return TrialTrace(cfg, self.rounds, self.meters, end_time, self.trace.digest(), self.trace)

    def start_round(self, r: int, t: int):
        if r > 0:
            for m in self.meters.values():
                m.begin_round(t)
            self.sink.close_round()
        rnd = RoundRecord(r, t, self.cfg.n_eds)
        self.rounds.append(rnd)
        self.sink.initiate_round(t, CLUSTER_ID, t + self.cfg.ipi_us)
        cmd = Transmission(SINK, FrameKind.COMMAND, t, t + self.pre_cmd, t + self.toa_cmd, Radio.LORA,
                           round_index=r, dest=CH)
        h = self.channel.begin_transmission(cmd)
        self.meters[SINK].set_state(t, PowerState.LORA_TX)
        self.trace.add(t, "tx", node=SINK, frame="command", round=r, end=cmd.end, h=h)
        self.queue.schedule(cmd.end, lambda: self._command_end(h, rnd), CH, "cmd_end")

    def _command_end(self, h: int, rnd: RoundRecord):
        t = self.queue.now
        self.meters[SINK].set_state(t, PowerState.LORA_RX)
        outcome = self.channel.resolve_reception(CH, h)
        rnd.cmd_status = outcome.status
        self.trace.add(t, "rx", node=CH, frame="command", status=outcome.status.value, round=rnd.index)
        wub_start = ch_handle_command(CLUSTER_ID, CLUSTER_ID, outcome.status, t,
                                      self.cfg.tdma.ch_processing_delay_us)
        if wub_start is None:
            return
        self.queue.schedule(wub_start, lambda: self._wub_start(rnd), CH, "wub_start")

    def _wub_start(self, rnd: RoundRecord):
        t = self.queue.now
        wub = Transmission(CH, FrameKind.WAKEUP_BEACON, t, t, t + self.wub_us, Radio.WUR, round_index=rnd.index)
        self.channel.begin_transmission(wub)
        # the CH's SX1276 sends the OOK beacon
        self.meters[CH].set_state(t, PowerState.LORA_TX)
        rnd.wub_start = t
        self.trace.add(t, "tx", node=CH, frame="wub", round=rnd.index, end=wub.end)
        for ed in self.eds:
            ed.on_beacon_start(t, rnd)
        self.queue.schedule(wub.end, lambda: self._wub_end(rnd), CH, "wub_end")

    def _wub_end(self, rnd: RoundRecord):
        t = self.queue.now
        self.meters[CH].set_state(t, PowerState.LORA_RX)
        rnd.wub_end = t
        for ed in self.eds:
            ed.on_beacon_end(t, rnd)

    def sink_receive_data(self, h: int):
        t = self.queue.now
        outcome = self.channel.resolve_reception(SINK, h)
        tx = self.channel.transmission(h)
        rnd = self.rounds[tx.round_index]
        ed_id = int(tx.tx_node[2:])
        rnd.data.append(DataRecord(ed_id, tx.start, tx.end, outcome.status))
        self.trace.add(t, "rx", node=SINK, frame="data", src=tx.tx_node, status=outcome.status.value,
                       round=rnd.index)


def ch_handle_command(ch_cluster: int, cmd_cluster: int, status: Status, t_end: int,
                      processing_delay: int) -> Optional[int]:
    """Start time of the cluster head's beacon, or None if it stays silent."""
    if status is not Status.DELIVERED or cmd_cluster != ch_cluster:
        return None
    return t_end + processing_delay


def run_trial(cfg: TrialConfig) -> TrialTrace:
    return _Trial(cfg).run()


def with_overrides(cfg: TrialConfig, **kw) -> TrialConfig:
    return replace(cfg, **kw)
