"""Shared single-channel medium with a no-capture collision rule and
preamble-only channel activity detection (CAD).

Intervals are half-open, ``[start, end)``: a frame that starts exactly when
another ends does not overlap it. LoRa and wake-up-radio frames live on
separate media and never interfere with each other.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List

from .errors import DomainError, OdtdmaError, ProtocolViolation


class FrameKind(str, enum.Enum):
    COMMAND = "command"
    WAKEUP_BEACON = "wub"
    DATA = "data"


class Radio(str, enum.Enum):
    LORA = "lora"
    WUR = "wur"


class Status(str, enum.Enum):
    DELIVERED = "delivered"
    COLLIDED = "collided"


class CadResult(str, enum.Enum):
    BUSY = "busy"
    FREE = "free"


@dataclass
class Transmission:
    tx_node: str
    frame: FrameKind
    start: int
    preamble_end: int
    end: int
    radio: Radio
    round_index: int = -1
    dest: str = ""

    def __post_init__(self):
        if self.radio == Radio.WUR:
            if not self.start < self.end or self.preamble_end != self.start:
                raise DomainError(f"bad WuR interval {self.start}/{self.preamble_end}/{self.end}")
        elif not self.start < self.preamble_end <= self.end:
            raise DomainError(f"need start < preamble_end <= end, got {self.start}/{self.preamble_end}/{self.end}")

    def overlaps(self, other: "Transmission") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class ReceptionOutcome:
    rx_node: str
    handle: int
    status: Status


@dataclass
class _Entry:
    tx: Transmission
    collided: bool = False
    partners: List[int] = field(default_factory=list)


class Channel:
    """Medium owned by one simulation run.

    Collision flags are settled as transmissions register: every new frame
    is compared against frames still on air, and both sides of any overlap
    are marked. Since transmissions register no later than their start
    time, a frame's flag is final once the clock reaches its end.
    """

    def __init__(self, horizon: int = 10_000_000):
        # Frames that ended more than ``horizon`` µs ago can no longer meet a
        # new frame or a CAD window (CAD windows are far shorter).
        self.horizon = horizon
        self._entries: Dict[int, _Entry] = {}
        self._live: Dict[Radio, List[int]] = {Radio.LORA: [], Radio.WUR: []}
        self._next = 0
        self.now = 0

    def advance(self, now: int):
        if now < self.now:
            raise OdtdmaError(f"channel clock moved backwards: {now} < {self.now}")
        self.now = now

    def _prune(self, radio: Radio):
        live = self._live[radio]
        cutoff = self.now - self.horizon
        self._live[radio] = [h for h in live if self._entries[h].tx.end > cutoff]

    def begin_transmission(self, t: Transmission) -> int:
        if t.start < self.now:
            raise OdtdmaError(f"transmission starts in the past ({t.start} < {self.now})")
        self._prune(t.radio)
        h = self._next
        self._next += 1
        entry = _Entry(t)
        for other_h in self._live[t.radio]:
            other = self._entries[other_h]
            if not other.tx.overlaps(t):
                continue
            if other.tx.tx_node == t.tx_node:
                raise ProtocolViolation(
                    f"{t.tx_node} started a {t.frame.value} frame at {t.start} while its "
                    f"{other.tx.frame.value} frame is on air until {other.tx.end}"
                )
            other.collided = True
            other.partners.append(h)
            entry.collided = True
            entry.partners.append(other_h)
        self._entries[h] = entry
        self._live[t.radio].append(h)
        return h

    def transmission(self, h: int) -> Transmission:
        try:
            return self._entries[h].tx
        except KeyError:
            raise OdtdmaError(f"unknown transmission handle {h}") from None

    def busy_at(self, t: int, radio: Radio = Radio.LORA) -> bool:
        return any(
            self._entries[h].tx.start <= t < self._entries[h].tx.end
            for h in self._live[radio]
        )

    def resolve_reception(self, rx_node: str, h: int) -> ReceptionOutcome:
        if h not in self._entries:
            raise OdtdmaError(f"unknown transmission handle {h}")
        entry = self._entries[h]
        if entry.tx.end > self.now:
            raise OdtdmaError(f"transmission {h} still on air (ends {entry.tx.end}, now {self.now})")
        if entry.tx.radio == Radio.WUR:
            # Beacons are serialised by the protocol and never collide.
            return ReceptionOutcome(rx_node, h, Status.DELIVERED)
        status = Status.COLLIDED if entry.collided else Status.DELIVERED
        return ReceptionOutcome(rx_node, h, status)

    def colliders(self, h: int) -> List[int]:
        return list(self._entries[h].partners)

    def cad_probe(self, probe_start: int, cad_duration: int) -> CadResult:
        """Busy iff the probe window meets the preamble of a LoRa frame.

        Must be evaluated once the clock has reached the end of the probe
        window, so that frames starting inside the window are registered.
        A frame already past its preamble is invisible.
        """
        if cad_duration <= 0:
            raise DomainError("cad_duration must be > 0")
        if cad_duration > self.horizon:
            raise DomainError("cad_duration exceeds the channel history horizon")
        probe_end = probe_start + cad_duration
        for h in self._live[Radio.LORA]:
            tx = self._entries[h].tx
            if tx.start < probe_end and probe_start < tx.preamble_end:
                return CadResult.BUSY
        return CadResult.FREE
