"""Deterministic discrete-event core.

Events fire in ``(time, sequence)`` order; the sequence number is assigned
at scheduling time, so two runs that schedule the same events in the same
order dispatch them identically.

Random streams come from numpy's PCG64 seeded through ``SeedSequence`` with
a spawn key per (node, purpose). A node's draws therefore depend only on the
trial seed and that node's key: adding or removing a node never shifts
another node's stream.
"""

from __future__ import annotations

import hashlib
import heapq
import json
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from .errors import ConfigError, DomainError, OdtdmaError

# spawn-key purpose codes
STREAM_CLOCK = 1
STREAM_JITTER = 2
STREAM_BACKOFF = 3


def node_rng(seed: int, node_index: int, purpose: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(node_index, purpose))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(base_seed: int, *key: int) -> int:
    """64-bit trial seed from a base seed and integer key components."""
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class Event:
    fire_time: int
    sequence: int
    target: str = ""
    kind: str = ""
    action: Optional[Callable[[], None]] = None


class EventQueue:
    def __init__(self):
        self._heap: List[Tuple[int, int, Event]] = []
        self._seq = 0
        self.now = 0

    def __len__(self):
        return len(self._heap)

    def schedule(self, t: int, action: Callable[[], None], target: str = "", kind: str = "") -> Event:
        if t < self.now:
            raise OdtdmaError(f"cannot schedule {kind or 'event'} at {t}, clock is at {self.now}")
        ev = Event(int(t), self._seq, target, kind, action)
        self._seq += 1
        heapq.heappush(self._heap, (ev.fire_time, ev.sequence, ev))
        return ev

    def pop(self) -> Event:
        t, _, ev = heapq.heappop(self._heap)
        self.now = t
        return ev

    def peek_time(self) -> Optional[int]:
        return self._heap[0][0] if self._heap else None

    def run(self, until: Optional[int] = None, on_dispatch: Optional[Callable[[Event], None]] = None):
        while self._heap:
            if until is not None and self._heap[0][0] > until:
                break
            ev = self.pop()
            if on_dispatch is not None:
                on_dispatch(ev)
            ev.action()


@dataclass(frozen=True)
class ClockSpec:
    """Per-trial clock-imperfection parameters.

    drift is drawn once per node, uniform on [-drift_ppm_bound, +bound].
    Wake-up jitter is drawn per beacon: uniform on [0, jitter_max_us]
    (mean = half the max), or a normal with that mean truncated to
    [0, jitter_max_us].
    """

    drift_ppm_bound: float = 40.0
    jitter_max_us: int = 190
    jitter_dist: str = "uniform"
    zero_jitter: bool = False

    def __post_init__(self):
        if self.drift_ppm_bound < 0:
            raise ConfigError("drift_ppm_bound must be >= 0")
        if self.jitter_max_us < 0:
            raise ConfigError("jitter_max must be >= 0")
        if self.jitter_dist not in ("uniform", "truncnormal"):
            raise ConfigError(f"unknown jitter_dist {self.jitter_dist!r}")


class ClockModel:
    """A node's local oscillator.

    Local time runs at ``1 + drift_ppm * 1e-6`` times true time and is
    re-anchored to true time at each wake-up beacon.
    """

    def __init__(self, drift_ppm: float = 0.0, jitter_rng: Optional[np.random.Generator] = None,
                 spec: ClockSpec = ClockSpec()):
        if abs(drift_ppm) > spec.drift_ppm_bound and not spec.zero_jitter:
            raise DomainError(f"|drift| {drift_ppm} ppm exceeds bound {spec.drift_ppm_bound}")
        self.drift_ppm = 0.0 if spec.zero_jitter else float(drift_ppm)
        self.spec = spec
        self._jitter_rng = jitter_rng
        self.anchor_true = 0
        self.anchor_local = 0

    @classmethod
    def draw(cls, seed: int, node_index: int, spec: ClockSpec) -> "ClockModel":
        if spec.zero_jitter:
            return cls(0.0, None, spec)
        rng = node_rng(seed, node_index, STREAM_CLOCK)
        drift = float(rng.uniform(-spec.drift_ppm_bound, spec.drift_ppm_bound))
        return cls(drift, node_rng(seed, node_index, STREAM_JITTER), spec)

    @property
    def rate(self) -> float:
        return 1.0 + self.drift_ppm * 1e-6

    def resync(self, true_time: int, local_time: Optional[int] = None):
        self.anchor_true = true_time
        self.anchor_local = true_time if local_time is None else local_time

    def local_time(self, true_time: int) -> int:
        return self.anchor_local + round((true_time - self.anchor_true) * self.rate)

    def true_time_of(self, local: int) -> int:
        """True instant at which the local clock reads ``local``."""
        return self.anchor_true + round((local - self.anchor_local) / self.rate)

    def draw_jitter(self) -> int:
        if self.spec.zero_jitter or self.spec.jitter_max_us == 0 or self._jitter_rng is None:
            return 0
        hi = self.spec.jitter_max_us
        if self.spec.jitter_dist == "uniform":
            return int(self._jitter_rng.integers(0, hi, endpoint=True))
        # truncated normal centred on hi/2, sigma hi/4, by rejection
        while True:
            x = self._jitter_rng.normal(hi / 2, hi / 4)
            if 0 <= x <= hi:
                return int(round(x))


def local_time(clock: ClockModel, true_time: int) -> int:
    return clock.local_time(true_time)


class TraceLog:
    """Ordered structured event records with a running SHA-256 digest."""

    def __init__(self, keep: bool = True):
        self.keep = keep
        self.records: List[dict] = []
        self._h = hashlib.sha256()
        self._tail: List[dict] = []

    def __getstate__(self):
        # hash objects do not pickle; a log shipped between processes is
        # frozen at its current digest
        state = dict(self.__dict__)
        state["_frozen"] = self.digest()
        del state["_h"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._h = None

    def add(self, t: int, kind: str, **fields):
        if self._h is None:
            raise OdtdmaError("trace log was unpickled and is read-only")
        rec = {"t": t, "kind": kind}
        rec.update(fields)
        line = _canonical(rec)
        self._h.update(line.encode())
        self._h.update(b"\n")
        if self.keep:
            self.records.append(rec)
        self._tail.append(rec)
        if len(self._tail) > 50:
            del self._tail[:-50]

    def tail(self) -> List[dict]:
        return list(self._tail)

    def digest(self) -> str:
        if self._h is None:
            return self._frozen
        return self._h.hexdigest()

    def ndjson_lines(self):
        for rec in self.records:
            yield _canonical(rec)
        yield _canonical({"kind": "digest", "sha256": self.digest()})


def _canonical(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, separators=(",", ":"))
