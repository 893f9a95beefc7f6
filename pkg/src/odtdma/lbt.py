"""Listen-Before-Talk baseline.

End devices are woken by the same command + beacon chain as On-demand TDMA.
Each then loops: draw a uniform backoff, sleep the radio through it, run a
CAD probe, and transmit straight after a free probe or draw again after a
busy one. A node sends at most one frame per round; there are no
acknowledgements and collided frames are not repeated. A node that cannot
finish before the round deadline gives up and its packet counts as lost.

The backoff window is bounded by ``backoff_max`` (2 s). When
``backoff_airtimes`` is set, the window shrinks to
``backoff_airtimes * toa + backoff_offset`` if that is shorter, so that
faster radio settings contend over a proportionally shorter window.
Likewise ``cad_airtime_fraction`` sizes the CAD listen window relative to
the frame airtime instead of the fixed ``cad_duration``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .units import MS, S


@dataclass(frozen=True)
class LbtParams:
    backoff_min_us: int = 0
    backoff_max_us: int = 2 * S
    backoff_airtimes: Optional[float] = 7.0
    backoff_offset_us: int = 60 * MS
    cad_duration_us: int = 1 * MS
    cad_airtime_fraction: Optional[float] = 0.5
    max_attempts: Optional[int] = None
    round_deadline_us: Optional[int] = None

    def __post_init__(self):
        if self.backoff_min_us < 0 or self.backoff_min_us > self.backoff_max_us:
            raise ConfigError("need 0 <= backoff_min <= backoff_max")
        if self.cad_duration_us <= 0:
            raise ConfigError("cad_duration must be > 0")
        if self.backoff_airtimes is not None and self.backoff_airtimes <= 0:
            raise ConfigError("backoff_airtimes must be > 0 when set")
        if self.backoff_offset_us < 0:
            raise ConfigError("backoff_offset must be >= 0")
        if self.cad_airtime_fraction is not None and not 0 < self.cad_airtime_fraction <= 1:
            raise ConfigError("cad_airtime_fraction must be in (0, 1] when set")
        if self.max_attempts is not None and self.max_attempts < 1:
            raise ConfigError("max_attempts must be >= 1 when set")
        if self.round_deadline_us is not None and self.round_deadline_us <= 0:
            raise ConfigError("round_deadline must be > 0 when set")

    def backoff_window(self, toa_us: int) -> tuple[int, int]:
        """(low, high) bounds of one backoff draw for frames of ``toa_us``."""
        hi = self.backoff_max_us
        if self.backoff_airtimes is not None:
            hi = min(hi, round(self.backoff_airtimes * toa_us) + self.backoff_offset_us)
        return self.backoff_min_us, max(hi, self.backoff_min_us)

    def cad_window(self, toa_us: int) -> int:
        if self.cad_airtime_fraction is None:
            return self.cad_duration_us
        return max(1, round(self.cad_airtime_fraction * toa_us))


LITERAL = LbtParams(backoff_airtimes=None, cad_airtime_fraction=None)
"""Unscaled variant: every draw on [0, 2 s], fixed 1 ms CAD."""


def draw_backoff(rng: np.random.Generator, low_us: int = 0, high_us: int = 2 * S) -> int:
    """Uniform integer backoff on [low_us, high_us], both ends included."""
    return int(rng.integers(low_us, high_us, endpoint=True))
