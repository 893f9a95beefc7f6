"""Integer-microsecond durations and exact parsing of ``"6ms"``-style strings."""

from __future__ import annotations

import re
from fractions import Fraction

from .errors import ConfigError

US = 1
MS = 1_000
S = 1_000_000

_UNITS = {"us": US, "µs": US, "ms": MS, "s": S, "min": 60 * S}
_DURATION_RE = re.compile(r"^\s*([0-9]+(?:\.[0-9]+)?)\s*(us|µs|ms|s|min)\s*$")


def parse_duration(value) -> int:
    """Parse a duration into integer microseconds.

    Strings need a unit suffix (``"6ms"``, ``"2s"``, ``"95us"``, ``"1.5ms"``).
    Bare ints are taken as microseconds. Decimal strings are parsed exactly;
    a value that does not land on a whole microsecond is rejected.
    """
    if isinstance(value, bool):
        raise ConfigError(f"not a duration: {value!r}")
    if isinstance(value, int):
        return value
    if not isinstance(value, str):
        raise ConfigError(f"duration must be a string with a unit suffix, got {value!r}")
    m = _DURATION_RE.match(value)
    if m is None:
        raise ConfigError(f"cannot parse duration {value!r} (expected e.g. '6ms', '2s', '95us')")
    qty = Fraction(m.group(1)) * _UNITS[m.group(2)]
    if qty.denominator != 1:
        raise ConfigError(f"duration {value!r} is not a whole number of microseconds")
    return int(qty)


def format_duration(us: int) -> str:
    """Shortest exact string for ``us`` that parse_duration maps back to ``us``."""
    if us % S == 0:
        return f"{us // S}s"
    if us % MS == 0:
        return f"{us // MS}ms"
    return f"{us}us"


def ceil_us(seconds: Fraction) -> int:
    """Round an exact duration in seconds up to the next whole microsecond."""
    q = Fraction(seconds) * S
    return -((-q.numerator) // q.denominator)


def to_ms(us: int) -> float:
    return us / MS


def to_s(us: int) -> float:
    return us / S
