"""LoRa frame time-on-air, wake-up beacon airtime and slot width.

All results are integer microseconds, rounded up.

Settings come in two flavours. ``preset`` settings are table driven: they
carry the measured airtime of an 8-byte frame and the nominal bitrate, and
other payload sizes are extrapolated linearly from the bitrate (real LoRa
airtime is quantised to whole symbols, so this is an approximation).
``parametric`` settings evaluate the usual Semtech symbol-count expression
from SF/BW/CR and the header/CRC/LDRO flags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import ConfigError, DomainError
from .units import MS, S, ceil_us

PRESET = "preset"
PARAMETRIC = "parametric"

REFERENCE_PAYLOAD = 8


@dataclass(frozen=True)
class RadioSetting:
    id: int
    mode: str = PRESET
    bitrate_bps: Optional[float] = None
    preset_toa_8b_us: Optional[int] = None
    sf: Optional[int] = None
    bw_hz: Optional[int] = None
    cr: Optional[int] = None
    preamble_symbols: int = 8
    explicit_header: bool = True
    crc_on: bool = True
    low_data_rate_optimize: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.mode == PRESET:
            if self.preset_toa_8b_us is None or self.preset_toa_8b_us <= 0:
                raise ConfigError(f"setting {self.id}: preset mode needs preset_toa_8b > 0")
            if self.bitrate_bps is None or self.bitrate_bps <= 0:
                raise ConfigError(f"setting {self.id}: preset mode needs bitrate > 0")
        elif self.mode == PARAMETRIC:
            if self.sf is None or not 6 <= self.sf <= 12:
                raise ConfigError(f"setting {self.id}: sf must be in 6..12, got {self.sf}")
            if self.bw_hz is None or self.bw_hz <= 0:
                raise ConfigError(f"setting {self.id}: bw must be > 0")
            if self.cr is None or not 1 <= self.cr <= 4:
                raise ConfigError(f"setting {self.id}: cr must be in 1..4, got {self.cr}")
            if self.preamble_symbols < 6:
                raise ConfigError(f"setting {self.id}: preamble_symbols must be >= 6")
        else:
            raise ConfigError(f"setting {self.id}: unknown mode {self.mode!r}")

    @property
    def symbol_time(self) -> Fraction:
        """Symbol duration in seconds (parametric settings only)."""
        if self.mode != PARAMETRIC:
            raise ConfigError(f"setting {self.id}: symbol time is only defined in parametric mode")
        return Fraction(2**self.sf, self.bw_hz)

    @property
    def nominal_bitrate(self) -> float:
        if self.bitrate_bps is not None:
            return float(self.bitrate_bps)
        return self.sf * (4 / (4 + self.cr)) * self.bw_hz / 2**self.sf


# Settings ID 1-3 from the testbed: 8 B airtimes of 264 / 31 / 9 ms at
# 0.976 / 7.03 / 21.87 kbps.
PRESETS = {
    1: RadioSetting(id=1, mode=PRESET, bitrate_bps=976.0, preset_toa_8b_us=264 * MS),
    2: RadioSetting(id=2, mode=PRESET, bitrate_bps=7030.0, preset_toa_8b_us=31 * MS),
    3: RadioSetting(id=3, mode=PRESET, bitrate_bps=21870.0, preset_toa_8b_us=9 * MS),
}


def get_preset(setting_id: int) -> RadioSetting:
    try:
        return PRESETS[setting_id]
    except KeyError:
        raise ConfigError(f"no built-in radio setting with id {setting_id}") from None


def _payload_symbols(payload_bytes: int, s: RadioSetting) -> int:
    de = 1 if s.low_data_rate_optimize else 0
    ih = 0 if s.explicit_header else 1
    crc = 1 if s.crc_on else 0
    num = 8 * payload_bytes - 4 * s.sf + 28 + 16 * crc - 20 * ih
    den = 4 * (s.sf - 2 * de)
    return 8 + max(math.ceil(Fraction(num, den)) * (s.cr + 4), 0)


def lora_time_on_air(payload_bytes: int, setting: RadioSetting) -> int:
    """Airtime of a LoRa frame carrying ``payload_bytes``, in microseconds."""
    if payload_bytes < 1:
        raise DomainError(f"payload_bytes must be >= 1, got {payload_bytes}")
    setting.validate()
    if setting.mode == PRESET:
        delta_bits = 8 * (payload_bytes - REFERENCE_PAYLOAD)
        toa = Fraction(setting.preset_toa_8b_us, S) + Fraction(delta_bits) / Fraction(setting.bitrate_bps)
        if toa <= 0:
            raise DomainError(
                f"setting {setting.id}: {payload_bytes} B extrapolates to a non-positive airtime"
            )
        return ceil_us(toa)
    ts = setting.symbol_time
    n_sym = Fraction(setting.preamble_symbols) + Fraction(17, 4) + _payload_symbols(payload_bytes, setting)
    return ceil_us(n_sym * ts)


def preamble_duration(toa_us: int, setting: RadioSetting, preamble_fraction: float) -> int:
    """CAD-visible head of a LoRa frame of airtime ``toa_us``.

    Parametric settings use the real preamble (n_preamble + 4.25 symbols);
    preset settings use ``preamble_fraction`` of the airtime. The result is
    clamped to [1, toa_us].
    """
    if setting.mode == PARAMETRIC:
        pre = ceil_us((Fraction(setting.preamble_symbols) + Fraction(17, 4)) * setting.symbol_time)
    else:
        if not 0 < preamble_fraction <= 1:
            raise ConfigError(f"preamble_fraction must be in (0, 1], got {preamble_fraction}")
        pre = round(toa_us * preamble_fraction)
    return min(max(pre, 1), toa_us)


@dataclass(frozen=True)
class WuBParams:
    beacon_bytes: int = 2
    wub_bitrate_bps: int = 1000
    wakeup_delay_us: int = 17 * MS
    address: Optional[int] = None

    def __post_init__(self):
        if self.beacon_bytes < 1:
            raise ConfigError("beacon_bytes must be >= 1")
        if self.wub_bitrate_bps <= 0:
            raise ConfigError("wub bitrate must be > 0")
        if self.wakeup_delay_us < 0:
            raise ConfigError("wakeup_delay must be >= 0")


def wub_airtime(params: WuBParams) -> int:
    """OOK wake-up beacon airtime: beacon bits over the beacon bitrate."""
    return ceil_us(Fraction(8 * params.beacon_bytes) / Fraction(params.wub_bitrate_bps))


def slot_width(setting: RadioSetting, payload_bytes: int, guard_us: int) -> int:
    """Per-slot stride of the TDMA schedule: data airtime plus guard."""
    if guard_us < 0:
        raise DomainError(f"guard must be >= 0, got {guard_us}")
    return lora_time_on_air(payload_bytes, setting) + guard_us
