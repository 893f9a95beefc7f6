import math

import pytest
from hypothesis import given, strategies as st

from odtdma.airtime import (PARAMETRIC, PRESETS, RadioSetting, WuBParams, get_preset, lora_time_on_air,
                            preamble_duration, slot_width, wub_airtime)
from odtdma.errors import ConfigError, DomainError
from odtdma.units import MS

SF7 = RadioSetting(id=7, mode=PARAMETRIC, sf=7, bw_hz=125_000, cr=1)


@pytest.mark.parametrize("sid,ms", [(1, 264), (2, 31), (3, 9)])
def test_presets_at_reference_payload(sid, ms):
    assert lora_time_on_air(8, PRESETS[sid]) == ms * MS


def test_parametric_sf7_hand_oracle():
    # Evaluated by hand: Tsym = 128 / 125 kHz = 1.024 ms.
    # Preamble (8 + 4.25) symbols = 12.544 ms.
    # Payload symbols = 8 + ceil((64 - 28 + 28 + 16) / 28) * (1 + 4) = 8 + 3 * 5 = 23 -> 23.552 ms.
    tsym_us = 1024
    preamble_us = 12.25 * tsym_us
    payload_syms = 8 + math.ceil((8 * 8 - 4 * 7 + 28 + 16) / (4 * 7)) * 5
    assert payload_syms == 23
    assert lora_time_on_air(8, SF7) == int(preamble_us + payload_syms * tsym_us) == 36_096


def test_parametric_ldro_and_implicit_header_shorten_or_lengthen():
    base = lora_time_on_air(8, SF7)
    implicit = RadioSetting(id=8, mode=PARAMETRIC, sf=7, bw_hz=125_000, cr=1, explicit_header=False)
    assert lora_time_on_air(8, implicit) <= base
    sf12 = RadioSetting(id=9, mode=PARAMETRIC, sf=12, bw_hz=125_000, cr=1)
    sf12_ldro = RadioSetting(id=9, mode=PARAMETRIC, sf=12, bw_hz=125_000, cr=1, low_data_rate_optimize=True)
    assert lora_time_on_air(8, sf12_ldro) >= lora_time_on_air(8, sf12)


def test_preset_scaling_uses_bitrate_for_the_delta():
    # 8 extra bytes at 976 bps = 64 / 976 s, rounded up
    assert lora_time_on_air(16, PRESETS[1]) == 264_000 + math.ceil(64 / 976 * 1e6)


def test_payload_must_be_positive():
    with pytest.raises(DomainError):
        lora_time_on_air(0, PRESETS[3])


@pytest.mark.parametrize("kw", [
    dict(mode="preset", bitrate_bps=1000.0, preset_toa_8b_us=0),
    dict(mode="preset", bitrate_bps=0.0, preset_toa_8b_us=1000),
    dict(mode=PARAMETRIC, sf=5, bw_hz=125_000, cr=1),
    dict(mode=PARAMETRIC, sf=7, bw_hz=0, cr=1),
    dict(mode=PARAMETRIC, sf=7, bw_hz=125_000, cr=5),
    dict(mode=PARAMETRIC, sf=7, bw_hz=125_000, cr=1, preamble_symbols=5),
    dict(mode="fsk"),
])
def test_invalid_settings(kw):
    with pytest.raises(ConfigError):
        RadioSetting(id=1, **kw)


def test_unknown_preset():
    with pytest.raises(ConfigError):
        get_preset(4)


@pytest.mark.parametrize("nbytes,bps,ms", [(2, 1000, 16), (1, 1000, 8), (2, 2000, 8)])
def test_wub_airtime(nbytes, bps, ms):
    assert wub_airtime(WuBParams(beacon_bytes=nbytes, wub_bitrate_bps=bps)) == ms * MS


@pytest.mark.parametrize("sid,guard_ms,ms", [(1, 6, 270), (3, 6, 15), (2, 0, 31)])
def test_slot_width(sid, guard_ms, ms):
    assert slot_width(PRESETS[sid], 8, guard_ms * MS) == ms * MS


def test_negative_guard():
    with pytest.raises(DomainError):
        slot_width(PRESETS[1], 8, -1)


settings = st.sampled_from(list(PRESETS.values()) + [SF7])


@given(settings, st.integers(1, 254), st.integers(1, 254))
def test_airtime_monotone_in_payload(s, a, b):
    lo, hi = sorted((a, b))
    assert lora_time_on_air(lo, s) <= lora_time_on_air(hi, s)


@given(settings, st.integers(1, 64), st.integers(0, 100_000))
def test_slot_width_bounds_airtime(s, payload, guard):
    toa = lora_time_on_air(payload, s)
    w = slot_width(s, payload, guard)
    assert w >= toa
    assert (w == toa) == (guard == 0)


def test_preamble_duration():
    # parametric: 12.25 symbols of 1.024 ms
    assert preamble_duration(36_096, SF7, 0.4) == 12_544
    assert preamble_duration(9_000, PRESETS[3], 0.25) == 2_250
    # clamped into [1, toa]
    assert preamble_duration(10, PRESETS[3], 0.01) == 1
    assert preamble_duration(10, PRESETS[3], 1.0) == 10
    with pytest.raises(ConfigError):
        preamble_duration(10, PRESETS[3], 0.0)
