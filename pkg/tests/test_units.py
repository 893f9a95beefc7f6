import pytest
from hypothesis import given, strategies as st

from odtdma.errors import ConfigError
from odtdma.units import MS, S, format_duration, parse_duration


@pytest.mark.parametrize("text,us", [
    ("6ms", 6_000), ("2s", 2_000_000), ("95us", 95), ("95µs", 95),
    ("1.5ms", 1_500), ("0.000001s", 1), ("1min", 60_000_000), (" 17 ms ", 17_000),
])
def test_parse_duration(text, us):
    assert parse_duration(text) == us


def test_bare_int_is_microseconds():
    assert parse_duration(250) == 250


@pytest.mark.parametrize("bad", ["6", "1.0000005ms", "ms", "-3ms", "3 hours", True, 1.5, None])
def test_parse_duration_rejects(bad):
    with pytest.raises(ConfigError):
        parse_duration(bad)


@given(st.integers(min_value=0, max_value=10**12))
def test_format_parse_roundtrip(us):
    assert parse_duration(format_duration(us)) == us


def test_format_picks_largest_exact_unit():
    assert format_duration(2 * S) == "2s"
    assert format_duration(6 * MS) == "6ms"
    assert format_duration(95) == "95us"
