from dataclasses import replace

import pytest
from hypothesis import settings

from odtdma.airtime import PRESETS
from odtdma.engine import ClockSpec
from odtdma.trial import TrialConfig

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@pytest.fixture
def make_cfg():
    def make(protocol="odtdma", setting=3, n_eds=9, ipi_s=10, seed=1, rounds=None, zero_jitter=False, **kw):
        cfg = TrialConfig(protocol=protocol, setting=PRESETS[setting], n_eds=n_eds, ipi_us=ipi_s * 1_000_000,
                          seed=seed, n_rounds=rounds, clock=ClockSpec(zero_jitter=zero_jitter))
        return replace(cfg, **kw)
    return make


ACCEPTANCE_LINES = {}


@pytest.fixture
def verdict(request):
    """Record one acceptance line: verdict(number, passed, detail)."""
    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES, key=lambda k: (int(str(k).rstrip("ab")), str(k))):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
