import pytest

from odtdma.airtime import PRESETS
from odtdma.channel import Status
from odtdma.energy import Battery, PowerModel, standby_lifetime
from odtdma.metrics import (FLAG_ABORTED, FLAG_BROKEN_CHAIN, FLAG_NO_LATENCY, FLAG_PARTIAL_LATENCY,
                            aborted_row, device_lifetime_row, latency_samples, metrics_row, pdr,
                            power_model_id, round_trip_latency)
from odtdma.trial import DataRecord, RoundRecord, TrialConfig, TrialTrace, run_trial
from odtdma.units import MS


def fake_trace(rounds, cfg=None):
    cfg = cfg or TrialConfig(n_eds=9)
    return TrialTrace(cfg, rounds, {}, 0, "", None)


def rnd(i, delivered, generated=9, triggered=True, start=0):
    r = RoundRecord(i, start, generated)
    if triggered:
        r.wub_end = start + 30 * MS
    for k in range(delivered):
        r.data.append(DataRecord(k + 1, start + 100 * MS + k * MS, start + 110 * MS + k * MS, Status.DELIVERED))
    return r


def test_pdr_ratio():
    # 300 generated, 270 delivered
    rounds = [rnd(i, 9) for i in range(30)] + [rnd(30 + i, 0, generated=10) for i in range(3)]
    assert sum(r.generated for r in rounds) == 300
    assert pdr(fake_trace(rounds)) == pytest.approx(0.9)


def test_pdr_of_nothing():
    assert pdr(fake_trace([])) is None


def test_latency_to_last_delivered_frame():
    r = rnd(0, 3, start=1_000 * MS)
    r.data.append(DataRecord(4, 1_200 * MS, 1_300 * MS, Status.COLLIDED))
    assert round_trip_latency(fake_trace([r]), 0) == 112 * MS
    samples, flags = latency_samples(fake_trace([r]))
    assert samples == [112 * MS]
    assert flags == [FLAG_PARTIAL_LATENCY]


def test_broken_chain_flags():
    samples, flags = latency_samples(fake_trace([rnd(0, 0, triggered=False)]))
    assert samples == []
    assert FLAG_BROKEN_CHAIN in flags and FLAG_NO_LATENCY in flags


def test_zero_round_trace_gives_standby_lifetime():
    cfg = TrialConfig(n_eds=9)
    trace = TrialTrace(cfg, [], {}, 0, "", None)
    trace.ed_round_energies = lambda: {f"ed{i}": [] for i in range(1, 10)}
    life, per_ed, energy = device_lifetime_row(trace, cfg.power, cfg.battery)
    assert energy == 0.0
    # standby at the IPI still counts sleep power only
    assert life == pytest.approx(standby_lifetime(cfg.power, cfg.battery))
    assert life == pytest.approx(244.6, rel=0.01)


def test_tdma_latency_mean_and_zero_variance(make_cfg):
    cfg = make_cfg(setting=3, zero_jitter=True, rounds=5)
    row = metrics_row(run_trial(cfg))
    # ID 3, N = 9: 9 + 16 + 17 + 15 * 9 + 9 = 186 ms
    assert row.latency_mean_ms == row.latency_p50_ms == row.latency_p95_ms == 186.0
    assert row.pdr == 1.0 and row.flags == []


def test_latency_step_between_n8_and_n9(make_cfg):
    l8 = metrics_row(run_trial(make_cfg(n_eds=8, zero_jitter=True, rounds=2))).latency_mean_ms
    l9 = metrics_row(run_trial(make_cfg(n_eds=9, zero_jitter=True, rounds=2))).latency_mean_ms
    assert l9 - l8 == 15.0


def test_power_model_id_changes_with_constants():
    assert power_model_id(PowerModel(), Battery()) == power_model_id(PowerModel(), Battery())
    assert power_model_id(PowerModel(), Battery()) != power_model_id(PowerModel(p_mcu_active=0.01), Battery())


def test_aborted_row():
    row = aborted_row("lbt", 1, 10_000_000, 9, 3, "boom", PowerModel(), Battery())
    assert row.flags == [FLAG_ABORTED] and row.pdr is None and row.ipi_s == 10.0


def test_pdr_range_checked():
    with pytest.raises(ValueError):
        aborted_row("lbt", 1, 1, 9, 3, "x", PowerModel(), Battery()).__class__(
            protocol="lbt", setting_id=1, ipi_s=1.0, n_eds=9, seed=0, pdr=1.5, latency_mean_ms=None,
            latency_p50_ms=None, latency_p95_ms=None, ed_round_energy_mean_mj=None, lifetime_years=None)


def test_lifetime_non_decreasing_in_ipi(make_cfg):
    for proto in ("odtdma", "lbt"):
        lives = [metrics_row(run_trial(make_cfg(protocol=proto, setting=2, ipi_s=ipi, rounds=10, seed=4)))
                 .lifetime_years for ipi in (10, 20, 30, 40, 50, 60)]
        assert lives == sorted(lives), proto
