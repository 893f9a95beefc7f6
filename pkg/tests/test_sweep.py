import pytest

from odtdma.errors import ConfigError
from odtdma.sweep import row_key, run_sweep, sweep_configs, trial_seed
from odtdma.trial import TrialConfig
from odtdma.units import S

IPIS = [s * S for s in (10, 20, 30, 40, 50, 60)]


def test_full_grid_has_36_rows():
    rows = run_sweep(TrialConfig(n_rounds=2), IPIS, [1, 2, 3], ["odtdma", "lbt"], [1])
    assert len(rows) == 36
    assert rows == sorted(rows, key=row_key)


def test_axis_permutation_keeps_trial_seeds():
    base = TrialConfig(n_rounds=2)
    a = {(c.protocol, c.setting.id, c.ipi_us, s): c.seed
         for s, c in sweep_configs(base, IPIS, [1, 2, 3], ["odtdma", "lbt"], [1, 2])}
    b = {(c.protocol, c.setting.id, c.ipi_us, s): c.seed
         for s, c in sweep_configs(base, IPIS[::-1], [3, 1, 2], ["lbt", "odtdma"], [2, 1])}
    assert a == b
    assert a[("odtdma", 2, 20 * S, 1)] == trial_seed(1, 2, 20 * S, 9)


def test_removing_a_trial_changes_no_other():
    base = TrialConfig(n_rounds=3)
    full = run_sweep(base, [10 * S, 20 * S], [2, 3], ["lbt"], [1])
    part = run_sweep(base, [20 * S], [2, 3], ["lbt"], [1])
    by_key = {row_key(r): r.trace_digest for r in full}
    for r in part:
        assert by_key[row_key(r)] == r.trace_digest


def test_parallel_matches_serial():
    base = TrialConfig(n_rounds=3)
    args = ([10 * S, 30 * S], [1, 3], ["odtdma", "lbt"], [1, 2])
    assert run_sweep(base, *args, jobs=1) == run_sweep(base, *args, jobs=2)


@pytest.mark.parametrize("axis", ["ipis", "settings", "protocols", "seeds"])
def test_empty_axis_is_an_error(axis):
    kw = dict(ipis=[10 * S], settings=[3], protocols=["odtdma"], seeds=[1])
    kw[axis] = []
    with pytest.raises(ConfigError):
        sweep_configs(TrialConfig(), **kw)


def test_unknown_setting():
    with pytest.raises(ConfigError):
        sweep_configs(TrialConfig(), [10 * S], [7], ["odtdma"], [1])


def test_aborted_trial_is_flagged_and_sweep_continues(monkeypatch):
    import odtdma.sweep as sw
    from odtdma.errors import TrialAborted

    real = sw.run_trial

    def flaky(cfg):
        if cfg.setting.id == 1:
            raise TrialAborted("forced", [])
        return real(cfg)

    monkeypatch.setattr(sw, "run_trial", flaky)
    rows = run_sweep(TrialConfig(n_rounds=2), [10 * S], [1, 3], ["odtdma"], [1])
    assert [r.flags for r in rows] == [["aborted"], []]
