"""Cartesian sweeps of independent, individually seeded trials."""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Dict, Iterable, List, Optional, Sequence

from .airtime import PRESETS, RadioSetting
from .engine import derive_seed
from .errors import ConfigError, TrialAborted
from .metrics import MetricsRow, aborted_row, metrics_row
from .trial import TrialConfig, TrialTrace, run_trial

log = logging.getLogger(__name__)


def trial_seed(seed: int, setting_id: int, ipi_us: int, n_eds: int) -> int:
    """Per-trial seed.

    Keyed on axis values rather than positions, so reordering axes or their
    entries leaves every trial's seed unchanged. The protocol is left out on
    purpose: TDMA and LBT trials of the same point share clock draws.
    """
    return derive_seed(seed, setting_id, ipi_us, n_eds)


def sweep_configs(
    base: TrialConfig,
    ipis: Sequence[int],
    settings: Sequence[int],
    protocols: Sequence[str],
    seeds: Sequence[int],
    n_eds: Optional[Sequence[int]] = None,
    settings_table: Optional[Dict[int, RadioSetting]] = None,
) -> List[tuple[int, TrialConfig]]:
    table = dict(PRESETS) if settings_table is None else settings_table
    n_eds = [base.n_eds] if not n_eds else list(n_eds)
    for name, axis in (("ipi", ipis), ("setting", settings), ("protocol", protocols), ("seed", seeds)):
        if not axis:
            raise ConfigError(f"sweep axis '{name}' is empty")
    out = []
    for proto, sid, ipi, n, seed in itertools.product(protocols, settings, ipis, n_eds, seeds):
        if sid not in table:
            raise ConfigError(f"unknown radio setting id {sid}")
        cfg = replace(base, protocol=proto, setting=table[sid], ipi_us=ipi, n_eds=n,
                      seed=trial_seed(seed, sid, ipi, n))
        out.append((seed, cfg))
    return out


def _run_one(item: tuple[int, TrialConfig]) -> tuple[MetricsRow, Optional[TrialTrace]]:
    seed, cfg = item
    try:
        trace = run_trial(cfg)
    except TrialAborted as exc:
        log.error("trial %s/%s/%s/%s aborted: %s", cfg.protocol, cfg.setting.id, cfg.ipi_us, seed, exc)
        return aborted_row(cfg.protocol, cfg.setting.id, cfg.ipi_us, cfg.n_eds, seed, str(exc),
                           cfg.power, cfg.battery), None
    row = metrics_row(trace, seed_label=seed)
    return row, (trace if cfg.keep_records else None)


def row_key(row: MetricsRow):
    return (row.protocol, row.setting_id, row.ipi_s, row.n_eds, row.seed)


def run_sweep(
    base: TrialConfig,
    ipis: Sequence[int],
    settings: Sequence[int],
    protocols: Sequence[str],
    seeds: Sequence[int],
    n_eds: Optional[Sequence[int]] = None,
    settings_table: Optional[Dict[int, RadioSetting]] = None,
    jobs: int = 1,
    return_traces: bool = False,
):
    """Run every combination of the axes; rows come back in canonical order.

    An aborted trial yields a row flagged ``aborted`` and the sweep goes on.
    With ``return_traces`` the result is ``(rows, traces)``, traces keyed by
    row key (only kept when ``base.keep_records`` is set).
    """
    items = sweep_configs(base, ipis, settings, protocols, seeds, n_eds, settings_table)
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, items, chunksize=max(1, len(items) // (4 * jobs))))
    else:
        results = [_run_one(it) for it in items]
    results.sort(key=lambda rt: row_key(rt[0]))
    rows = [r for r, _ in results]
    if return_traces:
        return rows, {row_key(r): t for r, t in results if t is not None}
    return rows


def mean_over(rows: Iterable[MetricsRow], attr: str) -> Optional[float]:
    vals = [getattr(r, attr) for r in rows if getattr(r, attr) is not None]
    return sum(vals) / len(vals) if vals else None
