"""Command line entry point: ``odtdma run | validate | report``.

Exit codes: 0 success, 1 a trial aborted, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .config import ExperimentConfig, apply_overrides, defaults, load
from .errors import ConfigError
from .metrics import FLAG_ABORTED, SCHEMA_VERSION
from .report import load_report, metrics_csv
from .sweep import row_key, run_sweep

EXIT_OK = 0
EXIT_ABORT = 1
EXIT_USAGE = 2

log = logging.getLogger("odtdma")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="odtdma", description="On-demand TDMA vs LBT simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", "-c", help="TOML experiment file (defaults when omitted)")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value, e.g. tdma.guard=5ms or protocol=lbt (repeatable)")
        sp.add_argument("--seed", type=int, action="append", metavar="N",
                        help="seed(s) to run instead of sweep.seeds (repeatable)")
        sp.add_argument("--zero-jitter", action="store_true",
                        help="analytic mode: no wake-up jitter and no clock drift")

    run = sub.add_parser("run", help="run the configured sweep")
    common(run)
    run.add_argument("--out", "-o", help="output directory (default: output.dir)")
    run.add_argument("--jobs", "-j", type=int, default=1, help="worker processes")
    run.add_argument("--traces", action="store_true", help="also write per-trial ndjson event logs")

    val = sub.add_parser("validate", help="print the resolved config with provenance")
    common(val)
    val.add_argument("--json", action="store_true", help="print the resolved echo as JSON")

    rep = sub.add_parser("report", help="build comparison panels from metrics files")
    rep.add_argument("metrics", nargs="+", help="metrics.csv file(s)")
    rep.add_argument("--out", "-o", default="report", help="directory for panel CSVs and summary")
    return p


def resolve(args) -> ExperimentConfig:
    cfg = load(args.config) if args.config else defaults()
    overrides = list(args.overrides)
    if args.seed:
        overrides.append("sweep.seeds=[" + ",".join(str(s) for s in args.seed) + "]")
    if args.zero_jitter:
        overrides.append("clock.zero_jitter=true")
    if getattr(args, "traces", False):
        overrides.append("output.traces=true")
    apply_overrides(cfg, overrides)
    return cfg.validate()


def _trace_name(key) -> str:
    proto, sid, ipi_s, n, seed = key
    return f"trace-{proto}-s{sid}-ipi{ipi_s:g}s-n{n}-seed{seed}.ndjson"


def cmd_run(args) -> int:
    cfg = resolve(args)
    out = Path(args.out or cfg["output.dir"])
    axes = cfg.sweep_axes()
    base = cfg.base_trial()
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    rows, traces = run_sweep(base, axes["ipis"], axes["settings"], axes["protocols"], axes["seeds"],
                             n_eds=axes["n_eds"], settings_table=axes["settings_table"],
                             jobs=max(1, args.jobs), return_traces=True)
    elapsed = time.perf_counter() - t0

    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.csv").write_text(metrics_csv(rows), encoding="utf-8")
    resolved = cfg.resolved()
    (out / "config_resolved.json").write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n",
                                             encoding="utf-8")
    with (out / "trace_digests.txt").open("w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(f"{_trace_name(row_key(r))[:-7]} {r.trace_digest}\n")
    if cfg["output.traces"]:
        for key, trace in traces.items():
            (out / _trace_name(key)).write_text("\n".join(trace.log.ndjson_lines()) + "\n", encoding="utf-8")
    aborted = [r for r in rows if FLAG_ABORTED in r.flags]
    meta = {
        "started_utc": started.isoformat(timespec="seconds"),
        "elapsed_s": round(elapsed, 3),
        "argv": sys.argv[1:],
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "platform": platform.platform(),
        "schema_version": SCHEMA_VERSION,
        "trials": len(rows),
        "aborted": len(aborted),
        "config": cfg.source,
    }
    (out / "run_meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    print(f"{len(rows)} trials in {elapsed:.1f} s -> {out / 'metrics.csv'}")
    if aborted:
        for r in aborted:
            print(f"aborted: {r.protocol} setting {r.setting_id} ipi {r.ipi_s:g}s seed {r.seed}: "
                  f"{r.trace_digest}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = resolve(args)
    if args.json:
        print(json.dumps(cfg.resolved(), indent=2, sort_keys=True))
    else:
        print(cfg.describe())
    n = 1
    axes = cfg.sweep_axes()
    for k in ("ipis", "settings", "protocols", "seeds", "n_eds"):
        n *= len(axes[k])
    print(f"ok: {n} trials configured", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    rep = load_report(args.metrics)
    rep.write(args.out)
    sys.stdout.write(rep.summary())
    print(f"panels written to {args.out}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "validate": cmd_validate, "report": cmd_report}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
