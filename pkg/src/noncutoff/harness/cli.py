"""Command line: run, sweep and report.

    noncutoff run config.json [--out DIR] [--suite S ...] [--scale quick|desk]
    noncutoff sweep config.json [--out DIR]
    noncutoff report DIR

Exit codes: 0 pass (known deviations allowed), 1 check failure, 2 config error.
NONCUTOFF_THREADS sets how many checks run concurrently (default 1).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, load

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
THREADS_ENV = "NONCUTOFF_THREADS"

log = logging.getLogger("noncutoff")


def threads():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1")
    return n


def _load(args):
    cfg = load(args.config)
    if getattr(args, "suite", None):
        from .config import from_dict
        d = cfg.to_dict()
        d["suite"] = args.suite
        d["checks"] = None
        cfg = from_dict(d)
    if getattr(args, "scale", None):
        cfg.scale = args.scale
    if getattr(args, "out", None):
        cfg.output = args.out
    return cfg


def cmd_run(args):
    from . import report
    from .checks import run_checks
    from .config import solver_config
    cfg = _load(args)
    workers = threads()
    out = Path(cfg.output)

    def progress(res):
        print(f"{res.name} {res.status:<5} {res.seconds:7.1f}s  {res.title}", flush=True)
        for a in res.assertions:
            if not a.passed:
                tag = "known deviation" if a.known_deviation else "FAILED"
                print(f"    {tag}: {a.label}: {a.measured:.4g} (bound {a.bound:g})")
        if res.error:
            print(f"    error: {res.error}")

    results = run_checks(cfg, workers, progress)
    summary = report.write_suite(out, results, cfg)
    status = summary["status"]
    if cfg.solver is not None:
        from ..evolve import run as evolve_run
        rep = evolve_run(solver_config(cfg))
        report.write_energy(out, rep)
        bad = [k for k, v in rep.checks.items() if isinstance(v, bool) and not v]
        print(f"solver: fit {rep.fit}; failed checks: {bad or 'none'}")
        if bad:
            status = "fail"
    print(f"overall: {status} -> {out}")
    return EXIT_FAIL if status == "fail" else EXIT_PASS


def cmd_sweep(args):
    from . import report
    from .config import sweep_settings
    from .sweep import assess_gaps, equivalence_probe, spectral_sweep
    cfg = _load(args)
    st = sweep_settings(cfg)
    out = Path(cfg.output)
    save = str(out / "matrices") if st["save_matrices"] else None
    entries = spectral_sweep(st["params"], st["N"], st["theta_nodes"], save=save)
    for e in entries:
        print(f"n={e.n} gamma={e.gamma:g} s={e.s:g} N={e.N:2d} gap={e.gap:.6g} "
              f"({e.seconds:.1f}s){' ' + e.error if e.error else ''}", flush=True)
    assessment = assess_gaps(entries)
    probe = None
    failed = any(a["status"] == "fail" for a in assessment)
    if st["probe"] is not None:
        pp = next((p for p in st["params"] if p.n == 2), None)
        if pp is not None:
            probe = equivalence_probe(pp, N=st["probe"].get("N", 12),
                                      n_samples=st["probe"].get("samples", 50), seed=cfg.seed)
            ok = 0 < probe["c"] <= probe["C"] and probe["C_over_c"] <= 50
            probe["status"] = "pass" if ok else "fail"
            failed |= not ok
            print(f"equivalence: c={probe['c']:.4g} C={probe['C']:.4g} C/c={probe['C_over_c']:.4g}")
    report.write_gaps(out, entries, assessment, probe)
    for a in assessment:
        print(f"{a['regime']:<8} n={a['n']} gamma={a['gamma']:g} s={a['s']:g}: {a['status']}")
    return EXIT_FAIL if failed else EXIT_PASS


def cmd_report(args):
    from .report import ReportError, summarize
    try:
        text, status = summarize(args.dir)
    except ReportError as e:
        raise ConfigError(str(e)) from None
    print(text)
    return EXIT_FAIL if status == "fail" else EXIT_PASS


def parser():
    ap = argparse.ArgumentParser(prog="noncutoff", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="run the selected checks (and an optional solver run)")
    r.add_argument("config")
    r.add_argument("--out")
    r.add_argument("--suite", nargs="+")
    r.add_argument("--scale", choices=("quick", "desk"))
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("sweep", help="spectral-gap sweep and equivalence probe")
    s.add_argument("config")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)
    p = sub.add_parser("report", help="summarize an output directory")
    p.add_argument("dir")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None):
    ap = parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:          # argparse usage errors count as config errors
        return EXIT_CONFIG if e.code else EXIT_PASS
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
