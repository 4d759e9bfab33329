"""Flat-file outputs: CSV tables, JSON summaries, gnuplot data + scripts.

CSV files are UTF-8, comma separated, with a header row; floats are written
with repr so fixed inputs give byte-identical files. Wall-clock times only
appear in JSON under "timing".
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

CHECK_COLUMNS = ("config_hash", "check", "criterion", "suite", "status", "label",
                 "passed", "measured", "bound", "known_deviation")
GAP_COLUMNS = ("n", "gamma", "s", "regime", "N", "gap", "sector", "error")
ENERGY_COLUMNS = ("times", "norm", "E00", "E", "D", "H", "DF", "drift", "min_F", "iterations")


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "" if x is None else str(x)


def write_csv(path, rows, columns):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])
    return path


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _clean(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_plot(stem, columns, rows, title, xlabel, ylabel, series=None, logx=False, logy=False):
    """Whitespace data file stem.dat plus a gnuplot script stem.gp.

    series: list of (column index, legend) plotted against column 1; defaults
    to every other column.
    """
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    dat = stem.with_suffix(".dat")
    with open(dat, "w", encoding="utf-8") as fh:
        fh.write("# " + " ".join(columns) + "\n")
        for r in rows:
            fh.write(" ".join(_fmt(x) for x in r) + "\n")
    series = series or [(i + 1, c) for i, c in enumerate(columns) if i > 0]
    lines = [f'set title "{title}"', f'set xlabel "{xlabel}"', f'set ylabel "{ylabel}"',
             "set key outside"]
    if logx:
        lines.append("set logscale x")
    if logy:
        lines.append("set logscale y")
    plots = [f'"{dat.name}" using 1:{col} with linespoints title "{lab}"' for col, lab in series]
    lines.append("plot " + ", \\\n     ".join(plots))
    stem.with_suffix(".gp").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return dat


# --- suite outputs -----------------------------------------------------------------

def check_rows(results, config_hash):
    rows = []
    for res in results:
        base = {"config_hash": config_hash, "check": res.name, "criterion": res.criterion,
                "suite": res.suite, "status": res.status}
        if res.error:
            rows.append({**base, "label": f"error: {res.error}", "passed": False})
        for a in res.assertions:
            rows.append({**base, "label": a.label, "passed": a.passed, "measured": a.measured,
                         "bound": a.bound, "known_deviation": a.known_deviation})
    return rows


def write_suite(out, results, cfg):
    """checks.csv, summary.json, one JSON object per suite and series plots."""
    out = Path(out)
    h = cfg.digest()
    write_csv(out / "checks.csv", check_rows(results, h), CHECK_COLUMNS)
    suites = {}
    for res in results:
        d = res.to_dict()
        d.pop("seconds")
        suites.setdefault(res.suite, []).append(d)
    for name, checks in suites.items():
        write_json(out / "suites" / f"{name}.json",
                   {"suite": name, "config_hash": h, "checks": checks,
                    "status": _overall([c["status"] for c in checks])})
    summary = {"config": cfg.to_dict(), "config_hash": h,
               "status": _overall([r.status for r in results]),
               "checks": {r.name: {"criterion": r.criterion, "suite": r.suite, "title": r.title,
                                   "status": r.status, "error": r.error} for r in results},
               "timing": {r.name: r.seconds for r in results}}
    write_json(out / "summary.json", summary)
    for res in results:
        for key, val in res.data.items():
            if isinstance(val, list) and val and all(isinstance(x, (int, float)) for x in val):
                rows = list(enumerate(val))
                write_plot(out / "plots" / f"{res.name}_{key}", ("index", key), rows,
                           f"{res.name}: {key}", "index", key,
                           logy=all(x > 0 for x in val))
    return summary


def _overall(statuses):
    if "fail" in statuses:
        return "fail"
    return "xfail" if "xfail" in statuses else "pass"


def write_energy(out, rep, prefix="energy"):
    """EnergyReport as CSV + JSON summary, coefficient series and a norm plot."""
    out = Path(out)
    write_csv(out / f"{prefix}.csv", rep.rows(), ENERGY_COLUMNS)
    write_json(out / f"{prefix}.json", rep.summary())
    if rep.coeffs:
        C = np.asarray(rep.coeffs)
        cols = ["times"] + [f"c{k}" for k in range(C.shape[1])]
        rows = [dict(zip(cols, [t, *c])) for t, c in zip(rep.times, C)]
        write_csv(out / f"{prefix}_coefficients.csv", rows, cols)
    write_plot(out / "plots" / prefix, ("t", "norm", "E00"),
               list(zip(rep.times, rep.norm, rep.E00)), "decay of |f|", "t", "value",
               logy=min(rep.norm) > 0)


def write_gaps(out, entries, assessment, probe=None):
    out = Path(out)
    from .sweep import entries_as_rows
    write_csv(out / "gaps.csv", entries_as_rows(entries), GAP_COLUMNS)
    write_json(out / "gaps.json", {"assessment": assessment, "equivalence": probe,
                                   "status": _overall([a["status"] for a in assessment])})
    Ns = sorted({e.N for e in entries})
    keys = sorted({(e.n, e.gamma, e.s) for e in entries})
    table = {(e.n, e.gamma, e.s, e.N): e.gap for e in entries}
    rows = [[N] + [table.get((*k, N), float("nan")) for k in keys] for N in Ns]
    cols = ["N"] + [f"n{k[0]}_g{k[1]:g}_s{k[2]:g}" for k in keys]
    write_plot(out / "plots" / "gaps", cols, rows, "gap of L vs basis degree", "N", "gap")


# --- report verb ---------------------------------------------------------------------

class ReportError(Exception):
    """Directory holds no recognisable outputs."""


def summarize(directory):
    """Text summary of a run/sweep output directory and its overall status."""
    d = Path(directory)
    if not d.is_dir():
        raise ReportError(f"{d} is not a directory")
    lines, statuses = [], []
    if (d / "summary.json").exists():
        s = json.loads((d / "summary.json").read_text())
        lines.append(f"run {s['config_hash']}: {s['status']}")
        for name, c in sorted(s["checks"].items()):
            t = s.get("timing", {}).get(name)
            tt = f"{t:8.1f}s" if isinstance(t, (int, float)) else ""
            lines.append(f"  {name} [{c['suite']:<11}] {c['status']:<5} {tt}  {c['title']}")
            if c.get("error"):
                lines.append(f"      error: {c['error']}")
        statuses.append(s["status"])
        if (d / "checks.csv").exists():
            for row in read_csv(d / "checks.csv"):
                if row["passed"] != "true":
                    kd = " (known deviation)" if row["known_deviation"] == "true" else ""
                    lines.append(f"  {row['check']}: {row['label']}: measured {row['measured']}"
                                 f" bound {row['bound']}{kd}")
    if (d / "gaps.json").exists():
        g = json.loads((d / "gaps.json").read_text())
        lines.append(f"sweep: {g['status']}")
        for a in g["assessment"]:
            gaps = ", ".join(f"{x:.4g}" if isinstance(x, float) else str(x) for x in a["gaps"])
            lines.append(f"  n={a['n']} gamma={a['gamma']} s={a['s']} {a['regime']:<8} "
                         f"{a['status']:<5} gaps [{gaps}]")
        if g.get("equivalence"):
            e = g["equivalence"]
            lines.append(f"  equivalence c={e['c']:.4g} C={e['C']:.4g} C/c={e['C_over_c']:.4g}")
        statuses.append(g["status"])
    if (d / "energy.json").exists():
        e = json.loads((d / "energy.json").read_text())
        fit = e.get("fit", {})
        lines.append("solver: " + ", ".join(f"{k}={v:.4g}" for k, v in sorted(fit.items())
                                            if isinstance(v, float)))
        ok = all(v for k, v in e.get("checks", {}).items() if isinstance(v, bool))
        lines.append("  checks: " + ", ".join(f"{k}={v}" for k, v in sorted(e["checks"].items())))
        statuses.append("pass" if ok else "fail")
    if not statuses:
        raise ReportError(f"no summary.json, gaps.json or energy.json in {d}")
    return "\n".join(lines), _overall(statuses)
