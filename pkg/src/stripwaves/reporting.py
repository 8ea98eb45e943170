"""Aggregation of preset check files into one pass/fail summary."""

import json
import os

from .snapshots import read_csv


def collect_checks(run_dir):
    """All check rows found under run_dir (top level and subdirectories)."""
    found = []
    for root, _, files in os.walk(run_dir):
        if "checks.csv" in files:
            path = os.path.join(root, "checks.csv")
            header, rows = read_csv(path)
            for row in rows:
                rec = dict(zip(header, row))
                rec["source"] = os.path.relpath(path, run_dir)
                rec["passed"] = rec.get("passed") == "true"
                found.append(rec)
    return found


def summary_report(run_dir, expected_monitors=()):
    """Aggregate checks into summary.json and summary.txt.

    Returns the summary dict.  Missing expected monitor files are listed;
    a partial summary is still written.
    """
    checks = collect_checks(run_dir)
    missing = [m for m in expected_monitors
               if not os.path.exists(os.path.join(run_dir, m))]
    if not checks:
        verdict = "incomplete"
    elif any(not c["passed"] for c in checks):
        verdict = "fail"
    else:
        verdict = "pass"
    failing = [c["check"] for c in checks if not c["passed"]]
    summary = {
        "verdict": verdict,
        "n_checks": len(checks),
        "failing": failing,
        "missing": missing,
        "checks": checks,
    }
    with open(os.path.join(run_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)

    lines = [f"verdict: {verdict}   ({len(checks)} checks, "
             f"{len(failing)} failing, {len(missing)} missing)"]
    width = max([len(c['check']) for c in checks], default=8)
    for c in checks:
        mark = "PASS" if c["passed"] else "FAIL"
        lines.append(f"  [{mark}] {c['check']:<{width}} measured="
                     f"{c['measured']} {c['comparator']} {c['threshold']}")
    for m in missing:
        lines.append(f"  [MISS] {m}")
    text = "\n".join(lines) + "\n"
    with open(os.path.join(run_dir, "summary.txt"), "w") as fh:
        fh.write(text)
    return summary
