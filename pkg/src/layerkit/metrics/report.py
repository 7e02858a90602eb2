"""Evaluation report assembly.

Metrics are computed and stored raw; the display block applies the
conventional scale factors (MAD and MSE up by 1e3, perceptual by 1e2,
SAD down by 1e-3) so tables stay readable.  Reports are canonical JSON
with an optional CSV flattening.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

DISPLAY_SCALES = {"mad": 1e3, "mse": 1e3, "perceptual": 1e2, "sad": 1e-3}


def display_row(raw: dict) -> dict:
    """Apply display scaling to the metrics that have one."""
    out = {}
    for key, value in raw.items():
        scale = DISPLAY_SCALES.get(key)
        out[key] = value * scale if scale is not None else value
    return out


def _aggregate(rows: list) -> dict:
    keys = rows[0].keys()
    agg = {}
    for key in keys:
        vals = np.array([r[key] for r in rows], dtype=np.float64)
        agg[key] = float(vals.mean())
    return agg


def build_report(groups: dict, meta: dict | None = None) -> dict:
    """groups maps a label (e.g. 'fg', 'bg') to a list of raw metric dicts."""
    if not groups:
        raise ValueError("no metric groups")
    raw, display = {}, {}
    for label, rows in groups.items():
        if not rows:
            raise ValueError(f"group {label!r} has no rows")
        agg = _aggregate(rows)
        raw[label] = {"mean": agg, "per_sample": rows}
        display[label] = display_row(agg)
    report = {"schema": 1, "raw": raw, "display": display}
    if meta:
        report["meta"] = meta
    return report


def write_report(path, report: dict) -> None:
    text = json.dumps(report, sort_keys=True, indent=2)
    Path(path).write_text(text + "\n")


def write_csv(path, groups: dict) -> None:
    """Flatten per-sample raw rows to CSV: group, index, metric columns.

    Columns are the union over groups, first-seen order; metrics a
    group does not report stay blank in its rows.
    """
    if not groups:
        raise ValueError("no metric groups")
    columns = []
    for rows in groups.values():
        for key in rows[0].keys():
            if key not in columns:
                columns.append(key)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=["group", "index"] + columns)
        writer.writeheader()
        for label, rows in groups.items():
            for i, row in enumerate(rows):
                writer.writerow({"group": label, "index": i, **row})
