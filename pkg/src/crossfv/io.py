"""Deterministic file output: diagnostics CSV, snapshots, JSON reports.

Byte-identical reruns are part of the contract, so every writer here
formats numbers itself (17 significant digits, negative zero
normalized), fixes '\n' line endings, and keeps JSON key order sorted.
No timestamps, hostnames, or other environment-dependent content.
"""

import dataclasses
import json
import os

import numpy as np

from .diagnostics import CSV_COLUMNS

SWEEP_COLUMNS = ("nu", "l2_m_minus_n", "l2_n_minus_n0",
                 "l2_gradm_minus_gradn0", "dissipation_integral",
                 "sqrt_nu_gradm_sup")


def format_float(x):
    """17-significant-digit decimal form, with -0.0 flattened to 0."""
    x = float(x)
    if x == 0.0:
        x = 0.0
    return "%.17g" % x


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_json(path, payload):
    _write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def write_diagnostics_csv(path, records, every=1):
    """Write the diagnostics series, thinned to every k-th row.

    The first and last records are always kept so the series brackets
    the full time interval regardless of the stride.
    """
    last = len(records) - 1
    lines = [",".join(CSV_COLUMNS)]
    for idx, rec in enumerate(records):
        if idx % every == 0 or idx == last:
            values = dataclasses.astuple(rec)
            lines.append(",".join(format_float(v) for v in values))
    _write_text(path, "\n".join(lines) + "\n")


def write_snapshot_1d(directory, step, grid, n1, n2, m):
    x = grid.axis_centers()
    lines = ["x,n1,n2,m"]
    for j in range(grid.cells_per_axis):
        lines.append(",".join(format_float(v)
                              for v in (x[j], n1[j], n2[j], m[j])))
    path = os.path.join(directory, f"snapshot_{step:08d}.csv")
    _write_text(path, "\n".join(lines) + "\n")


def write_snapshot_2d(directory, step, grid, time, fields):
    """One raw binary file per field plus a JSON sidecar each.

    Layout: little-endian float64, row-major with x fastest (C order of
    the [iy, ix] cell array).
    """
    meta_grid = {"dimension": grid.dimension,
                 "half_length": grid.half_length,
                 "cells_per_axis": grid.cells_per_axis,
                 "boundary": grid.boundary}
    for name, values in fields.items():
        base = f"{name}_{step:08d}"
        raw = np.ascontiguousarray(values, dtype="<f8")
        with open(os.path.join(directory, base + ".f64"), "wb") as fh:
            fh.write(raw.tobytes(order="C"))
        _write_json(os.path.join(directory, base + ".json"),
                    {"grid": meta_grid, "time": time, "field": name,
                     "byte_order": "little", "dtype": "float64",
                     "layout": "row-major, x fastest",
                     "shape": list(values.shape)})


def write_audit_json(path, audit, clip_warnings=0):
    payload = dict(dataclasses.asdict(audit), clip_warnings=clip_warnings)
    _write_json(path, payload)


def write_sweep_csv(path, rows):
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        values = (row.nu, row.l2_m_minus_n, row.l2_n_minus_n0,
                  row.l2_gradm_minus_gradn0, row.dissipation_integral,
                  row.sqrt_nu_gradm_sup)
        lines.append(",".join(format_float(v) for v in values))
    _write_text(path, "\n".join(lines) + "\n")


def write_sweep_summary(path, payload):
    _write_json(path, payload)


def write_refinement_json(path, payload):
    _write_json(path, payload)
