"""CSV + JSON-header storage for sampled fields.

The CSV holds one row per grid point (coordinates, value, mask flag) and
the sidecar ``<name>.json`` describes the grid.  Floats are written with
``repr`` so a write/read cycle is bit-exact.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .field_core import Grid, SampledField

FORMAT = "wmorrey-field/1"


def header_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_field(f: SampledField, csv_path) -> Path:
    csv_path = Path(csv_path)
    g = f.grid
    names = ["x", "y"][: g.dim]
    header = {
        "format": FORMAT,
        "grid": g.to_dict(),
        "columns": names + ["value", "mask"],
        "has_mask": f.support_mask is not None,
    }
    pts = g.points()
    vals = f.values.ravel()
    mask = (np.ones(vals.shape, bool) if f.support_mask is None else f.support_mask.ravel())
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header["columns"])
        for p, v, m in zip(pts, vals, mask):
            w.writerow([repr(float(c)) for c in p] + [repr(float(v)), int(m)])
    header_path(csv_path).write_text(json.dumps(header, indent=2, sort_keys=True))
    return csv_path


def read_field(csv_path) -> SampledField:
    csv_path = Path(csv_path)
    header = json.loads(header_path(csv_path).read_text())
    if header.get("format") != FORMAT:
        raise ValueError(f"{header_path(csv_path)}: unknown field format {header.get('format')!r}")
    g = Grid.from_dict(header["grid"])
    n = int(np.prod(g.shape))
    vals = np.empty(n)
    mask = np.empty(n, bool)
    with open(csv_path, newline="") as fh:
        r = csv.reader(fh)
        cols = next(r)
        if cols != header["columns"]:
            raise ValueError(f"{csv_path}: column header {cols} does not match sidecar")
        i = -1
        for i, row in enumerate(r):
            if i >= n:
                raise ValueError(f"{csv_path}: more rows than grid points ({n})")
            vals[i] = float(row[g.dim])
            mask[i] = bool(int(row[g.dim + 1]))
        if i + 1 != n:
            raise ValueError(f"{csv_path}: expected {n} rows, found {i + 1}")
    m = mask.reshape(g.shape) if header["has_mask"] else None
    return SampledField(g, vals.reshape(g.shape), m)
