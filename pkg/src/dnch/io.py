"""CSV tables, field dumps and gnuplot scripts.

Every table starts with one header line of comma-separated column names and
stores numbers with ``%.17g`` so that a write/read cycle is exact and a
rerun produces identical bytes.
"""
from __future__ import annotations

import csv
import math
import os

import numpy as np

from . import grid as gr

__all__ = [
    "SERIES_COLUMNS",
    "write_table",
    "read_table",
    "write_series",
    "write_field",
    "read_field",
    "write_gnuplot",
]

#: columns of the per-run scalar series, in file order
SERIES_COLUMNS = (
    "t",
    "norm_u",
    "norm_v",
    "energy",
    "energy_lambda",
    "dissipation",
    "mass",
    "flux",
    "mass_defect",
    "boundary_reaction",
    "balance_residual",
)


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return "%.17g" % x


def write_table(path, columns, rows):
    """Write ``rows`` (sequences matching ``columns``) as CSV."""
    columns = list(columns)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row of length {len(row)} for {len(columns)} columns in {path}")
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    return path


def read_table(path, columns=None):
    """Read a table written by :func:`write_table`.

    Returns ``(columns, data)`` with ``data`` a float array of shape
    ``(rows, len(columns))``.  When ``columns`` is given the header must match
    it exactly.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if columns is not None and list(header) != list(columns):
            raise ValueError(f"{path}: header {header} does not match schema {list(columns)}")
        data = [[float(x) for x in row] for row in reader]
    arr = np.array(data, dtype=float).reshape(len(data), len(header))
    return header, arr


def _report_row(r):
    return (
        r.t,
        r.norm_u,
        r.norm_v,
        r.free_energy,
        r.energy_lambda,
        r.dissipation_integral,
        r.mass,
        r.flux,
        r.mass_defect,
        r.boundary_reaction,
        r.balance_residual,
    )


def write_series(out_dir, traj, split=True):
    """Write ``series.csv`` and, with ``split``, one ``series_<name>.csv`` per column."""
    rows = [_report_row(r) for r in traj.reports]
    paths = [write_table(os.path.join(out_dir, "series.csv"), SERIES_COLUMNS, rows)]
    if split:
        for k, name in enumerate(SERIES_COLUMNS[1:], start=1):
            p = os.path.join(out_dir, f"series_{name}.csv")
            paths.append(write_table(p, ("t", name), [(r[0], r[k]) for r in rows]))
    return paths


def write_field(path, grid, values, name="u", t=None):
    """Dump a nodal field: grid header, field line, then ``index[,index],value`` rows."""
    values = gr.check_field(grid, values, name)
    idx = np.indices(grid.shape).reshape(grid.dim, -1).T
    flat = values.ravel()
    with open(path, "w") as fh:
        fh.write(grid.header() + "\n")
        fh.write(f"# field={name}" + ("" if t is None else f" t={_fmt(t)}") + "\n")
        for ij, val in zip(idx, flat):
            fh.write(",".join(str(int(i)) for i in ij) + "," + _fmt(val) + "\n")
    return path


def read_field(path):
    """Inverse of :func:`write_field`; returns ``(grid, values, meta)``."""
    meta = {}
    with open(path) as fh:
        head = fh.readline().strip()
        fline = fh.readline().strip()
        rows = [line.strip().split(",") for line in fh if line.strip()]
    parts = dict(tok.split("=", 1) for tok in head.lstrip("# ").split()[1:])
    shape = tuple(int(n) for n in parts["shape"].split("x"))
    h = tuple(float(x) for x in parts["h"].split(","))
    grid = gr.Grid(shape, h)
    for tok in fline.lstrip("# ").split():
        k, v = tok.split("=", 1)
        meta[k] = float(v) if k == "t" else v
    values = np.empty(shape)
    for row in rows:
        values[tuple(int(i) for i in row[:-1])] = float(row[-1])
    return grid, values, meta


def write_gnuplot(csv_path, columns=None, logscale=False, title=None):
    """Emit ``<csv>.gp`` plotting every column against the first one."""
    if columns is None:
        columns, _ = read_table(csv_path)
    base = os.path.basename(csv_path)
    stem = os.path.splitext(csv_path)[0]
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{columns[0]}'",
        f"set title '{title or os.path.splitext(base)[0]}'",
        f"set terminal pngcairo size 900,600",
        f"set output '{os.path.splitext(base)[0]}.png'",
    ]
    if logscale:
        lines.append("set logscale xy")
    plots = [f"'{base}' using 1:{k + 1} with linespoints" for k in range(1, len(columns))]
    lines.append("plot " + ", \\\n     ".join(plots))
    path = stem + ".gp"
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path
