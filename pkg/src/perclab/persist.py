"""Reading and writing artifacts: binary configs, CSV tables, JSON reports.

Every file carries the format version and the run spec that produced it. CSV
files put both in leading ``#`` comment lines; floats are written with
``repr`` so they read back to the same double.
"""
from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .cluster import ClusterGraph
from .errors import CorruptHeader, VersionMismatch
from .experiments import FORMAT_VERSION, ExperimentReport
from .lattice import BondConfig, decode_config

CSV_TAG = "# perclab-format:"
SPEC_TAG = "# run-spec:"


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, columns, run_spec: dict | None = None) -> Path:
    """Write equal-length ``columns`` (arrays; 2-d arrays expand to several columns)."""
    flat = []
    for c in columns:
        a = np.asarray(c)
        flat.extend(a.T if a.ndim == 2 else [a])
    if len(flat) != len(header):
        raise ValueError(f"{len(header)} header names for {len(flat)} columns")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"{CSV_TAG} {FORMAT_VERSION}\n")
        fh.write(f"{SPEC_TAG} {json.dumps(run_spec, sort_keys=True)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        lists = [c.tolist() for c in flat]
        for row in zip(*lists):
            w.writerow([_cell(v) for v in row])
    return path


def read_csv(path) -> tuple:
    """Returns ``(run_spec, {column: numpy array})``; integer-looking columns become int64."""
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith(CSV_TAG):
            raise CorruptHeader(f"{path}: missing format line")
        version = int(first[len(CSV_TAG):])
        if version != FORMAT_VERSION:
            raise VersionMismatch(f"{path}: format {version}, expected {FORMAT_VERSION}")
        second = fh.readline()
        if not second.startswith(SPEC_TAG):
            raise CorruptHeader(f"{path}: missing run-spec line")
        spec = json.loads(second[len(SPEC_TAG):])
        rows = list(csv.reader(fh))
    if not rows:
        raise CorruptHeader(f"{path}: no header row")
    header, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in body]
        try:
            out[name] = np.array([int(x) for x in raw], dtype=np.int64)
        except ValueError:
            out[name] = np.array([float(x) for x in raw], dtype=float)
    return spec, out


def _axes(d):
    return [f"x_{i + 1}" for i in range(d)]


def export_cluster(path, cluster: ClusterGraph, run_spec=None) -> Path:
    """Every site of the box: coordinates, open degree, giant membership."""
    g = cluster.geometry
    return write_csv(path, ["site", *_axes(g.d), "degree", "is_giant"],
                     [np.arange(g.n_sites), g.all_coords, cluster.degrees, cluster.index_of >= 0], run_spec)


def export_edges(path, cluster: ClusterGraph, run_spec=None) -> Path:
    """Open edges of the giant cluster as global site pairs, each once."""
    u, v, k = cluster.edges
    return write_csv(path, ["site_u", "site_v", "axis"], [cluster.sites[u], cluster.sites[v], k // 2], run_spec)


def export_field(path, field, run_spec=None) -> Path:
    cl = field.cluster
    d = cl.d
    return write_csv(path, ["site", *_axes(d), *[f"chi_{i + 1}" for i in range(d)], "degree"],
                     [cl.sites, cl.coords, field.chi, cl.local_degrees], run_spec)


def export_potential(path, potential, run_spec=None) -> Path:
    cl = potential.cluster
    return write_csv(path, ["site", *_axes(cl.d), "u"], [cl.sites, cl.coords, potential.u], run_spec)


def export_path(path, walk, run_spec=None) -> Path:
    n = len(walk.sites)
    moved = np.zeros(n, dtype=bool)
    moved[walk.move_times[1:]] = True
    cols = [np.arange(n), walk.positions, moved]
    header = ["step", *_axes(walk.positions.shape[1]), "moved"]
    if walk.clock is not None:
        cols.append(walk.clock)
        header.append("time")
    return write_csv(path, header, cols, run_spec)


def export_matrix(path, tm, run_spec=None) -> Path:
    """Coordinate-list text: one ``row col value`` line per nonzero (global site ids)."""
    import scipy.sparse as sp

    m = sp.coo_matrix(tm.matrix)
    order = np.lexsort((m.col, m.row))
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(f"{CSV_TAG} {FORMAT_VERSION}\n")
        fh.write(f"{SPEC_TAG} {json.dumps(run_spec, sort_keys=True)}\n")
        fh.write(f"# kind: {tm.kind} shape: {m.shape[0]}\n")
        for r, c, v in zip(tm.sites[m.row[order]].tolist(), tm.sites[m.col[order]].tolist(),
                           m.data[order].tolist()):
            fh.write(f"{r} {c} {v!r}\n")
    return path


def read_matrix(path) -> tuple:
    """Returns ``(run_spec, rows, cols, values)`` from :func:`export_matrix` output."""
    spec = None
    rows, cols, vals = [], [], []
    with open(path) as fh:
        for line in fh:
            if line.startswith(SPEC_TAG):
                spec = json.loads(line[len(SPEC_TAG):])
            elif line.startswith("#"):
                continue
            else:
                r, c, v = line.split()
                rows.append(int(r))
                cols.append(int(c))
                vals.append(float(v))
    return spec, np.array(rows), np.array(cols), np.array(vals)


def save_config(path, config: BondConfig, run_spec=None) -> Path:
    path = Path(path)
    path.write_bytes(config.to_bytes(run_spec))
    return path


def load_config(path) -> tuple:
    """``(config, run_spec)`` from a binary dump."""
    return decode_config(Path(path).read_bytes())


def save_report(path, report: ExperimentReport) -> Path:
    path = Path(path)
    path.write_text(report.to_json() + "\n")
    return path


def load_report(path) -> ExperimentReport:
    data = json.loads(Path(path).read_text())
    if data.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch(f"report format {data.get('format_version')}, expected {FORMAT_VERSION}")
    return ExperimentReport.from_dict(data)


def output_dir(out: str | None) -> Path:
    p = Path(out or os.environ.get("PERCLAB_OUT") or ".")
    p.mkdir(parents=True, exist_ok=True)
    return p
