"""CSV and JSON readers/writers for meshes, solutions, errors and reports.

All numbers are written with 12 significant digits, independent of locale.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ReflectorError


def fmt(v):
    """12 significant digits; blank for ``None``."""
    if v is None:
        return ""
    return format(float(v), ".12g")


def _round12(v):
    if isinstance(v, float):
        if not math.isfinite(v):
            return None
        return float(format(v, ".12g"))
    if isinstance(v, (np.floating,)):
        return _round12(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, dict):
        return {k: _round12(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_round12(x) for x in v]
    return v


def dumps(obj):
    """JSON text with every float rounded to 12 significant digits."""
    return json.dumps(_round12(obj), sort_keys=False)


def _cell(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return int(v)
    return fmt(v)


def _write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _read_rows(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def triangles_path(path):
    p = Path(path)
    return p.with_name(p.stem + "_triangles" + p.suffix)


def write_mesh_csv(mesh, path):
    """Write ``index, mx, my, mz, weight`` and the companion ``i0, i1, i2`` file.

    ``mz`` is blank for disk meshes.
    """
    mz = mesh.lifted[:, 2] if mesh.kind == "cap" else [None] * len(mesh)
    _write_rows(
        path, ["index", "mx", "my", "mz", "weight"],
        ((i, p[0], p[1], z, w) for i, (p, z, w) in enumerate(zip(mesh.samples, mz, mesh.weights))),
    )
    _write_rows(triangles_path(path), ["i0", "i1", "i2"], (tuple(int(k) for k in t) for t in mesh.triangles))


def read_mesh_csv(path):
    """Return ``(samples, weights, triangles)`` from a mesh CSV pair."""
    rows = _read_rows(path)
    samples = np.array([[float(r["mx"]), float(r["my"])] for r in rows])
    weights = np.array([float(r["weight"]) for r in rows])
    tris = np.array([[int(r["i0"]), int(r["i1"]), int(r["i2"])] for r in _read_rows(triangles_path(path))])
    return samples, weights, tris


def write_solution(directory, level, cap, disk, r, z, rho, zsurf, ray_map=None):
    """Write ``level<k>_cap.csv`` and ``level<k>_disk.csv`` into ``directory``."""
    d = Path(directory)
    jstar = ray_map if ray_map is not None else [-1] * len(cap)
    _write_rows(
        d / f"level{level}_cap.csv",
        ["index", "mx", "my", "mz", "weight", "r", "rho", "ray_map"],
        ((i, m[0], m[1], m[2], w, ri, p, int(j))
         for i, (m, w, ri, p, j) in enumerate(zip(cap.lifted, cap.weights, r, rho, jstar))),
    )
    _write_rows(
        d / f"level{level}_disk.csv",
        ["index", "x", "y", "weight", "z", "zsurf"],
        ((j, x[0], x[1], w, zj, s)
         for j, (x, w, zj, s) in enumerate(zip(disk.samples, disk.weights, z, zsurf))),
    )


def write_discrete_solution(directory, sol):
    write_solution(directory, sol.level, sol.cap, sol.disk, sol.r, sol.z, sol.rho, sol.zsurf,
                   sol.ray_map)


class StoredSolution:
    """Per-sample data of one level as read back from CSV."""

    def __init__(self, level, cap_rows, disk_rows):
        self.level = level
        self.lifted = np.array([[float(r["mx"]), float(r["my"]), float(r["mz"])] for r in cap_rows])
        self.cap_weights = np.array([float(r["weight"]) for r in cap_rows])
        self.rho = np.array([float(r["rho"]) for r in cap_rows])
        self.points = np.array([[float(r["x"]), float(r["y"])] for r in disk_rows])
        self.disk_weights = np.array([float(r["weight"]) for r in disk_rows])
        self.zsurf = np.array([float(r["zsurf"]) for r in disk_rows])

    @property
    def n_tot(self):
        return len(self.rho) + len(self.zsurf)


def solution_levels(directory):
    """Sorted level numbers with both solution files present."""
    d = Path(directory)
    levels = []
    for p in d.glob("level*_cap.csv"):
        stem = p.name[len("level"):-len("_cap.csv")]
        if stem.isdigit() and (d / f"level{stem}_disk.csv").exists():
            levels.append(int(stem))
    return sorted(levels)


def read_solution(directory, level):
    d = Path(directory)
    return StoredSolution(level, _read_rows(d / f"level{level}_cap.csv"),
                          _read_rows(d / f"level{level}_disk.csv"))


def write_error_csv(path, coords, err):
    """Per-sample errors: ``index, c0, c1[, c2], err``."""
    coords = np.asarray(coords)
    header = ["index"] + [f"c{k}" for k in range(coords.shape[1])] + ["err"]
    _write_rows(path, header, ((i, *c, e) for i, (c, e) in enumerate(zip(coords, err))))


def write_jsonl(path, records):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")


def read_jsonl(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj) + "\n")


def read_table(path, columns):
    """Numeric columns of a CSV table as a ``(n, len(columns))`` array."""
    rows = _read_rows(path)
    try:
        return np.array([[float(r[c]) for c in columns] for r in rows])
    except KeyError as exc:
        raise ReflectorError(f"{path}: missing column {exc}") from exc
