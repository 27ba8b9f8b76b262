"""File formats.

Every numeric payload is CSV with ``repr`` floats, so a write/read cycle is
lossless.  Structured objects (spaces, grids, reports) are JSON.  All
writers go through ``atomic_write``.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .grid import DyadicGrid
from .space import FinitePointSpace, PointMassMeasure, SpaceError, load_space


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    return repr(float(v))


def _rows_to_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read_rows(path):
    with open(path, newline="") as fh:
        return [r for r in csv.reader(fh) if r and not r[0].startswith("#")]


# spaces and measures

def read_space_source(path) -> dict:
    """Raw space record from JSON or from CSV ``id,x,y,...[,mass]``."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        with open(path) as fh:
            return json.load(fh)
    rows = _read_rows(path)
    if not rows:
        raise SpaceError(f"{path}: empty space file")
    header = [h.strip().lower() for h in rows[0]]
    if header[0] != "id":
        raise SpaceError(f"{path}: first column must be 'id'")
    mass_col = header.index("mass") if "mass" in header else None
    cols = [j for j in range(1, len(header)) if j != mass_col]
    body = sorted(rows[1:], key=lambda r: int(r[0]))
    if [int(r[0]) for r in body] != list(range(len(body))):
        raise SpaceError(f"{path}: ids must be 0..n-1")
    src = {"points": [[float(r[j]) for j in cols] for r in body], "metric": "euclidean"}
    if mass_col is not None:
        src["masses"] = [float(r[mass_col]) for r in body]
    return src


def read_space(path) -> FinitePointSpace:
    return load_space(read_space_source(path))


def write_space(path, source: dict) -> None:
    atomic_write(path, json.dumps(source, sort_keys=True, indent=1) + "\n")


def read_vector(path, n: int | None = None, column: str | None = None) -> np.ndarray:
    """Two-column CSV ``id,value`` (header optional) as a dense vector."""
    rows = _read_rows(path)
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    ids = [int(r[0]) for r in rows]
    size = n if n is not None else (max(ids) + 1 if ids else 0)
    if sorted(ids) != list(range(size)):
        raise ValueError(f"{path}: expected one row for each id 0..{size - 1}")
    out = np.empty(size)
    for r in rows:
        out[int(r[0])] = float(r[1])
    return out


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def write_vector(path, values, name: str = "value") -> None:
    atomic_write(path, _rows_to_text(["id", name], [[i, _fmt(v)] for i, v in enumerate(values)]))


def read_measure(path, n: int) -> PointMassMeasure:
    return PointMassMeasure(read_vector(path, n))


def write_measure(path, measure) -> None:
    mass = measure.mass if isinstance(measure, PointMassMeasure) else measure
    write_vector(path, mass, "mass")


def load_inputs(space_path, measure_path=None):
    """Space plus measure: an explicit measure file wins, then masses stored
    in the space file, then unit masses."""
    src = read_space_source(space_path)
    space = load_space(src)
    if measure_path:
        measure = read_measure(measure_path, space.n)
    elif src.get("masses") is not None:
        measure = PointMassMeasure(np.asarray(src["masses"], float))
    else:
        measure = PointMassMeasure.uniform(space.n)
    return space, measure, src


# grids

def grid_text(grid: DyadicGrid) -> str:
    return json.dumps(grid.to_dict(), sort_keys=True, indent=1) + "\n"


def write_grid(path, grid: DyadicGrid) -> None:
    atomic_write(path, grid_text(grid))


def read_grid(path, space, measure) -> DyadicGrid:
    with open(path) as fh:
        data = json.load(fh)
    return DyadicGrid.from_dict(data, space, measure)


# Haar coefficients: rows (level, alpha, u, value); coarse cube averages use u = -1

def coefficient_rows(coeffs, kmin: int):
    rows = [[k, a, u, _fmt(v)] for (k, a, u), v in zip(coeffs.keys, coeffs.values)]
    rows += [[kmin, a, -1, _fmt(v)] for a, v in enumerate(coeffs.coarse)]
    return rows


def write_coefficients(path, coeffs, kmin: int) -> None:
    path = Path(path)
    rows = coefficient_rows(coeffs, kmin)
    if path.suffix.lower() == ".json":
        data = {"mean": coeffs.mean,
                "coefficients": [{"level": r[0], "alpha": r[1], "u": r[2], "value": float(r[3])} for r in rows]}
        atomic_write(path, json.dumps(data, sort_keys=True, indent=1) + "\n")
    else:
        atomic_write(path, _rows_to_text(["level", "alpha", "u", "value"], rows))


def read_coefficients(path):
    """``(dict key -> value, coarse dict alpha -> average)``."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        with open(path) as fh:
            data = json.load(fh)
        rows = [(c["level"], c["alpha"], c["u"], c["value"]) for c in data["coefficients"]]
    else:
        body = _read_rows(path)
        if body and not _is_number(body[0][0]):
            body = body[1:]
        rows = [(int(r[0]), int(r[1]), int(r[2]), float(r[3])) for r in body]
    coef, coarse = {}, {}
    for k, a, u, v in rows:
        if int(u) < 0:
            coarse[int(a)] = float(v)
        else:
            coef[(int(k), int(a), int(u))] = float(v)
    return coef, coarse


# product signals and tensors

def write_product_signal(path, F, names=("X1", "X2")) -> None:
    F = np.asarray(F, float)
    head = f"#X1={names[0]},X2={names[1]}\n"
    atomic_write(path, head + _rows_to_text(None, [[_fmt(v) for v in row] for row in F]))


def read_product_signal(path):
    """``(matrix, (name1, name2))``; the header line is optional."""
    names = ("X1", "X2")
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    if lines and lines[0].startswith("#"):
        parts = dict(p.split("=", 1) for p in lines[0][1:].split(",") if "=" in p)
        names = (parts.get("X1", "X1"), parts.get("X2", "X2"))
    body = [r for r in csv.reader(lines) if r and not r[0].startswith("#")]
    F = np.array([[float(v) for v in r] for r in body], float)
    if F.ndim != 2 or F.size == 0:
        raise ValueError(f"{path}: product signal must be a non-empty matrix")
    return F, names


def write_tensor(path, tensor) -> None:
    rows = [list(key) + [_fmt(v)] for key, v in sorted(tensor.to_dict().items())]
    atomic_write(path, _rows_to_text(["k1", "a1", "u1", "k2", "a2", "u2", "value"], rows))


def read_tensor_dict(path) -> dict:
    body = _read_rows(path)
    if body and not _is_number(body[0][0]):
        body = body[1:]
    return {tuple(int(t) for t in r[:6]): float(r[6]) for r in body}


def read_masks(path, shape) -> list:
    """Point sets for the BMO-type functional: JSON list of lists of
    ``[x1, x2]`` pairs."""
    with open(path) as fh:
        data = json.load(fh)
    out = []
    for pairs in data:
        m = np.zeros(shape, bool)
        for x1, x2 in pairs:
            m[int(x1), int(x2)] = True
        out.append(m)
    return out
