"""CSV / JSON serialization with atomic writes.

Floats are written with 17 significant digits so every value round-trips.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .thermal import ComplexFieldGrid

__all__ = [
    "atomic_write_text",
    "sha256_file",
    "write_csv",
    "read_csv",
    "write_json",
    "write_grid",
    "read_grid",
    "write_trajectory",
    "write_zeros",
    "write_deviance",
    "ensemble_record",
]


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return atomic_write_text(path, buf.getvalue())


def read_csv(path):
    """Header and float matrix of a CSV written by :func:`write_csv`."""
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = np.array([[float(v) for v in row] for row in r])
    return header, data.reshape(-1, len(header))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(path, obj):
    return atomic_write_text(path, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


GRID_COLUMNS = ["h_r", "beta_h_i", "re_z", "im_z", "abs_z"]


def write_grid(path, grid):
    """Grid as CSV (one row per sample) plus a ``.json`` sidecar with metadata."""
    path = Path(path)
    rows = (
        (h, b, v.real, v.imag, abs(v))
        for i, h in enumerate(grid.h_r_axis)
        for b, v in zip(grid.h_i_axis, grid.values[i])
    )
    write_csv(path, GRID_COLUMNS, rows)
    sidecar = path.with_suffix(".json")
    write_json(sidecar, {"shape": list(grid.shape), "columns": GRID_COLUMNS, "params": grid.metadata})
    return path, sidecar


def read_grid(path):
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    _, data = read_csv(path)
    nh, nb = meta["shape"]
    hr = data[::nb, 0]
    bhi = data[:nb, 1]
    values = (data[:, 2] + 1j * data[:, 3]).reshape(nh, nb)
    return ComplexFieldGrid(hr, bhi, values, meta["params"])


def write_trajectory(path, traj):
    return write_csv(path, ["t_seconds", "sigma_z", "sigma_y"],
                     zip(traj.times, traj.sigma_z, traj.sigma_y))


def write_zeros(path, zeros):
    return write_json(path, [z.as_dict() for z in zeros])


def write_deviance(path, times, dz):
    dz = np.asarray(dz)
    return write_csv(path, ["t_seconds", "re_dz", "im_dz", "abs_dz"],
                     zip(times, dz.real, dz.imag, np.abs(dz)))


def ensemble_record(ens, fid, target_params, seed):
    return {
        "weights": ens.weights.tolist(),
        "alphas": ens.alphas.tolist(),
        "fidelity": fid,
        "target_params": target_params,
        "seed": seed,
    }
