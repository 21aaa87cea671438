"""Field exports: CSV, raw little-endian float64, JSON sidecar and deterministic reports."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .field import WaveField

__all__ = ["field_records", "write_csv", "write_binary", "read_binary", "write_sidecar", "dump_json", "CSV_HEADER"]

CSV_HEADER = ("u", "v", "re_psi", "im_psi")


def field_records(wf: WaveField) -> np.ndarray:
    """(n_u * n_v, 4) array of (u, v, Re psi, Im psi), v varying fastest."""
    U, V = np.meshgrid(wf.us, wf.vs, indexing="ij")
    return np.stack([U.ravel(), V.ravel(), wf.values.real.ravel(), wf.values.imag.ravel()], axis=1)


def write_csv(wf: WaveField, path: Path) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerows((repr(float(x)) for x in row) for row in field_records(wf))
    return path


def write_binary(wf: WaveField, path: Path) -> Path:
    field_records(wf).astype("<f8").tofile(path)
    return path


def read_binary(path: Path) -> np.ndarray:
    return np.fromfile(path, dtype="<f8").reshape(-1, 4)


def dump_json(obj, path: Path) -> Path:
    """Sorted keys and a fixed layout, so equal inputs give identical bytes."""
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n")
    return path


def write_sidecar(wf: WaveField, path: Path, files: dict[str, str]) -> Path:
    meta = dict(wf.metadata)
    meta.update(
        {
            "shape": [int(wf.us.size), int(wf.vs.size)],
            "ordering": "row-major, v fastest",
            "columns": list(CSV_HEADER),
            "binary_dtype": "float64 little-endian, 4 per record",
            "u_range": [float(wf.us[0]), float(wf.us[-1])],
            "v_periodic": True,
            "files": files,
        }
    )
    return dump_json(meta, path)
