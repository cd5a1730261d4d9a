"""CSV and manifest writers shared by the command-line runner.

Every CSV starts with a ``# schema=1`` comment line followed by the header.
Floats are written with ``repr`` so files round-trip exactly and identical
inputs give identical bytes.
"""
from __future__ import annotations

import csv
import hashlib
import json
import platform
import sys
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

SCHEMA_VERSION = 1

__all__ = ["SCHEMA_VERSION", "format_cell", "write_csv", "read_csv", "write_manifest", "versions"]


def format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (tuple, list, np.ndarray)):
        return " ".join(format_cell(x) for x in v)
    return str(v)


def write_csv(path, columns, rows, sort_keys=None) -> Path:
    """Write ``rows`` (sequences aligned with ``columns``) to ``path``.

    ``sort_keys`` names the columns that order the rows; the sort is stable,
    so rows that tie keep their production order.
    """
    path = Path(path)
    rows = [list(r) for r in rows]
    for r in rows:
        if len(r) != len(columns):
            raise ValueError("row has %d cells, header has %d" % (len(r), len(columns)))
    if sort_keys:
        idx = [columns.index(k) for k in sort_keys]

        def key(r):
            out = []
            for k in idx:
                v = r[k]
                if isinstance(v, (tuple, list)):
                    out.append(tuple(float(x) for x in v))
                elif v is None:
                    out.append((-np.inf,))
                else:
                    out.append((v,) if isinstance(v, str) else (float(v),))
            return out

        rows.sort(key=key)
    with path.open("w", newline="") as fh:
        fh.write("# schema=%d\n" % SCHEMA_VERSION)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([format_cell(v) for v in r])
    return path


def read_csv(path):
    """(columns, rows) of a file written by :func:`write_csv`; cells stay strings."""
    with Path(path).open(newline="") as fh:
        first = fh.readline()
        if not first.startswith("# schema="):
            raise ValueError("missing schema line in %s" % path)
        reader = csv.reader(fh)
        columns = next(reader)
        return columns, [row for row in reader]


def versions() -> dict:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {
        "fbmcurrent": pkg,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": sys.platform,
    }


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out_dir, *, subcommand, config_path, inputs, seed, wall_time, files, status,
                   flags=None) -> Path:
    out_dir = Path(out_dir)
    data = {
        "schema": SCHEMA_VERSION,
        "subcommand": subcommand,
        "config": str(config_path),
        "inputs": inputs,
        "seed": seed,
        "versions": versions(),
        "wall_time_s": wall_time,
        "status": status,
        "flags": flags or [],
        "files": {Path(f).name: _sha256(Path(f)) for f in files},
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path
