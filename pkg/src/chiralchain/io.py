"""CSV / JSON writers with a metadata header line.

Every CSV starts with ``# `` followed by a one-line JSON object holding the
package version and the inputs of the run, so a file can be traced back to
(and recomputed from) its parameters.  Floats are written with ``repr`` so
output is byte-stable and round-trips exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os

import numpy as np

FORMATS = ("csv", "json", "both")


def _version():
    from chiralchain import __version__

    return __version__


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _json_value(x):
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def finite(obj):
    """Copy of ``obj`` with non-finite floats replaced by strings (strict JSON)."""
    if isinstance(obj, dict):
        return {k: finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [finite(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def metadata(**fields):
    """Header dict: version first, then the caller's fields."""
    meta = {"version": _version()}
    meta.update(fields)
    return finite(meta)


def csv_text(columns, rows, meta):
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(x) for x in row])
    return buf.getvalue()


def json_text(columns, rows, meta):
    doc = {
        "meta": meta,
        "columns": list(columns),
        "rows": [[_json_value(x) for x in row] for row in rows],
    }
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"


def render(columns, rows, meta, fmt="csv"):
    if fmt == "json":
        return json_text(columns, rows, meta)
    return csv_text(columns, rows, meta)


def write_table(path_stem, columns, rows, meta, fmt="csv"):
    """Write ``path_stem.csv`` and/or ``path_stem.json``; return the paths."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    rows = list(rows)
    paths = []
    if fmt in ("csv", "both"):
        paths.append(_write(path_stem + ".csv", csv_text(columns, rows, meta)))
    if fmt in ("json", "both"):
        paths.append(_write(path_stem + ".json", json_text(columns, rows, meta)))
    return paths


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def read_csv(path):
    """Inverse of :func:`csv_text`: ``(meta, columns, rows)`` with rows as strings."""
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError(f"{path}: missing metadata header")
        meta = json.loads(first[2:])
        reader = csv.reader(fh)
        columns = next(reader)
        rows = list(reader)
    return meta, columns, rows


def ensure_writable_dir(path):
    """Create ``path`` if needed and check it accepts files; raise OSError otherwise."""
    os.makedirs(path, exist_ok=True)
    probe = os.path.join(path, ".chiralchain-write-test")
    with open(probe, "w") as fh:
        fh.write("")
    os.remove(probe)
    return path
