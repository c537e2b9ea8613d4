"""JSON/CSV persistence with fixed 17-significant-digit float formatting."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        # JSON has no literal for these; encode as strings
        return json.dumps(repr(x))
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode([obj.real, obj.imag], indent, level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON text; floats carry 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def encode_array(a):
    """Real arrays become float lists; complex ones become ``[re, im]`` pairs."""
    a = np.asarray(a)
    if np.iscomplexobj(a):
        if np.all(a.imag == 0):
            return a.real.tolist()
        return np.stack([a.real, a.imag], axis=-1).tolist()
    return a.tolist()


def decode_array(values) -> np.ndarray:
    a = np.asarray(values, dtype=float)
    if a.ndim >= 2 and a.shape[-1] == 2 and a.ndim == 2:
        return a[:, 0] + 1j * a[:, 1]
    return a


def csv_text(header, rows, preamble: dict | None = None) -> str:
    """CSV with an optional ``# key: value`` comment block on top."""
    buf = io.StringIO()
    if preamble:
        for k, v in preamble.items():
            buf.write(f"# {k}: {json.dumps(v, default=str)}\n")
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    for row in rows:
        w.writerow([_fmt_float(float(v)) if isinstance(v, (float, np.floating)) else v
                    for v in row])
    return buf.getvalue()


def write_csv(path, header, rows, preamble: dict | None = None) -> Path:
    path = Path(path)
    path.write_text(csv_text(header, rows, preamble))
    return path


def read_csv(path, header: bool = True):
    """Return (header, rows) skipping ``#`` comment lines; numbers parsed as float."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    head, body = (rows[0], rows[1:]) if header else (None, rows)
    return head, [[float(v) for v in r] for r in body]
