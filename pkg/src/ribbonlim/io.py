"""Deterministic file output: JSON/CSV/OBJ with 17-significant-digit floats, atomic writes."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .curves import CurveSpec
from .errors import DomainError


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _json_value(obj, indent: str, step: str) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no literal for non-finite numbers; spell them as strings
        return format_float(x) if math.isfinite(x) else json.dumps(format_float(x))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, Path):
        return json.dumps(str(obj))
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    inner = indent + step
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_json_value(v, inner, step)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + indent + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_json_value(v, inner, step) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _json_value(v, inner, step) for v in obj) + "\n" + indent + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON text with every float at 17 significant digits."""
    return _json_value(obj, "", "  ") + "\n"


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, obj) -> Path:
    return atomic_write(path, dumps(obj))


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def csv_text(rows: list[dict], columns: list[str] | None = None) -> str:
    if columns is None:
        columns = list(rows[0]) if rows else []
    lines = [",".join(columns)]
    lines += [",".join(_cell(row.get(c)) for c in columns) for row in rows]
    return "\n".join(lines) + "\n"


def write_csv(path, rows: list[dict], columns: list[str] | None = None) -> Path:
    return atomic_write(path, csv_text(rows, columns))


def columns_to_rows(table: dict) -> list[dict]:
    keys = list(table)
    n = len(table[keys[0]]) if keys else 0
    return [{k: table[k][i] for k in keys} for i in range(n)]


def curve_to_json(curve: CurveSpec) -> str:
    return dumps(curve.to_dict())


def write_curve(path, curve: CurveSpec) -> Path:
    return atomic_write(path, curve_to_json(curve))


def read_curve(path) -> CurveSpec:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: invalid JSON ({exc})", path=str(path)) from exc
    try:
        return CurveSpec.from_dict(data)
    except KeyError as exc:
        raise DomainError(f"{path}: missing curve key {exc}", path=str(path)) from exc


def obj_text(mesh) -> str:
    lines = [f"# ribbon mesh {mesh.grid_shape[0]} x {mesh.grid_shape[1]}"]
    lines += ["v " + " ".join(format_float(x) for x in v) for v in mesh.vertices]
    lines += ["f " + " ".join(str(int(i) + 1) for i in f) for f in mesh.faces]
    return "\n".join(lines) + "\n"


def write_obj(path, mesh) -> Path:
    return atomic_write(path, obj_text(mesh))


def write_kappa1(path, mesh) -> Path:
    rows = [{"vertex": i, "kappa1": k} for i, k in enumerate(mesh.per_vertex_kappa1)]
    return write_csv(path, rows, ["vertex", "kappa1"])
