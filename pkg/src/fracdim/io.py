"""Deterministic JSON, CSV and SVG output for curves, tables and reports."""
from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .curves import Polyline
from .errors import OutputError, SchemaError


def to_plain(obj):
    """Nested dicts/lists of str, bool, int, float and None, in a fixed field order."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {}
        for f in dataclasses.fields(obj):
            if f.repr is False:
                continue
            key = "pass" if f.name == "passed" else f.name
            out[key] = to_plain(getattr(obj, f.name))
        return out
    if isinstance(obj, tuple) and hasattr(obj, "_fields"):
        return {k: to_plain(v) for k, v in zip(obj._fields, obj)}
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [to_plain(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return to_plain(obj.to_dict())
    return str(obj)


def _float_text(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    text = format(x, ".17g")
    # keep floats recognizable as floats when read back
    return text if any(c in text for c in ".en") else text + ".0"


def _emit(v, indent, level, out):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if v is None:
        out.append("null")
    elif isinstance(v, bool):
        out.append("true" if v else "false")
    elif isinstance(v, int):
        out.append(str(v))
    elif isinstance(v, float):
        out.append(_float_text(v))
    elif isinstance(v, str):
        out.append(json.dumps(v))
    elif isinstance(v, dict):
        if not v:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, item) in enumerate(v.items()):
            out.append(pad + json.dumps(k) + ": ")
            _emit(item, indent, level + 1, out)
            out.append(",\n" if i < len(v) - 1 else "\n")
        out.append(end + "}")
    else:
        if not v:
            out.append("[]")
            return
        # numeric arrays stay on one line to keep files compact
        if all(isinstance(item, (int, float)) and not isinstance(item, bool) for item in v):
            out.append("[" + ", ".join(str(i) if isinstance(i, int) else _float_text(i) for i in v) + "]")
            return
        out.append("[\n")
        for i, item in enumerate(v):
            out.append(pad)
            _emit(item, indent, level + 1, out)
            out.append(",\n" if i < len(v) - 1 else "\n")
        out.append(end + "]")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with insertion-ordered keys and floats at 17 significant digits."""
    out = []
    _emit(to_plain(obj), indent, 0, out)
    return "".join(out) + "\n"


def _write_text(path, text):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    except OSError as err:
        raise OutputError(f"cannot write {path}: {err}") from err


def write_json(path, obj):
    _write_text(path, dumps(obj))


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as err:
        raise OutputError(f"cannot read {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise SchemaError(f"{path} is not valid JSON: {err}") from err


def write_polyline_csv(path, curve: Polyline):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        np.savetxt(path, curve.points, fmt="%.17g", delimiter=",", header="x,y", comments="")
    except OSError as err:
        raise OutputError(f"cannot write {path}: {err}") from err


def read_polyline_csv(path) -> Polyline:
    try:
        with open(path) as fh:
            header = fh.readline()
            if [c.strip() for c in header.split(",")] != ["x", "y"]:
                raise SchemaError(f"{path}: expected header 'x,y'")
            pts = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as err:
        raise OutputError(f"cannot read {path}: {err}") from err
    except ValueError as err:
        raise SchemaError(f"{path}: malformed data ({err})") from err
    try:
        return Polyline(pts, {"source": str(path)})
    except ValueError as err:
        raise SchemaError(f"{path}: {err}") from err


def polyline_document(curve: Polyline):
    (x0, y0), (x1, y1) = curve.bbox
    return {"meta": curve.meta, "n_points": len(curve), "bbox": [[x0, y0], [x1, y1]],
            "x": curve.x, "y": curve.y}


def write_rows_csv(path, header, rows):
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, (float, np.floating)):
            return _float_text(float(v))
        return str(v)
    lines = [",".join(header)] + [",".join(cell(v) for v in r) for r in rows]
    _write_text(path, "\n".join(lines) + "\n")


def validation_rows(rows):
    header = ["family", "alpha", "beta", "theoretical", "estimated", "abs_error", "tolerance",
              "pass", "reason"]
    body = [[r.family, r.params[0], r.params[1], r.theoretical, r.estimated, r.abs_error,
             r.tolerance, "true" if r.passed else "false", r.reason or ""] for r in rows]
    return header, body


def format_table(header, rows) -> str:
    """Plain fixed-width table for the console."""
    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.6g}"
        return str(v)
    text = [[cell(v) for v in r] for r in rows]
    widths = [max(len(h), *(len(r[i]) for r in text)) if text else len(h) for i, h in enumerate(header)]
    fmt = "  ".join("{:<%d}" % w for w in widths)
    return "\n".join([fmt.format(*header)] + [fmt.format(*r) for r in text])


def loglog_svg(estimate, width: int = 480, height: int = 360) -> str:
    """log N against log(1/eps) with the fitted line over the chosen window, window shaded."""
    eps = np.asarray(estimate.table.eps, dtype=float)
    le = np.log(1.0 / eps)
    ln = np.log(np.asarray(estimate.table.counts, dtype=float))
    i, j = estimate.window
    slope = estimate.raw_slope
    icpt = float(np.mean(ln[i:j + 1]) - slope * np.mean(le[i:j + 1]))
    m = 40
    x_lo, x_hi = float(le.min()), float(le.max())
    y_lo, y_hi = float(ln.min()), float(ln.max())
    sx = lambda v: m + (v - x_lo) / ((x_hi - x_lo) or 1.0) * (width - 2 * m)
    sy = lambda v: height - m - (v - y_lo) / ((y_hi - y_lo) or 1.0) * (height - 2 * m)
    pts = " ".join(f"{sx(a):.3f},{sy(b):.3f}" for a, b in zip(le, ln))
    fit = (f"{sx(le[i]):.3f},{sy(slope * le[i] + icpt):.3f} "
           f"{sx(le[j]):.3f},{sy(slope * le[j] + icpt):.3f}")
    dots = "".join(f'<circle cx="{sx(a):.3f}" cy="{sy(b):.3f}" r="2.5"/>' for a, b in zip(le, ln))
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
            f'<rect x="{sx(le[i]):.3f}" y="{m}" width="{sx(le[j]) - sx(le[i]):.3f}" '
            f'height="{height - 2 * m}" fill="#dde8f5"/>'
            f'<polyline points="{pts}" fill="none" stroke="#555"/>{dots}'
            f'<polyline points="{fit}" fill="none" stroke="#c0392b" stroke-width="2"/>'
            f'<text x="{m}" y="{m - 12}" font-size="12">slope {slope:.4f} on rungs {i}..{j}</text>'
            f'<text x="{width / 2:.0f}" y="{height - 8}" font-size="12">log(1/eps)</text>'
            f'<text x="4" y="{height / 2:.0f}" font-size="12">log N</text></svg>\n')
