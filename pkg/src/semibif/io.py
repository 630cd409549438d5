"""Deterministic CSV / JSON / SVG writers with atomic file replacement."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile

import numpy as np

BRANCH_COLUMNS = ("index", "alpha", "lambda", "arclength", "is_fold")
PROFILE_COLUMNS = ("r_or_x", "u")


def fmt(x):
    """Fixed 17-significant-digit float formatting."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    out = format(x, ".17g")
    if not any(c in out for c in ".en"):
        out += ".0"
    return out


def atomic_write(path, text):
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


# ------------------------------------------------------------------- json
def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "null"
        if math.isinf(x):
            return json.dumps("inf" if x > 0 else "-inf")
        return fmt(x)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_encode(obj[k], indent, level + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "to_dict"):
        return _encode(obj.to_dict(), indent, level)
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent=2):
    """JSON text with sorted keys and 17-digit floats; inf becomes "inf"."""
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj):
    return atomic_write(path, dumps(obj))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


# -------------------------------------------------------------------- csv
def branch_csv(branch, folds=()):
    marks = set()
    for f in folds:
        k = int(np.argmin(np.abs(branch.alpha - f.alpha)))
        marks.add(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BRANCH_COLUMNS)
    s = branch.arclength
    for i, (a, l) in enumerate(zip(branch.alpha, branch.lam)):
        w.writerow([i, fmt(a), fmt(l), fmt(s[i]), int(i in marks)])
    return buf.getvalue()


def write_branch_csv(path, branch, folds=()):
    return atomic_write(path, branch_csv(branch, folds))


def table_csv(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_profile_csv(path, x, u):
    return atomic_write(path, table_csv(PROFILE_COLUMNS, zip(np.asarray(x, float), np.asarray(u, float))))


def write_table_csv(path, columns, rows):
    return atomic_write(path, table_csv(columns, rows))


# -------------------------------------------------------------------- svg
def diagram_svg(curves, folds=(), jumps=(), title="", width=640, height=440):
    """Minimal (λ, α) plot: polylines, folds as filled circles, jumps as
    dashed verticals. ``curves`` is a list of (lam, alpha, colour)."""
    margin = 56
    lam_all = np.concatenate([np.asarray(c[0], float) for c in curves] or [np.zeros(1)])
    al_all = np.concatenate([np.asarray(c[1], float) for c in curves] or [np.zeros(1)])
    ok = np.isfinite(lam_all) & np.isfinite(al_all)
    lam_all, al_all = lam_all[ok], al_all[ok]
    x0, x1 = 0.0, float(lam_all.max()) * 1.05 if lam_all.size else 1.0
    y0, y1 = 0.0, float(al_all.max()) * 1.05 if al_all.size else 1.0
    x1 = x1 if x1 > x0 else 1.0
    y1 = y1 if y1 > y0 else 1.0

    def px(l):
        return margin + (l - x0) / (x1 - x0) * (width - 2 * margin)

    def py(a):
        return height - margin - (a - y0) / (y1 - y0) * (height - 2 * margin)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" '
           'stroke="black"/>',
           f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>']
    for k in range(6):
        lv = x0 + k * (x1 - x0) / 5
        av = y0 + k * (y1 - y0) / 5
        out.append(f'<text x="{px(lv):.2f}" y="{height - margin + 18}" font-size="11" '
                   f'text-anchor="middle">{lv:.3g}</text>')
        out.append(f'<text x="{margin - 6}" y="{py(av) + 4:.2f}" font-size="11" '
                   f'text-anchor="end">{av:.3g}</text>')
    out.append(f'<text x="{width / 2}" y="{height - 12}" font-size="13" text-anchor="middle">'
               'lambda</text>')
    out.append(f'<text x="16" y="{height / 2}" font-size="13" text-anchor="middle" '
               f'transform="rotate(-90 16 {height / 2})">||u||</text>')
    if title:
        out.append(f'<text x="{width / 2}" y="24" font-size="14" text-anchor="middle">{title}</text>')
    for lam, alpha, colour in curves:
        lam, alpha = np.asarray(lam, float), np.asarray(alpha, float)
        keep = np.isfinite(lam) & np.isfinite(alpha)
        pts = " ".join(f"{px(l):.2f},{py(a):.2f}" for l, a in zip(lam[keep], alpha[keep]))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
    for f in folds:
        out.append(f'<circle cx="{px(f.lam):.2f}" cy="{py(f.alpha):.2f}" r="4" fill="crimson"/>')
    for lam_t, a_lo, a_hi in jumps:
        out.append(f'<line x1="{px(lam_t):.2f}" y1="{py(a_lo):.2f}" x2="{px(lam_t):.2f}" '
                   f'y2="{py(min(a_hi, y1)):.2f}" stroke="navy" stroke-dasharray="5,4"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, curves, folds=(), jumps=(), title=""):
    return atomic_write(path, diagram_svg(curves, folds, jumps, title))
