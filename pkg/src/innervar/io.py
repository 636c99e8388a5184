"""Serialization: field CSV with a JSON header, JSON reports, sweep CSV and SVG figures."""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path

import numpy as np


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        # JSON has no NaN/inf
        return f if math.isfinite(f) else None
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def dumps_report(report) -> str:
    """Deterministic JSON: sorted keys, fixed float repr."""
    return json.dumps(_jsonable(report), indent=2, sort_keys=True)


def write_report(path, report) -> Path:
    p = Path(path)
    p.write_text(dumps_report(report) + "\n")
    return p


def field_csv(fmap) -> str:
    """Masked nodes as ``i,j,x,y,re,im`` rows after a ``# {json header}`` line."""
    g = fmap.grid
    buf = _io.StringIO()
    head = dict(g.header(), name=fmap.name, count=g.count)
    buf.write("# " + json.dumps(head, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "j", "x", "y", "re", "im"])
    jj, ii = np.nonzero(g.mask)
    z = g.nodes[jj, ii]
    v = fmap.values[jj, ii]
    for row in zip(ii, jj, z.real, z.imag, v.real, v.imag):
        w.writerow([int(row[0]), int(row[1])] + [repr(float(x)) for x in row[2:]])
    return buf.getvalue()


def read_field_csv(text: str):
    """Inverse of :func:`field_csv`: ``(header, i, j, values)``."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ValueError("missing JSON header line")
    header = json.loads(lines[0][2:])
    rows = list(csv.reader(lines[1:]))[1:]
    a = np.array(rows, dtype=float).reshape(-1, 6)
    return header, a[:, 0].astype(int), a[:, 1].astype(int), a[:, 4] + 1j * a[:, 5]


def sweep_csv(sweep) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "energy", "delta"])
    eps = np.asarray(sweep.epsilons, float)
    e0 = float(np.asarray(sweep.energies)[eps == 0][0]) if np.any(eps == 0) else float(sweep.c0)
    for e, E in zip(sweep.epsilons, sweep.energies):
        w.writerow([repr(float(e)), repr(float(E)), repr(float(E - e0))])
    return buf.getvalue()


def polyline_csv(trajectories) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trajectory", "k", "x", "y"])
    for t, tr in enumerate(trajectories):
        for k, p in enumerate(tr.points):
            w.writerow([t, k, repr(float(p.real)), repr(float(p.imag))])
    return buf.getvalue()


# -- SVG ------------------------------------------------------------------------

_COLORS = {"closed": "#1f77b4", "crosscut": "#2ca02c", "hit_critical": "#d62728",
           "escaped": "#9467bd", "step_limit": "#8c564b"}


class SvgCanvas:
    """SVG 1.1 canvas mapping a world box onto ``size`` pixels with y pointing up."""

    def __init__(self, box, size=600, margin=10):
        x0, y0, x1, y1 = box
        if not (x1 > x0 and y1 > y0):
            raise ValueError("degenerate drawing box")
        self.box = box
        self.scale = (size - 2 * margin) / max(x1 - x0, y1 - y0)
        self.margin = margin
        self.w = int(round((x1 - x0) * self.scale + 2 * margin))
        self.h = int(round((y1 - y0) * self.scale + 2 * margin))
        self.items = []

    def _xy(self, z):
        z = np.asarray(z, dtype=complex)
        x = (z.real - self.box[0]) * self.scale + self.margin
        y = (self.box[3] - z.imag) * self.scale + self.margin
        return x, y

    def polyline(self, pts, color="#000", width=1.0, closed=False):
        x, y = self._xy(pts)
        ok = np.isfinite(x) & np.isfinite(y)
        coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(x[ok], y[ok]))
        tag = "polygon" if closed else "polyline"
        self.items.append(f'<{tag} points="{coords}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}"/>')

    def rect(self, x0, y0, x1, y1, color="#888", fill="none", width=0.5):
        a, b = self._xy(complex(x0, y1))
        c, d = self._xy(complex(x1, y0))
        self.items.append(f'<rect x="{float(a):.2f}" y="{float(b):.2f}" width="{float(c - a):.2f}" '
                          f'height="{float(d - b):.2f}" fill="{fill}" stroke="{color}" '
                          f'stroke-width="{width}"/>')

    def dot(self, z, r=2.5, color="#000"):
        x, y = self._xy(z)
        self.items.append(f'<circle cx="{float(x):.2f}" cy="{float(y):.2f}" r="{r}" fill="{color}"/>')

    def render(self) -> str:
        body = "\n".join(self.items)
        return ('<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
                f'width="{self.w}" height="{self.h}" viewBox="0 0 {self.w} {self.h}">\n'
                f'<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n')


def _box_of(points, pad=0.05):
    pts = np.concatenate([np.ravel(np.asarray(p, complex)) for p in points])
    pts = pts[np.isfinite(pts)]
    x0, x1 = pts.real.min(), pts.real.max()
    y0, y1 = pts.imag.min(), pts.imag.max()
    d = max(x1 - x0, y1 - y0, 1e-9) * pad
    return (x0 - d, y0 - d, x1 + d, y1 + d)


def trajectories_svg(trajectories, domain=None, critical=(), box=None, size=600) -> str:
    loops = domain.outline(256) if domain is not None else []
    pieces = [t.points for t in trajectories] + loops + [np.asarray(critical, complex)]
    if box is None:
        box = domain.bounding_box if domain is not None else _box_of(pieces)
    c = SvgCanvas(box, size)
    for loop in loops:
        c.polyline(loop, "#999", 1.0, closed=True)
    for t in trajectories:
        c.polyline(t.points, _COLORS.get(t.kind, "#000"), 1.0, closed=t.closed)
    for p in critical:
        c.dot(p, 3.0, "#d62728")
    return c.render()


def partition_svg(partition, domain=None, size=600) -> str:
    r = partition.rects
    box = domain.bounding_box if domain is not None else \
        (r[:, 0].min(), r[:, 1].min(), r[:, 2].max(), r[:, 3].max())
    c = SvgCanvas(box, size)
    if domain is not None:
        for loop in domain.outline(256):
            c.polyline(loop, "#999", 1.0, closed=True)
    signs = np.ones(len(partition)) if partition.signs is None else partition.signs
    for (x0, y0, x1, y1), s in zip(r, signs):
        c.rect(x0, y0, x1, y1, "#444", "#cfe3f5" if s > 0 else "#f5d6cf")
    for z in partition.zeros:
        c.dot(z, 3.0, "#d62728")
    return c.render()


def outline_svg(domain, size=600) -> str:
    c = SvgCanvas(domain.bounding_box, size)
    for loop in domain.outline(256):
        c.polyline(loop, "#000", 1.0, closed=True)
    return c.render()
