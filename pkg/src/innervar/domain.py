"""Planar domains built from disks, annuli, rectangles and polygons.

A :class:`PlanarDomain` is an ordered list of ``(op, shape)`` pairs evaluated
left to right starting from the empty set, ``op`` being ``"union"`` or
``"difference"``.  Shapes may themselves be domains, so arbitrary nesting is
allowed.  ``boundary_distance`` is a signed distance, positive inside; for
composite domains it is the usual max/min combination, exact in sign and a
lower bound in magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def sdf(self, p):
        return self.radius - np.abs(np.asarray(p) - self.center)

    def bbox(self):
        c, r = self.center, self.radius
        return (c.real - r, c.imag - r, c.real + r, c.imag + r)

    def intersects_rect(self, x0, y0, x1, y1, tol=1e-12):
        c = self.center
        px = min(max(c.real, x0), x1)
        py = min(max(c.imag, y0), y1)
        return abs(complex(px, py) - c) <= self.radius + tol

    def outline(self, n=256):
        t = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        return [self.center + self.radius * np.exp(1j * t)]


@dataclass(frozen=True)
class Annulus:
    center: complex
    inner: float
    outer: float

    def __post_init__(self):
        if not 0 <= self.inner < self.outer:
            raise ValueError("annulus needs 0 <= inner < outer")

    def sdf(self, p):
        d = np.abs(np.asarray(p) - self.center)
        return np.minimum(self.outer - d, d - self.inner)

    def bbox(self):
        c, r = self.center, self.outer
        return (c.real - r, c.imag - r, c.real + r, c.imag + r)

    def intersects_rect(self, x0, y0, x1, y1, tol=1e-12):
        c = self.center
        px = min(max(c.real, x0), x1)
        py = min(max(c.imag, y0), y1)
        dmin = abs(complex(px, py) - c)
        corners = [complex(x, y) for x in (x0, x1) for y in (y0, y1)]
        dmax = max(abs(q - c) for q in corners)
        return dmin <= self.outer + tol and dmax >= self.inner - tol

    def outline(self, n=256):
        t = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        e = np.exp(1j * t)
        return [self.center + self.outer * e, self.center + self.inner * e]


@dataclass(frozen=True)
class Rectangle:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("degenerate rectangle")

    def sdf(self, p):
        p = np.asarray(p)
        x, y = p.real, p.imag
        dx = np.maximum(self.x0 - x, x - self.x1)
        dy = np.maximum(self.y0 - y, y - self.y1)
        outside = np.hypot(np.maximum(dx, 0.0), np.maximum(dy, 0.0))
        inside = np.minimum(np.maximum(dx, dy), 0.0)
        return -(outside + inside)

    def bbox(self):
        return (self.x0, self.y0, self.x1, self.y1)

    def intersects_rect(self, x0, y0, x1, y1, tol=1e-12):
        return (x0 <= self.x1 + tol and self.x0 <= x1 + tol
                and y0 <= self.y1 + tol and self.y0 <= y1 + tol)

    def outline(self, n=None):
        return [np.array([complex(self.x0, self.y0), complex(self.x1, self.y0),
                          complex(self.x1, self.y1), complex(self.x0, self.y1)])]


@dataclass(frozen=True, eq=False)
class Polygon:
    """Simple closed polygon; vertices in either orientation."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=complex).ravel()
        if len(v) > 1 and abs(v[0] - v[-1]) < 1e-15:
            v = v[:-1]
        if len(v) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        object.__setattr__(self, "vertices", v)

    def _inside(self, p):
        v = self.vertices
        a, b = v, np.roll(v, -1)
        x, y = p.real[..., None], p.imag[..., None]
        cond = (a.imag > y) != (b.imag > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = a.real + (y - a.imag) * (b.real - a.real) / (b.imag - a.imag)
        crossings = np.sum(cond & (x < xc), axis=-1)
        return crossings % 2 == 1

    def sdf(self, p):
        p = np.asarray(p, dtype=complex)
        flat = p.ravel()
        a = self.vertices
        d = b = np.roll(a, -1) - a
        out = np.empty(flat.shape, dtype=float)
        # chunk to bound the (points x edges) temporaries
        step = max(1, 2_000_000 // len(a))
        for s in range(0, flat.size, step):
            q = flat[s:s + step, None]
            t = np.clip(((q - a) * np.conj(d)).real / np.abs(d) ** 2, 0.0, 1.0)
            dist = np.min(np.abs(q - (a + t * b)), axis=1)
            sign = np.where(self._inside(flat[s:s + step]), 1.0, -1.0)
            out[s:s + step] = sign * dist
        return out.reshape(p.shape)

    def bbox(self):
        v = self.vertices
        return (v.real.min(), v.imag.min(), v.real.max(), v.imag.max())

    def intersects_rect(self, x0, y0, x1, y1, tol=1e-12):
        return _sampled_intersects(self, x0, y0, x1, y1, tol)

    def outline(self, n=None):
        return [self.vertices]


Shape = Union[Disk, Annulus, Rectangle, Polygon, "PlanarDomain"]


def _sampled_intersects(shape, x0, y0, x1, y1, tol, n=33):
    xs = np.linspace(x0, x1, n)
    ys = np.linspace(y0, y1, n)
    pts = xs[None, :] + 1j * ys[:, None]
    return bool(np.max(shape.sdf(pts)) >= -tol)


@dataclass(frozen=True)
class PlanarDomain:
    parts: tuple = field(default_factory=tuple)

    # constructors -------------------------------------------------------
    @classmethod
    def disk(cls, center=0j, radius=1.0):
        return cls((("union", Disk(complex(center), float(radius))),))

    @classmethod
    def annulus(cls, inner, outer, center=0j):
        return cls((("union", Annulus(complex(center), float(inner), float(outer))),))

    @classmethod
    def rectangle(cls, x0, y0, x1, y1):
        return cls((("union", Rectangle(float(x0), float(y0), float(x1), float(y1))),))

    @classmethod
    def polygon(cls, vertices):
        return cls((("union", Polygon(np.asarray(vertices, dtype=complex))),))

    def __or__(self, other: "PlanarDomain") -> "PlanarDomain":
        return PlanarDomain(self.parts + (("union", _as_shape(other)),))

    def __sub__(self, other: "PlanarDomain") -> "PlanarDomain":
        return PlanarDomain(self.parts + (("difference", _as_shape(other)),))

    # geometry ------------------------------------------------------------
    def sdf(self, p):
        p = np.asarray(p, dtype=complex)
        d = np.full(p.shape, -np.inf)
        for op, shape in self.parts:
            s = shape.sdf(p)
            d = np.maximum(d, s) if op == "union" else np.minimum(d, -s)
        return d

    boundary_distance = sdf

    def inside(self, p):
        """Open-set membership."""
        return self.sdf(p) > 0

    @property
    def bounding_box(self):
        boxes = [s.bbox() for op, s in self.parts if op == "union"]
        if not boxes:
            raise ValueError("domain has no union part")
        b = np.array(boxes)
        return (b[:, 0].min(), b[:, 1].min(), b[:, 2].max(), b[:, 3].max())

    def bbox(self):
        return self.bounding_box

    def intersects_rect(self, x0, y0, x1, y1, tol=1e-12):
        """Whether the closed rectangle meets the closure of the domain."""
        if all(op == "union" for op, _ in self.parts):
            return any(s.intersects_rect(x0, y0, x1, y1, tol) for _, s in self.parts)
        return _sampled_intersects(self, x0, y0, x1, y1, tol, n=65)

    def outline(self, n=256):
        loops = []
        for _, s in self.parts:
            loops.extend(s.outline(n))
        return loops


def _as_shape(d) -> Shape:
    if isinstance(d, PlanarDomain) and len(d.parts) == 1 and d.parts[0][0] == "union":
        return d.parts[0][1]
    return d


def union(domains: Sequence[PlanarDomain]) -> PlanarDomain:
    out = domains[0]
    for d in domains[1:]:
        out = out | d
    return out
