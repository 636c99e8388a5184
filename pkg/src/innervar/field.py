"""Masked uniform grids, sampled complex fields and their Wirtinger jets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .domain import PlanarDomain

ComplexFn = Callable[[np.ndarray], np.ndarray]

SUBSAMPLES = 4


@dataclass(frozen=True, eq=False)
class Grid:
    """Cell-centred uniform grid; node ``(j, i)`` sits at ``origin + h*(i + 1j*j)``.

    Arrays indexed ``[j, i]`` (row = y).  ``mask`` marks nodes strictly inside
    ``domain``.
    """

    origin: complex
    spacing: float
    nx: int
    ny: int
    mask: np.ndarray
    domain: Optional[PlanarDomain] = None

    def __post_init__(self):
        if not self.spacing > 0:
            raise ValueError("grid spacing must be positive")

    @cached_property
    def nodes(self) -> np.ndarray:
        i = np.arange(self.nx)
        j = np.arange(self.ny)
        return self.origin + self.spacing * (i[None, :] + 1j * j[:, None])

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @cached_property
    def weights(self) -> np.ndarray:
        """Per-node quadrature weights (fractions of ``h**2``).

        Each cell is weighted by the inside fraction of a 4x4 subsample.  The
        weight of a cut cell whose centre lies outside the domain is handed to
        the nearest masked neighbour so that no boundary sliver is lost.
        """
        mask = self.mask
        if self.domain is None:
            return mask.astype(float)
        h = self.spacing
        off = (np.arange(SUBSAMPLES) + 0.5) / SUBSAMPLES - 0.5
        frac = np.zeros(self.shape)
        # only cells within one diagonal of the boundary can be cut
        sd = self.domain.sdf(self.nodes)
        near = np.abs(sd) < h
        frac[(sd > 0) & ~near] = 1.0
        pts = self.nodes[near]
        if pts.size:
            sub = pts[:, None] + h * (off[None, :, None] + 1j * off[None, None, :]).reshape(1, -1)
            frac[near] = self.domain.inside(sub).mean(axis=1)
        w = np.where(mask, frac, 0.0)
        orphan = (~mask) & (frac > 0)
        if orphan.any():
            nbrs = [(0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (1, -1), (-1, 1), (-1, -1)]
            for j, i in zip(*np.nonzero(orphan)):
                for dj, di in nbrs:
                    jj, ii = j + dj, i + di
                    if 0 <= jj < self.ny and 0 <= ii < self.nx and mask[jj, ii]:
                        w[jj, ii] += frac[j, i]
                        break
        return w

    def header(self) -> dict:
        return {"origin": [self.origin.real, self.origin.imag], "spacing": self.spacing,
                "nx": self.nx, "ny": self.ny}


def build_grid(domain: PlanarDomain, resolution: int, pad: int = 2) -> Grid:
    """Uniform grid over the domain's bounding box, ``h = longest side / resolution``."""
    if resolution < 8:
        raise ValueError("resolution must be >= 8")
    x0, y0, x1, y1 = domain.bounding_box
    h = max(x1 - x0, y1 - y0) / resolution
    nx = int(math.ceil((x1 - x0) / h - 1e-9)) + 2 * pad
    ny = int(math.ceil((y1 - y0) / h - 1e-9)) + 2 * pad
    origin = complex(x0 + (0.5 - pad) * h, y0 + (0.5 - pad) * h)
    i = np.arange(nx)
    j = np.arange(ny)
    nodes = origin + h * (i[None, :] + 1j * j[:, None])
    mask = domain.inside(nodes)
    if not mask.any():
        raise ValueError("empty domain: no grid node inside")
    g = Grid(origin, h, nx, ny, mask, domain)
    g.__dict__["nodes"] = nodes
    return g


@dataclass(frozen=True, eq=False)
class SampledMap:
    """Complex field on the masked nodes of a grid (NaN elsewhere).

    ``closure`` is an exact evaluator used for off-grid resampling;
    ``derivatives`` optionally returns the exact pair ``(f_z, f_zbar)``.
    """

    grid: Grid
    values: np.ndarray
    closure: Optional[ComplexFn] = None
    derivatives: Optional[Callable[[np.ndarray], tuple]] = None
    name: str = ""

    @classmethod
    def from_function(cls, grid: Grid, f: ComplexFn, derivatives=None, name=""):
        vals = np.full(grid.shape, np.nan + 0j)
        vals[grid.mask] = f(grid.nodes[grid.mask])
        return cls(grid, vals, f, derivatives, name)

    def map_values(self, g: Callable[[np.ndarray], np.ndarray], name="") -> "SampledMap":
        """Post-compose with ``g``; closures follow when available."""
        closure = None if self.closure is None else (lambda z, f=self.closure: g(f(z)))
        vals = np.full(self.grid.shape, np.nan + 0j)
        vals[self.grid.mask] = g(self.values[self.grid.mask])
        return SampledMap(self.grid, vals, closure, None, name or self.name)


@dataclass(frozen=True, eq=False)
class WirtingerJet:
    grid: Grid
    f: np.ndarray
    f_z: np.ndarray
    f_zbar: np.ndarray
    valid: np.ndarray
    low_order: np.ndarray = field(default=None)

    def usable(self, exclude_low_order: bool = False) -> np.ndarray:
        if exclude_low_order and self.low_order is not None:
            return self.valid & ~self.low_order
        return self.valid


def _shift(a: np.ndarray, k: int, axis: int, fill):
    """``out[..., n, ...] = a[..., n + k, ...]`` with ``fill`` past the edge."""
    out = np.full_like(a, fill)
    n = a.shape[axis]
    if abs(k) >= n:
        return out
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if k >= 0:
        src[axis], dst[axis] = slice(k, None), slice(0, n - k)
    else:
        src[axis], dst[axis] = slice(0, n + k), slice(-k, None)
    out[tuple(dst)] = a[tuple(src)]
    return out


def _partial(f: np.ndarray, mask: np.ndarray, h: float, axis: int, order: int):
    """Derivative along one axis with mask-aware stencils.

    Returns ``(d, ok, one_sided)``.
    """
    sh = lambda a, k, fill: _shift(a, k, axis, fill)  # noqa: E731
    f0 = np.where(mask, f, 0)
    p1, m1 = sh(f0, 1, 0), sh(f0, -1, 0)
    p2, m2 = sh(f0, 2, 0), sh(f0, -2, 0)
    P1, M1 = sh(mask, 1, False) & mask, sh(mask, -1, False) & mask
    P2, M2 = sh(mask, 2, False) & P1, sh(mask, -2, False) & M1
    d = np.zeros_like(f0)
    done = np.zeros(mask.shape, bool)
    one_sided = np.zeros(mask.shape, bool)

    def put(sel, val, side=False):
        nonlocal d
        sel = sel & ~done
        d = np.where(sel, val, d)
        done[sel] = True
        one_sided[sel] = side

    if order == 4:
        put(P2 & M2, (-p2 + 8 * p1 - 8 * m1 + m2) / (12 * h))
    elif order != 2:
        raise ValueError("order must be 2 or 4")
    put(P1 & M1, (p1 - m1) / (2 * h))
    put(P2, (-3 * f0 + 4 * p1 - p2) / (2 * h), True)
    put(M2, (3 * f0 - 4 * m1 + m2) / (2 * h), True)
    put(P1, (p1 - f0) / h, True)
    put(M1, (f0 - m1) / h, True)
    return d, done & mask, one_sided


def wirtinger(fmap: SampledMap, order: int = 2) -> WirtingerJet:
    """Finite-difference ``f_z = (f_x - i f_y)/2`` and ``f_zbar = (f_x + i f_y)/2``.

    Central differences where both neighbours are masked, one-sided (flagged
    ``low_order``) otherwise; nodes with no neighbour along an axis are dropped.
    Exact on affine maps ``a z + b conj(z) + c`` for either order.
    """
    g = fmap.grid
    f = fmap.values
    fx, okx, sx = _partial(f, g.mask, g.spacing, axis=1, order=order)
    fy, oky, sy = _partial(f, g.mask, g.spacing, axis=0, order=order)
    valid = okx & oky
    nan = np.nan + 0j
    fz = np.where(valid, 0.5 * (fx - 1j * fy), nan)
    fzb = np.where(valid, 0.5 * (fx + 1j * fy), nan)
    return WirtingerJet(g, np.where(valid, f, nan), fz, fzb, valid, (sx | sy) & valid)


def analytic_jet(fmap: SampledMap) -> WirtingerJet:
    """Jet from the map's exact derivative closure."""
    if fmap.derivatives is None:
        raise ValueError("map carries no exact derivatives")
    g = fmap.grid
    z = g.nodes[g.mask]
    fz = np.full(g.shape, np.nan + 0j)
    fzb = fz.copy()
    a, b = fmap.derivatives(z)
    fz[g.mask] = a
    fzb[g.mask] = b
    return WirtingerJet(g, fmap.values, fz, fzb, g.mask.copy(), np.zeros(g.shape, bool))


def jet_of(fmap: SampledMap, order: int = 2, exact: bool = False) -> WirtingerJet:
    return analytic_jet(fmap) if exact else wirtinger(fmap, order)


def integrate(values: np.ndarray, grid: Grid, where: Optional[np.ndarray] = None) -> float:
    """Area integral: midpoint sum against the grid's cut-cell weights."""
    sel = grid.mask if where is None else (where & grid.mask)
    if not sel.any():
        return 0.0
    v = np.asarray(values)
    if np.iscomplexobj(v):
        raise TypeError("integrate expects a real field; split real/imaginary parts")
    if v.shape != grid.shape:
        raise ValueError("field shape does not match grid")
    return float(np.sum(v[sel] * grid.weights[sel]) * grid.spacing ** 2)


def integrate_complex(values: np.ndarray, grid: Grid, where=None) -> complex:
    v = np.asarray(values)
    return complex(integrate(v.real, grid, where), integrate(v.imag, grid, where))
