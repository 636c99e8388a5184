"""Rectangular partitions with corners at prescribed zeros, and branch bookkeeping.

The mesh is cut by lines at integer multiples of ``eps`` plus the horizontal
and vertical lines through every zero; the family keeps the cells whose
closures meet the compact set ``K``.  On each cell a continuous branch
``A = +-sqrt(H)`` is chosen independently, and ``f = A * eta`` is
integrated with tensor Gauss-Legendre quadrature (Duffy-collapsed at a
corner carrying a zero, where ``A'`` blows up).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .domain import PlanarDomain
from .quad_diff import continued_sqrt

LINE_TOL = 1e-12
GL_SIDE = 8


@dataclass(frozen=True)
class Side:
    """Shared side of ``a`` and ``b``; ``p -> q`` runs counterclockwise for ``a``."""

    a: int
    b: int
    p: complex
    q: complex
    sign: int          # orientation of the canonical direction (increasing coordinate) w.r.t. a


@dataclass(frozen=True, eq=False)
class RectPartition:
    rects: np.ndarray             # (N, 4): x0, y0, x1, y1
    cells: np.ndarray             # (N, 2): column and row index into xs, ys
    xs: np.ndarray
    ys: np.ndarray
    zeros: tuple
    eps: float
    adjacency: tuple              # ordered pairs, see Side
    signs: np.ndarray = field(default=None)

    def __len__(self):
        return len(self.rects)

    @property
    def corners(self) -> np.ndarray:
        r = self.rects
        pts = np.concatenate([r[:, 0] + 1j * r[:, 1], r[:, 2] + 1j * r[:, 1],
                              r[:, 2] + 1j * r[:, 3], r[:, 0] + 1j * r[:, 3]])
        return np.unique(np.round(pts, 12))

    def contains_open(self, z, k) -> bool:
        x0, y0, x1, y1 = self.rects[k]
        return x0 < z.real < x1 and y0 < z.imag < y1

    def with_signs(self, signs) -> "RectPartition":
        s = np.asarray(signs, dtype=float)
        if s.shape != (len(self),) or not np.all(np.abs(s) == 1):
            raise ValueError("branch signs must be +-1, one per rectangle")
        return RectPartition(self.rects, self.cells, self.xs, self.ys, self.zeros, self.eps,
                             self.adjacency, s)

    def to_dict(self):
        return {"eps": self.eps, "zeros": [[z.real, z.imag] for z in self.zeros],
                "rects": self.rects.tolist(),
                "signs": (np.ones(len(self)) if self.signs is None else self.signs).tolist(),
                "adjacency": [[s.a, s.b, s.sign, [s.p.real, s.p.imag], [s.q.real, s.q.imag]]
                              for s in self.adjacency]}


def _lines(lo, hi, eps, extra):
    k0, k1 = math.floor(lo / eps) - 1, math.ceil(hi / eps) + 1
    base = list(np.arange(k0, k1 + 1) * eps)
    vals = sorted(base + [float(e) for e in extra])
    out = [vals[0]]
    for v in vals[1:]:
        if v - out[-1] > LINE_TOL * max(1.0, abs(v)):
            out.append(v)
    return np.array(out)


def distance_to_boundary(domain: PlanarDomain, K: PlanarDomain, n: int = 720) -> float:
    """``dist(K, boundary of domain)`` estimated on sampled outlines of ``K``."""
    # polygon outlines only list vertices; densify edges
    loops = []
    for loop in K.outline(n):
        loop = np.asarray(loop, dtype=complex)
        nxt = np.roll(loop, -1)
        t = np.linspace(0, 1, 16, endpoint=False)
        loops.append((loop[:, None] + (nxt - loop)[:, None] * t[None, :]).ravel())
    pts = np.concatenate(loops)
    return float(np.min(domain.sdf(pts)))


def build_partition(domain: PlanarDomain, K: PlanarDomain, zeros: Sequence[complex], eps: float,
                    check_distance: bool = True) -> RectPartition:
    """Family of mesh rectangles whose closures meet ``K``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    zeros = tuple(complex(z) for z in zeros)
    if check_distance:
        d = distance_to_boundary(domain, K)
        if not d > 2 * eps:
            raise ValueError(f"dist(K, boundary) = {d:.6g} is not > 2*eps = {2 * eps:.6g}")
    for z in zeros:
        if not K.sdf(np.array([z]))[0] >= -LINE_TOL:
            raise ValueError(f"zero {z} is not in K")
    x0, y0, x1, y1 = K.bounding_box
    xs = _lines(x0, x1, eps, [z.real for z in zeros])
    ys = _lines(y0, y1, eps, [z.imag for z in zeros])
    rects, cells = [], []
    index = {}
    for j in range(len(ys) - 1):
        for i in range(len(xs) - 1):
            r = (xs[i], ys[j], xs[i + 1], ys[j + 1])
            if K.intersects_rect(*r, tol=LINE_TOL):
                index[(i, j)] = len(rects)
                rects.append(r)
                cells.append((i, j))
    if not rects:
        raise ValueError("K meets no mesh rectangle")
    adj = []
    for (i, j), a in index.items():
        x0, y0, x1, y1 = rects[a]
        right = index.get((i + 1, j))
        if right is not None:
            p, q = complex(x1, y0), complex(x1, y1)       # upward: ccw for the left cell
            adj.append(Side(a, right, p, q, +1))
            adj.append(Side(right, a, q, p, -1))
        top = index.get((i, j + 1))
        if top is not None:
            p, q = complex(x1, y1), complex(x0, y1)       # leftward: ccw for the lower cell
            adj.append(Side(a, top, p, q, -1))
            adj.append(Side(top, a, q, p, +1))
    return RectPartition(np.array(rects), np.array(cells), xs, ys, zeros, float(eps),
                         tuple(adj), np.ones(len(rects)))


# -- branches -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BranchData:
    signs: np.ndarray
    center_roots: np.ndarray       # sign * principal sqrt(H) at each center
    max_jump: float                # largest relative step of A along sampling legs
    max_square_error: float        # max |A^2 - H| / |H| on samples


def _legs(center, targets, n_leg):
    """Axis-parallel path center -> (x_target, y_center) -> target, per target."""
    t = np.linspace(0, 1, n_leg)
    mid = targets.real + 1j * center.imag
    leg1 = center + (mid[:, None] - center) * t[None, :]
    leg2 = mid[:, None] + (targets - mid)[:, None] * t[None, 1:]
    return np.concatenate([leg1, leg2], axis=1)


def branch_values(H: Callable, center: complex, root: complex, points: np.ndarray,
                  n_leg: int = 24) -> np.ndarray:
    """Continue ``sqrt(H)`` from ``root`` at ``center`` to each point along axis legs."""
    pts = np.asarray(points, dtype=complex).ravel()
    path = _legs(center, pts, n_leg)
    vals = continued_sqrt(H(path), np.full(pts.shape, root))
    return vals[:, -1].reshape(np.shape(points))


def _winding(H, rect, n=256):
    x0, y0, x1, y1 = rect
    dx, dy = 1e-3 * (x1 - x0), 1e-3 * (y1 - y0)
    x0, x1, y0, y1 = x0 + dx, x1 - dx, y0 + dy, y1 - dy
    t = np.linspace(0, 1, n, endpoint=False)
    loop = np.concatenate([x0 + (x1 - x0) * t + 1j * y0, x1 + 1j * (y0 + (y1 - y0) * t),
                           x1 - (x1 - x0) * t + 1j * y1, x0 + 1j * (y1 - (y1 - y0) * t)])
    v = H(loop)
    d = np.angle(np.roll(v, -1) / v)
    return int(round(np.sum(d) / (2 * np.pi)))


def assign_branches(partition: RectPartition, H: Callable, signs=None,
                    rng: np.random.Generator | None = None, samples: int = 5) -> BranchData:
    """Choose ``A_a = s_a * sqrt(H)`` per rectangle and sample its continuity.

    ``signs`` defaults to the partition's own; pass ``rng`` for random signs.
    Rejects a partition whose open rectangles contain a zero of ``H``.
    """
    n = len(partition)
    if signs is None:
        signs = rng.choice([-1.0, 1.0], size=n) if rng is not None else (
            partition.signs if partition.signs is not None else np.ones(n))
    signs = np.asarray(signs, dtype=float)
    roots = np.empty(n, complex)
    jump, sq = 0.0, 0.0
    u = (np.arange(samples) + 0.5) / samples
    for k, (x0, y0, x1, y1) in enumerate(partition.rects):
        c = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
        hc = complex(np.asarray(H(np.array([c])))[0])
        if hc == 0 or _winding(H, (x0, y0, x1, y1)) != 0:
            raise ValueError(f"H vanishes inside rectangle {k}")
        roots[k] = signs[k] * np.sqrt(hc)
        pts = (x0 + (x1 - x0) * u)[None, :] + 1j * (y0 + (y1 - y0) * u)[:, None]
        pts = pts.ravel()
        hv = H(pts)
        if np.any(hv == 0):
            raise ValueError(f"H vanishes inside rectangle {k}")
        path = _legs(c, pts, 24)
        a = continued_sqrt(H(path), np.full(pts.shape, roots[k]))
        steps = np.abs(np.diff(a, axis=1)) / np.maximum(np.abs(a[:, 1:]), 1e-300)
        jump = max(jump, float(steps.max()))
        sq = max(sq, float(np.max(np.abs(a[:, -1] ** 2 - hv) / np.abs(hv))))
    return BranchData(signs, roots, jump, sq)


# -- quadrature -------------------------------------------------------------------

def _derivative(H: Callable, z: np.ndarray, dH: Callable | None):
    if dH is not None:
        return dH(z)
    d = 1e-5 * np.maximum(1.0, np.abs(z))
    # complex-step central difference; H is holomorphic
    return (H(z + d) - H(z - d)) / (2 * d)


def _rect_nodes(rect, n, corner=None):
    """Quadrature nodes/weights on a rectangle; Duffy-collapsed at ``corner`` if given."""
    x0, y0, x1, y1 = rect
    g, w = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (g + 1)
    wu = 0.5 * w
    if corner is None:
        X = x0 + (x1 - x0) * u
        Y = y0 + (y1 - y0) * u
        pts = X[None, :] + 1j * Y[:, None]
        wts = (wu[None, :] * wu[:, None]) * (x1 - x0) * (y1 - y0)
        return pts.ravel(), wts.ravel()
    cs = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    k = int(np.argmin([abs(c - corner) for c in cs]))
    c = cs[k]
    b, d, e = cs[(k + 1) % 4], cs[(k + 2) % 4], cs[(k + 3) % 4]
    P, W = [], []
    for p, q in ((b, d), (d, e)):
        # z = c + s*((p - c) + t*(q - p)), dA = s * |cross| ds dt
        area2 = abs(((p - c).conjugate() * (q - p)).imag)
        S, T = np.meshgrid(u, u, indexing="ij")
        WS, WT = np.meshgrid(wu, wu, indexing="ij")
        P.append((c + S * ((p - c) + T * (q - p))).ravel())
        W.append((WS * WT * S * area2).ravel())
    return np.concatenate(P), np.concatenate(W)


def _zero_corner(rect, zeros):
    x0, y0, x1, y1 = rect
    for z in zeros:
        for c in (complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)):
            if abs(z - c) <= LINE_TOL * max(1.0, abs(c)):
                return c
    return None


@dataclass(frozen=True, eq=False)
class JacobianSumReport:
    total: float                    # sum of int J_{f^a}
    sum_fxi2: float                 # sum of int |f_xi|^2
    sum_fxibar2: float              # sum of int |f_xibar|^2
    per_rect: np.ndarray
    green_residual: float           # max |int_R J - (1/2i) loop omega|
    side_residual: float            # max |int omega over a side + its reverse|
    side_total: float               # |sum of (1/2i) loop omega| over all rectangles

    @property
    def relative(self) -> float:
        return abs(self.total) / self.sum_fxi2 if self.sum_fxi2 > 0 else 0.0

    def to_dict(self):
        return {"total": self.total, "relative": self.relative, "sum_fxi2": self.sum_fxi2,
                "sum_fxibar2": self.sum_fxibar2, "green_residual": self.green_residual,
                "side_residual": self.side_residual, "side_total": self.side_total}


def _f_jet(H, dH, eta, pts, center, root, n_leg=24):
    A = branch_values(H, center, root, pts, n_leg)
    Hp = _derivative(H, pts, dH)
    Ap = Hp / (2 * A)
    e, ex, eb = eta(pts)
    return A * e, Ap * e + A * ex, A * eb


def _omega_on_side(H, dH, eta, p, q, n=GL_SIDE):
    """``int_p^q omega``, ``omega = (|eta|^2 conj(H) dH + 2|H|^2 conj(eta) d eta) / (2|H|)``."""
    g, w = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (g + 1)
    z = p + (q - p) * t
    dz = (q - p)
    h = H(z)
    hp = _derivative(H, z, dH)
    e, ex, eb = eta(z)
    deta = ex * dz + eb * np.conj(dz)
    ah = np.abs(h)
    integrand = (np.abs(e) ** 2 * np.conj(h) * hp * dz + 2 * ah ** 2 * np.conj(e) * deta) / (2 * ah)
    return complex(np.sum(0.5 * w * integrand))


def jacobian_sum_check(partition: RectPartition, H: Callable, eta, dH: Callable | None = None,
                       branches: BranchData | None = None, order: int = 12) -> JacobianSumReport:
    """``sum_a int_{R_a} J_{f^a}`` for ``f^a = A_a * eta``, with boundary-form diagnostics."""
    br = branches if branches is not None else assign_branches(partition, H)
    tot, s1, s2 = 0.0, 0.0, 0.0
    per = np.empty(len(partition))
    green = 0.0
    loop_sum = 0j
    for k, rect in enumerate(partition.rects):
        x0, y0, x1, y1 = rect
        c = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
        pts, wts = _rect_nodes(rect, order, _zero_corner(rect, partition.zeros))
        _, fx, fb = _f_jet(H, dH, eta, pts, c, br.center_roots[k])
        a2 = float(np.sum(wts * np.abs(fx) ** 2))
        b2 = float(np.sum(wts * np.abs(fb) ** 2))
        per[k] = a2 - b2
        tot += a2 - b2
        s1 += a2
        s2 += b2
        cs = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
        sides = [_omega_on_side(H, dH, eta, cs[m], cs[(m + 1) % 4]) for m in range(4)]
        loop = sum(sides) / 2j
        loop_sum += loop
        green = max(green, abs(per[k] - loop.real) + abs(loop.imag))
    side_res = 0.0
    for s in partition.adjacency:
        va = _omega_on_side(H, dH, eta, s.p, s.q)
        vb = _omega_on_side(H, dH, eta, s.q, s.p)
        side_res = max(side_res, abs(va + vb))
    return JacobianSumReport(tot, s1, s2, per, green, side_res, abs(loop_sum))


def sum_of_squares_identity(partition: RectPartition, H: Callable, eta, dH: Callable | None = None,
                            branches: BranchData | None = None, order: int = 12) -> tuple[float, float]:
    """``(sum int |f^a_xi|^2, sum int |f^a_xibar|^2)``; equal up to quadrature error."""
    r = jacobian_sum_check(partition, H, eta, dH, branches, order)
    return r.sum_fxi2, r.sum_fxibar2


def holomorphic_chain(partition: RectPartition, H: Callable, eta, dH: Callable | None = None,
                      branches: BranchData | None = None, order: int = 12) -> dict:
    """The chain of quantities bounding ``|int H eta_xi eta_xibar|`` by ``int |H||eta_xibar|^2``.

    Each entry dominates the next: ``|H| term``, half sum of squares,
    ``sum int |f_xi f_xibar|``, ``sum |int f_xi f_xibar|``, ``|sum int f_xi f_xibar|``,
    and finally ``|sum int A^2 eta_xi eta_xibar|`` (equal to the previous term
    up to an integral that vanishes for compact support).
    """
    br = branches if branches is not None else assign_branches(partition, H)
    t0 = t1 = t2 = t3 = 0.0
    t4 = 0j
    t5 = 0j
    for k, rect in enumerate(partition.rects):
        x0, y0, x1, y1 = rect
        c = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
        pts, wts = _rect_nodes(rect, order, _zero_corner(rect, partition.zeros))
        _, fx, fb = _f_jet(H, dH, eta, pts, c, br.center_roots[k])
        e, ex, eb = eta(pts)
        h = H(pts)
        t0 += float(np.sum(wts * np.abs(h) * np.abs(eb) ** 2))
        t1 += 0.5 * float(np.sum(wts * (np.abs(fx) ** 2 + np.abs(fb) ** 2)))
        t2 += float(np.sum(wts * np.abs(fx * fb)))
        loc = complex(np.sum(wts * fx * fb))
        t3 += abs(loc)
        t4 += loc
        t5 += complex(np.sum(wts * h * ex * eb))
    return {"hopf_weighted": t0, "half_sum_of_squares": t1, "pointwise_product": t2,
            "sum_of_moduli": t3, "modulus_of_sum": abs(t4), "target": abs(t5)}
