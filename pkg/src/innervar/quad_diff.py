"""Holomorphic quadratic differentials and their vertical trajectories.

A curve is vertical for ``H dz^2`` when ``H(z) * zdot^2 < 0``; the unit
tangent field ``exp(i(pi - arg H)/2)`` is defined up to sign, and tracing
keeps the sign closest to the previous tangent.  Tracing runs on Python
complex scalars (RK4 in arc length); everything else is vectorised.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .domain import PlanarDomain
from .expr import Expression, parse
from .field import Grid, integrate

EXCLUSION_RADIUS = 1e-2
CLOSURE_TOL = 1e-5
ANGLE_TOL = 1e-3
STEP_MIN, STEP_MAX = 1e-4, 1e-2
STEP_LIMIT = 1_000_000
TURN_MAX = 0.05          # radians of tangent turn allowed per step
ESCAPE_RADIUS = 1e6

KINDS = ("closed", "crosscut", "hit_critical", "escaped", "step_limit")


@dataclass(frozen=True, eq=False)
class QuadDifferential:
    """``H(z) dz (x) dz`` for a rational ``H`` with known zeros and poles."""

    name: str
    expression: Expression
    exclusion_radius: float = EXCLUSION_RADIUS

    @classmethod
    def from_expression(cls, text: str, name: str | None = None,
                        exclusion_radius: float = EXCLUSION_RADIUS) -> "QuadDifferential":
        return cls(name or text, parse(text), exclusion_radius)

    def __call__(self, z):
        return self.expression(z)

    @property
    def zeros(self):
        return self.expression.zeros

    @property
    def poles(self):
        return self.expression.poles

    @property
    def critical_points(self) -> list[complex]:
        return [p for p, _ in self.zeros] + [p for p, _ in self.poles]

    def log_derivative(self, z):
        return self.expression.factored.log_derivative(z)

    def critical_distance(self, z):
        """Distance to the nearest zero or pole (``inf`` if there are none)."""
        z = np.asarray(z, dtype=complex)
        d = np.full(z.shape, np.inf)
        for p in self.critical_points:
            d = np.minimum(d, np.abs(z - p))
        return d

    def to_dict(self):
        return {"name": self.name, "expression": self.expression.text,
                "zeros": [[p.real, p.imag, m] for p, m in self.zeros],
                "poles": [[p.real, p.imag, m] for p, m in self.poles]}


def leminiscate() -> QuadDifferential:
    """``(z/(1 - z^2))^2``: double zero at 0, double poles at +-1."""
    return QuadDifferential.from_expression("(z/(1-z^2))^2", "leminiscate")


def four_pole() -> QuadDifferential:
    """Square of ``5/(z-2) + 5/(z+2) + 7/(z-4) + 7/(z+4)``; zeros 0 and +-3."""
    return QuadDifferential.from_expression("(5/(z-2)+5/(z+2)+7/(z-4)+7/(z+4))^2", "four_pole")


def hyperelliptic(n: int) -> QuadDifferential:
    """``n z^(n-2) (z^n - n + 1)/(z^n + 1)^2`` for ``n >= 2``."""
    if int(n) != n or n < 2:
        raise ValueError("hyperelliptic family needs an integer n >= 2")
    n = int(n)
    return QuadDifferential.from_expression(f"{n}*z^{n - 2}*(z^{n}-{n}+1)/(z^{n}+1)^2",
                                            f"hyperelliptic_{n}")


def constant(c: complex = 1.0) -> QuadDifferential:
    return QuadDifferential.from_expression(repr(complex(c)).strip("()").replace("j", "i"),
                                            f"constant_{c}")


def builtin_differentials(ns: Sequence[int] = (3, 4)) -> dict[str, QuadDifferential]:
    cat = {"leminiscate": leminiscate(), "four_pole": four_pole()}
    for n in ns:
        q = hyperelliptic(n)
        cat[q.name] = q
    return cat


# -- tracing ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Trajectory:
    points: np.ndarray
    kind: str
    h_length: float
    seed: complex
    closure_error: float = math.nan
    steps: int = 0
    ends: tuple = ()        # termination reason of each traced branch

    @property
    def closed(self) -> bool:
        return self.kind == "closed"

    def to_dict(self):
        return {"kind": self.kind, "h_length": self.h_length,
                "seed": [self.seed.real, self.seed.imag], "closure_error": self.closure_error,
                "steps": self.steps, "n_points": int(len(self.points))}


class _Tracer:
    def __init__(self, qd: QuadDifferential, domain: PlanarDomain | None,
                 step_min, step_max, closure_tol, step_limit):
        self.H = qd.expression._fn
        self.roots = list(qd.expression.factored.roots)
        self.crit = qd.critical_points
        self.excl = qd.exclusion_radius
        self.domain = domain
        self.step_min, self.step_max = step_min, step_max
        self.closure_tol = closure_tol
        self.step_limit = step_limit

    def direction(self, z, prev):
        d = cmath.exp(0.5j * (math.pi - cmath.phase(self.H(z))))
        if (d * prev.conjugate()).real < 0:
            d = -d
        return d

    def step_size(self, z):
        g = sum(abs(m / (z - p)) for p, m in self.roots) if self.roots else 0.0
        return min(max(self.step_max / (1.0 + g), self.step_min), self.step_max)

    def rk4(self, z, t, s):
        k1 = self.direction(z, t)
        k2 = self.direction(z + 0.5 * s * k1, k1)
        k3 = self.direction(z + 0.5 * s * k2, k1)
        k4 = self.direction(z + s * k3, k1)
        zn = z + s * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        return zn, self.direction(zn, k1), k1

    def inside(self, z):
        if self.domain is None:
            return abs(z) < ESCAPE_RADIUS
        return bool(self.domain.sdf(np.array([z]))[0] > 0)

    def near_critical(self, z):
        return any(abs(z - p) < self.excl for p in self.crit)

    def _refine(self, z, t, s, predicate):
        """Largest fraction of the step ``s`` for which ``predicate`` still holds."""
        lo, hi = 0.0, s
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if predicate(self.rk4(z, t, mid)[0]):
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-13:
                break
        return self.rk4(z, t, hi)[0]

    def run(self, seed, t0, watch_closure):
        """Trace one branch; returns (points, reason, closure_error, steps)."""
        pts = [seed]
        z, t = seed, t0
        left_seed = False
        for n in range(self.step_limit):
            s = self.step_size(z)
            while True:
                zn, tn, k1 = self.rk4(z, t, s)
                turn = abs(cmath.phase(tn / k1))
                if turn <= TURN_MAX or s <= self.step_min:
                    break
                s = max(0.5 * s, self.step_min)
            if not self.inside(zn):
                end = self._refine(z, t, s, self.inside)
                pts.append(end)
                return pts, ("escaped" if self.domain is None else "boundary"), math.nan, n + 1
            if self.near_critical(zn):
                pts.append(zn)
                return pts, "critical", math.nan, n + 1
            if watch_closure:
                p0 = ((z - seed) * t0.conjugate()).real
                p1 = ((zn - seed) * t0.conjugate()).real
                if left_seed and p0 < 0 <= p1 and abs(zn - seed) < 10 * s + self.closure_tol:
                    # land exactly on the normal line through the seed
                    lo, hi = 0.0, s
                    for _ in range(60):
                        mid = 0.5 * (lo + hi)
                        if ((self.rk4(z, t, mid)[0] - seed) * t0.conjugate()).real < 0:
                            lo = mid
                        else:
                            hi = mid
                        if hi - lo < 1e-14:
                            break
                    zc = self.rk4(z, t, hi)[0]
                    err = abs(zc - seed)
                    if err < self.closure_tol:
                        pts.append(zc)
                        return pts, "closed", err, n + 1
                # the curve must pass behind the seed's normal line before it can close
                left_seed = left_seed or p1 < 0
            pts.append(zn)
            z, t = zn, tn
        return pts, "step_limit", math.nan, self.step_limit


def trace_vertical(qd: QuadDifferential, seed: complex, domain: PlanarDomain | None = None,
                   step_min: float = STEP_MIN, step_max: float = STEP_MAX,
                   closure_tol: float = CLOSURE_TOL, step_limit: int = STEP_LIMIT) -> Trajectory:
    """Vertical trajectory through ``seed``.

    Traced forward until the curve closes, leaves ``domain``, enters an
    exclusion ball, or the step limit is hit; unless closed, the backward
    branch is traced as well and the two are joined.
    """
    seed = complex(seed)
    tr = _Tracer(qd, domain, step_min, step_max, closure_tol, step_limit)
    if tr.near_critical(seed):
        raise ValueError("seed lies inside an exclusion ball")
    if domain is not None and not tr.inside(seed):
        raise ValueError("seed lies outside the domain")
    h0 = tr.H(seed)
    if h0 == 0 or not cmath.isfinite(h0):
        raise ValueError("differential vanishes or is singular at the seed")
    t0 = cmath.exp(0.5j * (math.pi - cmath.phase(h0)))
    fwd, why_f, err, nf = tr.run(seed, t0, watch_closure=True)
    if why_f == "closed":
        pts = np.array(fwd)
        return Trajectory(pts, "closed", h_length(qd, pts), seed, err, nf, ("closed",))
    bwd, why_b, _, nb = tr.run(seed, -t0, watch_closure=False)
    pts = np.array(bwd[::-1] + fwd[1:])
    ends = (why_b, why_f)
    if "critical" in ends:
        kind = "hit_critical"
    elif "step_limit" in ends:
        kind = "step_limit"
    elif "escaped" in ends:
        kind = "escaped"
    else:
        kind = "crosscut"
    return Trajectory(pts, kind, h_length(qd, pts), seed, math.nan, nf + nb, ends)


# -- line integrals --------------------------------------------------------------

def line_integral_abs(qd: QuadDifferential, path, weight: Callable | None = None) -> float:
    """``int |weight| sqrt|H| |dz|`` along a polyline, Simpson per segment."""
    p = np.asarray(path, dtype=complex)
    if p.size < 2:
        return 0.0
    a, b = p[:-1], p[1:]
    m = 0.5 * (a + b)

    def f(z):
        v = np.sqrt(np.abs(qd(z)))
        if weight is not None:
            v = v * np.abs(weight(z))
        return v
    return float(np.sum(np.abs(b - a) * (f(a) + 4 * f(m) + f(b)) / 6.0))


def h_length(qd: QuadDifferential, path) -> float:
    """H-length ``int sqrt|H| |dz|`` of a polyline."""
    return line_integral_abs(qd, path)


def verticality_residual(qd: QuadDifferential, traj) -> float:
    """Max over chords of ``|arg(H(mid) * chord^2) - pi|``."""
    p = traj.points if isinstance(traj, Trajectory) else np.asarray(traj, dtype=complex)
    if p.size < 2:
        raise ValueError("trajectory needs at least two points")
    d = np.diff(p)
    keep = np.abs(d) > 0
    m = 0.5 * (p[:-1] + p[1:])
    w = -qd(m[keep]) * d[keep] ** 2
    return float(np.max(np.abs(np.angle(w))))


def verticality_values(qd: QuadDifferential, z, zdot) -> np.ndarray:
    """``H(z) * zdot^2`` along an analytic parametrisation."""
    return qd(np.asarray(z, dtype=complex)) * np.asarray(zdot, dtype=complex) ** 2


def leminiscate_curve(r: float, n: int = 2001):
    """Closed trajectory ``sqrt(1 + r^2 e^{4it})``, ``|t| <= pi/4``, and its velocity."""
    t = np.linspace(-np.pi / 4, np.pi / 4, n)
    w = 1 + r ** 2 * np.exp(4j * t)
    z = np.sqrt(w)          # principal branch has Re > 0 on this range for r < 1
    zdot = 2j * r ** 2 * np.exp(4j * t) / z
    return z, zdot


def sup_distance_to_curve(points, curve) -> float:
    """Max over ``points`` of the distance to the densely sampled polyline ``curve``."""
    pts = np.asarray(points, dtype=complex)
    a = np.asarray(curve, dtype=complex)
    b = np.roll(a, -1)[:-1]
    a = a[:-1]
    d = b - a
    out = 0.0
    for s in range(0, pts.size, 512):
        q = pts[s:s + 512, None]
        t = np.clip(((q - a) * np.conj(d)).real / np.abs(d) ** 2, 0, 1)
        out = max(out, float(np.max(np.min(np.abs(q - (a + t * d)), axis=1))))
    return out


# -- square-root continuation ------------------------------------------------------

def continued_sqrt(values: np.ndarray, start=None) -> np.ndarray:
    """Square roots along paths (last axis), each chosen closest to its predecessor.

    The first root on each path is the principal one (``Re >= 0``) unless
    ``start`` is given, in which case the root nearest ``start`` is used.
    """
    raw = np.sqrt(np.asarray(values, dtype=complex))
    if raw.size == 0:
        return raw
    s0 = np.ones(raw.shape[:-1] + (1,))
    if start is not None:
        st = np.asarray(start, dtype=complex)[..., None]
        s0 = np.where((raw[..., :1] * np.conj(st)).real < 0, -1.0, 1.0)
    dots = (raw[..., 1:] * np.conj(raw[..., :-1])).real
    flips = np.where(dots < 0, -1.0, 1.0)
    sign = s0 * np.concatenate([np.ones_like(s0), np.cumprod(flips, axis=-1)], axis=-1)
    return raw * sign


def _refine_path(qd: QuadDifferential, path, max_piece: float) -> np.ndarray:
    p = np.asarray(path, dtype=complex)
    if p.size < 2:
        raise ValueError("path needs at least two points")
    dist = float(np.min(qd.critical_distance(p))) if qd.critical_points else np.inf
    piece = min(max_piece, 0.05 * dist) if np.isfinite(dist) else max_piece
    out = [p[:1]]
    for a, b in zip(p[:-1], p[1:]):
        k = max(1, int(math.ceil(abs(b - a) / piece)))
        out.append(a + (b - a) * np.arange(1, k + 1) / k)
    fine = np.concatenate(out)
    # segment interiors may pass closer to a critical point than the vertices
    mids = 0.5 * (fine[:-1] + fine[1:])
    if qd.critical_points and np.min(qd.critical_distance(np.concatenate([fine, mids]))) < qd.exclusion_radius:
        raise ValueError("path enters an exclusion ball")
    return fine


def _sqrt_integral(qd, fine, start=None):
    """Cumulative ``int sqrt(H) dz`` at every vertex of ``fine`` (Simpson)."""
    m = 0.5 * (fine[:-1] + fine[1:])
    seq = np.empty(2 * fine.size - 1, complex)
    seq[0::2] = fine
    seq[1::2] = m
    r = continued_sqrt(qd(seq), start)
    fa, fm, fb = r[0:-1:2], r[1::2], r[2::2]
    inc = (fine[1:] - fine[:-1]) * (fa + 4 * fm + fb) / 6.0
    return np.concatenate([[0j], np.cumsum(inc)]), r[-1]


def distinguished_parameter(qd: QuadDifferential, base: complex, target: complex,
                            path=None, max_piece: float = 1e-2) -> complex:
    """``int_path sqrt(H) dz`` from ``base`` to ``target``.

    The branch starts as the principal root at ``base`` and is continued
    along the path (straight segment by default).
    """
    if path is None:
        path = [base, target]
    p = np.asarray(path, dtype=complex)
    if abs(p[0] - base) > 1e-12 or abs(p[-1] - target) > 1e-12:
        raise ValueError("path must run from base to target")
    fine = _refine_path(qd, p, max_piece)
    return complex(_sqrt_integral(qd, fine)[0][-1])


# -- circular domains ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CircularMap:
    trajectory: Trajectory
    length: float
    center: complex
    cut_angle: float
    samples: np.ndarray
    values: np.ndarray
    modulus_spread: float          # relative spread of |Phi| on the seed trajectory

    def to_dict(self):
        return {"length": self.length, "center": [self.center.real, self.center.imag],
                "cut_angle": self.cut_angle, "modulus_spread": self.modulus_spread,
                "n_samples": int(self.samples.size)}


def _polar_path(base, target, center, cut_angle, max_piece):
    """Arc about ``center`` at the base radius, then a radial leg; never crosses the cut ray."""
    r0, r1 = abs(base - center), abs(target - center)
    a0 = (cmath.phase(base - center) - cut_angle) % (2 * math.pi)
    a1 = (cmath.phase(target - center) - cut_angle) % (2 * math.pi)
    n_arc = max(2, int(math.ceil(r0 * abs(a1 - a0) / max_piece)) + 1)
    arc = center + r0 * np.exp(1j * (cut_angle + np.linspace(a0, a1, n_arc)))
    n_rad = max(2, int(math.ceil(abs(r1 - r0) / max_piece)) + 1)
    rad = center + np.linspace(r0, r1, n_rad) * np.exp(1j * (cut_angle + a1))
    return np.concatenate([arc, rad[1:]])


def circular_map(qd: QuadDifferential, seed: complex, samples, center: complex,
                 cut_angle: float | None = None, domain: PlanarDomain | None = None,
                 max_piece: float = 2e-3, check_points: int = 64) -> CircularMap:
    """``Phi(z) = exp((2 pi / l) int_seed^z sqrt(H) dz)`` on a circular domain.

    ``l`` is the H-length of the closed trajectory through ``seed``; paths run
    in polar coordinates about ``center`` (a point enclosed by the domain)
    and avoid the cut ray leaving ``center`` at ``cut_angle`` (by default
    pointing away from the seed).
    """
    traj = trace_vertical(qd, seed, domain)
    if not traj.closed:
        raise ValueError(f"trajectory through the seed is {traj.kind}, not closed")
    ell = traj.h_length
    if cut_angle is None:
        cut_angle = cmath.phase(seed - center) + math.pi
    base_root = np.sqrt(complex(qd(np.array([seed]))[0]))

    def phi(points):
        out = np.empty(len(points), complex)
        for k, z in enumerate(points):
            path = _polar_path(complex(seed), complex(z), center, cut_angle, max_piece)
            fine = _refine_path(qd, path, max_piece)
            out[k] = np.exp(2 * np.pi / ell * _sqrt_integral(qd, fine, base_root)[0][-1])
        return out

    samples = np.atleast_1d(np.asarray(samples, dtype=complex))
    vals = phi(samples)
    idx = np.linspace(0, len(traj.points) - 1, check_points).astype(int)
    on = traj.points[idx]
    # stay off the cut ray itself
    ang = (np.angle(on - center) - cut_angle) % (2 * np.pi)
    on = on[(ang > 1e-3) & (ang < 2 * np.pi - 1e-3)]
    mod = np.abs(phi(on))
    spread = float((mod.max() - mod.min()) / mod.mean())
    return CircularMap(traj, ell, complex(center), float(cut_angle), samples, vals, spread)


# -- configuration ---------------------------------------------------------------------

_CLASS = {"closed": "circular", "crosscut": "strip", "hit_critical": "critical",
          "escaped": "inconclusive", "step_limit": "inconclusive"}


@dataclass(eq=False)
class StrebelDecomposition:
    seeds: list
    trajectories: list
    classes: list
    counts: dict = field(default_factory=dict)

    @property
    def strebel_type(self) -> bool:
        """Every classified seed gave a closed trajectory or a crosscut."""
        return self.counts.get("inconclusive", 0) == 0 and (
            self.counts.get("circular", 0) + self.counts.get("strip", 0)) > 0

    @property
    def coverage(self) -> float:
        n = len(self.seeds)
        return (self.counts.get("circular", 0) + self.counts.get("strip", 0)) / n if n else 0.0

    def to_dict(self):
        return {"strebel_type": self.strebel_type, "coverage": self.coverage,
                "counts": self.counts,
                "seeds": [{"seed": [complex(s).real, complex(s).imag], "class": c, **t.to_dict()}
                          for s, c, t in zip(self.seeds, self.classes, self.trajectories)]}


def classify_configuration(qd: QuadDifferential, domain: PlanarDomain, seeds: Sequence[complex],
                           **trace_kw) -> StrebelDecomposition:
    """Trace from every seed and sort into circular / strip / critical / inconclusive.

    Seeds hitting an exclusion ball are listed as ``critical`` and do not
    count against the Strebel-type verdict; step-limit or escaped traces are
    ``inconclusive`` and do.  Coverage is the share of circular + strip.
    """
    trajs, classes = [], []
    counts = {k: 0 for k in ("circular", "strip", "critical", "inconclusive")}
    for s in seeds:
        t = trace_vertical(qd, s, domain, **trace_kw)
        c = _CLASS[t.kind]
        trajs.append(t)
        classes.append(c)
        counts[c] += 1
    return StrebelDecomposition(list(seeds), trajs, classes, counts)


# -- length-area ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LengthAreaReport:
    lines: list
    lines_pass: bool
    witness: int | None
    area_f: float | None
    area_g: float | None

    @property
    def area_margin(self):
        return None if self.area_f is None else self.area_g - self.area_f

    @property
    def passed(self) -> bool:
        return self.lines_pass and self.area_margin is not None and self.area_margin >= 0

    def to_dict(self):
        return {"passed": self.passed, "lines_pass": self.lines_pass, "witness": self.witness,
                "area_f": self.area_f, "area_g": self.area_g, "area_margin": self.area_margin,
                "lines": self.lines}


def length_area_check(qd: QuadDifferential, trajectories, F: Callable, G: Callable,
                      grid: Grid, tol: float = 1e-9) -> LengthAreaReport:
    """Line inequalities on sampled trajectories, then the area inequality on ``grid``.

    ``trajectories`` is a list of :class:`Trajectory` or a
    :class:`StrebelDecomposition` (only circular and strip seeds are used).
    A line passes when ``int_F <= int_G + tol * int_G``.
    """
    if isinstance(trajectories, StrebelDecomposition):
        trajectories = [t for t, c in zip(trajectories.trajectories, trajectories.classes)
                        if c in ("circular", "strip")]
    lines, witness = [], None
    for k, t in enumerate(trajectories):
        lf = line_integral_abs(qd, t.points, F)
        lg = line_integral_abs(qd, t.points, G)
        ok = bool(lf <= lg + tol * abs(lg))
        lines.append({"index": k, "kind": t.kind, "line_f": lf, "line_g": lg,
                      "margin": lg - lf, "ok": ok})
        if not ok and witness is None:
            witness = k
    if witness is not None:
        return LengthAreaReport(lines, False, witness, None, None)
    z = grid.nodes[grid.mask]
    ah = np.abs(qd(z))
    vf = np.zeros(grid.shape)
    vg = np.zeros(grid.shape)
    vf[grid.mask] = np.abs(F(z)) * ah
    vg[grid.mask] = np.abs(G(z)) * ah
    return LengthAreaReport(lines, True, None, integrate(vf, grid), integrate(vg, grid))


def distortion_weight(qd: QuadDifferential, eta, epsilon: float) -> Callable:
    """``G = |f_z - (H/|H|) f_zbar| sqrt|H(f)| / sqrt|H|`` for ``f = z + eps*eta``.

    Its line integral along a vertical arc equals the H-length of the image
    arc under ``f``.
    """
    def G(z):
        z = np.asarray(z, dtype=complex)
        e, ex, eb = eta(z)
        f = z + epsilon * e
        fz, fzb = 1.0 + epsilon * ex, epsilon * eb
        h = qd(z)
        ah = np.abs(h)
        unit = np.where(ah > 0, h / np.where(ah > 0, ah, 1.0), 0.0)
        return np.abs(fz - unit * fzb) * np.sqrt(np.abs(qd(f))) / np.sqrt(ah)
    return G


def leminiscate_ring(r_in: float = 0.3, r_out: float = 0.9, n: int = 720) -> PlanarDomain:
    """Circular domain around +1 bounded by the closed trajectories of parameters r_in < r_out."""
    z_out, _ = leminiscate_curve(r_out, n + 1)
    z_in, _ = leminiscate_curve(r_in, n + 1)
    return PlanarDomain.polygon(z_out[:-1]) - PlanarDomain.polygon(z_in[:-1])
