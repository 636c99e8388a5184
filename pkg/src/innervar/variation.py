"""Inner variations ``h -> h o (id + eps*eta)^-1`` and the inequalities they obey.

Convention: for a change of variables ``z = xi + eps*eta(xi)`` the varied map
is ``H(z) = h(xi)``, i.e. ``H`` is ``h`` composed with the inverse of the
change of variables.  With it the exact identity

    E[H] - E[h] = 2 int |Dh|^2 |z_xibar|^2 / J  - 4 Re int Hopf * z_xibar * conj(z_xi) / J

holds (``J = |z_xi|^2 - |z_xibar|^2``, integrals over the ``xi`` plane), and
the energy expands as ``E(eps) = E + c1*eps + c2*eps^2 + O(eps^3)`` with

    c1 = -4 Re int Hopf * eta_xibar
    c2 = 4 (1/2 int |Dh|^2 |eta_xibar|^2 + Re int Hopf * eta_xi * eta_xibar).

``compose(..., forward=True)`` instead evaluates ``h(z + eps*eta(z))``, which
flips the sign of ``c1`` and perturbs ``c2``.  The sign of ``c1`` is the one
the exact identity produces; only its vanishing matters for the verdicts.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage, optimize
from scipy.interpolate import RectBivariateSpline

from .energy import dirichlet_energy, hopf_product, is_hopf_harmonic
from .field import Grid, SampledMap, WirtingerJet, integrate, integrate_complex, jet_of, wirtinger
from .testfunc import TestFunction

EPS_CAP = 1e6
NEWTON_TOL = 1e-14
NEWTON_MAXIT = 60


# -- types -----------------------------------------------------------------

@dataclass(frozen=True)
class InnerVariation:
    """The change of variables ``z = xi + epsilon*eta(xi)``."""

    eta: TestFunction
    epsilon: float

    @property
    def sign(self) -> int:
        return int(np.sign(self.epsilon))

    def __call__(self, xi):
        e, ex, eb = self.eta(xi)
        return xi + self.epsilon * e, 1.0 + self.epsilon * ex, self.epsilon * eb


@dataclass(frozen=True, eq=False)
class VariationSweep:
    epsilons: np.ndarray
    energies: np.ndarray
    c0: float
    c1: float
    c2: float
    c3: float
    c1_analytic: float
    c2_analytic: float
    eps_max: float
    eps_scale: float
    fit_residual: float

    def to_dict(self):
        d = asdict(self)
        d["epsilons"] = [float(e) for e in self.epsilons]
        d["energies"] = [float(e) for e in self.energies]
        return d


@dataclass(frozen=True)
class CriticalDirectionResult:
    c: complex
    defect: float
    relative_defect: float

    def to_dict(self):
        return {"c": [self.c.real, self.c.imag], "defect": self.defect,
                "relative_defect": self.relative_defect}


@dataclass
class BatteryReport:
    entries: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e["ok"] for e in self.entries)

    def worst(self, key: str) -> float:
        return min(e[key] for e in self.entries) if self.entries else np.inf

    def to_dict(self):
        return {"passed": self.passed, "entries": self.entries}


# -- maximal variational parameter -------------------------------------------

def _jacobian_floor(ex, eb, eps):
    """Smallest of ``|1 +- eps*eta_xi|^2 - eps^2 |eta_xibar|^2`` over nodes."""
    b2 = (eps * np.abs(eb)) ** 2
    jp = np.abs(1.0 + eps * ex) ** 2 - b2
    jm = np.abs(1.0 - eps * ex) ** 2 - b2
    return min(jp.min(), jm.min())


def eps_max(eta: TestFunction, grid: Grid, cap: float = EPS_CAP, rtol: float = 1e-6) -> float:
    """Largest ``eps`` keeping both ``xi +- eps*eta`` orientation preserving on the mask.

    Below ``1/max(|eta_xi| + |eta_xibar|)`` the condition holds trivially; a
    geometric scan from there brackets the first failure and bisection
    refines it to ``rtol``.
    """
    _, ex, eb = eta(grid.nodes[grid.mask])
    nz = (ex != 0) | (eb != 0)
    if not nz.any():
        return float(cap)
    ex, eb = ex[nz], eb[nz]
    m = float(np.max(np.abs(ex) + np.abs(eb)))
    lo = 1.0 / m
    hi = lo
    while True:
        hi = lo * 1.02
        if hi >= cap:
            if _jacobian_floor(ex, eb, cap) > 0:
                return float(cap)
            hi = cap
        if _jacobian_floor(ex, eb, hi) <= 0:
            break
        if hi >= cap:
            return float(cap)
        lo = hi
    while hi - lo > rtol * lo:
        mid = 0.5 * (lo + hi)
        if _jacobian_floor(ex, eb, mid) > 0:
            lo = mid
        else:
            hi = mid
    return float(lo)


def default_epsilons(emax: float) -> np.ndarray:
    """Nine points ``+-{1,2,3,4} * emax/40`` and 0."""
    k = np.arange(-4, 5)
    return k * (emax / 40.0)


# -- composition ------------------------------------------------------------

def invert_shift(eta: TestFunction, eps: float, z: np.ndarray) -> np.ndarray:
    """Solve ``xi + eps*eta(xi) = z`` node-wise by Newton iteration."""
    z = np.asarray(z, dtype=complex)
    xi = z.copy()
    if eps == 0 or eta.is_zero:
        return xi
    supp = eta.support
    active = supp.sdf(z) > -1e-12
    if not active.any():
        return xi
    zz = z[active]
    x = zz.copy()
    for _ in range(NEWTON_MAXIT):
        e, ex, eb = eta(x)
        r = x + eps * e - zz
        err = np.max(np.abs(r))
        if err < NEWTON_TOL * max(1.0, np.max(np.abs(zz))):
            break
        a = 1.0 + eps * ex
        b = eps * eb
        d = (b * np.conj(r) - np.conj(a) * r) / (np.abs(a) ** 2 - np.abs(b) ** 2)
        x = x + d
    else:
        raise RuntimeError("inverse change of variables did not converge")
    xi[active] = x
    return xi


def _bicubic(fmap: SampledMap) -> Callable[[np.ndarray], np.ndarray]:
    """Bicubic spline of the samples; off-mask nodes filled by nearest value."""
    g = fmap.grid
    idx = ndimage.distance_transform_edt(~g.mask, return_distances=False, return_indices=True)
    filled = fmap.values[idx[0], idx[1]]
    x = g.origin.real + g.spacing * np.arange(g.nx)
    y = g.origin.imag + g.spacing * np.arange(g.ny)
    sr = RectBivariateSpline(y, x, filled.real, kx=3, ky=3)
    si = RectBivariateSpline(y, x, filled.imag, kx=3, ky=3)

    def f(p):
        p = np.asarray(p)
        return sr.ev(p.imag, p.real) + 1j * si.ev(p.imag, p.real)
    return f


def compose(fmap: SampledMap, var: InnerVariation, forward: bool = False) -> SampledMap:
    """Varied map on the same grid.

    Default: ``H(z) = h(xi)`` where ``z = xi + eps*eta(xi)``.  ``forward=True``
    evaluates ``h(z + eps*eta(z))``.  Off-grid values of ``h`` come from its
    closure, or a bicubic spline of the samples (adds O(h^2) error).
    """
    g = fmap.grid
    eta, eps = var.eta, var.epsilon
    h = fmap.closure if fmap.closure is not None else _bicubic(fmap)
    hd = fmap.derivatives

    def point(z):
        if forward:
            return z + eps * eta.value(z)
        return invert_shift(eta, eps, z)

    def closure(z):
        return h(point(np.asarray(z, dtype=complex)))

    derivs = None
    if hd is not None:
        def derivs(z):
            z = np.asarray(z, dtype=complex)
            if forward:
                _, ex, eb = eta(z)
                xi = z + eps * eta.value(z)
                w_z, w_zb = 1.0 + eps * ex, eps * eb
            else:
                xi = invert_shift(eta, eps, z)
                _, ex, eb = eta(xi)
                a, b = 1.0 + eps * ex, eps * eb
                jac = np.abs(a) ** 2 - np.abs(b) ** 2
                w_z, w_zb = np.conj(a) / jac, -b / jac
            fz, fzb = hd(xi)
            # chain rule for f(w(z)): f_z = f_w w_z + f_wbar conj(w_zbar)
            return fz * w_z + fzb * np.conj(w_zb), fz * w_zb + fzb * np.conj(w_z)

    z = g.nodes[g.mask]
    xi = point(z)
    if g.domain is not None and eps != 0:
        moved = xi != z
        if moved.any():
            assert np.all(g.domain.inside(xi[moved])), "evaluation point left the domain"
    vals = np.full(g.shape, np.nan + 0j)
    vals[g.mask] = h(xi)
    return SampledMap(g, vals, closure, derivs, fmap.name)


# -- energy identities ---------------------------------------------------------

def energy_difference_exact(fmap: SampledMap, diffeo: Callable, order: int = 4,
                            exact: bool = False, jet: WirtingerJet | None = None) -> float:
    """Exact ``E[H] - E[h]`` for ``H(z(xi)) = h(xi)``, integrated over the xi-grid.

    ``diffeo(xi) -> (z, z_xi, z_xibar)``.
    """
    j = jet if jet is not None else jet_of(fmap, order, exact)
    g = j.grid
    sel = j.valid
    xi = g.nodes[sel]
    _, a, b = diffeo(xi)
    jac = np.abs(a) ** 2 - np.abs(b) ** 2
    if np.any(jac <= 0):
        raise ValueError("Jacobian condition violated: |z_xi|^2 - |z_xibar|^2 <= 0")
    fz, fzb = j.f_z[sel], j.f_zbar[sel]
    d2 = np.abs(fz) ** 2 + np.abs(fzb) ** 2
    hopf = fz * np.conj(fzb)
    integrand = np.zeros(g.shape)
    integrand[sel] = (2 * d2 * np.abs(b) ** 2 - 4 * (hopf * b * np.conj(a)).real) / jac
    return integrate(integrand, g, sel)


def _terms(j: WirtingerJet, eta: TestFunction, exclude_low_order=False):
    g = j.grid
    sel = j.usable(exclude_low_order)
    xi = g.nodes[sel]
    _, ex, eb = eta(xi)
    fz, fzb = j.f_z[sel], j.f_zbar[sel]
    hopf = fz * np.conj(fzb)
    d2 = np.abs(fz) ** 2 + np.abs(fzb) ** 2

    def put(v):
        out = np.zeros(g.shape)
        out[sel] = v
        return integrate(out, g, sel)
    first = put(-4 * (hopf * eb).real)
    positive = put(0.5 * d2 * np.abs(eb) ** 2)
    cross = put((hopf * ex * eb).real)
    return first, positive, cross


def first_variation(fmap: SampledMap, eta: TestFunction, order: int = 4, exact=False, jet=None) -> float:
    """``-4 Re int Hopf * eta_xibar``, the slope of ``E(eps)`` at 0."""
    j = jet if jet is not None else jet_of(fmap, order, exact)
    return _terms(j, eta)[0]


def second_variation(fmap: SampledMap, eta: TestFunction, order: int = 4, exact=False, jet=None) -> float:
    """``1/2 int |Dh|^2 |eta_xibar|^2 + Re int Hopf * eta_xi * eta_xibar`` (= c2/4)."""
    j = jet if jet is not None else jet_of(fmap, order, exact)
    _, p, c = _terms(j, eta)
    return p + c


def variation_sweep(fmap: SampledMap, eta: TestFunction, epsilons: Sequence[float] | None = None,
                    order: int = 4, exact: bool = False, method: str = "compose",
                    forward: bool = False) -> VariationSweep:
    """Energies ``E(eps)`` and their cubic least-squares fit.

    ``method="compose"`` measures each energy from the composed map;
    ``method="identity"`` adds the exact energy-difference integral to E(0).
    """
    g = fmap.grid
    emax = eps_max(eta, g)
    eps = default_epsilons(emax) if epsilons is None else np.asarray(epsilons, dtype=float)
    if eps.size < 4:
        raise ValueError("at least 4 epsilons are needed for a cubic fit")
    if np.any(np.abs(eps) >= emax):
        raise ValueError("every |epsilon| must be below eps_max")
    j = jet_of(fmap, order, exact)
    e0 = dirichlet_energy(fmap, jet=j).energy
    energies = np.empty(eps.size)
    for k, e in enumerate(eps):
        if e == 0:
            energies[k] = e0
        elif method == "compose":
            H = compose(fmap, InnerVariation(eta, float(e)), forward=forward)
            energies[k] = dirichlet_energy(H, order=order, exact=exact).energy
        elif method == "identity":
            energies[k] = e0 + energy_difference_exact(fmap, InnerVariation(eta, float(e)), jet=j)
        else:
            raise ValueError(f"unknown method {method!r}")
    scale = emax / 40.0
    # fit in units of the sweep scale for conditioning
    p, res, *_ = np.polyfit(eps / scale, energies, 3, full=True)
    c3, c2, c1, c0 = p[0] / scale ** 3, p[1] / scale ** 2, p[2] / scale, p[3]
    first, pos, cross = _terms(j, eta)
    resid = float(np.sqrt(res[0] / eps.size)) if res.size else 0.0
    return VariationSweep(eps, energies, float(c0), float(c1), float(c2), float(c3),
                          first, 4 * (pos + cross), emax, scale, resid)


# -- batteries ------------------------------------------------------------------

def check_second_variation(fmap: SampledMap, etas: Sequence[TestFunction], order: int = 4,
                           exact: bool = False, tol: float = 1e-3,
                           require_hopf_harmonic: bool = True) -> BatteryReport:
    """Sign of the second variation per test function.

    ``ok`` means ``value >= -tol * positive_part``.
    """
    if require_hopf_harmonic and not is_hopf_harmonic(fmap, exact=exact)[0]:
        raise ValueError("map is not Hopf harmonic")
    j = jet_of(fmap, order, exact)
    rep = BatteryReport()
    for k, eta in enumerate(etas):
        _, pos, cross = _terms(j, eta)
        val = pos + cross
        rel = val / pos if pos > 0 else 0.0
        rep.entries.append({"index": k, "value": val, "positive_part": pos, "hopf_part": cross,
                            "relative": rel, "ok": bool(val >= -tol * pos)})
    return rep


def _hopf_on_grid(H, grid: Grid) -> np.ndarray:
    if isinstance(H, np.ndarray):
        if H.shape != grid.shape:
            raise ValueError("sampled H does not match the grid")
        return H
    out = np.full(grid.shape, np.nan + 0j)
    out[grid.mask] = H(grid.nodes[grid.mask])
    return out


def check_holomorphic_inequality(H, etas: Sequence[TestFunction], grid: Grid,
                                 tol: float = 1e-3, holo_tol: float = 0.05) -> BatteryReport:
    """``int |H| |eta_xibar|^2 >= |int H eta_xi eta_xibar|`` per test function.

    ``H`` is a callable or an array sampled on ``grid``; sampled input must
    pass the discrete holomorphy residual test at ``holo_tol``.
    """
    hv = _hopf_on_grid(H, grid)
    if isinstance(H, np.ndarray):
        hf = wirtinger(SampledMap(grid, hv), 2)
        sel = hf.valid & ~hf.low_order
        res = integrate(np.where(sel, np.abs(hf.f_zbar), 0.0), grid, sel)
        scale = integrate(np.where(grid.mask, np.abs(np.nan_to_num(hv)), 0.0), grid)
        if scale > 0 and res / scale >= holo_tol:
            raise ValueError("sampled H is not holomorphic")
    rep = BatteryReport()
    z = grid.nodes[grid.mask]
    hz = hv[grid.mask]
    for k, eta in enumerate(etas):
        _, ex, eb = eta(z)
        lv = np.zeros(grid.shape)
        lv[grid.mask] = np.abs(hz) * np.abs(eb) ** 2
        rv = np.zeros(grid.shape, complex)
        rv[grid.mask] = hz * ex * eb
        left = integrate(lv, grid)
        right = abs(integrate_complex(rv, grid))
        rel = (left - right) / left if left > 0 else 0.0
        rep.entries.append({"index": k, "left": left, "right": right, "margin": left - right,
                            "relative": rel, "ok": bool(left - right >= -tol * left)})
    return rep


def check_strict_increase(fmap: SampledMap, etas: Sequence[TestFunction],
                          epsilons: Sequence[float] | None = None, order: int = 4,
                          exact: bool = False, min_fraction: float = 0.99,
                          jacobian_floor: float = 1e-12) -> BatteryReport:
    """``E[H_eps] - E[h] > 0`` for every test function and nonzero eps.

    Requires ``|J_h| > jacobian_floor * max|Dh|^2`` on ``min_fraction`` of the
    usable nodes.
    """
    j = jet_of(fmap, order, exact)
    v = j.valid
    jac = np.abs(np.abs(j.f_z[v]) ** 2 - np.abs(j.f_zbar[v]) ** 2)
    d2 = np.abs(j.f_z[v]) ** 2 + np.abs(j.f_zbar[v]) ** 2
    frac = float(np.mean(jac > jacobian_floor * d2.max()))
    if frac < min_fraction:
        raise ValueError(f"Jacobian vanishes on too many nodes (nonzero fraction {frac:.3f})")
    rep = BatteryReport()
    for k, eta in enumerate(etas):
        diffs = []
        if not eta.is_zero:
            emax = eps_max(eta, fmap.grid)
            eps = default_epsilons(emax) if epsilons is None else np.asarray(epsilons, float)
            sw = variation_sweep(fmap, eta, eps, order=order, exact=exact)
            e0 = sw.energies[sw.epsilons == 0][0] if np.any(sw.epsilons == 0) else \
                dirichlet_energy(fmap, jet=j).energy
            diffs = [float(E - e0) for e, E in zip(sw.epsilons, sw.energies) if e != 0]
        m = min(diffs) if diffs else 0.0
        rep.entries.append({"index": k, "differences": diffs, "min_margin": m,
                            "ok": bool(m > 0) if diffs else True})
    return rep


# -- critical direction -----------------------------------------------------------

def critical_direction(source, eta: TestFunction, grid: Grid | None = None, order: int = 2,
                       exact: bool = False, scan: int = 72, xtol: float = 1e-4) -> CriticalDirectionResult:
    """Unimodular ``c`` minimising ``int |Hopf*eta - c |Hopf| conj(eta)|``.

    ``source`` is a map (its Hopf product is used) or a callable Hopf
    differential evaluated on ``grid``.  When the Hopf product vanishes on
    the support the convention is ``c = 1``, defect 0.
    """
    if isinstance(source, SampledMap):
        grid = source.grid
        hv = hopf_product(source, order, exact).values
        sel = grid.mask & np.isfinite(hv)
    else:
        if grid is None:
            raise ValueError("a grid is needed for a callable Hopf differential")
        hv = _hopf_on_grid(source, grid)
        sel = grid.mask & np.isfinite(hv)
    z = grid.nodes[sel]
    e = eta.value(z)
    a = hv[sel] * e
    b = np.abs(hv[sel]) * np.conj(e)
    w = grid.weights[sel] * grid.spacing ** 2
    scale = float(np.sum(np.abs(a) * w))
    if scale == 0.0:
        return CriticalDirectionResult(1.0 + 0j, 0.0, 0.0)

    def defect(t):
        return float(np.sum(np.abs(a - np.exp(1j * t) * b) * w))

    ts = np.linspace(-np.pi, np.pi, scan, endpoint=False)
    vals = np.array([defect(t) for t in ts])
    k = int(np.argmin(vals))
    step = ts[1] - ts[0]
    br = (ts[k] - step, ts[k], ts[k] + step)
    r = optimize.minimize_scalar(defect, bracket=br, method="golden",
                                 options={"xtol": xtol / (abs(ts[k]) + step)})
    t = float(np.angle(np.exp(1j * r.x)))
    d = defect(t)
    c = complex(np.exp(1j * t))
    return CriticalDirectionResult(c, d, d / (2 * scale))
