"""Dirichlet energy, Jacobian and Hopf product of sampled maps."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .field import Grid, SampledMap, WirtingerJet, integrate, jet_of, wirtinger

FLOOR = 1e-12


@dataclass(frozen=True)
class EnergyReport:
    energy: float
    jacobian_integral: float
    hopf_l1: float

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class HopfField:
    grid: Grid
    values: np.ndarray          # h_z * conj(h_zbar), NaN off the jet
    dbar: np.ndarray            # discrete d/dzbar of values, NaN off interior
    interior: np.ndarray
    residual_l1: float
    morera_l1: float | None = None


def _jet(fmap, order, exact, jet):
    return jet if jet is not None else jet_of(fmap, order, exact)


def dirichlet_energy(fmap: SampledMap, order: int = 2, exact: bool = False,
                     jet: WirtingerJet | None = None,
                     exclude_low_order: bool = False) -> EnergyReport:
    """Energy ``int |h_z|^2 + |h_zbar|^2``, Jacobian integral and ``int |H|``."""
    j = _jet(fmap, order, exact, jet)
    sel = j.usable(exclude_low_order)
    a2 = np.where(sel, np.abs(j.f_z) ** 2, 0.0)
    b2 = np.where(sel, np.abs(j.f_zbar) ** 2, 0.0)
    hopf = np.where(sel, np.abs(j.f_z * np.conj(j.f_zbar)), 0.0)
    g = j.grid
    return EnergyReport(integrate(a2 + b2, g, sel), integrate(a2 - b2, g, sel),
                        integrate(hopf, g, sel))


def hopf_values(j: WirtingerJet) -> np.ndarray:
    return np.where(j.valid, j.f_z * np.conj(j.f_zbar), np.nan + 0j)


def _morera(hv: np.ndarray, interior: np.ndarray, h: float) -> float:
    """Sum over grid cells of ``|contour integral of H| / 2`` (trapezoid edges)."""
    a = hv[:-1, :-1]
    b = hv[:-1, 1:]
    c = hv[1:, 1:]
    d = hv[1:, :-1]
    ok = interior[:-1, :-1] & interior[:-1, 1:] & interior[1:, 1:] & interior[1:, :-1]
    loop = 0.5 * h * ((a + b) + 1j * (b + c) - (c + d) - 1j * (d + a))
    return float(np.sum(np.abs(loop[ok])) / 2.0)


def hopf_product(fmap: SampledMap, order: int = 2, exact: bool = False,
                 jet: WirtingerJet | None = None, morera: bool = False) -> HopfField:
    """Hopf product ``h_z conj(h_zbar)`` and the L1 norm of its discrete dbar-derivative."""
    j = _jet(fmap, order, exact, jet)
    g = j.grid
    hv = hopf_values(j)
    core = j.valid & ~j.low_order
    hmap = SampledMap(Grid(g.origin, g.spacing, g.nx, g.ny, core, g.domain), np.where(core, hv, np.nan))
    dj = wirtinger(hmap, order)
    interior = dj.valid & ~dj.low_order
    dbar = np.where(interior, dj.f_zbar, np.nan + 0j)
    res = integrate(np.where(interior, np.abs(dbar), 0.0), g, interior)
    mor = _morera(np.where(core, hv, 0), interior, g.spacing) if morera else None
    return HopfField(g, hv, dbar, interior, res, mor)


def is_hopf_harmonic(fmap: SampledMap, tol: float = 0.05, order: int = 2,
                     exact: bool = False) -> tuple[bool, float]:
    """Relative holomorphy test ``residual_l1 / max(hopf_l1, 1e-12 * energy) < tol``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    j = jet_of(fmap, order, exact)
    hf = hopf_product(fmap, order, jet=j)
    rep = dirichlet_energy(fmap, jet=j)
    scale = max(rep.hopf_l1, FLOOR * rep.energy)
    if scale == 0.0:
        return True, hf.residual_l1
    return bool(hf.residual_l1 / scale < tol), hf.residual_l1
