"""Constructed maps with closed-form derivatives, energies and Hopf products."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .domain import PlanarDomain
from .field import SampledMap, build_grid


@dataclass(frozen=True, eq=False)
class GalleryEntry:
    name: str
    domain: PlanarDomain
    closure: Callable
    derivatives: Callable          # z -> (h_z, h_zbar)
    hopf: Optional[Callable]       # closed-form Hopf product, None if unknown
    energy: Optional[float]        # closed-form energy
    energy_bound: Optional[float]
    jacobian_sign: str             # "zero" | "positive" | "mixed" | "pm1"
    hopf_harmonic: bool
    params: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def sample(self, resolution: int = 256) -> SampledMap:
        g = build_grid(self.domain, resolution)
        return SampledMap.from_function(g, self.closure, self.derivatives, self.name)

    def dirichlet_density(self, z):
        a, b = self.derivatives(np.asarray(z, dtype=complex))
        return np.abs(a) ** 2 + np.abs(b) ** 2

    def to_dict(self):
        return {"name": self.name, "params": self.params, "energy": self.energy,
                "energy_bound": self.energy_bound, "jacobian_sign": self.jacobian_sign,
                "hopf_harmonic": self.hopf_harmonic, "has_hopf_closure": self.hopf is not None,
                "bounding_box": list(self.domain.bounding_box)}


def radial_squeeze(r_inner: float = 0.5) -> GalleryEntry:
    """``z/|z|`` on ``r_inner < |z| < 1``: Hopf product ``-1/(4 z^2)``, energy ``pi ln(1/r)``."""
    if not 0 < r_inner < 1:
        raise ValueError("need 0 < r_inner < 1")

    def h(z):
        return z / np.abs(z)

    def d(z):
        a = np.abs(z)
        return 1 / (2 * a), -z ** 2 / (2 * a ** 3)

    return GalleryEntry("radial_squeeze", PlanarDomain.annulus(r_inner, 1.0), h, d,
                        lambda z: -1 / (4 * z ** 2), math.pi * math.log(1 / r_inner), None,
                        "zero", True, {"r_inner": r_inner})


def harmonic_competitor(r_inner: float = 0.5) -> GalleryEntry:
    """``(z + r/conj(z)) / (1 + r)``: same boundary values, energy ``2 pi (1-r)/(1+r)``."""
    if not 0 < r_inner < 1:
        raise ValueError("need 0 < r_inner < 1")
    r = r_inner

    def h(z):
        return (z + r / np.conj(z)) / (1 + r)

    def d(z):
        return np.full(np.shape(z), 1 / (1 + r), dtype=complex), -r / (np.conj(z) ** 2 * (1 + r))

    return GalleryEntry("harmonic_competitor", PlanarDomain.annulus(r, 1.0), h, d,
                        lambda z: -r / ((1 + r) ** 2 * z ** 2), 2 * math.pi * (1 - r) / (1 + r),
                        None, "mixed", True, {"r_inner": r})


def perturbed_harmonic(a: complex = 0.15) -> GalleryEntry:
    """``z + a conj(z)^2`` on the unit disk: Hopf ``2 conj(a) z``, ``J = 1 - 4|a|^2 |z|^2``."""
    a = complex(a)
    if not abs(a) < 0.5:
        raise ValueError("need |a| < 1/2")

    def h(z):
        return z + a * np.conj(z) ** 2

    def d(z):
        z = np.asarray(z, dtype=complex)
        return np.ones_like(z), 2 * a * np.conj(z)

    return GalleryEntry("perturbed_harmonic", PlanarDomain.disk(0, 1.0), h, d,
                        lambda z: 2 * np.conj(a) * z, math.pi * (1 + 2 * abs(a) ** 2), None,
                        "positive", True, {"a": [a.real, a.imag]})


# -- concentric reflections -----------------------------------------------------

def _ring_radii(n):
    return n ** -2.0, math.sqrt(1.0 / (n * (n + 1) ** 3))


def concentric_energies(n_max: int, inner_fill: str = "reflect") -> dict:
    """Exact piece energies: per annulus (antiholomorphic, holomorphic) and the inner disk."""
    anti, holo = [], []
    for n in range(1, n_max + 1):
        r_n, rho = _ring_radii(n)
        anti.append(n * n * math.pi * (r_n ** 2 - rho ** 2))
        holo.append(math.pi / (n + 1) ** 3)
    inner = math.pi / (n_max + 1) ** 2 if inner_fill == "reflect" else 0.0
    return {"antiholomorphic": anti, "holomorphic": holo, "inner": inner,
            "total": float(sum(anti) + sum(holo) + inner)}


def concentric_reflections(n_max: int = 20, inner_fill: str = "reflect") -> GalleryEntry:
    """Piecewise ``n conj(z)`` / ``1/((n+1)^3 z)`` on annuli ``(n+1)^-2 <= |z| < n^-2``.

    The pieces agree on every interface circle.  Inside ``|z| < (n_max+1)^-2``
    the default fill continues with ``(n_max+1) conj(z)`` so the map stays
    continuous; ``inner_fill="zero"`` maps that disk to 0 instead.
    The Hopf product vanishes away from the interfaces.
    """
    if n_max < 2:
        raise ValueError("need n_max >= 2")
    if inner_fill not in ("reflect", "zero"):
        raise ValueError("inner_fill is 'reflect' or 'zero'")
    ns = np.arange(1, n_max + 1)
    r_n = ns ** -2.0
    rho = np.sqrt(1.0 / (ns * (ns + 1.0) ** 3))
    r_last = (n_max + 1) ** -2.0

    def pieces(z):
        a = np.abs(z)
        # ring index n with (n+1)^-2 <= |z| < n^-2
        n = np.floor(1.0 / np.sqrt(np.maximum(a, 1e-300))).astype(int)
        n = np.clip(n, 1, n_max + 1)
        inner = a < r_last
        k = np.clip(n, 1, n_max) - 1
        anti = a >= rho[k]
        return n, inner, anti

    def h(z):
        z = np.asarray(z, dtype=complex)
        n, inner, anti = pieces(z)
        out = np.where(anti, n * np.conj(z), 1.0 / ((n + 1.0) ** 3 * np.where(z == 0, 1, z)))
        fill = (n_max + 1) * np.conj(z) if inner_fill == "reflect" else 0 * z
        return np.where(inner, fill, out)

    def d(z):
        z = np.asarray(z, dtype=complex)
        n, inner, anti = pieces(z)
        zs = np.where(z == 0, 1, z)
        hz = np.where(anti, 0, -1.0 / ((n + 1.0) ** 3 * zs ** 2))
        hzb = np.where(anti, n + 0j, 0)
        fill = (n_max + 1) + 0j if inner_fill == "reflect" else 0j
        return np.where(inner, 0, hz), np.where(inner, fill, hzb)

    en = concentric_energies(n_max, inner_fill)
    bounds = [math.pi / (n + 1) ** 2 + math.pi / n ** 2 for n in range(1, n_max + 1)]
    return GalleryEntry("concentric_reflections", PlanarDomain.disk(0, 1.0), h, d,
                        lambda z: np.zeros(np.shape(z), complex), en["total"], math.pi ** 3 / 3,
                        "mixed", True, {"n_max": n_max, "inner_fill": inner_fill},
                        {"energies": en, "annulus_bounds": bounds,
                         "interfaces": sorted(set(r_n.tolist()) | set(rho.tolist()) | {r_last})})


# -- nowhere holomorphic, nowhere antiholomorphic ----------------------------------

def sign_pattern(depth: int):
    """Breakpoints and signs of ``chi`` on [0, 1].

    ``chi`` starts at +1 and, at each level ``k = 1..depth``, flips sign on
    the centred sub-interval of relative length ``4^-k`` of every dyadic
    interval of length ``2^-k``.  Returns ``(breaks, signs)`` with
    ``signs[m]`` the value on ``(breaks[m], breaks[m+1])``.
    """
    if depth < 2:
        raise ValueError("need depth >= 2")
    flips = []
    for k in range(1, depth + 1):
        w = 2.0 ** -k
        half = 0.5 * w * 4.0 ** -k
        for j in range(2 ** k):
            c = (j + 0.5) * w
            flips.append((c - half, c + half))
    breaks = np.unique(np.concatenate([[0.0, 1.0], np.array(flips).ravel()]))
    mids = 0.5 * (breaks[:-1] + breaks[1:])
    signs = np.ones(mids.size)
    for a, b in flips:
        signs[(mids > a) & (mids < b)] *= -1
    return breaks, signs


def nowhere_holomorphic(depth: int = 4) -> GalleryEntry:
    """``u(x) + i y`` on the unit square, ``u' = chi = +-1`` from :func:`sign_pattern`.

    Where ``u' = 1`` the map is locally ``z`` and where ``u' = -1`` locally
    ``-conj(z)``, so the Hopf product vanishes, ``|Dh|^2 = 1`` and ``J = u'``.
    """
    breaks, signs = sign_pattern(depth)
    cum = np.concatenate([[0.0], np.cumsum(signs * np.diff(breaks))])

    def chi(x):
        k = np.clip(np.searchsorted(breaks, x, side="right") - 1, 0, signs.size - 1)
        return signs[k], k

    def h(z):
        z = np.asarray(z, dtype=complex)
        s, k = chi(z.real)
        u = cum[k] + s * (z.real - breaks[k])
        return u + 1j * z.imag

    def d(z):
        z = np.asarray(z, dtype=complex)
        s, _ = chi(z.real)
        return (s + 1) / 2 + 0j, (s - 1) / 2 + 0j

    return GalleryEntry("nowhere_holomorphic", PlanarDomain.rectangle(0, 0, 1, 1), h, d,
                        lambda z: np.zeros(np.shape(z), complex), 1.0, None, "pm1", True,
                        {"depth": depth}, {"breaks": breaks, "signs": signs})


def dyadic_sign_measures(depth: int, level: int | None = None):
    """Measure of ``{chi = +1}`` and ``{chi = -1}`` inside every dyadic interval of length 2^-level."""
    level = depth if level is None else level
    breaks, signs = sign_pattern(depth)
    out = []
    w = 2.0 ** -level
    for j in range(2 ** level):
        a, b = j * w, (j + 1) * w
        lo = np.clip(breaks[:-1], a, b)
        hi = np.clip(breaks[1:], a, b)
        m = hi - lo
        out.append((float(np.sum(m[signs > 0])), float(np.sum(m[signs < 0]))))
    return np.array(out)


def entries() -> dict[str, GalleryEntry]:
    return {e.name: e for e in (radial_squeeze(), harmonic_competitor(), concentric_reflections(),
                                nowhere_holomorphic(), perturbed_harmonic())}


def gallery_json() -> str:
    return json.dumps([e.to_dict() for e in entries().values()], indent=2, sort_keys=True)
