"""Compactly supported test functions with exact Wirtinger derivatives.

The building block is the C^2 bump ``(1 - |xi - a|^2 / r^2)^3`` on the disk
``|xi - a| < r``, optionally multiplied by a smooth factor (``xi``,
``conj(xi)``, a unit phase, ...) and a complex constant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .domain import PlanarDomain

Triple = tuple  # (value, d/dxi, d/dxibar)


@dataclass(frozen=True)
class Factor:
    """Smooth multiplier with exact derivatives; ``fn(xi) -> (m, m_xi, m_xibar)``."""

    name: str
    fn: Callable[[np.ndarray], Triple]

    def __call__(self, xi):
        return self.fn(xi)


ONE = Factor("1", lambda x: (np.ones_like(x), np.zeros_like(x), np.zeros_like(x)))
Z = Factor("z", lambda x: (x, np.ones_like(x), np.zeros_like(x)))
ZBAR = Factor("zbar", lambda x: (np.conj(x), np.zeros_like(x), np.ones_like(x)))
FACTORS = {"1": ONE, "z": Z, "zbar": ZBAR}


def unit_phase_of_conj_power(k: float, center: complex = 0j) -> Factor:
    """``(conj(w)/|w|)**k`` with ``w = xi - center``; smooth away from ``center``.

    With ``k = n/2`` this is the phase of ``conj(sqrt(w**n))``, the direction
    that makes a bump critical for the Hopf product ``w**n``.
    """
    def fn(xi):
        w = xi - center
        p = (np.conj(w) / np.abs(w)) ** k
        # p = w^(-k/2) conj(w)^(k/2)
        return p, -0.5 * k * p / w, 0.5 * k * p / np.conj(w)
    return Factor(f"phase^{k}", fn)


@dataclass(frozen=True)
class Bump:
    center: complex
    radius: float
    coeff: complex = 1.0
    factor: Factor = ONE

    def __call__(self, xi):
        w = xi - self.center
        r2 = self.radius ** 2
        s = 1.0 - (w * np.conj(w)).real / r2
        inside = s > 0
        s = np.where(inside, s, 0.0)
        b = s ** 3
        b_xi = -3.0 * s ** 2 * np.conj(w) / r2
        b_xibar = -3.0 * s ** 2 * w / r2
        m, m_xi, m_xibar = self.factor(np.where(inside, xi, self.center + 0.5 * self.radius))
        c = self.coeff
        eta = np.where(inside, c * b * m, 0)
        eta_xi = np.where(inside, c * (b_xi * m + b * m_xi), 0)
        eta_xibar = np.where(inside, c * (b_xibar * m + b * m_xibar), 0)
        return eta, eta_xi, eta_xibar


@dataclass(frozen=True)
class TestFunction:
    """Finite sum of bumps; ``eta(xi) -> (eta, eta_xi, eta_xibar)``."""

    __test__ = False  # not a pytest class

    bumps: tuple = ()

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=complex)
        e = np.zeros(xi.shape, complex)
        ex = np.zeros(xi.shape, complex)
        eb = np.zeros(xi.shape, complex)
        for b in self.bumps:
            v = b(xi)
            e += v[0]
            ex += v[1]
            eb += v[2]
        return e, ex, eb

    def value(self, xi):
        return self(xi)[0]

    @property
    def is_zero(self) -> bool:
        return all(b.coeff == 0 for b in self.bumps)

    @property
    def support(self) -> PlanarDomain | None:
        nz = [b for b in self.bumps if b.coeff != 0]
        if not nz:
            return None
        d = PlanarDomain.disk(nz[0].center, nz[0].radius)
        for b in nz[1:]:
            d = d | PlanarDomain.disk(b.center, b.radius)
        return d

    def support_margin(self, domain: PlanarDomain) -> float:
        """Smallest distance from the support to the complement of ``domain``."""
        nz = [b for b in self.bumps if b.coeff != 0]
        if not nz:
            return np.inf
        out = np.inf
        for b in nz:
            t = np.linspace(0, 2 * np.pi, 181)
            ring = b.center + b.radius * np.exp(1j * t)
            out = min(out, float(np.min(domain.sdf(ring))), float(domain.sdf(np.array([b.center]))[0]) - b.radius)
        return out


ZERO = TestFunction(())


def bump(center, radius, coeff=1.0, factor="1") -> TestFunction:
    f = FACTORS[factor] if isinstance(factor, str) else factor
    return TestFunction((Bump(complex(center), float(radius), complex(coeff), f),))


def combine(*etas: TestFunction) -> TestFunction:
    return TestFunction(tuple(b for e in etas for b in e.bumps))


def random_battery(rng: np.random.Generator, n: int, domain: PlanarDomain,
                   radius=(0.08, 0.25), margin=0.02, max_bumps=3,
                   factors: Sequence[str] = ("1", "z", "zbar"),
                   avoid: Sequence[complex] = (), avoid_radius: float = 0.0) -> list[TestFunction]:
    """Random sums of 1..``max_bumps`` bumps supported inside ``domain``.

    Supports keep ``margin`` from the boundary and ``avoid_radius`` from every
    point in ``avoid``.
    """
    x0, y0, x1, y1 = domain.bounding_box
    out = []
    while len(out) < n:
        bumps = []
        for _ in range(int(rng.integers(1, max_bumps + 1))):
            for _attempt in range(1000):
                r = float(rng.uniform(*radius))
                c = complex(rng.uniform(x0, x1), rng.uniform(y0, y1))
                ring = c + r * np.exp(1j * np.linspace(0, 2 * np.pi, 97))
                if domain.sdf(np.array([c]))[0] <= r + margin:
                    continue
                if np.min(domain.sdf(ring)) <= margin:
                    continue
                if any(abs(c - a) <= r + avoid_radius for a in avoid):
                    continue
                coeff = complex(rng.normal(), rng.normal())
                f = FACTORS[str(rng.choice(list(factors)))]
                bumps.append(Bump(c, r, coeff, f))
                break
            else:
                raise RuntimeError("could not place a bump inside the domain")
        out.append(TestFunction(tuple(bumps)))
    return out
