"""Verification suites behind ``innervar verify``.

Each suite returns a list of check records ``{name, value, limit, margin, passed, ...}``
where ``margin >= 0`` iff the check passes.  Discretisation-sensitive limits
are quoted at resolution 256 and widened by ``(256/resolution)^2`` below it.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import gallery, partition as part, quad_diff as qdm, variation as var
from .domain import PlanarDomain
from .energy import dirichlet_energy, hopf_product, is_hopf_harmonic
from .field import build_grid
from .testfunc import bump, random_battery

REFERENCE_RESOLUTION = 256
SUITES = ("energy", "variation", "inequality", "partition", "trajectory", "length-area")


@dataclass
class SuiteConfig:
    resolution: int = REFERENCE_RESOLUTION
    seed: int = 0
    tol: dict = field(default_factory=dict)

    @property
    def widen(self) -> float:
        return max(1.0, (REFERENCE_RESOLUTION / self.resolution) ** 2)

    def limit(self, key: str, default: float, scaled: bool = True) -> float:
        if key in self.tol:
            return float(self.tol[key])
        return default * self.widen if scaled else default

    def radii(self, extent: float = 2.0):
        """Bump radius range; below the reference resolution no bump spans under 6 grid steps."""
        h = extent / self.resolution
        lo = max(0.08, 6 * h)
        return lo, max(0.25, 1.2 * lo)

    def rng(self, salt: int = 0):
        return np.random.default_rng([self.seed, salt])


def check(name, value, limit, margin, **extra):
    rec = {"name": name, "value": float(value), "limit": float(limit), "margin": float(margin),
           "passed": bool(margin >= 0)}
    rec.update(extra)
    return rec


# -- energy ---------------------------------------------------------------------

def suite_energy(cfg: SuiteConfig):
    out = []
    rs = gallery.radial_squeeze(0.5)
    m = rs.sample(cfg.resolution)
    g = m.grid
    hf = hopf_product(m)
    far = g.mask & (g.domain.sdf(g.nodes) > 4 * g.spacing) & np.isfinite(hf.values)
    err = float(np.max(np.abs(hf.values[far] - rs.hopf(g.nodes[far]))))
    lim = cfg.limit("hopf_fidelity", 5e-3)
    out.append(check("radial_squeeze.hopf_fidelity", err, lim, lim - err))
    holo, res = is_hopf_harmonic(m, tol=cfg.limit("holomorphy", 0.05, scaled=False))
    out.append(check("radial_squeeze.holomorphy", res, 0.05, 1.0 if holo else -1.0))

    e_rs = dirichlet_energy(m).energy
    ref = math.pi * math.log(2)
    lim = cfg.limit("energy_rel", 1e-2)
    rel = abs(e_rs - ref) / ref
    out.append(check("radial_squeeze.energy_pi_ln2", e_rs, lim, lim - rel, reference=ref))
    hc = gallery.harmonic_competitor(0.5)
    e_hc = dirichlet_energy(hc.sample(cfg.resolution)).energy
    ref_hc = 2 * math.pi / 3
    rel = abs(e_hc - ref_hc) / ref_hc
    out.append(check("harmonic_competitor.energy_2pi_3", e_hc, lim, lim - rel, reference=ref_hc))
    out.append(check("competitor_below_squeeze", e_rs - e_hc, 0.0, e_rs - e_hc))

    ph = gallery.perturbed_harmonic(0.15)
    mp = ph.sample(cfg.resolution)
    e_ph = dirichlet_energy(mp).energy
    rel = abs(e_ph - ph.energy) / ph.energy
    out.append(check("perturbed_harmonic.energy", e_ph, lim, lim - rel, reference=ph.energy))
    holo, res = is_hopf_harmonic(mp)
    out.append(check("perturbed_harmonic.holomorphy", res, 0.05, 1.0 if holo else -1.0))
    return out


# -- variation ------------------------------------------------------------------

def _fixtures(cfg):
    return [gallery.radial_squeeze(0.5), gallery.perturbed_harmonic(0.15)]


def suite_variation(cfg: SuiteConfig, n_eta: int = 30, n_sweep: int = 10):
    out = []
    c1_lim = cfg.limit("c1_ratio", 1e-2)
    sv_lim = cfg.limit("second_variation", 1e-3)
    c2_lim = cfg.limit("c2_rel", 1e-2)
    floor = cfg.limit("energy_floor", 1e-6, scaled=False)
    for salt, entry in enumerate(_fixtures(cfg)):
        m = entry.sample(cfg.resolution)
        etas = random_battery(cfg.rng(salt), n_eta, entry.domain, radius=cfg.radii())
        worst_c1, worst_c2, worst_drop = 0.0, 0.0, -np.inf
        for k, eta in enumerate(etas):
            sw = var.variation_sweep(m, eta)
            worst_c1 = max(worst_c1, abs(sw.c1) / (sw.c2 * sw.eps_scale))
            worst_c2 = max(worst_c2, abs(sw.c2 - sw.c2_analytic) / abs(sw.c2_analytic))
            if k < n_sweep:
                e0 = sw.energies[sw.epsilons == 0][0]
                worst_drop = max(worst_drop, float(np.max((e0 - sw.energies) / e0)))
        out.append(check(f"{entry.name}.first_variation", worst_c1, c1_lim, c1_lim - worst_c1,
                         n=n_eta))
        out.append(check(f"{entry.name}.expansion_c2", worst_c2, c2_lim, c2_lim - worst_c2,
                         n=n_eta))
        out.append(check(f"{entry.name}.sweep_energy_floor", worst_drop, floor, floor - worst_drop,
                         n=n_sweep))
        rep = var.check_second_variation(m, etas, tol=sv_lim)
        w = rep.worst("relative")
        out.append(check(f"{entry.name}.second_variation", w, -sv_lim, w + sv_lim, n=n_eta))
    ph = gallery.perturbed_harmonic(0.15)
    etas = random_battery(cfg.rng(7), 5, ph.domain, radius=cfg.radii())
    rep = var.check_strict_increase(ph.sample(cfg.resolution), etas)
    w = min(min(e["differences"]) for e in rep.entries)
    out.append(check("perturbed_harmonic.strict_increase", w, 0.0, w if rep.passed else -abs(w)))
    return out


# -- inequality -------------------------------------------------------------------

HOLOMORPHIC_SAMPLES = {
    "1": lambda z: np.ones_like(z),
    "z": lambda z: z,
    "z^2": lambda z: z ** 2,
    "leminiscate": lambda z: (z / (1 - z ** 2)) ** 2,
}


def suite_inequality(cfg: SuiteConfig, n_eta: int = 20):
    out = []
    dom = PlanarDomain.disk(0, 0.8)
    g = build_grid(dom, cfg.resolution)
    tol = cfg.limit("inequality", 1e-3, scaled=False)
    for salt, (name, H) in enumerate(HOLOMORPHIC_SAMPLES.items()):
        etas = random_battery(cfg.rng(100 + salt), n_eta, dom)
        rep = var.check_holomorphic_inequality(H, etas, g, tol=tol)
        w = rep.worst("relative")
        out.append(check(f"holomorphic_inequality[{name}]", w, -tol, w + tol, n=n_eta))

    cr = gallery.concentric_reflections(20)
    en = cr.extra["energies"]
    out.append(check("concentric.total_below_pi3_3", en["total"], math.pi ** 3 / 3,
                     math.pi ** 3 / 3 - en["total"]))
    per = np.array(en["antiholomorphic"]) + np.array(en["holomorphic"])
    slack = float(np.min(np.array(cr.extra["annulus_bounds"]) - per))
    out.append(check("concentric.annulus_bounds", slack, 0.0, slack))
    m = cr.sample(cfg.resolution)
    worst = np.inf
    for eta in random_battery(cfg.rng(200), 10, cr.domain):
        emax = var.eps_max(eta, m.grid)
        for e in var.default_epsilons(emax):
            if e != 0:
                worst = min(worst, var.energy_difference_exact(m, var.InnerVariation(eta, e),
                                                               exact=True))
    out.append(check("concentric.inner_variations_nondecreasing", worst, 0.0, worst, n=10))
    return out


# -- partition ----------------------------------------------------------------------

PARTITION_CASES = {
    "z": (lambda z: z, lambda z: np.ones_like(z), [0j]),
    "z^2": (lambda z: z ** 2, lambda z: 2 * z, [0j]),
    "leminiscate": (lambda z: (z / (1 - z ** 2)) ** 2,
                    lambda z: 2 * z * (1 + z ** 2) / (1 - z ** 2) ** 3, [0j]),
}


def partition_setup():
    D = PlanarDomain.disk(0, 1.0)
    K = PlanarDomain.rectangle(-0.5, -0.5, 0.5, 0.5)
    return D, K, 0.1


def partition_etas():
    return [bump(0.1 + 0.05j, 0.3, 1.0 + 0.5j), bump(-0.15 - 0.1j, 0.25, 0.7, "z")]


def suite_partition(cfg: SuiteConfig, flips: int = 3):
    out = []
    D, K, eps = partition_setup()
    lim = cfg.limit("partition_rel", 1e-3, scaled=False)
    inv = cfg.limit("flip_invariance", 1e-12, scaled=False)
    rng = cfg.rng(300)
    for name, (H, dH, zeros) in PARTITION_CASES.items():
        P = part.build_partition(D, K, zeros, eps)
        br = part.assign_branches(P, H)
        for k, eta in enumerate(partition_etas()):
            rep = part.jacobian_sum_check(P, H, eta, dH, br)
            out.append(check(f"partition[{name}].eta{k}", rep.relative, lim, lim - rep.relative,
                             green_residual=rep.green_residual))
            worst = 0.0
            for _ in range(flips):
                s = rng.choice([-1.0, 1.0], len(P))
                r2 = part.jacobian_sum_check(P, H, eta, dH, part.assign_branches(P, H, signs=s))
                scale = max(abs(rep.sum_fxi2), 1e-300)
                worst = max(worst, abs(r2.total - rep.total) / scale)
            out.append(check(f"partition[{name}].eta{k}.flip_invariance", worst, inv, inv - worst))
    return out


# -- trajectory -------------------------------------------------------------------------

LEMINISCATE_RADII = (0.3, 0.5, 0.8, 1 - 1e-3)


def leminiscate_oracle_distance(points, r):
    """Pointwise distance from ``| |z^2 - 1| - r^2 | / (2|z|)``, exact to first order."""
    z = np.asarray(points, complex)
    return np.abs(np.abs(z * z - 1) - r * r) / (2 * np.abs(z))


def homotopic_perturbation(curve, rng, modes=4, amplitude=0.2):
    """``1 + (z - 1) * (1 + a(t))`` with ``a`` a random trigonometric polynomial, ``|a| < amplitude``."""
    n = curve.size
    t = np.linspace(0, 2 * np.pi, n)
    coef = rng.normal(size=(modes, 2))
    a = sum(c[0] * np.cos((k + 1) * t) + c[1] * np.sin((k + 1) * t) for k, c in enumerate(coef))
    a = amplitude * a / np.max(np.abs(a))
    return 1 + (curve - 1) * (1 + 0.9 * a)


def suite_trajectory(cfg: SuiteConfig, n_perturb: int = 10):
    out = []
    qd = qdm.leminiscate()
    sup_lim = cfg.limit("trajectory_sup", 1e-4, scaled=False)
    len_lim = cfg.limit("h_length", 1e-3, scaled=False)
    for r in LEMINISCATE_RADII:
        tr = qdm.trace_vertical(qd, complex(math.sqrt(1 + r * r)))
        d = float(np.max(leminiscate_oracle_distance(tr.points, r))) if tr.closed else np.inf
        out.append(check(f"leminiscate[r={r:g}].closed", float(tr.closed), 1.0,
                         0.0 if tr.closed else -1.0, kind=tr.kind))
        out.append(check(f"leminiscate[r={r:g}].sup_distance", d, sup_lim, sup_lim - d))
        e = abs(tr.h_length - math.pi)
        out.append(check(f"leminiscate[r={r:g}].h_length", tr.h_length, len_lim, len_lim - e))
        z, zd = qdm.leminiscate_curve(r)
        v = float(np.max(np.abs(qdm.verticality_values(qd, z, zd) + 4)))
        out.append(check(f"leminiscate[r={r:g}].hopf_zdot2", v, len_lim, len_lim - v))
    z, _ = qdm.leminiscate_curve(0.5, 4001)
    rng = cfg.rng(400)
    lim = cfg.limit("minimal_length", 1e-4, scaled=False)
    worst = np.inf
    for _ in range(n_perturb):
        worst = min(worst, qdm.h_length(qd, homotopic_perturbation(z, rng)))
    out.append(check("leminiscate.minimal_length", worst, math.pi - lim, worst - (math.pi - lim),
                     n=n_perturb))
    return out


# -- length-area -------------------------------------------------------------------------

def length_area_fixture(resolution):
    qd = qdm.leminiscate()
    dom = qdm.leminiscate_ring(0.3, 0.9)
    g = build_grid(dom, resolution)
    eta = bump(1.25, 0.08)
    eps = 0.5 * var.eps_max(eta, g)
    radii = np.linspace(0.32, 0.88, 15)
    trajs = [qdm.trace_vertical(qd, complex(math.sqrt(1 + r * r))) for r in radii]
    return qd, g, eta, eps, trajs


def suite_length_area(cfg: SuiteConfig):
    qd, g, eta, eps, trajs = length_area_fixture(cfg.resolution)
    F = lambda z: np.ones(np.shape(z))
    G = qdm.distortion_weight(qd, eta, eps)
    rep = qdm.length_area_check(qd, trajs, F, G, g)
    worst = min(l["margin"] for l in rep.lines)
    out = [check("length_area.lines", worst, 0.0, worst if rep.lines_pass else -abs(worst),
                 n=len(rep.lines))]
    m = rep.area_margin if rep.area_margin is not None else -1.0
    out.append(check("length_area.area", m, 0.0, m, area_f=rep.area_f, area_g=rep.area_g))
    return out


RUNNERS = {"energy": suite_energy, "variation": suite_variation, "inequality": suite_inequality,
           "partition": suite_partition, "trajectory": suite_trajectory,
           "length-area": suite_length_area}


def run_suite(name: str, cfg: SuiteConfig) -> tuple[dict, float]:
    """Report (deterministic) and wall time in seconds (kept out of the report)."""
    if name not in RUNNERS:
        raise KeyError(name)
    t0 = time.perf_counter()
    checks = RUNNERS[name](cfg)
    return ({"suite": name, "passed": all(c["passed"] for c in checks), "checks": checks},
            time.perf_counter() - t0)
