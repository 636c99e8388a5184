import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from innervar import gallery
from innervar import variation as var
from innervar.domain import PlanarDomain
from innervar.energy import dirichlet_energy, is_hopf_harmonic
from innervar.field import SampledMap, build_grid, integrate
from innervar.testfunc import ZERO, bump, combine, random_battery, unit_phase_of_conj_power

DISK = PlanarDomain.disk(0, 1.0)
ANN = PlanarDomain.annulus(0.5, 1.0)


@pytest.fixture(scope="module")
def squeeze():
    return gallery.radial_squeeze(0.5).sample(256)


@pytest.fixture(scope="module")
def perturbed():
    return gallery.perturbed_harmonic(0.15).sample(192)


def jacobian_ok(eta, grid, eps):
    _, ex, eb = eta(grid.nodes[grid.mask])
    return all(np.all(np.abs(1 + s * eps * ex) ** 2 - (eps * np.abs(eb)) ** 2 > 0) for s in (1, -1))


# -- eps_max --------------------------------------------------------------------

def test_eps_max_zero_is_cap():
    g = build_grid(DISK, 32)
    assert var.eps_max(ZERO, g) == var.EPS_CAP
    assert var.eps_max(ZERO, g, cap=7.0) == 7.0


def test_eps_max_against_scan():
    g = build_grid(DISK, 128)
    eta = bump(0.1, 0.5, 0.7)
    _, ex, eb = eta(g.nodes[g.mask])
    M = np.max(np.abs(ex) + np.abs(eb))
    e = var.eps_max(eta, g)
    assert e >= 1 / (2 * M)
    # independent oracle: a plain linear scan of the node-wise condition
    ts = np.linspace(0.5, 1.5, 2001) * e
    ok = np.array([jacobian_ok(eta, g, t) for t in ts])
    boundary = ts[np.argmin(ok)]
    assert abs(boundary - e) / e < 1e-3
    assert jacobian_ok(eta, g, e * (1 - 1e-5))
    assert not jacobian_ok(eta, g, e * (1 + 1e-4))


def test_eps_max_conj_factor_smaller():
    g = build_grid(DISK, 128)
    a = var.eps_max(bump(0, 0.5, 1.0, "z"), g)
    b = var.eps_max(bump(0, 0.5, 1.0, "zbar"), g)
    assert b < a
    # the condition is nearly symmetric in |eta_xi|, |eta_xibar|: off-centre the order can flip
    a2 = var.eps_max(bump(0.2, 0.5, 1.0, "z"), g)
    b2 = var.eps_max(bump(0.2, 0.5, 1.0, "zbar"), g)
    assert abs(a2 - b2) / a2 < 1e-2


# -- compose and the exact identity -----------------------------------------------

def test_compose_identity():
    g = build_grid(DISK, 64)
    m = SampledMap.from_function(g, lambda z: z ** 2 + np.conj(z))
    H = var.compose(m, var.InnerVariation(bump(0.1, 0.4), 0.0))
    assert np.array_equal(H.values[g.mask], m.values[g.mask])


def test_compose_identity_map_inverse_and_forward():
    g = build_grid(DISK, 64)
    m = SampledMap.from_function(g, lambda z: z, lambda z: (np.ones_like(z), np.zeros_like(z)))
    eta = bump(0.1 + 0.1j, 0.4, 0.5 + 0.2j)
    eps = 0.3 * var.eps_max(eta, g)
    z = g.nodes[g.mask]
    fw = var.compose(m, var.InnerVariation(eta, eps), forward=True)
    assert np.max(np.abs(fw.values[g.mask] - (z + eps * eta.value(z)))) < 1e-12
    inv = var.compose(m, var.InnerVariation(eta, eps))
    # H(xi + eps*eta(xi)) = xi
    xi = inv.values[g.mask]
    assert np.max(np.abs(xi + eps * eta.value(xi) - z)) < 1e-10


def test_compose_increases_squeeze_energy(squeeze):
    eta = bump(0.75, 0.2)
    H = var.compose(squeeze, var.InnerVariation(eta, 0.01))
    assert dirichlet_energy(H).energy >= dirichlet_energy(squeeze).energy


def test_energy_difference_identity_zero(squeeze):
    assert var.energy_difference_exact(squeeze, var.InnerVariation(ZERO, 0.3)) == 0.0


def test_energy_difference_singular_nonnegative():
    g = build_grid(DISK, 96)
    m = SampledMap.from_function(g, lambda z: z ** 2 + 1, lambda z: (2 * z, np.zeros_like(z)))
    for eta in random_battery(np.random.default_rng(3), 5, DISK):
        eps = 0.5 * var.eps_max(eta, g)
        assert var.energy_difference_exact(m, var.InnerVariation(eta, eps), exact=True) >= 0


def test_energy_difference_matches_direct(squeeze):
    eta = bump(0.75j, 0.2)
    v = var.InnerVariation(eta, 0.05)
    formula = var.energy_difference_exact(squeeze, v)
    direct = dirichlet_energy(var.compose(squeeze, v), order=4).energy - \
        dirichlet_energy(squeeze, order=4).energy
    assert formula == pytest.approx(direct, rel=1e-2)


def test_energy_difference_rejects_folding():
    g = build_grid(DISK, 64)
    m = SampledMap.from_function(g, lambda z: z)
    eta = bump(0, 0.5)
    with pytest.raises(ValueError):
        var.energy_difference_exact(m, var.InnerVariation(eta, 10 * var.eps_max(eta, g)))


@pytest.mark.parametrize("entry", ["radial_squeeze", "perturbed_harmonic", "harmonic_competitor"])
def test_identity_consistent_with_compose(entry):
    e = gallery.entries()[entry]
    m = e.sample(160)
    rng = np.random.default_rng(11)
    for eta in random_battery(rng, 5, e.domain, radius=(0.12, 0.25)):
        eps = 0.25 * var.eps_max(eta, m.grid)
        v = var.InnerVariation(eta, eps)
        a = var.energy_difference_exact(m, v, exact=True)
        b = dirichlet_energy(var.compose(m, v), order=4, exact=True).energy - \
            dirichlet_energy(m, exact=True).energy
        assert a == pytest.approx(b, rel=2e-2, abs=1e-5)


# -- sweeps --------------------------------------------------------------------------

def test_sweep_needs_four_points(squeeze):
    with pytest.raises(ValueError):
        var.variation_sweep(squeeze, bump(0.75, 0.2), [0.0, 0.01, -0.01])


def test_sweep_rejects_large_eps(squeeze):
    eta = bump(0.75, 0.2)
    e = var.eps_max(eta, squeeze.grid)
    with pytest.raises(ValueError):
        var.variation_sweep(squeeze, eta, [-e, -0.1 * e, 0, 0.1 * e, e])


def test_sweep_on_squeeze(squeeze):
    sw = var.variation_sweep(squeeze, bump(0.7 + 0.2j, 0.2, 1 + 1j, "z"))
    assert abs(sw.c1) <= 1e-2 * sw.c2 * sw.eps_scale
    assert sw.c2 > 0
    assert sw.c2 == pytest.approx(sw.c2_analytic, rel=1e-2)
    assert sw.c0 == pytest.approx(dirichlet_energy(squeeze, order=4).energy, abs=10 * sw.fit_residual + 1e-12)


def test_sweep_identity_map_closed_form():
    g = build_grid(DISK, 160)
    m = SampledMap.from_function(g, lambda z: z, lambda z: (np.ones_like(z), np.zeros_like(z)))
    eta = bump(0.1, 0.4, 0.8 - 0.3j)
    sw = var.variation_sweep(m, eta, exact=True)
    _, _, eb = eta(g.nodes)
    ref = 2 * integrate(np.where(g.mask, np.abs(eb) ** 2, 0), g)
    assert abs(sw.c1) <= 1e-2 * sw.c2 * sw.eps_scale
    assert sw.c2 == pytest.approx(ref, rel=1e-2)


def test_sweep_detects_non_hopf_harmonic():
    g = build_grid(DISK, 128)
    m = SampledMap.from_function(g, lambda z: np.abs(z) ** 2,
                                 lambda z: (np.conj(z), z))
    eta = bump(0.3 + 0.1j, 0.35, 1.0, "z")
    sw = var.variation_sweep(m, eta, exact=True)
    assert abs(sw.c1_analytic) > 1e-3
    assert sw.c1 == pytest.approx(sw.c1_analytic, rel=2e-2)
    assert not is_hopf_harmonic(m)[0]


def test_sweep_identity_method_agrees(perturbed):
    eta = bump(0.2 - 0.1j, 0.3, 0.6 + 0.4j, "zbar")
    a = var.variation_sweep(perturbed, eta, exact=True)
    b = var.variation_sweep(perturbed, eta, exact=True, method="identity")
    assert b.c2 == pytest.approx(a.c2, rel=1e-2)
    with pytest.raises(ValueError):
        var.variation_sweep(perturbed, eta, method="nope")


def test_forward_convention_flips_first_variation():
    g = build_grid(DISK, 128)
    m = SampledMap.from_function(g, lambda z: np.abs(z) ** 2, lambda z: (np.conj(z), z))
    eta = bump(0.3 + 0.1j, 0.35, 1.0, "z")
    inv = var.variation_sweep(m, eta, exact=True)
    fw = var.variation_sweep(m, eta, exact=True, forward=True)
    assert fw.c1 == pytest.approx(-inv.c1, rel=3e-2)


def test_expansion_remainder_is_cubic(perturbed):
    eta = bump(0.2 + 0.2j, 0.3, 1.0)
    sw = var.variation_sweep(perturbed, eta, exact=True)
    quad2 = lambda e: sw.c0 + sw.c1_analytic * e + sw.c2_analytic * e * e
    e1 = sw.eps_max / 30
    r1 = var.energy_difference_exact(perturbed, var.InnerVariation(eta, e1), exact=True) + sw.c0 - quad2(e1)
    r3 = var.energy_difference_exact(perturbed, var.InnerVariation(eta, 3 * e1), exact=True) + sw.c0 - quad2(3 * e1)
    assert abs(r3) >= 8 * abs(r1)


# -- batteries ----------------------------------------------------------------------

def test_second_variation_squeeze(squeeze):
    etas = random_battery(np.random.default_rng(5), 20, ANN)
    rep = var.check_second_variation(squeeze, etas)
    assert rep.passed
    rep0 = var.check_second_variation(squeeze, [ZERO])
    assert rep0.entries[0]["value"] == 0


def test_second_variation_requires_hopf_harmonic():
    g = build_grid(DISK, 64)
    m = SampledMap.from_function(g, lambda z: np.abs(z) ** 2)
    with pytest.raises(ValueError):
        var.check_second_variation(m, [bump(0, 0.3)])


def test_second_variation_singular_equals_positive_part():
    g = build_grid(DISK, 96)
    m = SampledMap.from_function(g, lambda z: z ** 3, lambda z: (3 * z ** 2, np.zeros_like(z)))
    rep = var.check_second_variation(m, random_battery(np.random.default_rng(2), 4, DISK), exact=True)
    for e in rep.entries:
        assert e["value"] == pytest.approx(e["positive_part"])
        assert e["value"] >= 0


def test_holomorphic_inequality_constant():
    g = build_grid(DISK, 192)
    eta = bump(0.1, 0.5, 1 + 2j, "z")
    rep = var.check_holomorphic_inequality(lambda z: np.ones_like(z), [eta], g)
    e = rep.entries[0]
    _, ex, eb = eta(g.nodes)
    # compact support: int |eta_xi|^2 = int |eta_xibar|^2
    a = integrate(np.where(g.mask, np.abs(ex) ** 2, 0), g)
    b = integrate(np.where(g.mask, np.abs(eb) ** 2, 0), g)
    assert a == pytest.approx(b, rel=1e-6)
    assert e["left"] == pytest.approx(b)
    assert rep.passed


@pytest.mark.parametrize("H", [lambda z: z ** 2, lambda z: z])
def test_holomorphic_inequality_battery(H):
    g = build_grid(DISK, 192)
    rng = np.random.default_rng(8)
    etas = random_battery(rng, 15, DISK)
    # bumps straddling the zero of H
    etas += [bump(0.05j, 0.3, 1.0, "z"), bump(-0.05, 0.25, 1j, "zbar")]
    assert var.check_holomorphic_inequality(H, etas, g).passed


def test_holomorphic_inequality_sampled_input():
    g = build_grid(DISK, 96)
    hv = np.where(g.mask, g.nodes ** 2, np.nan)
    assert var.check_holomorphic_inequality(hv, [bump(0.1, 0.3)], g).passed
    bad = np.where(g.mask, np.abs(g.nodes) ** 2, np.nan)
    with pytest.raises(ValueError):
        var.check_holomorphic_inequality(bad, [bump(0.1, 0.3)], g)


def test_strict_increase_perturbed(perturbed):
    etas = random_battery(np.random.default_rng(4), 3, DISK)
    rep = var.check_strict_increase(perturbed, etas)
    assert rep.passed
    assert rep.worst("min_margin") > 0
    rep0 = var.check_strict_increase(perturbed, [ZERO])
    assert rep0.entries[0]["differences"] == []


def test_strict_increase_identity_map():
    g = build_grid(DISK, 128)
    m = SampledMap.from_function(g, lambda z: z, lambda z: (np.ones_like(z), np.zeros_like(z)))
    rep = var.check_strict_increase(m, [bump(0.1, 0.4, 1 - 1j)], exact=True)
    assert rep.passed


def test_strict_increase_rejects_vanishing_jacobian(squeeze):
    with pytest.raises(ValueError):
        # exact jet: J = 0 node-wise, the stencil only makes it small
        var.check_strict_increase(squeeze, [bump(0.75, 0.2)], exact=True)


# -- critical direction --------------------------------------------------------------

def test_critical_direction_constant():
    g = build_grid(DISK, 96)
    r = var.critical_direction(lambda z: 2.0 * np.ones_like(z), bump(0.1, 0.4, 1.5), g)
    assert abs(r.c - 1) < 1e-3
    assert r.relative_defect < 1e-6


def test_critical_direction_square():
    g = build_grid(DISK, 128)
    eta = bump(0.3 + 0.2j, 0.25, 1.0, unit_phase_of_conj_power(1))
    r = var.critical_direction(lambda z: z ** 2, eta, g)
    assert abs(r.c - 1) < 1e-3
    assert r.relative_defect < 1e-6
    generic = var.critical_direction(lambda z: z ** 2, bump(0.3 + 0.2j, 0.25, 1.0, "z"), g)
    assert generic.relative_defect > 0.05


def test_critical_direction_vanishing_hopf():
    g = build_grid(DISK, 48)
    r = var.critical_direction(lambda z: np.zeros_like(z), bump(0.1, 0.3), g)
    assert r.c == 1 and r.defect == 0


def test_critical_direction_needs_grid():
    with pytest.raises(ValueError):
        var.critical_direction(lambda z: z, bump(0, 0.3))


# -- invariants ------------------------------------------------------------------------

@settings(max_examples=8, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-math.pi, math.pi))
def test_scaling_invariance(mod, arg):
    lam = mod * np.exp(1j * arg)
    g = build_grid(DISK, 64)
    f = lambda z: z + 0.15 * np.conj(z) ** 2
    m1 = SampledMap.from_function(g, f)
    m2 = SampledMap.from_function(g, lambda z: lam * f(z))
    eta = bump(0.1, 0.4, 1 + 0.5j, "z")
    a = var.check_second_variation(m1, [eta]).entries[0]
    b = var.check_second_variation(m2, [eta]).entries[0]
    assert b["value"] == pytest.approx(mod ** 2 * a["value"], rel=1e-9)
    assert a["ok"] == b["ok"]


def test_first_variation_equivalence():
    rng = np.random.default_rng(21)
    for name in ("radial_squeeze", "perturbed_harmonic", "harmonic_competitor"):
        e = gallery.entries()[name]
        m = e.sample(192)
        assert is_hopf_harmonic(m)[0]
        for eta in random_battery(rng, 4, e.domain):
            sw = var.variation_sweep(m, eta)
            assert abs(sw.c1) <= 1e-2 * abs(sw.c2) * sw.eps_scale
    g = build_grid(DISK, 128)
    m = SampledMap.from_function(g, lambda z: np.abs(z) ** 2)
    assert not is_hopf_harmonic(m)[0]
    sw = var.variation_sweep(m, bump(0.3 + 0.1j, 0.35, 1.0, "z"))
    assert abs(sw.c1) > 1e-2 * abs(sw.c2) * sw.eps_scale


def test_sweep_report_serializes(squeeze):
    import json
    sw = var.variation_sweep(squeeze, bump(0.75, 0.2))
    d = json.loads(json.dumps(sw.to_dict()))
    assert len(d["epsilons"]) == 9
    combined = combine(bump(0.75, 0.1), bump(-0.75, 0.1))
    assert len(combined.bumps) == 2
