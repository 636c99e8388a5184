import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from innervar.domain import PlanarDomain
from innervar.field import SampledMap, build_grid, integrate, wirtinger


def test_disk_mask_matches_node_count():
    d = PlanarDomain.disk(0, 1.0)
    g = build_grid(d, 16)
    assert g.count == int(np.sum(np.abs(g.nodes) < 1))


def test_annulus_area():
    g = build_grid(PlanarDomain.annulus(0.5, 1.0), 256)
    area = integrate(np.ones(g.shape), g)
    assert abs(area - 0.75 * math.pi) / (0.75 * math.pi) < 0.02
    raw = g.count * g.spacing ** 2
    assert abs(raw - 0.75 * math.pi) / (0.75 * math.pi) < 0.02


def test_disjoint_difference_keeps_minuend_mask():
    a = PlanarDomain.disk(0, 1.0)
    b = PlanarDomain.disk(5, 0.5)
    ga = build_grid(a, 32)
    gd = build_grid(a - b, 32)
    assert ga.shape == gd.shape
    assert np.array_equal(ga.mask, gd.mask)


def test_empty_domain_rejected():
    d = PlanarDomain.disk(0, 1.0) - PlanarDomain.disk(0, 2.0)
    with pytest.raises(ValueError, match="empty domain"):
        build_grid(d, 16)


def test_resolution_floor():
    with pytest.raises(ValueError):
        build_grid(PlanarDomain.disk(0, 1), 4)


def test_inside_consistent_with_distance():
    d = PlanarDomain.annulus(0.3, 1.0) | PlanarDomain.rectangle(0.5, -0.2, 1.8, 0.2)
    rng = np.random.default_rng(1)
    p = rng.uniform(-2, 2, 2000) + 1j * rng.uniform(-2, 2, 2000)
    ins = d.inside(p)
    assert np.all(d.sdf(p)[ins] >= 0)
    x0, y0, x1, y1 = d.bounding_box
    assert np.all((p[ins].real >= x0) & (p[ins].real <= x1) & (p[ins].imag >= y0) & (p[ins].imag <= y1))


def test_polygon_inside():
    sq = PlanarDomain.polygon([0, 1, 1 + 1j, 1j])
    assert sq.inside(np.array([0.5 + 0.5j]))[0]
    assert not sq.inside(np.array([1.5 + 0.5j]))[0]


@pytest.mark.parametrize("f,a,b", [(lambda z: z, 1, 0), (lambda z: np.conj(z), 0, 1),
                                   (lambda z: (2 - 1j) * z + 0.5j * np.conj(z) + 3, 2 - 1j, 0.5j)])
def test_affine_exactness(f, a, b):
    g = build_grid(PlanarDomain.disk(0, 1.0), 32)
    for order in (2, 4):
        j = wirtinger(SampledMap.from_function(g, f), order)
        assert np.max(np.abs(j.f_z[j.valid] - a)) < 1e-12
        assert np.max(np.abs(j.f_zbar[j.valid] - b)) < 1e-12


def test_square_derivative_interior():
    g = build_grid(PlanarDomain.disk(0, 1.0), 64)
    j = wirtinger(SampledMap.from_function(g, lambda z: z ** 2), 2)
    sel = j.valid & ~j.low_order
    # the central stencil is exact on quadratics
    assert np.max(np.abs(j.f_z[sel] - 2 * g.nodes[sel])) < 1e-12


def test_derivative_second_order_convergence():
    f = lambda z: z ** 3 * np.conj(z)
    errs = []
    for n in (32, 64, 128):
        g = build_grid(PlanarDomain.disk(0, 1.0), n)
        j = wirtinger(SampledMap.from_function(g, f), 2)
        sel = j.valid & ~j.low_order
        z = g.nodes[sel]
        errs.append(np.max(np.abs(j.f_z[sel] - 3 * z ** 2 * np.conj(z))))
    assert 3.5 < errs[0] / errs[1] < 4.5
    assert 3.5 < errs[1] / errs[2] < 4.5


def test_integrate_disk_area():
    g = build_grid(PlanarDomain.disk(0, 1.0), 512)
    assert abs(integrate(np.ones(g.shape), g) - math.pi) / math.pi < 5e-3
    assert integrate(np.zeros(g.shape), g) == 0.0


def test_integrate_radial_density():
    g = build_grid(PlanarDomain.annulus(0.5, 1.0), 256)
    v = np.where(g.mask, 1 / (2 * np.abs(g.nodes) ** 2), 0.0)
    assert abs(integrate(v, g) - math.pi * math.log(2)) / (math.pi * math.log(2)) < 1e-2


def test_integrate_linear():
    g = build_grid(PlanarDomain.disk(0, 1.0), 64)
    z = g.nodes
    F, G = np.abs(z) ** 2, np.cos(z.real)
    lhs = integrate(2.5 * F - 1.5 * G, g)
    rhs = 2.5 * integrate(F, g) - 1.5 * integrate(G, g)
    assert abs(lhs - rhs) < 1e-13


def test_integrate_refinement():
    vals = []
    for n in (64, 128, 256):
        g = build_grid(PlanarDomain.disk(0, 1.0), n)
        vals.append(integrate(np.abs(g.nodes) ** 2, g))
    exact = math.pi / 2
    e = [abs(v - exact) for v in vals]
    assert e[2] < e[0]
    assert e[2] < 2e-3


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_conjugation_swaps_jet(a, b, c, d):
    g = build_grid(PlanarDomain.disk(0, 1.0), 24)
    f = lambda z: (a + 1j * b) * z ** 2 + (c - 1j * d) * np.conj(z) * z + np.sin(z.real)
    j = wirtinger(SampledMap.from_function(g, f), 2)
    jc = wirtinger(SampledMap.from_function(g, lambda z: np.conj(f(z))), 2)
    v = j.valid
    assert np.allclose(jc.f_z[v], np.conj(j.f_zbar[v]), atol=1e-12)
    assert np.allclose(jc.f_zbar[v], np.conj(j.f_z[v]), atol=1e-12)


def test_isolated_node_excluded():
    g = build_grid(PlanarDomain.disk(0, 1.0), 16)
    mask = np.zeros(g.shape, bool)
    mask[8, 8] = True
    from innervar.field import Grid
    g2 = Grid(g.origin, g.spacing, g.nx, g.ny, mask, None)
    j = wirtinger(SampledMap.from_function(g2, lambda z: z), 2)
    assert not j.valid.any()
