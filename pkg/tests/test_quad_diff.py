import math

import numpy as np
import pytest
from numpy.polynomial import polynomial as P

from innervar import quad_diff as q
from innervar.domain import PlanarDomain
from innervar.field import build_grid
from innervar.suites import leminiscate_oracle_distance

DISK = PlanarDomain.disk(0, 1.0)
LEM = q.leminiscate()


def lem_seed(r):
    return complex(math.sqrt(1 + r * r))


# -- catalog -------------------------------------------------------------------------

def test_leminiscate_value():
    assert LEM(np.array([2.0]))[0] == pytest.approx(4 / 9)
    assert dict(LEM.zeros) == {0j: 2}
    assert dict(LEM.poles) == {1 + 0j: 2, -1 + 0j: 2}


def test_four_pole_zeros_by_root_finding():
    # numerator of the bracketed sum, expanded independently of the parser
    poles = {2: 5, -2: 5, 4: 7, -4: 7}
    num = np.zeros(1)
    for p, c in poles.items():
        term = np.array([float(c)])
        for p2 in poles:
            if p2 != p:
                term = P.polymul(term, [-p2, 1])
        num = P.polyadd(num, term)
    roots = np.sort_complex(P.polyroots(num))
    assert np.allclose(roots, [-3, 0, 3], atol=1e-8)
    got = sorted((z for z, _ in q.four_pole().zeros), key=lambda z: z.real)
    assert np.allclose(got, [-3, 0, 3], atol=1e-8)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_hyperelliptic_critical_points(n):
    qd = q.hyperelliptic(n)
    zeros = dict(qd.zeros)
    assert zeros.pop(0j, None) == (n - 2 if n > 2 else None)
    rad = (n - 1) ** (1 / n)
    assert len(zeros) == n
    assert np.allclose([abs(z) for z in zeros], rad, atol=1e-9)
    assert np.allclose([p ** n for p, _ in qd.poles], -1, atol=1e-9)


def test_hyperelliptic_rejects_small_n():
    with pytest.raises(ValueError):
        q.hyperelliptic(1)
    assert q.hyperelliptic(4).zeros[1][0] is not None
    assert abs(abs(q.hyperelliptic(4).zeros[1][0]) - 3 ** 0.25) < 1e-10


def test_builtin_catalog_names():
    cat = q.builtin_differentials()
    assert {"leminiscate", "four_pole", "hyperelliptic_3", "hyperelliptic_4"} <= set(cat)


# -- tracing ---------------------------------------------------------------------------

def test_constant_chord():
    qd = q.constant(1)
    tr = q.trace_vertical(qd, 0.3 + 0.1j, DISK)
    assert tr.kind == "crosscut"
    assert np.allclose(tr.points.real, 0.3, atol=1e-12)
    assert tr.h_length == pytest.approx(2 * math.sqrt(1 - 0.09), abs=1e-6)
    assert q.verticality_residual(qd, tr) < 1e-12


@pytest.mark.parametrize("r", [0.3, 0.5, 0.8])
def test_leminiscate_closed(r):
    tr = q.trace_vertical(LEM, lem_seed(r))
    assert tr.closed
    assert np.max(leminiscate_oracle_distance(tr.points, r)) < 1e-4
    assert tr.h_length == pytest.approx(math.pi, abs=1e-3)
    assert q.verticality_residual(LEM, tr) < 1e-3


def test_sup_distance_against_parametrisation():
    tr = q.trace_vertical(LEM, lem_seed(0.5))
    z, _ = q.leminiscate_curve(0.5, 20001)
    assert q.sup_distance_to_curve(tr.points, z) < 1e-4


def test_outside_r_one_encircles_both_poles():
    tr = q.trace_vertical(LEM, lem_seed(1 + 1e-3))
    assert tr.closed
    assert tr.points.real.min() < -1 < 1 < tr.points.real.max()
    # twice the length of a single-pole loop
    assert tr.h_length == pytest.approx(2 * math.pi, abs=2e-3)


def test_analytic_parametrisation_hopf_value():
    z, zd = q.leminiscate_curve(0.5)
    assert np.max(np.abs(q.verticality_values(LEM, z, zd) + 4)) < 1e-6


def test_seed_in_exclusion_ball_rejected():
    with pytest.raises(ValueError, match="exclusion"):
        q.trace_vertical(LEM, 1.005)
    with pytest.raises(ValueError, match="outside"):
        q.trace_vertical(q.constant(1), 2.0, DISK)


def test_critical_graph_hits_zero():
    # r = 1 is the lemniscate itself, which runs into the double zero at 0
    tr = q.trace_vertical(LEM, lem_seed(1.0))
    assert tr.kind == "hit_critical"
    assert np.min(np.abs(tr.points)) < 2 * LEM.exclusion_radius


def test_reversibility_of_crosscut():
    qd = q.QuadDifferential.from_expression("z+2")
    tr = q.trace_vertical(qd, 0.2 + 0.1j, DISK)
    assert tr.kind == "crosscut"
    end = tr.points[-1] * (1 - 1e-6)
    back = q.trace_vertical(qd, end, DISK)
    assert q.sup_distance_to_curve([0.2 + 0.1j], back.points) < 10 * q.CLOSURE_TOL


def test_h_length_parametrisation_invariance():
    tr = q.trace_vertical(LEM, lem_seed(0.5))
    full = q.h_length(LEM, tr.points)
    half = q.h_length(LEM, tr.points[::2])
    # chord error is second order in the spacing: doubling it costs about 3x the fine error
    assert abs(half - full) <= 4 * abs(full - math.pi)
    assert abs((4 * full - half) / 3 - math.pi) < abs(full - math.pi)


def test_h_length_constant_segment():
    assert q.h_length(q.constant(1), [0, 3 + 4j]) == pytest.approx(5)
    assert q.h_length(q.constant(4), np.linspace(0, 1, 11)) == pytest.approx(2)


def test_reflection_symmetry():
    a = q.trace_vertical(LEM, lem_seed(0.5))
    b = q.trace_vertical(LEM, -lem_seed(0.5))
    assert b.closed
    assert b.h_length == pytest.approx(a.h_length, abs=1e-6)
    assert q.sup_distance_to_curve(-b.points, np.append(a.points, a.points[0])) < 1e-4


def test_minimal_length_under_wobble():
    from innervar.suites import homotopic_perturbation
    z, _ = q.leminiscate_curve(0.5, 4001)
    rng = np.random.default_rng(3)
    for _ in range(5):
        assert q.h_length(LEM, homotopic_perturbation(z, rng)) >= math.pi - 1e-4


# -- distinguished parameter and circular map ---------------------------------------------

def test_distinguished_parameter_constant():
    w = 0.3 - 0.7j
    assert q.distinguished_parameter(q.constant(1), 0, w) == pytest.approx(w)


def test_distinguished_parameter_sqrt():
    qd = q.QuadDifferential.from_expression("z")
    assert q.distinguished_parameter(qd, 1, 4) == pytest.approx(14 / 3, abs=1e-9)


def test_distinguished_parameter_straightens_arc():
    tr = q.trace_vertical(LEM, lem_seed(0.5))
    arc = tr.points[:200]
    vals = [q.distinguished_parameter(LEM, arc[0], z, arc[:k + 1]) for k, z in
            enumerate(arc) if k > 0 and k % 20 == 0]
    assert np.max(np.abs(np.real(vals))) < 1e-3


def test_distinguished_parameter_path_through_zero():
    with pytest.raises(ValueError):
        q.distinguished_parameter(LEM, -0.5, 0.5)


def test_circular_map_leminiscate():
    cm = q.circular_map(LEM, lem_seed(0.5), [lem_seed(0.3), lem_seed(0.6)], 1.0)
    assert cm.length == pytest.approx(math.pi, abs=1e-3)
    assert cm.modulus_spread < 1e-3
    m = np.abs(cm.values)
    assert m[0] < 1 < m[1]


def test_circular_map_inverse_square():
    qd = q.QuadDifferential.from_expression("1/z^2")
    pts = np.array([0.3 + 0.2j, -0.4 + 0.1j, 0.7j])
    cm = q.circular_map(qd, 0.5, pts, 0)
    assert cm.length == pytest.approx(2 * math.pi, abs=1e-4)
    ratio = cm.values / pts
    assert np.allclose(ratio, ratio[0], rtol=1e-4)


def test_circular_map_rejects_open_trajectory():
    with pytest.raises(ValueError, match="not closed"):
        q.circular_map(q.constant(1), 0.1, [0.2], 0, domain=DISK)


# -- configuration -----------------------------------------------------------------------

def test_classify_constant_all_strip():
    d = q.classify_configuration(q.constant(1), DISK, [0.1, 0.5j, -0.3 + 0.2j])
    assert d.classes == ["strip"] * 3
    assert d.strebel_type and d.coverage == 1.0


def test_classify_leminiscate_mixture():
    dom = PlanarDomain.disk(0, 1.5) - PlanarDomain.disk(1, 0.05) - PlanarDomain.disk(-1, 0.05)
    d = q.classify_configuration(LEM, dom, [1.2, -1.2, 1.45, 1.2j])
    assert {"circular", "strip"} <= set(d.classes)
    assert d.strebel_type


def test_classify_four_pole():
    dom = PlanarDomain.disk(0, 6)
    for p, _ in q.four_pole().poles:
        dom = dom - PlanarDomain.disk(p, 0.05)
    seeds = [1 + 0.5j, -2.5 + 1j, 3.5 + 0.3j, 0.5 + 3j, -5 + 0.5j, 2 + 4j]
    d = q.classify_configuration(q.four_pole(), dom, seeds)
    assert d.strebel_type
    assert all(c in ("circular", "strip") for c in d.classes)


def test_step_limit_is_inconclusive():
    d = q.classify_configuration(LEM, None, [lem_seed(0.5)], step_limit=50)
    assert d.classes == ["inconclusive"]
    assert not d.strebel_type


# -- length-area -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def ring():
    dom = q.leminiscate_ring(0.3, 0.9)
    trajs = [q.trace_vertical(LEM, lem_seed(r)) for r in (0.4, 0.6, 0.8)]
    return build_grid(dom, 128), trajs


def test_length_area_equal_weights(ring):
    g, trajs = ring
    one = lambda z: np.ones(np.shape(z))
    rep = q.length_area_check(LEM, trajs, one, one, g)
    assert rep.passed
    assert rep.area_margin == 0.0
    assert all(l["margin"] == 0.0 for l in rep.lines)


def test_length_area_factor_two(ring):
    g, trajs = ring
    rep = q.length_area_check(LEM, trajs, lambda z: np.ones(np.shape(z)),
                              lambda z: 2 * np.ones(np.shape(z)), g)
    assert rep.passed
    assert rep.area_g == pytest.approx(2 * rep.area_f)
    for l in rep.lines:
        assert l["line_g"] == pytest.approx(2 * l["line_f"])
        assert l["line_f"] == pytest.approx(math.pi, abs=1e-3)


def test_length_area_witness(ring):
    g, trajs = ring
    rep = q.length_area_check(LEM, trajs, lambda z: 2 * np.ones(np.shape(z)),
                              lambda z: np.ones(np.shape(z)), g)
    assert not rep.passed and rep.witness == 0 and rep.area_f is None


def test_distortion_weight_measures_image_length():
    from innervar.testfunc import bump
    eta = bump(1.25, 0.08)
    G = q.distortion_weight(LEM, eta, 0.005)
    tr = q.trace_vertical(LEM, lem_seed(0.5))
    image = tr.points + 0.005 * eta.value(tr.points)
    assert q.line_integral_abs(LEM, tr.points, G) == pytest.approx(q.h_length(LEM, image), rel=1e-5)


def test_leminiscate_ring_area():
    # polar area of |z^2 - 1| < r^2 near +1 by direct quadrature
    from scipy.integrate import quad

    def lobe(r):
        # z = sqrt(w) maps the disk |w - 1| < r^2 onto the lobe; area = int |dz/dw|^2 dA_w
        f = lambda s: quad(lambda t: s / abs(1 + s * np.exp(1j * t)) / 4, 0, 2 * np.pi)[0]
        return quad(f, 0, r * r)[0]
    g = build_grid(q.leminiscate_ring(0.3, 0.9), 256)
    from innervar.field import integrate
    assert integrate(np.ones(g.shape), g) == pytest.approx(lobe(0.9) - lobe(0.3), rel=1e-2)
