import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isothermic import gallery as G
from isothermic import quat as Q
from isothermic import surface as S
from isothermic.circle import CircleSpec, circle_curve, resonance_nu, resonant_state
from isothermic.errors import Degenerate, FlatnessViolation, NotIsothermic
from isothermic.polarised import RiccatiState


@pytest.fixture(scope="module")
def cylinder():
    return G.circular_cylinder(12, 4, -3, 3)


def perturbed(net, idx, eps=1e-3):
    pts = net.points.copy()
    pts[idx] += np.array([0.0, eps, -eps, eps])
    return net.with_points(pts)


def test_check_report_semantics():
    chk = S.Check.from_residuals("x", np.array([[0.1, 0.3], [0.2, np.nan]]), 0.5, origin=(10, 20))
    assert chk.residual == np.inf and not chk.passed
    assert chk.worst == (11, 21)
    ok = S.Check.from_residuals("y", np.array([1e-12, 3e-12]), 1e-11)
    assert ok.passed and ok.worst == (1,)
    assert not S.Check("z", 1e-9, 1e-9).passed


def test_domain_validation():
    with pytest.raises(ValueError):
        S.PolarisedDomain2D(3, 2, [1.0], [1.0])
    with pytest.raises(ValueError):
        S.PolarisedDomain2D(3, 2, [1.0, 0.0], [1.0])
    with pytest.raises(ValueError):
        S.PolarisedDomain2D(4, 2, [1.0, 2.0, 1.5], [1.0], period_m=1)


def test_lattice_indexing(cylinder):
    assert cylinder.origin == (0, -3)
    assert cylinder.index(0, 0) == (0, 3)
    assert cylinder.at(3, 0).isclose(Q.Quaternion(0, 0, 0, -1), 1e-15)
    assert cylinder.at(0, 2).isclose(Q.Quaternion(0, 0.5, 1.0, 0), 1e-15)
    with pytest.raises(IndexError):
        cylinder.index(0, 4)


def test_cylinder_is_isothermic(cylinder):
    assert S.verify_isothermic(cylinder, 1e-12).passed
    assert S.one_form_closure(cylinder).passed


def test_perturbation_is_local(cylinder):
    net = perturbed(cylinder, (5, 3))
    chk = S.verify_isothermic(net)
    assert not chk.passed
    bad = np.argwhere(chk.residuals > 1e-10)
    assert {tuple(b) for b in bad} == {(4, 2), (5, 2), (4, 3), (5, 3)}
    assert not S.one_form_closure(net).passed


def test_closure_scales_inversely_with_mu():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(3, 3, 4))
    net = S.IsothermicNet.from_arrays(pts, [1.0, 2.0], [-1.0, 0.5])
    scaled = S.IsothermicNet.from_arrays(pts, [3.0, 6.0], [-3.0, 1.5])
    r1 = S.one_form_closure(net).residuals
    r3 = S.one_form_closure(scaled).residuals
    assert r1.max() > 1e-3
    assert np.allclose(r3, r1 / 3, rtol=1e-12)


def test_christoffel_of_cylinder(cylinder):
    star = S.christoffel(cylinder)
    m = np.arange(13)[:, None]
    n = np.arange(-3, 4)[None, :]
    expected = Q.from_complex(1j * n / 4 + 0 * m) - Q.j_complex(np.exp(2j * np.pi * m / 12) + 0 * n)
    shift = star.points - expected
    assert np.abs(shift - shift[0, 0]).max() < 1e-12
    assert star.domain.period_m == 12


def test_christoffel_rejects_non_isothermic(cylinder):
    with pytest.raises(NotIsothermic):
        S.christoffel(perturbed(cylinder, (2, 2)))


def test_christoffel_twice_is_translation():
    net = G.homogeneous_torus(G.TorusSpec(12, 10, 2, 1, 1, 1, p=0.6, q=0.8))
    back = S.christoffel(S.christoffel(net))
    shift = back.points - net.points
    assert np.abs(shift - shift[0, 0]).max() < 1e-9
    assert S.verify_isothermic(S.christoffel(net)).passed


def test_cmc_cylinder_parallel_surface_is_darboux_transform(cylinder):
    # f* is the Darboux transform of f with spectral parameter H^2 = 1/4
    star = G.parallel_cmc_surface(cylinder)
    i0 = cylinder.index(0, 0)
    init = RiccatiState.from_arrays(star.points[i0] - cylinder.points[i0], [1.0, 0, 0, 0])
    fhat = S.darboux_surface(cylinder, 0.25, init)
    assert np.abs(fhat.points - star.points).max() < 1e-12
    assert all(c.passed for c in S.verify_periodicity(fhat, "m", 12))


def test_darboux_surface_pair_and_labels(cylinder):
    init = RiccatiState.from_arrays([0.1, 0.2, 0.5, -0.3], [1.0, 0.3, 0.0, 0.2])
    fhat = S.darboux_surface(cylinder, -0.41, init)
    assert all(c.passed for c in S.verify_darboux_pair(cylinder, fhat, -0.41))
    # the transform shares the labels of the original net
    assert S.verify_isothermic(fhat).passed
    assert fhat.domain.period_m is None
    assert S.verify_isothermic(S.christoffel(fhat)).passed


def test_darboux_surface_flags_non_isothermic_input(cylinder):
    bad = perturbed(cylinder, (4, 3), eps=1e-2)
    init = RiccatiState.from_arrays([0.1, 0.2, 0.5, -0.3], [1.0, 0.3, 0.0, 0.2])
    with pytest.raises(FlatnessViolation) as info:
        S.darboux_surface(bad, -0.41, init)
    assert info.value.quad in {(3, -1), (4, -1), (3, 0), (4, 0)}


def test_quad_consistency_both_ways(cylinder):
    init = RiccatiState.from_arrays([0.1, 0.2, 0.5, -0.3], [1.0, 0.3, 0.0, 0.2])
    A, B = S.riccati_grid(cylinder, -0.41, init, start=(5, 1))
    assert S.quad_consistency(cylinder, -0.41, A, B).residual < 1e-9


def test_flatness(cylinder):
    assert S.verify_flatness(cylinder, 0.37).passed
    exact = S.verify_flatness(cylinder, 0.0)
    assert exact.residual == 0.0
    chk = S.verify_flatness(perturbed(cylinder, (6, 4)), 0.37)
    assert not chk.passed
    bad = {tuple(b) for b in np.argwhere(chk.residuals > 1e-10)}
    assert bad and bad <= {(5, 3), (6, 3), (5, 4), (6, 4)}


@settings(max_examples=5, deadline=None)
@given(st.floats(-3, 3).filter(lambda v: abs(v) > 1e-3))
def test_flatness_random_lambda_on_torus(lam):
    net = G.homogeneous_torus(G.TorusSpec(9, 7, 2, 1, 1, 1, p=0.6, q=0.8))
    assert S.verify_flatness(net, lam).residual < 1e-10


def test_periodicity_reduction_biconditional():
    spec = G.CylinderSpec(20, 4, 1, 2, -4, 4)
    net = spec.net()
    init = G.bubbleton_init(spec, -3.0)
    agree = 0
    for k in (2, 3, 4, 5, 6):
        nu = G.cylinder_resonance(20, 1, k)
        init = G.bubbleton_init(G.CylinderSpec(20, 4, 1, k, -4, 4), -3.0)
        for shift in (0.0, 0.013):
            fhat = S.darboux_surface(net, nu + shift, init)
            grid, line = S.verify_periodicity(fhat, "m", 20, 1e-8)
            assert grid.passed == line.passed == (shift == 0.0)
            agree += 1
    assert agree == 10


def test_s3_check():
    spec = G.TorusSpec(12, 12, 2, 3, 3, 2)
    net = G.homogeneous_torus(spec)
    grid, vertex = S.s3_check(net, 1e-12)
    assert grid.passed and vertex.passed
    r2 = G.s3_initial_solver(spec, 0.45)
    cp, cm = G.s3_constants(0.45, r2)
    good = S.darboux_surface(net, spec.nu, G.torus_init(spec, cp, cm))
    assert all(c.passed for c in S.s3_check(good))
    # push the initial point off the sphere: every vertex leaves it
    i0 = net.index(0, 0)
    off = 1.1 * good.points[i0]
    init = RiccatiState.from_arrays(off - net.points[i0], [1.0, 0, 0, 0])
    bad = S.darboux_surface(net, spec.nu, init)
    res = S.s3_check(bad)[0].residuals
    assert res.min() > 1e-3


def test_fourth_point_solves_cross_ratio():
    f, f1, f2 = (np.array(v, dtype=float) for v in ([0, 0, 1, 0], [0.2, 0.1, 0.3, 0.4], [-0.5, 0.3, 0.0, 0.7]))
    x = S.fourth_point(f, f1, f2, -2.5)
    cr = Q.qcross_ratio(f, f1, x, f2)
    assert Q.real_part_residual(cr, -2.5) < 1e-13


@pytest.mark.parametrize("ks", [(2, 3), (2, 4), (3, 5)])
def test_permutability_on_circle(ks):
    spec = CircleSpec(1.0, 12)
    c = circle_curve(spec)
    cp = np.array([0.3, 0.1, 1.0, 0.2])
    cm = np.array([0.5, -0.4, 0.2, 0.7])
    nus = [resonance_nu(spec, k) for k in ks]
    inits = [resonant_state(spec, k, cp, cm) for k in ks]
    quad = S.permutability_check(c, *nus, *inits)
    assert all(chk.passed for chk in quad.checks), quad.checks
    # both transforms close, and so does the fourth curve
    assert np.abs(quad.f12.points[-1] - quad.f12.points[0]).max() < 1e-9


def test_permutability_preconditions():
    spec = CircleSpec(1.0, 12)
    c = circle_curve(spec)
    st = resonant_state(spec, 2, Q.J, Q.ONE)
    with pytest.raises(ValueError):
        S.permutability_check(c, -1.0, -1.0, st, st)
    with pytest.raises(Degenerate):
        S.permutability_check(c, 0.0, -1.0, st, st)
