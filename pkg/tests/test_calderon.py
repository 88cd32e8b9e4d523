import math

import numpy as np
import pytest
from scipy.integrate import quad

from microct.calderon import (Conductivity, HalfGrid, MaximumPrincipleError, alessandrini_volume,
                              boundary_determination_experiment, boundary_limit_integral,
                              boundary_oracle, build_calderon_quasimode, chi_norm2, ck_constant,
                              default_chi, dn_pairing_elliptic, halfspace_dn_symbol_check,
                              quasimode_defect, solve_conductivity, solver_log)
from microct.calderon import _check_max_principle, _transport_jet, _jdn, _jdx

GRID = HalfGrid(128, 0.5)


def profile(x, y):
    return 0.3 * np.exp(-((x - 0.05) / 0.3) ** 2) * (1 + 0.5 * y)


def test_halfgrid_geometry():
    g = HalfGrid(4, 1.0, 2.0)
    assert g.h == 0.25 and g.shape == (9, 9)
    assert g.x[0] == -1 and g.y[-1] == 2.0
    assert g.weights().sum() == pytest.approx(4.0)
    b = g.boundary_mask()
    assert b.sum() == 2 * 9 + 2 * 7
    with pytest.raises(ValueError):
        HalfGrid(4, 1.0, 0.3)
    with pytest.raises(ValueError):
        HalfGrid(1)


def test_conductivity_validation():
    with pytest.raises(ValueError, match="positive"):
        Conductivity.constant(GRID, 0.0)
    with pytest.raises(ValueError, match="shape"):
        Conductivity(GRID, np.ones((3, 3)))


def test_normal_jet_of_known_function():
    g = HalfGrid(64, 0.5)
    fn = lambda x, y: 1 + np.sin(x) * y + 0.5 * x * y ** 2 - y ** 3
    jet = Conductivity.from_function(g, fn).normal_jet(3)
    x = g.x
    np.testing.assert_allclose(jet[0], 1.0, atol=1e-10)
    np.testing.assert_allclose(jet[1], np.sin(x), atol=1e-9)
    np.testing.assert_allclose(jet[2], 0.5 * x, atol=1e-8)
    np.testing.assert_allclose(jet[3], -1.0, atol=1e-6)
    # from grid values only (no callable): low orders still right
    sampled = Conductivity(g, Conductivity.from_function(g, fn).values)
    np.testing.assert_allclose(sampled.normal_jet(1)[1], np.sin(x), atol=1e-3)


def test_first_normal_derivative_of_b0_for_unit_conductivity():
    one = Conductivity.constant(GRID)
    for xi in (1.0, -1.0):
        qm = build_calderon_quasimode(one, xi0=xi, lam=16)
        eps = qm.eps
        x = GRID.x
        r = x / eps
        dchi = np.where(np.abs(r) < 1, 8 * np.clip(1 - r * r, 0, None) ** 7 * (-2 * x / eps ** 2), 0.0)
        np.testing.assert_allclose(qm.jets[0][1], 1j * xi * dchi, atol=5e-3 * np.abs(dchi).max())


def test_phase_is_null():
    qm = build_calderon_quasimode(Conductivity.constant(GRID), lam=8)
    p1, p2 = qm.grad_phase()
    assert p1 * p1 + p2 * p2 == 0


def test_boundary_values_of_amplitudes():
    gam = Conductivity.from_function(GRID, lambda x, y: 1 + y * profile(x, y))
    qm = build_calderon_quasimode(gam, lam=32, N=2, M=6)
    np.testing.assert_array_equal(qm.b[:, 0], qm.chi)
    for jet in qm.jets[1:]:
        assert not jet[0].any()
    # tangential differences widen the support by a few stencil widths
    assert np.abs(qm.b[np.abs(GRID.x) > qm.eps + 8 * GRID.h]).max() == 0
    assert np.abs(qm.b[:, GRID.y >= qm.eps]).max() == 0


def test_transport_holds_to_matching_order():
    gam = Conductivity.from_function(GRID, lambda x, y: 1 + profile(x, y))
    qm = build_calderon_quasimode(gam, lam=16, N=1, M=4)
    g = gam.normal_jet(qm.M + 3).astype(complex)
    eta = (qm.xi0 * _jdx(g, GRID.h) + 1j * _jdn(g))[: qm.M + 1]
    res = _transport_jet(qm.jets[0], g[: qm.M + 1], eta, qm.xi0, GRID.h)
    assert np.abs(res[: qm.M]).max() < 1e-9 * np.abs(qm.jets[0]).max()


def test_build_errors():
    one = Conductivity.constant(GRID)
    with pytest.raises(ValueError):
        build_calderon_quasimode(one, M=1)
    with pytest.raises(ValueError):
        build_calderon_quasimode(one, N=0)
    with pytest.raises(ValueError):
        build_calderon_quasimode(one, xi0=0.5)
    with pytest.raises(ValueError):
        build_calderon_quasimode(one, lam=0.5)


def test_defect_linear_in_chi():
    one = Conductivity.constant(GRID)
    base = default_chi()
    a = quasimode_defect(build_calderon_quasimode(one, chi=base, lam=32), one)
    b = quasimode_defect(build_calderon_quasimode(one, chi=lambda x: 2 * base(x), lam=32), one)
    assert b == pytest.approx(2 * a, rel=1e-12)


def test_defect_slope_improves_with_order():
    g = HalfGrid(256, 0.5)
    gam = Conductivity.from_function(g, lambda x, y: 1 + profile(x, y))
    lams = [8, 16, 32, 64]
    slopes = []
    for N, M in [(1, 4), (2, 6)]:
        d = [quasimode_defect(build_calderon_quasimode(gam, N=N, M=M, lam=l), gam) for l in lams]
        slopes.append(np.polyfit(np.log(lams), np.log(d), 1)[0])
    assert slopes[1] < slopes[0] < -0.7


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_ck_matches_quadrature(k):
    ref = 2 * quad(lambda x: x ** k * math.exp(-2 * x), 0, np.inf)[0]
    assert ck_constant(k) == pytest.approx(ref, abs=1e-10)
    assert ck_constant(k) == math.factorial(k) / 2 ** k


def test_ck_rejects_bad_order():
    with pytest.raises(ValueError):
        ck_constant(-1)
    with pytest.raises(ValueError):
        ck_constant(1.5)


def test_limit_integral_vanishes_off_support_and_checks_lambda():
    g = HalfGrid(256, 0.5)
    one = Conductivity.constant(g)
    qm = build_calderon_quasimode(one, lam=64)
    X, _ = g.mesh()
    f = np.clip(np.abs(X) - 0.3, 0, None) ** 2
    assert abs(boundary_limit_integral(qm, qm, f, 0)) < 1e-6 * chi_norm2(default_chi())
    with pytest.raises(ValueError, match="lambda"):
        boundary_limit_integral(qm, build_calderon_quasimode(one, lam=32), 1.0, 0)


def test_boundary_oracle_trapezoid():
    x = np.linspace(-0.5, 0.5, 1025)
    chi = default_chi()(x)
    assert boundary_oracle(np.ones_like(x), chi, x, 0) == pytest.approx(chi_norm2(default_chi()), rel=1e-8)
    assert boundary_oracle(np.ones_like(x), chi, x, 1) == pytest.approx(0.5 * chi_norm2(default_chi()), rel=1e-8)


def test_harmonic_polynomial_and_constants():
    one = Conductivity.constant(GRID)
    X, Y = GRID.mesh()
    u = solve_conductivity(one, lambda x, y: x ** 2 - y ** 2)
    assert np.abs(u - (X ** 2 - Y ** 2)).max() < 1e-8
    gam = Conductivity.from_function(GRID, lambda x, y: 1.5 + 0.4 * np.sin(3 * x + y))
    c = solve_conductivity(gam, lambda x, y: 3.0 + 0 * x)
    assert np.abs(c - 3.0).max() < 1e-14


def test_maximum_principle_holds_and_is_enforced():
    gam = Conductivity.from_function(GRID, lambda x, y: 1.5 + 0.4 * np.sin(3 * x + y))
    before = solver_log()
    data = lambda x, y: np.cos(5 * x) * np.exp(y) + np.sin(7 * y)
    u = solve_conductivity(gam, data)
    X, Y = GRID.mesh()
    bd = data(X, Y)[GRID.boundary_mask()]
    assert bd.min() - 1e-12 <= u.min() and u.max() <= bd.max() + 1e-12
    after = solver_log()
    assert after["solves"] == before["solves"] + 1
    assert after["max_principle_checks"] > before["max_principle_checks"]
    assert after["max_principle_violations"] == before["max_principle_violations"]
    bad = u.copy()
    bad[5, 5] = bd.max() + 1.0
    with pytest.raises(MaximumPrincipleError):
        _check_max_principle(bad, data(X, Y), GRID.boundary_mask())


def test_pairing_symmetric_bilinear_and_constant():
    gam = Conductivity.from_function(GRID, lambda x, y: 1.5 + 0.4 * np.sin(2 * x - y))
    f = lambda x, y: np.cos(3 * x) + y
    g = lambda x, y: np.exp(x) * np.sin(2 * y + 1)
    fg = dn_pairing_elliptic(gam, f, g)
    assert abs(fg - np.conj(dn_pairing_elliptic(gam, g, f))) < 1e-10 * abs(fg)
    assert abs(dn_pairing_elliptic(gam, lambda x, y: 1 + 0 * x, g)) < 1e-12
    combo = dn_pairing_elliptic(gam, lambda x, y: 2 * f(x, y) - 3 * g(x, y), g)
    assert combo == pytest.approx(2 * fg - 3 * dn_pairing_elliptic(gam, g, g), rel=1e-9)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_alessandrini_identity(seed):
    rng = np.random.default_rng(seed)
    a, b, c = rng.normal(size=3)
    g = HalfGrid(64, 1.0)
    g1 = Conductivity.from_function(g, lambda x, y: 1.5 + 0.4 * np.sin(a * x + b * y))
    g2 = Conductivity.from_function(g, lambda x, y: 1.2 + 0.3 * np.cos(c * x - y))
    f1 = lambda x, y: np.cos(a * x) + y * np.sin(b * y + x)
    f2 = lambda x, y: np.exp(0.3 * x * c) * np.sin(2 * y + 1)
    lhs = dn_pairing_elliptic(g1, f1, f2) - dn_pairing_elliptic(g2, f1, f2)
    rhs = alessandrini_volume(g1, g2, solve_conductivity(g1, f1), solve_conductivity(g2, f2))
    assert abs(lhs - rhs) < 0.02 * abs(rhs)


def test_halfspace_symbol():
    rows = halfspace_dn_symbol_check([0, 2, 4, 8])
    assert abs(rows[0].ratio) < 1e-10 and rows[0].rel_error < 1e-10
    r4 = rows[2]
    assert 0.99 <= r4.ratio <= 1.01
    oracles = [r.oracle for r in rows[1:]]
    assert oracles == sorted(oracles, reverse=True) and oracles[-1] >= 1.0
    assert all(r.rel_error < 0.01 for r in rows[1:])


def test_determination_control_and_preconditions():
    g = HalfGrid(64, 0.5)
    one = Conductivity.constant(g)
    rows = boundary_determination_experiment(one, Conductivity.constant(g), 0.0, [16], order=0)
    assert rows[0].scaled_integral == 0 and rows[0].as_record()["k"] == 0
    other = Conductivity.from_function(g, lambda x, y: 1 + profile(x, y))
    with pytest.raises(ValueError, match="boundary"):
        boundary_determination_experiment(other, one, 0.0, [16], order=1)
    with pytest.raises(ValueError):
        boundary_determination_experiment(one, one, 0.0, [16], order=2)
