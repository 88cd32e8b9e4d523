"""Randomised invariants."""
import numpy as np
from hypothesis import given, settings, strategies as st

from microct.grid import Grid2, Image, integrate, rel_l2_error
from microct.phantom import Disc, Phantom, analytic_radon
from microct.spectral import multiplier
from microct.xray import LineSet, SinogramGeometry, is_visible, line_coordinates, radon

G = Grid2(32, 1.0)
RNG_FIELD = np.random.default_rng(0).normal(size=(32, 32))
finite = st.floats(-10, 10, allow_nan=False)
angles = st.floats(0, 2 * np.pi, allow_nan=False)
points = st.tuples(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))


def unit(t):
    return np.array([np.cos(t), np.sin(t)])


@given(finite, finite)
def test_integrate_is_linear(a, b):
    f = Image(G, RNG_FIELD)
    g = Image(G, RNG_FIELD ** 2)
    lhs = integrate(f * a + g * b)
    assert np.isclose(lhs, a * integrate(f) + b * integrate(g), rtol=1e-10, atol=1e-10)


@given(st.floats(1e-3, 1e3))
def test_rel_error_scale_invariant(c):
    f = Image(G, RNG_FIELD)
    g = Image(G, RNG_FIELD + 0.1)
    assert np.isclose(rel_l2_error(f * c, g * c), rel_l2_error(f, g), rtol=1e-9)


@given(points, angles, st.floats(0.05, 1.2))
def test_visibility_even_in_xi(x0, t, a):
    xi = unit(t)
    for ls in (LineSet.limited_angle(a), LineSet.exterior(a)):
        assert is_visible(ls, x0, xi) == is_visible(ls, x0, -xi)


@given(points, angles)
def test_line_passes_through_point(x0, t):
    s, th = line_coordinates(x0, unit(t))
    assert s >= 0
    perp = np.array([-np.sin(th), np.cos(th)])
    assert abs(np.dot(x0, perp) - s) < 1e-12


@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(0.05, 0.4), angles, st.floats(-1, 1))
def test_analytic_radon_even(cx, cy, r, t, s):
    ph = Phantom((Disc((cx, cy), r),))
    assert np.isclose(analytic_radon(ph, s, unit(t)), analytic_radon(ph, -s, -unit(t)), atol=1e-14)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_discrete_radon_symmetry(seed):
    rng = np.random.default_rng(seed)
    g = Grid2(48, 1.0)
    X, Y = g.mesh()
    c = rng.uniform(-0.2, 0.2, 2)
    f = Image(g, np.clip(1 - ((X - c[0]) ** 2 + (Y - c[1]) ** 2) / 0.25, 0, None) ** 3)
    sino = radon(f, SinogramGeometry(49, 1.0, 32))
    # (s, theta) and (-s, theta + pi) are the same line
    np.testing.assert_allclose(sino.values[::-1, 16:], sino.values[:, :16], atol=1e-12)


@given(st.floats(0.1, 1.5), st.floats(0.1, 1.5))
def test_symbols_compose(a, b):
    freq = np.linspace(-40, 40, 161)
    np.testing.assert_allclose(multiplier(freq, a, 0) * multiplier(freq, b, 0),
                               multiplier(freq, a + b, 0), rtol=1e-12)
