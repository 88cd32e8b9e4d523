import json

import numpy as np
import pytest
from scipy.integrate import quad

from microct.grid import Grid2
from microct.phantom import (Disc, Ellipse, Phantom, WavefrontSample, analytic_radon,
                             conormal_samples, load_phantom, rasterize, unit_disc)


def two_discs():
    return Phantom((Disc((-0.5, 0.3), 0.3, 1.0), Disc((0.5, 0.3), 0.25, 2.0)))


def test_rasterize_interior_exterior_and_boundary():
    g = Grid2(5, 2.0)  # nodes at -2, -1, 0, 1, 2
    img = rasterize(unit_disc(), g)
    assert img.values[2, 2] == 1.0
    assert img.values[0, 2] == 0.0  # |x| = 2
    assert img.values[1, 2] == 0.5  # exactly on the circle


def test_overlap_rejected_at_construction():
    with pytest.raises(ValueError, match="overlap"):
        Phantom((Disc((0, 0), 1.0), Disc((1.5, 0), 0.6)))
    with pytest.raises(ValueError, match="overlap"):
        Phantom((Disc((0, 0), 1.0), Disc((0.1, 0), 0.2)))  # nested


def test_invalid_components():
    with pytest.raises(ValueError):
        Ellipse((0, 0), (1.0, -1.0))
    with pytest.raises(ValueError):
        Disc((0, 0), 1.0, value=0.0)
    with pytest.raises(ValueError):
        Phantom(())


def test_disc_chords():
    ph = unit_disc()
    assert analytic_radon(ph, 0.0, (1.0, 0.0)) == pytest.approx(2.0)
    assert analytic_radon(ph, 1.5, (0.6, 0.8)) == 0.0
    s = np.linspace(-0.99, 0.99, 7)
    np.testing.assert_allclose(analytic_radon(ph, s, (0.0, 1.0)), 2 * np.sqrt(1 - s * s), rtol=1e-13)


def test_two_discs_chord_sum_matches_line_quadrature():
    ph = two_discs()
    w = np.array([1.0, 0.0])  # the line s w_perp + t w is horizontal at height s
    s = 0.35
    indicator = lambda t: sum(c.value * (c.level(t, s) < 1) for c in ph.components)
    brute = sum(quad(indicator, a, b, limit=200, points=[-0.8, -0.2, 0.25, 0.75])[0]
                for a, b in [(-2, 0), (0, 2)])
    # w_perp = (0, 1), so the line is y = s
    assert analytic_radon(ph, s, w) == pytest.approx(brute, rel=1e-6)
    assert analytic_radon(ph, s, w) > 0


def test_ellipse_chord_matches_quadrature():
    e = Ellipse((0.2, -0.1), (0.8, 0.4), 0.7, 1.5)
    ph = Phantom((e,))
    th = 1.1
    w = np.array([np.cos(th), np.sin(th)])
    wp = np.array([-w[1], w[0]])
    for s in (-0.3, 0.0, 0.25):
        t = np.linspace(-3, 3, 2_000_001)
        inside = e.level(s * wp[0] + t * w[0], s * wp[1] + t * w[1]) < 1
        brute = e.value * inside.sum() * (t[1] - t[0])
        assert analytic_radon(ph, s, w) == pytest.approx(brute, rel=1e-5)


def test_radon_symmetry_and_linearity():
    ph = two_discs()
    rng = np.random.default_rng(0)
    for _ in range(20):
        th = rng.uniform(0, 2 * np.pi)
        w = np.array([np.cos(th), np.sin(th)])
        s = rng.uniform(-1, 1)
        assert analytic_radon(ph, -s, -w) == pytest.approx(analytic_radon(ph, s, w), abs=1e-14)
    doubled = Phantom(tuple(Ellipse(c.center, c.axes, c.rotation, 3 * c.value) for c in ph.components))
    s = np.linspace(-1, 1, 11)
    np.testing.assert_allclose(analytic_radon(doubled, s, (0.6, 0.8)), 3 * analytic_radon(ph, s, (0.6, 0.8)))


def test_radon_rejects_non_unit_direction():
    with pytest.raises(ValueError):
        analytic_radon(unit_disc(), 0.0, (1.0, 1.0))


def test_conormal_samples_of_unit_disc():
    smp = conormal_samples(unit_disc(), 4)
    pts = np.array([s.x0 for s in smp])
    np.testing.assert_allclose(pts, [[1, 0], [0, 1], [-1, 0], [0, -1]], atol=1e-15)
    for s in smp:
        np.testing.assert_allclose(s.xi0, s.x0, atol=1e-15)
        assert s.strength == 0.5 and s.analytic
    with pytest.raises(ValueError):
        conormal_samples(unit_disc(), 0)


def test_ellipse_axis_endpoint_normal():
    smp = conormal_samples(Phantom((Ellipse((0, 0), (2, 1)),)), 4)
    assert smp[0].x0 == pytest.approx((2.0, 0.0))
    assert smp[0].xi0 == pytest.approx((1.0, 0.0))


def test_rotated_ellipse_normals_match_level_set_gradient():
    e = Ellipse((0.1, 0.2), (0.7, 0.3), 0.9)
    d = 1e-6
    for s in conormal_samples(Phantom((e,)), 12):
        x, y = s.x0
        grad = np.array([e.level(x + d, y) - e.level(x - d, y), e.level(x, y + d) - e.level(x, y - d)])
        np.testing.assert_allclose(s.xi0, grad / np.linalg.norm(grad), atol=1e-7)


def test_conormal_line_is_tangent():
    ph = Phantom((Ellipse((0.1, 0.2), (0.7, 0.3), 0.9),))
    for smp in conormal_samples(ph, 16):
        xi = np.array(smp.xi0)
        w = np.array([-xi[1], xi[0]])  # line direction
        s0 = float(np.array(smp.x0) @ np.array([-w[1], w[0]]))
        d = 1e-4
        plus, minus = analytic_radon(ph, s0 + d, w), analytic_radon(ph, s0 - d, w)
        assert (plus > 0) != (minus > 0)


def test_wavefront_sample_validation():
    with pytest.raises(ValueError):
        WavefrontSample((0, 0), (1.0, 1.0))


def test_phantom_json_roundtrip(tmp_path):
    ph = Phantom((Disc((-0.5, 0.0), 0.3, 1.0), Ellipse((0.4, 0.2), (0.3, 0.1), 0.5, -2.0)))
    p = tmp_path / "ph.json"
    p.write_text(ph.to_json())
    assert load_phantom(p) == ph
    p.write_text(json.dumps({"components": [{"type": "disc", "radius": 1.0}]}))
    assert load_phantom(p) == unit_disc()
    with pytest.raises(ValueError, match="unknown component"):
        Phantom.from_dicts([{"type": "square"}])
