import cmath
import math

import numpy as np
import pytest

from agspectrum import floquet as fl

Z_SAMPLES = np.array([-1.0, 0.3 + 0.2j, 2.5 - 1.0j, 9.0 + 0.5j, -4.0 - 2.0j])


def test_free_discriminant_closed_form():
    # V = 0: c = cos(Om sqrt z), s_x = cos(Om sqrt z)  [DERIVED: closed form]
    pot = fl.PeriodicPotential.free(math.pi)
    d = fl.discriminant(pot, Z_SAMPLES)
    exact = np.array([cmath.cos(math.pi * cmath.sqrt(z)) for z in Z_SAMPLES])
    assert np.abs(d - exact).max() < 1e-8 * max(1.0, np.abs(exact).max())
    assert abs(fl.discriminant(pot, -1.0) - math.cosh(math.pi)) < 1e-8


def test_free_monodromy_entries():
    pot = fl.PeriodicPotential.free(2.0)
    z = 1.7 + 0.4j
    m = fl.monodromy(pot, z)
    k = cmath.sqrt(z)
    assert abs(m.s - cmath.sin(2 * k) / k) < 1e-9
    assert abs(m.cx + k * cmath.sin(2 * k)) < 1e-9


def test_determinant_is_one(lame_std_pot, lame_conj):
    pots = [lame_std_pot, fl.PeriodicPotential.from_lame(lame_conj[0])]
    for pot in pots:
        for m in fl.monodromy_batch(pot, Z_SAMPLES):
            scale = max(1.0, abs(m.c * m.sx) + abs(m.s * m.cx))
            assert abs(m.det - 1) <= 1e-10 * scale


def test_discriminant_base_point_independent(lame_std_pot):
    d0 = fl.discriminant(lame_std_pot, Z_SAMPLES)
    d1 = fl.discriminant(lame_std_pot, Z_SAMPLES, x0=0.77)
    assert np.abs(d0 - d1).max() < 1e-9 * max(1.0, np.abs(d0).max())


def test_discriminant_real_on_real_axis(lame_std_pot):
    d = fl.discriminant(lame_std_pot, np.array([-3.0, -1.0, 0.5, 4.0]))
    assert np.abs(d.imag).max() < 1e-9


def test_multipliers():
    small, big = fl.floquet_multipliers(np.array([0.3, 2.0 + 1.0j, -5.0]))
    assert np.allclose(small * big, 1)
    assert np.all(np.abs(small) <= 1 + 1e-15)


def test_nonperiodic_potential_rejected():
    with pytest.raises(ValueError):
        fl.PeriodicPotential(1.0, lambda x: np.asarray(x, dtype=complex))
    with pytest.raises(ValueError):
        fl.discriminant(fl.PeriodicPotential.free(), 1.0, tol=0.0)


def test_marching_squares_circle():
    xs = np.linspace(-2, 2, 81)
    ys = np.linspace(-2, 2, 81)
    X, Y = np.meshgrid(xs, ys)
    segs = fl.marching_squares(X**2 + Y**2 - 1, xs, ys)
    pts = np.array([p for s in segs for p in s[:2]])
    assert len(segs) > 50
    assert np.abs(np.abs(pts) - 1).max() < 2e-3


def test_scan_finds_real_bands(lame_std, lame_std_pot):
    s = lame_std[0]
    E = sorted(e.real for e in s.branch_points)
    arcs = fl.spectrum_scan(lame_std_pot, (-3.0, 6.0, -0.5, 0.5), (91, 20))
    v = np.concatenate([a.vertices for a in arcs])
    assert np.abs(v.imag).max() < 1e-6
    # every vertex lies in [E0, E1] or [E2, oo) up to the grid step
    step = 0.1
    inside = ((v.real >= E[0] - step) & (v.real <= E[1] + step)) | (v.real >= E[2] - step)
    assert inside.all()
    assert v.real.min() < E[0] + step and v.real.max() > 5.5
    assert all(a.arc_kind == "floquet-scan" for a in arcs)


def test_period_mean_matches_curve(lame_std, lame_std_pot):
    assert abs(fl.period_mean(lame_std_pot) + math.pi / 2) < 1e-10
    rep = fl.mean_value_bridge(lame_std_pot, lame_std[2])
    assert rep.passed


def test_green_links_standard(lame_std, lame_std_pot):
    _, c, pd = lame_std
    band = np.array([-1.2, -0.4, 2.5, 6.0])
    off = np.array([-2.5 + 0.4j, 0.6 + 0.3j, 2.0 - 0.8j])
    r = fl.check_green_discriminant_links(lame_std_pot, c, pd, band, off, x_samples=[0.1, 0.6])
    for k in ("i", "ii", "iii"):
        assert r[k].passed, r[k].to_dict()


def test_green_links_conjugate_pair(lame_conj):
    s, c, pd = lame_conj
    pot = fl.PeriodicPotential.from_lame(s)
    off = np.array([-0.8 + 0.4j, 1.2 - 0.5j, 2.5 + 0.7j])
    r = fl.check_green_discriminant_links(pot, c, pd, (), off, x_samples=[0.3])
    for k in ("i", "ii", "iii"):
        assert r[k].passed, r[k].to_dict()
