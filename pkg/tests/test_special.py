import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agspectrum import special as sf

# [DERIVED] mpmath at 30 digits: q-series (Eisenstein E2, E4, E6 and the
# cosecant expansion of wp) and jtheta; frozen here.
SQUARE = dict(g2=11.817045008077116, eta1=0.78539816339744831, u=0.3 + 0.2j,
              wp=2.9878860447320551 - 7.0297859528410247j)
TILTED = dict(omega3=0.4 + 0.9j, g2=2.6674343769395732 + 3.8062837578345126j,
              g3=10.516278270595571 - 3.774938992896582j, eta1=0.87814154220703119 - 0.039926677282194502j,
              u=0.35 - 0.15j, wp=4.7863847541103594 + 4.9913014800526983j)
THETA3 = 1.0463725649116859977 - 0.0046566599359187861451j  # theta(0.2+0.1i | 0.3+1.1i)
THETA1 = 0.45531559393426554754 + 0.33205427862976403703j  # jacobi theta_1 at the same point


def test_theta_genus1_oracle():
    assert abs(sf.theta_genus1(0.2 + 0.1j, 0.3 + 1.1j) - THETA3) < 1e-14


def test_theta_char_half_half_is_minus_theta1():
    assert abs(sf.theta_char(0.5, 0.5, 0.2 + 0.1j, 0.3 + 1.1j) + THETA1) < 1e-14


def test_theta_error_estimate_bounds_truncation():
    full = sf.theta_genus1(0.4 - 0.3j, 0.1 + 0.7j)
    val, err = sf.theta_genus1(0.4 - 0.3j, 0.1 + 0.7j, radius=2, return_error=True)
    assert abs(val - full) <= err


def test_riemann_theta_diagonal_factorizes():
    # dual route: genus-2 sum over a box vs product of two genus-1 sums
    tau = np.diag([0.2 + 1.0j, -0.3 + 0.8j])
    zz = np.array([0.1 + 0.05j, -0.2 + 0.1j])
    prod = complex(sf.theta_genus1(complex(zz[0]), tau[0, 0]) * sf.theta_genus1(complex(zz[1]), tau[1, 1]))
    val, err = sf.riemann_theta(zz, tau, radius=8)
    assert abs(val - prod) < 1e-12
    assert err < 1e-12


def test_riemann_theta_genus1_matches():
    assert abs(sf.riemann_theta([0.2 + 0.1j], [[0.3 + 1.1j]], radius=10)[0] - THETA3) < 1e-13


@given(st.floats(-0.5, 0.5), st.floats(-0.3, 0.3))
@settings(max_examples=20, deadline=None)
def test_theta_quasi_periodicity(x, y):
    tau = 0.25 + 0.9j
    zz = complex(x, y)
    assert abs(sf.theta_genus1(zz + 1, tau) - sf.theta_genus1(zz, tau)) < 1e-12
    lhs = sf.theta_genus1(zz + tau, tau)
    rhs = cmath.exp(-1j * math.pi * tau - 2j * math.pi * zz) * sf.theta_genus1(zz, tau)
    assert abs(lhs - rhs) < 1e-11 * max(1.0, abs(rhs))


def test_square_lattice_invariants():
    L = sf.LatticeParams(1.0, 1j)
    assert abs(L.g2 - SQUARE["g2"]) < 1e-12
    assert abs(L.g3) < 1e-12
    assert abs(L.eta1 - SQUARE["eta1"]) < 1e-14
    assert abs(L.eta1 - math.pi / 4) < 1e-14
    assert abs(sf.weierstrass(L, SQUARE["u"])[0] - SQUARE["wp"]) < 1e-12


def test_tilted_lattice_invariants():
    L = sf.LatticeParams(1.0, TILTED["omega3"])
    assert abs(L.g2 - TILTED["g2"]) < 1e-12
    assert abs(L.g3 - TILTED["g3"]) < 1e-12
    assert abs(L.eta1 - TILTED["eta1"]) < 1e-14
    assert abs(sf.weierstrass(L, TILTED["u"])[0] - TILTED["wp"]) < 1e-12


lattices = st.tuples(st.floats(0.5, 2.0), st.floats(-0.8, 0.8), st.floats(0.5, 2.0)).map(
    lambda t: (t[0], complex(t[1], t[2])))


@given(lattices)
@settings(max_examples=15, deadline=None)
def test_lattice_relations(lat):
    w1, w3 = lat
    L = sf.LatticeParams(w1, w3)
    e = np.array(L.e)
    assert abs(e.sum()) < 1e-12 * max(1.0, np.abs(e).max())
    assert abs(L.eta1 * L.omega3 - L.eta3 * L.omega1 - 0.5j * math.pi) < 1e-12
    scale = max(1.0, abs(L.g2) ** 1.5, abs(L.g3))
    assert np.all(np.abs(4 * e**3 - L.g2 * e - L.g3) < 1e-10 * scale)


@given(lattices, st.floats(0.05, 0.95), st.floats(0.05, 0.95))
@settings(max_examples=20, deadline=None)
def test_wp_differential_equation(lat, s, t):
    L = sf.LatticeParams(*lat)
    u = 2 * s * L.omega1 + 2 * t * L.omega3
    p, dp, _, _ = sf.weierstrass(L, u)
    assert abs(dp**2 - (4 * p**3 - L.g2 * p - L.g3)) <= 1e-10 * max(1.0, abs(dp) ** 2)


def test_zeta_sigma_quasi_periods():
    L = sf.LatticeParams(1.0, 0.4 + 0.9j)
    u = 0.31 + 0.17j
    _, _, z0, s0 = sf.weierstrass(L, u)
    _, _, z1, s1 = sf.weierstrass(L, u + 2 * L.omega1)
    assert abs(z1 - z0 - 2 * L.eta1) < 1e-12
    assert abs(s1 + cmath.exp(2 * L.eta1 * (u + L.omega1)) * s0) < 1e-11 * abs(s1)


def test_wp_derivatives_consistent():
    L = sf.LatticeParams(1.0, 1j)
    u = 0.4 + 0.3j
    p, dp, _, _ = sf.weierstrass(L, u)
    d = sf.wp_derivatives(L, u, 3)
    assert abs(d[0] - p) < 1e-14 and abs(d[1] - dp) < 1e-12
    assert abs(d[2] - (6 * p * p - L.g2 / 2)) < 1e-11
    assert abs(d[3] - 12 * p * dp) < 1e-10


@pytest.mark.parametrize("w", [0.7 + 0.2j, -3.0 + 1.0j, 12.0 - 5.0j])
def test_wp_inverse_roundtrip(w):
    L = sf.LatticeParams(1.0, 0.4 + 0.9j)
    b = sf.wp_inverse(L, w)
    p, dp, _, _ = sf.weierstrass(L, b)
    assert abs(p - w) < 1e-10 * max(1.0, abs(w))
    b2 = sf.wp_inverse(L, w, sheet=-1)
    assert abs(sf.weierstrass(L, b2)[0] - w) < 1e-10 * max(1.0, abs(w))
    assert abs(sf.weierstrass(L, b2)[1] + dp) < 1e-8 * max(1.0, abs(dp))


def test_lame_scenario_standard():
    s = sf.lame_scenario(1.0, 1j)
    assert s.period == 2.0
    assert all(e.imag == 0 for e in s.branch_points)
    assert abs(s.expected_lambda - math.pi / 4) < 1e-14
    x = np.linspace(0, 2, 7)
    assert np.allclose(s.potential(x), s.potential(x + 2.0), atol=1e-10)


def test_lame_scenario_rejects_bad_input():
    with pytest.raises(ValueError):
        sf.lame_scenario(1 + 0.5j, 1j)
    with pytest.raises(ValueError):
        sf.lame_scenario(1.0, 1j, a=0.3)
    with pytest.raises(ValueError):
        sf.lame_scenario(1 - 0.8j, 1 + 0.7j, "conjugate_pair")
    with pytest.raises(ValueError):
        sf.lame_scenario(1.0, 1j, "other")


def test_its_matveev_identity():
    s = sf.lame_scenario(1.0, 1j)
    rep = sf.its_matveev_genus1_check(s, np.linspace(0.05, 1.95, 20))
    assert rep.passed and rep.max_residual <= 1e-7


def test_neumann_roots():
    s = sf.lame_scenario(1.0, 0.4 + 0.9j)
    rep = sf.neumann_nu_check(s, np.linspace(0.1, 1.9, 8))
    assert rep.passed


def test_dirichlet_closed_form():
    s = sf.lame_scenario(1.0, 1j)
    x = np.array([0.2, 0.9])
    assert np.allclose(s.dirichlet_mu(x), -np.asarray(sf.weierstrass(s.lattice, x + s.shift)[0]))
