"""Theta series, Weierstrass functions and the genus-one Lamé scenario.

Everything here is built on one-dimensional theta series with rational
characteristics.  Weierstrass functions are evaluated on a reduced lattice
basis (Gauss reduction) so the series always converge quickly; quasi-periods
for the caller's basis are mapped back through the integer basis change.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .report import CheckReport

__all__ = [
    "LatticeParams",
    "LameScenario",
    "theta_genus1",
    "theta_char",
    "riemann_theta",
    "weierstrass",
    "wp_derivatives",
    "wp_inverse",
    "lame_scenario",
    "its_matveev_genus1_check",
    "neumann_nu_check",
]

_PI = math.pi
# relative size below which a series term is dropped, exp(-39.1) ~ 1e-17
_LOG_CUT = 39.2
_EPS = np.finfo(float).eps


def _term_range(im_w, im_tau):
    """Index window [lo, hi] covering every non-negligible theta term."""
    im_w = np.atleast_1d(np.asarray(im_w, dtype=float))
    half = math.sqrt(_LOG_CUT / (_PI * im_tau))
    centers = -im_w / im_tau
    lo = int(math.floor(centers.min() - half)) - 1
    hi = int(math.ceil(centers.max() + half)) + 1
    return lo, hi


def theta_char(a: float, b: float, w, tau: complex, deriv: int = 0, nrange=None):
    """Theta function with characteristics and its ``w``-derivatives.

    ``theta[a,b](w|tau) = sum_n exp(pi i (n+a)^2 tau + 2 pi i (n+a)(w+b))``.

    Parameters
    ----------
    a, b : float
        Characteristics (typically 0 or 1/2).
    w : complex or array_like
        Argument(s).
    tau : complex
        Modulus, ``Im tau > 0``.
    deriv : int
        Order of the derivative in ``w``.
    nrange : (int, int), optional
        Explicit summation window for ``n``; chosen automatically otherwise.

    Returns
    -------
    complex ndarray with the shape of ``w``.
    """
    tau = complex(tau)
    if tau.imag <= 0:
        raise ValueError("theta series needs Im(tau) > 0")
    w = np.asarray(w, dtype=complex)
    lo, hi = nrange if nrange is not None else _term_range(w.imag, tau.imag)
    n = np.arange(lo, hi + 1, dtype=float) + a
    shape = w.shape
    wf = w.reshape(-1, 1)
    expo = 1j * _PI * n * n * tau + 2j * _PI * n * (wf + b)
    terms = np.exp(expo)
    if deriv:
        terms = terms * (2j * _PI * n) ** deriv
    return terms.sum(axis=1).reshape(shape)


def theta_genus1(z, tau: complex, radius: int | None = None, return_error: bool = False):
    """Genus-one theta function ``sum_n exp(2 pi i n z + pi i n^2 tau)``.

    Parameters
    ----------
    z : complex or array_like
    tau : complex
        Must satisfy ``Im tau > 0``.
    radius : int, optional
        Force the summation window to ``|n - n_c| <= radius`` around the
        dominant index ``n_c``.  By default the window is widened until the
        first omitted term is below 1e-16 of the running sum.
    return_error : bool
        Also return an error estimate (first omitted terms plus a rounding
        allowance).

    Returns
    -------
    value : complex ndarray
    error : float ndarray, only if ``return_error``
    """
    tau = complex(tau)
    if tau.imag <= 0:
        raise ValueError("theta_genus1 needs Im(tau) > 0")
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    vals = np.empty(flat.shape, dtype=complex)
    errs = np.empty(flat.shape, dtype=float)
    for i, zi in enumerate(flat):
        center = int(round(-zi.imag / tau.imag))
        if radius is None:
            lo, hi = _term_range(zi.imag, tau.imag)
        else:
            lo, hi = center - radius, center + radius
        n = np.arange(lo, hi + 1, dtype=float)
        terms = np.exp(2j * _PI * n * zi + 1j * _PI * n * n * tau)
        total = terms.sum()
        edge = np.array([lo - 1, hi + 1], dtype=float)
        omitted = np.abs(np.exp(2j * _PI * edge * zi + 1j * _PI * edge * edge * tau)).sum()
        vals[i] = total
        # tails decay faster than geometrically once past the edge
        errs[i] = 2.0 * omitted + 8 * _EPS * np.abs(terms).sum()
    vals = vals.reshape(z.shape)
    errs = errs.reshape(z.shape)
    if z.ndim == 0:
        vals, errs = vals[()], errs[()]
    return (vals, errs) if return_error else vals


def riemann_theta(z, tau, radius: int = 6):
    """Multi-dimensional theta function summed over an integer box.

    ``theta(z) = sum_{n in Z^g, |n_i| <= radius} exp(2 pi i n.z + pi i n.tau.n)``

    Parameters
    ----------
    z : array_like, shape (g,)
    tau : array_like, shape (g, g)
        Symmetric with positive definite imaginary part.
    radius : int
        Half-width of the summation box.

    Returns
    -------
    value : complex
    error : float
        Sum of moduli over the outermost shell of the box plus a rounding
        allowance; a conservative estimate of the truncation error.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    tau = np.atleast_2d(np.asarray(tau, dtype=complex))
    g = z.size
    if tau.shape != (g, g):
        raise ValueError("tau must be a g x g matrix matching z")
    if not np.allclose(tau, tau.T, rtol=0, atol=1e-13 * max(1.0, np.abs(tau).max())):
        raise ValueError("tau must be symmetric")
    if np.linalg.eigvalsh(0.5 * (tau.imag + tau.imag.T)).min() <= 0:
        raise ValueError("Im(tau) must be positive definite")
    rng = np.arange(-radius, radius + 1)
    pts = np.array(list(itertools.product(rng, repeat=g)), dtype=float)
    quad = np.einsum("ki,ij,kj->k", pts, tau, pts)
    terms = np.exp(2j * _PI * pts @ z + 1j * _PI * quad)
    shell = np.abs(pts).max(axis=1) == radius
    total = terms.sum()
    err = 2.0 * np.abs(terms[shell]).sum() + 8 * _EPS * np.abs(terms).sum()
    return complex(total), float(err)


# ---------------------------------------------------------------------------
# lattices


def _gauss_reduce(v1: complex, v2: complex):
    """Reduce a lattice basis, returning (v1', v2', M) with [v1', v2'] = M [v1, v2]."""
    M = np.array([[1, 0], [0, 1]], dtype=np.int64)
    for _ in range(200):
        if abs(v2) < abs(v1):
            # orientation preserving swap
            v1, v2 = v2, -v1
            M = np.array([[0, 1], [-1, 0]], dtype=np.int64) @ M
        k = round((v2 / v1).real)
        if k == 0:
            break
        v2 = v2 - k * v1
        M = np.array([[1, 0], [-k, 1]], dtype=np.int64) @ M
    return v1, v2, M


@dataclass(frozen=True)
class LatticeParams:
    """Weierstrass lattice generated by ``2*omega1`` and ``2*omega3``.

    Derived attributes (``tau``, ``g2``, ``g3``, ``e``, ``eta1``, ``eta3``)
    are filled in on construction.  ``e`` is ordered as
    ``(wp(omega1), wp(omega1 + omega3), wp(omega3))``.
    """

    omega1: complex
    omega3: complex
    tau: complex = field(init=False)
    g2: complex = field(init=False)
    g3: complex = field(init=False)
    e: tuple = field(init=False)
    eta1: complex = field(init=False)
    eta3: complex = field(init=False)
    # reduced basis used internally for all series
    _w1: complex = field(init=False, repr=False)
    _w3: complex = field(init=False, repr=False)
    _tau: complex = field(init=False, repr=False)
    _eta1r: complex = field(init=False, repr=False)
    _eta3r: complex = field(init=False, repr=False)
    _minv: tuple = field(init=False, repr=False)

    def __post_init__(self):
        w1, w3 = complex(self.omega1), complex(self.omega3)
        if w1 == 0 or w3 == 0:
            raise ValueError("half-periods must be nonzero")
        tau = w3 / w1
        if tau.imag <= 1e-12 * abs(tau):
            raise ValueError("need Im(omega3/omega1) > 0")
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("omega1", w1)
        set_("omega3", w3)
        set_("tau", tau)
        r1, r3, M = _gauss_reduce(2 * w1, 2 * w3)
        r1, r3 = r1 / 2, r3 / 2
        rtau = r3 / r1
        minv = np.round(np.linalg.inv(M)).astype(np.int64)
        set_("_w1", r1)
        set_("_w3", r3)
        set_("_tau", rtau)
        set_("_minv", tuple(map(tuple, minv.tolist())))

        d1 = theta_char(0.5, 0.5, 0.0, rtau, 1)
        d3 = theta_char(0.5, 0.5, 0.0, rtau, 3)
        eta1r = complex(-d3 / (12 * r1 * d1))
        eta3r = (eta1r * r3 - 0.5j * _PI) / r1
        set_("_eta1r", eta1r)
        set_("_eta3r", eta3r)
        (p1, q1), (p3, q3) = minv
        set_("eta1", p1 * eta1r + q1 * eta3r)
        set_("eta3", p3 * eta1r + q3 * eta3r)

        # e-values of the reduced basis from theta nulls
        t2 = complex(theta_char(0.5, 0.0, 0.0, rtau)) ** 4
        t4 = complex(theta_char(0.0, 0.5, 0.0, rtau)) ** 4
        c = _PI**2 / (12 * r1 * r1)
        er = {(1, 0): c * (t2 + 2 * t4), (1, 1): c * (t2 - t4), (0, 1): -c * (2 * t2 + t4)}
        cls = lambda p, q: (int(p) % 2, int(q) % 2)  # noqa: E731
        e1 = er[cls(p1, q1)]
        e3 = er[cls(p3, q3)]
        e2 = er[cls(p1 + p3, q1 + q3)]
        set_("e", (e1, e2, e3))
        set_("g2", -4 * (e1 * e2 + e1 * e3 + e2 * e3))
        set_("g3", 4 * e1 * e2 * e3)

    @property
    def omega2(self) -> complex:
        return self.omega1 + self.omega3

    @property
    def eta2(self) -> complex:
        return self.eta1 + self.eta3

    def reduce(self, u):
        """Split ``u = u0 + 2 m w1 + 2 k w3`` on the reduced basis."""
        u = np.asarray(u, dtype=complex)
        w = u / (2 * self._w1)
        k = np.round(w.imag / self._tau.imag)
        w = w - k * self._tau
        m = np.round(w.real)
        u0 = u - 2 * m * self._w1 - 2 * k * self._w3
        return u0, m, k

    def quasi_period(self, omega: complex) -> complex:
        """``zeta(omega)`` for a half-lattice point ``omega``, i.e. ``eta(omega)``."""
        omega = complex(omega)
        # solve omega = p w1r + q w3r in integers
        A = np.array([[self._w1.real, self._w3.real], [self._w1.imag, self._w3.imag]])
        p, q = np.linalg.solve(A, [omega.real, omega.imag])
        pi_, qi = round(p), round(q)
        if abs(p - pi_) > 1e-8 or abs(q - qi) > 1e-8:
            raise ValueError("omega is not a half-lattice point")
        return pi_ * self._eta1r + qi * self._eta3r

    def to_dict(self) -> dict:
        cplx = lambda v: [float(complex(v).real), float(complex(v).imag)]  # noqa: E731
        return {
            "omega1": cplx(self.omega1),
            "omega3": cplx(self.omega3),
            "tau": cplx(self.tau),
            "g2": cplx(self.g2),
            "g3": cplx(self.g3),
            "e": [cplx(v) for v in self.e],
            "eta1": cplx(self.eta1),
            "eta3": cplx(self.eta3),
        }


def weierstrass(l: LatticeParams, u):
    """Weierstrass ``(wp, wp', zeta, sigma)`` at ``u``.

    Parameters
    ----------
    l : LatticeParams
    u : complex or array_like
        Must avoid lattice points.

    Returns
    -------
    tuple of four complex arrays (scalars for scalar input).
    """
    u = np.asarray(u, dtype=complex)
    u0, m, k = l.reduce(u)
    scale = abs(l._w1)
    if np.any(np.abs(u0) < 1e-13 * scale):
        raise ValueError("Weierstrass functions evaluated at a lattice point")
    w1, tau = l._w1, l._tau
    w = u0 / (2 * w1)
    lo, hi = _term_range(w.imag, tau.imag)
    th = [theta_char(0.5, 0.5, w, tau, d, (lo, hi)) for d in range(4)]
    d1_0 = theta_char(0.5, 0.5, 0.0, tau, 1)
    r1 = th[1] / th[0]
    r2 = th[2] / th[0]
    r3 = th[3] / th[0]
    s = 1.0 / (2 * w1)
    eta1 = l._eta1r
    zeta0 = eta1 * u0 / w1 + s * r1
    wp = -eta1 / w1 - s * s * (r2 - r1 * r1)
    wpp = -(s**3) * (r3 - 3 * r2 * r1 + 2 * r1**3)
    sig0 = 2 * w1 * np.exp(eta1 * u0 * u0 / (2 * w1)) * th[0] / d1_0
    etaW = m * l._eta1r + k * l._eta3r
    W = m * l._w1 + k * l._w3
    zeta = zeta0 + 2 * etaW
    sign = np.where(((m + k + m * k) % 2) == 0, 1.0, -1.0)
    sigma = sign * np.exp(2 * etaW * (u0 + W)) * sig0
    out = (wp, wpp, zeta, sigma)
    if u.ndim == 0:
        out = tuple(complex(v) for v in out)
    return out


def wp_derivatives(l: LatticeParams, u, order: int):
    """Return ``[wp, wp', ..., wp^(order)]`` at ``u``.

    Higher derivatives are polynomials in ``(wp, wp')`` generated from
    ``wp'' = 6 wp^2 - g2/2`` and ``wp'^2 = 4 wp^3 - g2 wp - g3``.
    """
    p, q, _, _ = weierstrass(l, u)
    p = np.asarray(p)
    q = np.asarray(q)
    g2 = l.g2
    # polynomial in (P, Q) stored as {(i, j): coeff}
    poly = {(1, 0): 1.0 + 0j}
    out = []
    for _ in range(order + 1):
        val = sum(cf * p**i * q**j for (i, j), cf in poly.items())
        out.append(val)
        nxt: dict = {}
        for (i, j), cf in poly.items():
            if i:
                nxt[(i - 1, j + 1)] = nxt.get((i - 1, j + 1), 0) + cf * i
            if j:
                # d/du Q^j = j Q^{j-1} (6 P^2 - g2/2)
                nxt[(i + 2, j - 1)] = nxt.get((i + 2, j - 1), 0) + 6 * cf * j
                nxt[(i, j - 1)] = nxt.get((i, j - 1), 0) - 0.5 * g2 * cf * j
        poly = {key: v for key, v in nxt.items() if v != 0}
    return out


def _fundamental(l: LatticeParams, b: complex) -> complex:
    """Map ``b`` into the parallelogram spanned by ``2 omega1, 2 omega3``."""
    A = np.array([[2 * l.omega1.real, 2 * l.omega3.real], [2 * l.omega1.imag, 2 * l.omega3.imag]])
    s, t = np.linalg.solve(A, [b.real, b.imag])
    s -= math.floor(s + 1e-12)
    t -= math.floor(t + 1e-12)
    return complex(2 * s * l.omega1 + 2 * t * l.omega3)


def _gauss_legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


def _wp_inverse_seed(l: LatticeParams, w: complex) -> complex:
    """Incomplete elliptic integral ``int_w^inf dt / sqrt(4t^3 - g2 t - g3)``."""
    e = np.array(l.e)
    emax = float(np.abs(e).max())
    g2, g3 = l.g2, l.g3
    L = 4.0 * (emax + abs(w) + 1.0)
    best, dbest = None, -1.0
    for ang in np.linspace(0, 2 * _PI, 32, endpoint=False):
        d = complex(math.cos(ang), math.sin(ang))
        # distance of each e_j to the segment w -> w + L d
        t = np.clip(((e - w) * np.conj(d)).real, 0, L)
        dist = float(np.abs(w + t * d - e).min())
        if dist > dbest + 1e-12:
            best, dbest = d, dist
    T = w + L * best
    xs, ws = _gauss_legendre(40)
    # tail from T to infinity along t = T / v^2
    sT = np.sqrt(T)
    v = xs
    f = np.sqrt(1 - g2 * v**4 / (4 * T * T) - g3 * v**6 / (4 * T**3))
    tail = np.sum(ws / f) / sT
    # finite part from T back to w, continuing the root from s(T)
    s_prev = 2 * sT**3 * np.sqrt(1 - g2 / (4 * T * T) - g3 / (4 * T**3))
    npan = int(min(2000, max(16, math.ceil(4 * L / max(dbest, 1e-3)))))
    xg, wg = _gauss_legendre(12)
    total = 0j
    for i in range(npan):
        a0 = T + (w - T) * i / npan
        a1 = T + (w - T) * (i + 1) / npan
        ts = a0 + (a1 - a0) * xg
        vals = np.empty(ts.shape, dtype=complex)
        for k, t_ in enumerate(ts):
            s = np.sqrt(4 * t_**3 - g2 * t_ - g3)
            if abs(s - s_prev) > abs(s + s_prev):
                s = -s
            vals[k] = 1 / s
            s_prev = s
        # integrating from T towards w, so int_w^T = -(this)
        total += np.sum(wg * vals) * (a1 - a0)
    return complex(tail - total)


def wp_inverse(l: LatticeParams, w: complex, sheet: int = 1, dwp: complex | None = None,
               tol: float = 1e-13, maxiter: int = 60) -> complex:
    """Solve ``wp(b) = w`` for ``b`` in the fundamental parallelogram.

    Parameters
    ----------
    l : LatticeParams
    w : complex
        Target value (finite).
    sheet : {+1, -1}
        ``+1`` selects the solution whose ``wp'(b)`` has positive real part
        (positive imaginary part on ties); ``-1`` selects ``-b``.
    dwp : complex, optional
        If given, overrides ``sheet``: pick the solution whose ``wp'`` is
        closest to this value.
    tol : float
        Relative tolerance for the final residual.

    Returns
    -------
    complex

    Raises
    ------
    ArithmeticError
        If Newton polishing does not converge.
    """
    w = complex(w)
    halves = (l.omega1, l.omega2, l.omega3)
    scale = max(1.0, float(np.abs(l.e).max()))
    for ej, om in zip(l.e, halves):
        if abs(w - ej) < 1e-12 * scale:
            return _fundamental(l, om)
    b = _wp_inverse_seed(l, w)
    ok = False
    for _ in range(maxiter):
        p, q, _, _ = weierstrass(l, b)
        r = p - w
        if abs(r) <= tol * (1 + abs(w)):
            ok = True
            break
        if q == 0:
            break
        b = b - r / q
    if not ok:
        p, _, _, _ = weierstrass(l, b)
        if abs(p - w) > 1e-9 * (1 + abs(w)):
            raise ArithmeticError(f"wp_inverse: Newton did not converge for w={w}")
    _, q, _, _ = weierstrass(l, b)
    if dwp is not None:
        flip = abs(q - dwp) > abs(-q - dwp)
    else:
        positive = q.real > 0 or (q.real == 0 and q.imag >= 0)
        flip = positive != (sheet > 0)
    if flip:
        b = -b
    return _fundamental(l, b)


# ---------------------------------------------------------------------------
# Lamé scenario


@dataclass(frozen=True)
class LameScenario:
    """Genus-one Lamé potential ``V(x) = 2 wp(x + a)`` and its curve data."""

    lattice: LatticeParams
    shift: complex
    variant: str
    half_period: complex
    period: float
    branch_points: tuple
    expected_lambda: complex
    expected_mean_V: complex

    def potential(self, x):
        p, _, _, _ = weierstrass(self.lattice, np.asarray(x, dtype=complex) + self.shift)
        return 2 * np.asarray(p) if np.ndim(x) else 2 * complex(p)

    def potential_derivatives(self, x, order: int):
        """List of ``V^(k)(x)`` for ``k = 0..order``."""
        ders = wp_derivatives(self.lattice, np.asarray(x, dtype=complex) + self.shift, order)
        return [2 * d for d in ders]

    def dirichlet_mu(self, x):
        """Closed-form Dirichlet eigenvalue ``mu_1(x) = -wp(x + a)``."""
        return -0.5 * self.potential(x)

    def to_dict(self) -> dict:
        cplx = lambda v: [float(complex(v).real), float(complex(v).imag)]  # noqa: E731
        return {
            "variant": self.variant,
            "lattice": self.lattice.to_dict(),
            "shift": cplx(self.shift),
            "period": float(self.period),
            "branch_points": [cplx(v) for v in self.branch_points],
            "expected_lambda": cplx(self.expected_lambda),
            "expected_mean_V": cplx(self.expected_mean_V),
        }


def _clean(v: complex, scale: float) -> complex:
    """Drop real or imaginary parts that are pure rounding noise."""
    re = 0.0 if abs(v.real) <= 1e-15 * scale else v.real
    im = 0.0 if abs(v.imag) <= 1e-15 * scale else v.imag
    return complex(re, im)


def lame_scenario(omega1, omega3, variant: str = "standard", a=None) -> LameScenario:
    """Build a Lamé scenario.

    Parameters
    ----------
    omega1, omega3 : complex
        Half-periods.  For ``"standard"`` ``omega1`` must be real and positive
        (the potential has real period ``2 omega1``).  For ``"conjugate_pair"``
        ``omega3`` must equal ``conj(omega1)`` and the real period is
        ``2 (omega1 + omega3)``.
    variant : {"standard", "conjugate_pair"}
    a : complex, optional
        Shift of the argument; defaults to ``omega3``.
    """
    omega1, omega3 = complex(omega1), complex(omega3)
    lat = LatticeParams(omega1, omega3)
    a = omega3 if a is None else complex(a)
    if variant == "standard":
        if abs(omega1.imag) > 1e-14 * abs(omega1) or omega1.real <= 0:
            raise ValueError("standard variant needs a real positive omega1")
        half = omega1.real + 0j
        step = 2 * omega3.imag
        k = a.imag / step
        if abs(k - round(k)) < 1e-9:
            raise ValueError("shift puts the pole line on the real axis")
    elif variant == "conjugate_pair":
        if abs(omega3 - omega1.conjugate()) > 1e-12 * abs(omega1):
            raise ValueError("conjugate_pair variant needs omega3 = conj(omega1)")
        if omega1.real <= 0:
            raise ValueError("conjugate_pair variant needs a positive real period")
        beta = abs(omega1.imag)
        if not (0 < a.imag < 2 * beta):
            raise ValueError("conjugate_pair variant needs 0 < Im(a) < 2|Im(omega1)|")
        half = (omega1 + omega3).real + 0j
    else:
        raise ValueError(f"unknown variant {variant!r}")
    zeta_half = lat.quasi_period(half)
    lam = zeta_half / half
    scale = max(abs(e) for e in lat.e)
    E = tuple(_clean(-e, scale) for e in lat.e)
    return LameScenario(lat, a, variant, half, float(2 * half.real), E, lam, -2 * lam)


def its_matveev_genus1_check(s: LameScenario, x_samples, tol: float = 1e-7) -> CheckReport:
    """Compare ``2 wp(x + omega3)`` with the theta-function representation.

    The right-hand side is ``-2 (ln theta(1/2 + x/(2 omega1)))'' - 2 zeta(omega1)/omega1``
    with the second log-derivative taken analytically from theta derivatives.
    Residuals are relative to ``max(1, |V|)``.
    """
    if s.variant != "standard":
        raise ValueError("its_matveev_genus1_check needs the standard variant")
    lat = s.lattice
    x = np.asarray(x_samples, dtype=complex)
    w1 = lat.omega1
    arg = 0.5 + x / (2 * w1)
    t0 = theta_char(0.0, 0.0, arg, lat.tau, 0)
    t1 = theta_char(0.0, 0.0, arg, lat.tau, 1)
    t2 = theta_char(0.0, 0.0, arg, lat.tau, 2)
    dd = (t2 / t0 - (t1 / t0) ** 2) / (2 * w1) ** 2
    rhs = -2 * dd - 2 * lat.eta1 / w1
    lhs = 2 * np.asarray(weierstrass(lat, x + lat.omega3)[0])
    res = np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))
    return CheckReport.from_residuals("its_matveev_genus1", res, tol)


def neumann_nu_check(s: LameScenario, x_samples, tol: float = 1e-9) -> CheckReport:
    """Roots of ``H_2(z, x)`` against ``[wp -+ sqrt(g2 - 3 wp^2)]/2``."""
    from . import symkdv

    H = symkdv.build_H(1)
    lat = s.lattice
    res = []
    for x in np.atleast_1d(np.asarray(x_samples, dtype=float)):
        ders = s.potential_derivatives(x, 2)
        sample = symkdv.NumericPotentialSample(float(x), [complex(d) for d in ders])
        coeffs = symkdv.z_coefficients(H, sample, [0j])
        roots = np.roots(coeffs[::-1])
        p = complex(weierstrass(lat, x + s.shift)[0])
        r = np.sqrt(lat.g2 - 3 * p * p)
        closed = np.array([(p - r) / 2, (p + r) / 2])
        d1 = max(abs(roots[0] - closed[0]), abs(roots[1] - closed[1]))
        d2 = max(abs(roots[0] - closed[1]), abs(roots[1] - closed[0]))
        res.append(min(d1, d2) / max(1.0, abs(p)))
    return CheckReport.from_residuals("neumann_nu", res, tol)
