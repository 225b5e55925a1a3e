"""Floquet theory for periodic potentials, used as an independent oracle.

Monodromy matrices come from direct ODE integration of ``psi'' = (V - z) psi``
for the fundamental system ``c, s`` with ``c = s' = 1`` and ``c' = s = 0`` at
``x0``.  Many spectral parameters are integrated together as one system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from . import curve as cv
from .report import CheckReport

__all__ = [
    "PeriodicPotential",
    "MonodromyMatrix",
    "monodromy",
    "monodromy_batch",
    "discriminant",
    "floquet_multipliers",
    "spectrum_scan",
    "marching_squares",
    "period_mean",
    "check_green_discriminant_links",
    "mean_value_bridge",
]


@dataclass(frozen=True)
class PeriodicPotential:
    """``V`` with real period ``Omega``.

    Attributes
    ----------
    period : float
    evaluator : callable
        ``x -> V(x)``; must accept numpy arrays.
    x0 : float
        Base point of the monodromy.
    derivatives : callable, optional
        ``(x, order) -> [V, V', ..., V^(order)]``, needed by the Green's
        function check.
    """

    period: float
    evaluator: Callable
    x0: float = 0.0
    derivatives: Callable | None = None

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be positive")
        probe = np.linspace(0.0, self.period, 7)[:-1] + 0.137 * self.period
        a = np.asarray(self.evaluator(probe), dtype=complex)
        b = np.asarray(self.evaluator(probe + self.period), dtype=complex)
        err = float(np.abs(a - b).max() / max(1.0, np.abs(a).max()))
        if err > 1e-10:
            raise ValueError(f"potential is not {self.period}-periodic (mismatch {err:.2e})")

    def __call__(self, x):
        return self.evaluator(x)

    @classmethod
    def free(cls, period: float = math.pi) -> "PeriodicPotential":
        return cls(period, lambda x: np.zeros_like(np.asarray(x, dtype=float), dtype=complex),
                   derivatives=lambda x, k: [0j] * (k + 1))

    @classmethod
    def from_lame(cls, scenario, x0: float = 0.0) -> "PeriodicPotential":
        return cls(float(scenario.period), scenario.potential, x0, scenario.potential_derivatives)


@dataclass(frozen=True)
class MonodromyMatrix:
    """``M = [[c, s], [c_x, s_x]]`` evaluated at ``x0 + Omega``."""

    z: complex
    c: complex
    s: complex
    cx: complex
    sx: complex

    @property
    def det(self) -> complex:
        return self.c * self.sx - self.s * self.cx

    @property
    def trace(self) -> complex:
        return self.c + self.sx

    @property
    def discriminant(self) -> complex:
        return 0.5 * self.trace

    def to_dict(self) -> dict:
        cp = lambda v: [float(v.real), float(v.imag)]  # noqa: E731
        return {"z": cp(self.z), "c": cp(self.c), "s": cp(self.s), "c_x": cp(self.cx), "s_x": cp(self.sx)}


def _integrate(pot: PeriodicPotential, z: np.ndarray, x_start: float, x_end: float, tol: float):
    """Fundamental system from ``x_start`` to ``x_end`` for every ``z``."""
    z = np.asarray(z, dtype=complex).ravel()
    N = z.size
    y0 = np.zeros(4 * N, dtype=complex)
    y0[0:N] = 1.0          # c
    y0[3 * N:4 * N] = 1.0  # s'

    def rhs(x, y):
        q = complex(np.asarray(pot.evaluator(x), dtype=complex)) - z
        out = np.empty_like(y)
        out[0:N] = y[N:2 * N]
        out[N:2 * N] = q * y[0:N]
        out[2 * N:3 * N] = y[3 * N:4 * N]
        out[3 * N:4 * N] = q * y[2 * N:3 * N]
        return out

    sol = solve_ivp(rhs, (x_start, x_end), y0, method="DOP853", rtol=tol, atol=tol * 1e-2)
    if not sol.success:
        raise ArithmeticError(f"ODE integration failed: {sol.message}")
    yf = sol.y[:, -1]
    return yf[0:N], yf[N:2 * N], yf[2 * N:3 * N], yf[3 * N:4 * N]


def monodromy_batch(pot: PeriodicPotential, z, tol: float = 1e-11, x0: float | None = None) -> list:
    """Monodromy matrices for an array of spectral parameters."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    x0 = pot.x0 if x0 is None else x0
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    c, cx, s, sx = _integrate(pot, zz, x0, x0 + pot.period, tol)
    return [MonodromyMatrix(complex(a), complex(b), complex(d), complex(e), complex(f))
            for a, b, d, e, f in zip(zz, c, s, cx, sx)]


def monodromy(pot: PeriodicPotential, z: complex, tol: float = 1e-11, x0: float | None = None) -> MonodromyMatrix:
    """Monodromy matrix at one spectral parameter."""
    return monodromy_batch(pot, [z], tol, x0)[0]


def discriminant(pot: PeriodicPotential, z, tol: float = 1e-11, x0: float | None = None):
    """``Delta(z) = (c + s_x) / 2`` at ``x0 + Omega``; scalar or array."""
    zz = np.asarray(z, dtype=complex)
    if not tol > 0:
        raise ValueError("tol must be positive")
    x0 = pot.x0 if x0 is None else x0
    c, _, _, sx = _integrate(pot, np.atleast_1d(zz), x0, x0 + pot.period, tol)
    out = 0.5 * (c + sx)
    return complex(out[0]) if zz.ndim == 0 else out.reshape(zz.shape)


def floquet_multipliers(delta):
    """``(rho_small, rho_big)`` with ``rho_small * rho_big = 1`` and ``|rho_small| <= 1``."""
    d = np.asarray(delta, dtype=complex)
    r = np.sqrt(d * d - 1)
    a, b = d + r, d - r
    swap = np.abs(a) > np.abs(b)
    small = np.where(swap, b, a)
    big = np.where(swap, a, b)
    return small, big


# ---------------------------------------------------------------------------
# level curves


def marching_squares(F: np.ndarray, xs: np.ndarray, ys: np.ndarray):
    """Zero-level segments of a real field sampled on ``F[iy, ix]``.

    Returns a list of (p, q, edge_p, edge_q) with complex endpoints found by
    linear interpolation and the grid edges they lie on.  Saddle cells are
    resolved with the cell-centre average.
    """
    ny, nx = F.shape
    pos = F >= 0

    def edge_point(e):
        (i1, j1), (i2, j2) = e
        f1, f2 = F[i1, j1], F[i2, j2]
        t = f1 / (f1 - f2)
        z1 = complex(xs[j1], ys[i1])
        z2 = complex(xs[j2], ys[i2])
        return z1 + t * (z2 - z1)

    segs = []
    for i in range(ny - 1):
        for j in range(nx - 1):
            corners = [(i, j), (i, j + 1), (i + 1, j + 1), (i + 1, j)]
            idx = sum((1 << k) for k, (a, b) in enumerate(corners) if pos[a, b])
            if idx in (0, 15):
                continue
            edges = [(corners[k], corners[(k + 1) % 4]) for k in range(4)]
            cut = [e for e in edges if pos[e[0]] != pos[e[1]]]
            if len(cut) == 2:
                pairs = [(cut[0], cut[1])]
            else:
                centre = 0.25 * sum(F[a, b] for a, b in corners)
                # corners 0 and 2 share a sign; connect around them per the centre
                if (centre >= 0) == pos[corners[0]]:
                    pairs = [(edges[0], edges[1]), (edges[2], edges[3])]
                else:
                    pairs = [(edges[3], edges[0]), (edges[1], edges[2])]
            for e1, e2 in pairs:
                segs.append((edge_point(e1), edge_point(e2), _ekey(e1), _ekey(e2)))
    return segs


def _ekey(e):
    a, b = e
    return (a, b) if a <= b else (b, a)


def _join(segs):
    """Chain segments sharing grid edges into polylines."""
    by_edge = {}
    for k, (_, _, e1, e2) in enumerate(segs):
        by_edge.setdefault(e1, []).append(k)
        by_edge.setdefault(e2, []).append(k)
    used = [False] * len(segs)
    lines = []
    for k in range(len(segs)):
        if used[k]:
            continue
        used[k] = True
        p, q, e1, e2 = segs[k]
        pts, keys = [p, q], [e1, e2]
        for direction in (1, 0):
            while True:
                e = keys[-1] if direction else keys[0]
                nxt = [m for m in by_edge.get(e, []) if not used[m]]
                if not nxt:
                    break
                m = nxt[0]
                used[m] = True
                a, b, f1, f2 = segs[m]
                if f1 == e:
                    new, newk = b, f2
                else:
                    new, newk = a, f1
                if direction:
                    pts.append(new)
                    keys.append(newk)
                else:
                    pts.insert(0, new)
                    keys.insert(0, newk)
        lines.append(pts)
    return lines


def spectrum_scan(pot: PeriodicPotential, window, grid=(161, 80), tol: float = 1e-10,
                  refine: bool = True) -> list:
    """Curves ``{Im Delta = 0, |Re Delta| <= 1}`` inside a rectangle.

    Parameters
    ----------
    window : (re_min, re_max, im_min, im_max)
    grid : (nx, ny)
        Sample counts.  Rows lying on (or within a quarter cell of) the
        real axis are shifted by half a cell, since ``Im Delta`` vanishes
        identically there for real potentials.

    Returns
    -------
    list of SpectralArc
        ``arc_kind = "floquet-scan"``; residuals hold ``|Im Delta|``.
    """
    from .spectrum import SpectralArc

    x0, x1, y0, y1 = (float(v) for v in window)
    nx, ny = int(grid[0]), int(grid[1])
    if nx < 2 or ny < 2 or not (x1 > x0 and y1 > y0):
        raise ValueError("grid sizes must be >= 2 and the window non-empty")
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    dy = ys[1] - ys[0]
    if np.min(np.abs(ys)) < 0.25 * dy:
        ys = ys + 0.5 * dy
    Z = xs[None, :] + 1j * ys[:, None]
    D = discriminant(pot, Z.ravel(), tol).reshape(Z.shape)
    segs = marching_squares(D.imag, xs, ys)
    if not segs:
        return []
    if refine:
        segs = _refine_segments(pot, segs, xs, ys, D, tol)
    lines = _join(segs)
    out = []
    for line in lines:
        pts = np.array(line)
        dv = discriminant(pot, pts, tol)
        keep = np.abs(dv.real) <= 1 + 1e-9
        # split where the Re bound fails
        run = []
        for z, d, k in zip(pts, dv, keep):
            if k:
                run.append((z, abs(d.imag)))
            elif len(run) >= 2:
                out.append(run)
                run = []
            else:
                run = []
        if len(run) >= 2:
            out.append(run)
    return [SpectralArc(np.array([z for z, _ in r]), ("scan", "scan"), np.array([e for _, e in r]),
                        "floquet-scan") for r in out]


def _refine_segments(pot, segs, xs, ys, D, tol):
    """One regula-falsi step on every edge crossing using a fresh evaluation."""
    keys = sorted({e for s in segs for e in s[2:]})
    pts = {}
    for (i1, j1), (i2, j2) in keys:
        f1, f2 = D[i1, j1].imag, D[i2, j2].imag
        t = f1 / (f1 - f2)
        z1, z2 = complex(xs[j1], ys[i1]), complex(xs[j2], ys[i2])
        pts[((i1, j1), (i2, j2))] = (z1, z2, f1, f2, z1 + t * (z2 - z1))
    mids = np.array([v[4] for v in pts.values()])
    fm = discriminant(pot, mids, tol).imag
    new = {}
    for (k, v), f in zip(pts.items(), fm):
        z1, z2, f1, f2, zm = v
        if f == 0:
            new[k] = zm
        elif (f > 0) == (f1 > 0):
            new[k] = zm + f / (f - f2) * (z2 - zm)
        else:
            new[k] = z1 + f1 / (f1 - f) * (zm - z1)
    return [(new[e1], new[e2], e1, e2) for _, _, e1, e2 in segs]


# ---------------------------------------------------------------------------
# cross-identities


def period_mean(pot: PeriodicPotential, n: int = 512) -> complex:
    """``(1/Omega) int V dx`` by the trapezoidal rule (spectral for smooth periodic V)."""
    x = pot.x0 + pot.period * np.arange(n) / n
    return complex(np.mean(np.asarray(pot.evaluator(x), dtype=complex)))


def mean_value_bridge(pot: PeriodicPotential, pd: cv.PeriodData, tol: float = 1e-7) -> CheckReport:
    """Compare the period average of V with ``sum E - 2 sum lambda``."""
    m1 = period_mean(pot, 512)
    m2 = period_mean(pot, 1024)
    r = abs(m2 - complex(pd.mean_V))
    return CheckReport.from_residuals("mean_value_bridge", [r], tol, period_mean=m2, curve_mean=complex(pd.mean_V),
                                      quadrature_change=abs(m2 - m1))


def check_green_discriminant_links(pot: PeriodicPotential, c: cv.HyperellipticCurve, pd: cv.PeriodData,
                                   z_band=(), z_off=(), x_samples=None, h: float = 1e-6,
                                   ode_tol: float = 1e-13, tol_i: float = 1e-5, tol_ii: float = 1e-6,
                                   tol_iii: float = 1e-7, band_side: int = 1) -> dict:
    """Cross-check Floquet data against the curve-side Green's function.

    (i)   ``dDelta/dz = Omega (Delta^2 - 1)^(1/2) <g>(z)`` at ``z_off`` (central
          difference of step ``h``), up to the sheet sign; relative residuals.
    (ii)  ``ln|rho_small(z)| = -(Omega/2) |Phi(z)|`` at ``z_band`` and
          ``z_off``, with ``rho_small`` the Floquet multiplier of modulus <= 1.
    (iii) ``-s(z, x+Omega, x) / (2 (Delta^2-1)^(1/2)) = i F_n(z, x) / (2 y)``
          at every ``x`` in ``x_samples`` and ``z`` in ``z_off``, up to sign;
          needs ``pot.derivatives``.

    Returns
    -------
    dict of CheckReport keyed ``"i"``, ``"ii"``, ``"iii"``.
    """
    from . import spectrum as sp
    from . import symkdv

    Om = pot.period
    z_band = np.atleast_1d(np.asarray(z_band, dtype=complex))
    z_off = np.atleast_1d(np.asarray(z_off, dtype=complex))
    out = {}

    # (i)
    res_i = []
    if z_off.size:
        stencil = np.concatenate([z_off, z_off + h, z_off - h])
        D = discriminant(pot, stencil, ode_tol)
        N = z_off.size
        D0, Dp, Dm = D[:N], D[N:2 * N], D[2 * N:]
        dD = (Dp - Dm) / (2 * h)
        root = np.sqrt(D0 * D0 - 1)
        g = np.array([complex(sp.mean_g(c, pd, z)) for z in z_off])
        rhs = Om * root * g
        res_i = list(np.minimum(np.abs(dD - rhs), np.abs(dD + rhs)) / np.maximum(np.abs(dD), 1e-300))
    out["i"] = CheckReport.from_residuals("green_discriminant_i", res_i, tol_i)

    # (ii)
    pts = np.concatenate([z_band, z_off])
    res_ii = []
    if pts.size:
        D = discriminant(pot, pts, ode_tol)
        small, _ = floquet_multipliers(D)
        for k, (z, rs) in enumerate(zip(pts, small)):
            side = band_side if k < z_band.size else None
            ph = sp.phi(c, pd, z, side=side)
            res_ii.append(abs(math.log(abs(rs)) + 0.5 * Om * abs(ph)))
    out["ii"] = CheckReport.from_residuals("green_discriminant_ii", res_ii, tol_ii,
                                           n_band=int(z_band.size), n_off=int(z_off.size))

    # (iii)
    res_iii = []
    if x_samples is not None and pot.derivatives is not None and z_off.size:
        n = c.genus
        E = list(c.branch_points)
        cs = [symkdv.c_from_E(E, k) for k in range(1, n + 1)]
        F = symkdv.build_F(n)
        need = F.order()
        D = discriminant(pot, z_off, ode_tol)
        root = np.sqrt(D * D - 1)
        y = np.array([complex(cv.sqrt_R(c, z)) for z in z_off])
        for x in np.atleast_1d(np.asarray(x_samples, dtype=float)):
            _, _, s, _ = _integrate(pot, z_off, float(x), float(x) + Om, ode_tol)
            g_floq = -s / (2 * root)
            smp = symkdv.NumericPotentialSample(x, pot.derivatives(x, max(need, 0)))
            Fv = np.array([symkdv.evaluate(F, smp, z, cs) for z in z_off])
            g_curve = 1j * Fv / (2 * y)
            r = np.minimum(np.abs(g_floq - g_curve), np.abs(g_floq + g_curve)) / np.maximum(np.abs(g_curve), 1.0)
            res_iii.extend(r.tolist())
    out["iii"] = CheckReport.from_residuals("green_discriminant_iii", res_iii, tol_iii)
    return out
