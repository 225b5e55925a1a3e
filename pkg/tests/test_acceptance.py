"""Acceptance criteria 1-11.  Each test records (passed, detail) in
``conftest.ACCEPTANCE``; the terminal summary prints one line per criterion."""

import math
import time
from fractions import Fraction

import numpy as np

import conftest
import test_symkdv
from agspectrum import curve as cv
from agspectrum import floquet as fl
from agspectrum import special as sf
from agspectrum import spectrum as sp
from agspectrum import symkdv as sk


def _record(k: int, ok: bool, detail: str):
    conftest.ACCEPTANCE[k] = (bool(ok), detail)
    assert ok, detail


def _adiff(a: float, b: float) -> float:
    d = abs(a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def _seg_dist(p, a, b):
    """Distance from points ``p`` to the segments ``[a_k, b_k]`` (min over k)."""
    p = np.asarray(p)[:, None]
    d = b - a
    dd = np.where(np.abs(d) == 0, 1.0, np.abs(d) ** 2)
    t = np.clip(((p - a) * np.conj(d)).real / dd, 0.0, 1.0)
    return np.abs(p - (a + t * d)).min(axis=1)


def _cold():
    for f in (sk.f_poly, sk.homogeneous_f, sk.skdv, sk.build_F, sk.build_H):
        f.cache_clear()


def test_criterion_01_hierarchy_listings():
    _cold()
    t0 = time.perf_counter()
    for name in ("test_f_listing", "test_skdv_listing", "test_F_listing", "test_H_listing"):
        getattr(test_symkdv, name)()
    dt = time.perf_counter() - t0
    _record(1, dt < 5.0, f"f1..f3, sKdV0..2, F1..F3, H1..H3 exact; {dt:.2f} s (< 5 s)")


def test_criterion_02_identity_suite():
    _cold()
    t0 = time.perf_counter()
    reps = [sk.verify_core_identities(n) for n in (1, 2)]
    dt = time.perf_counter() - t0
    ok = all(r.passed and r.identity_i and r.identity_ii and r.identity_iii for r in reps)
    _record(2, ok and dt < 60.0, f"identities n=1,2 {'hold' if ok else 'FAIL'} modulo sKdV; {dt:.2f} s (< 60 s)")


def test_criterion_03_c1_from_branch_points():
    rng = np.random.default_rng(20261015)
    bad = []
    for k in range(10):
        g = 1 if k < 5 else 2
        E = [int(v) for v in rng.choice(np.arange(-20, 21), 2 * g + 1, replace=False)]
        c1 = sk.c_from_E(E, 1)
        if not (isinstance(c1, Fraction) and c1 == Fraction(-sum(E), 2)):
            bad.append((E, "c1"))
        if sk.c_from_E_by_matching(E, g) != [sk.c_from_E(E, j) for j in range(1, g + 1)]:
            bad.append((E, "matching"))
    _record(3, not bad, f"10 integer curves (5 genus 1, 5 genus 2): exact c1 and matching; failures {bad}")


def test_criterion_04_lame_normalization():
    t0 = time.perf_counter()
    s = sf.lame_scenario(1.0, 1j)
    c = cv.new_curve(s.branch_points)
    pd = cv.spectral_normalization(c)
    pot = fl.PeriodicPotential.from_lame(s)
    mean_period = fl.period_mean(pot, 1024)
    dt = time.perf_counter() - t0
    zeta = s.lattice.eta1  # zeta(omega1)
    lam = complex(pd.lambda_tilde[0])
    e_lam = abs(lam - zeta / 1.0)
    e_lam_closed = abs(lam - math.pi / 4)  # square lattice: zeta(1) = pi/4
    e_mean = abs(complex(pd.mean_V) + 2 * zeta / 1.0)
    e_period = abs(complex(pd.mean_V) - mean_period)
    ok = e_lam <= 1e-8 and e_lam_closed <= 1e-8 and e_mean <= 1e-7 and e_period <= 1e-7 and dt < 10.0
    _record(4, ok, f"|lam - zeta/Om1| = {e_lam:.1e}, |lam - pi/4| = {e_lam_closed:.1e}, "
                   f"|meanV + 2zeta/Om1| = {e_mean:.1e}, |meanV - period mean| = {e_period:.1e}; {dt:.2f} s")


def test_criterion_05_self_adjoint_bands():
    c = cv.new_curve([-1.0, 0.0, 1.0])
    pd = cv.spectral_normalization(c)
    res = sp.trace_arcs(c, pd)
    lo, hi = -2.0, 10.0
    # traced set -> exact set [-1, 0] u [1, oo)
    a_all, b_all, far = [], [], 0.0
    for arc in res.arcs:
        v = arc.vertices
        v = v[(v.real >= lo) & (v.real <= hi)]
        x, y = v.real, v.imag
        dx = np.where(x < -1, -1 - x, np.where(x <= 0, 0.0, np.where(x < 1, np.minimum(x, 1 - x), 0.0)))
        far = max(far, float(np.hypot(dx, y).max()))
        a_all.append(arc.vertices[:-1])
        b_all.append(arc.vertices[1:])
    # exact set -> traced polylines
    a, b = np.concatenate(a_all), np.concatenate(b_all)
    xs = np.concatenate([np.linspace(-1, 0, 4001), np.linspace(1, hi, 36001)]) + 0j
    back = float(max(_seg_dist(chunk, a, b).max() for chunk in np.array_split(xs, 40)))
    h = max(far, back)
    n_arcs, n_inf = len(res.arcs), len(res.semi_infinite)
    ok = h <= 1e-6 and n_arcs == 2 and n_inf == 1
    _record(5, ok, f"Hausdorff {h:.1e} on Re in [-2, 10]; {n_arcs} arcs, {n_inf} semi-infinite")


def test_criterion_06_floquet_cross_validation(lame_std):
    s, c, pd = lame_std
    t0 = time.perf_counter()
    pot = fl.PeriodicPotential.from_lame(s)
    E = sorted(e.real for e in s.branch_points)
    band = np.concatenate([np.linspace(E[0], E[1], 52)[1:-1], np.linspace(E[2], E[2] + 10.0, 51)[1:]])
    off = np.array([complex(x, y) for x in np.linspace(-3.0, 6.0, 5) for y in (-1.2, -0.35, 0.35, 1.2)])
    # identity (ii) on the bands, in its literal form ln|Delta + sqrt(Delta^2 - 1)| + (Om/2) Phi
    D = fl.discriminant(pot, band)
    ph = np.array([sp.phi(c, pd, z, side=1) for z in band])
    lit = np.abs(np.log(np.abs(D + np.sqrt(D * D - 1))) + 0.5 * pot.period * ph)
    links = fl.check_green_discriminant_links(pot, c, pd, (), off, tol_i=1e-5)
    dt = time.perf_counter() - t0
    ok = lit.max() <= 1e-6 and links["i"].passed and links["ii"].passed and dt < 60.0
    _record(6, ok, f"band |ln|D+sqrt(D^2-1)| + Om/2 Phi| max {lit.max():.1e} over {band.size} pts; "
                   f"off-band (i) rel max {links['i'].max_residual:.1e} over {off.size} pts, "
                   f"(ii) max {links['ii'].max_residual:.1e}; {dt:.2f} s")


def _endpoint_angle(v, e, r):
    """Extrapolate the direction of a polyline leaving ``e`` from two radii (slope is curvature)."""
    d = np.abs(v - e)
    out = []
    for rr in (r, 2 * r):
        k = int(np.argmin(np.abs(d - rr)))
        w = v[k] - e
        out.append((d[k], math.atan2(w.imag, w.real)))
    (d1, a1), (d2, a2) = out
    a2 = a1 + math.remainder(a2 - a1, 2 * math.pi)
    return (d2 * a1 - d1 * a2) / (d2 - d1)


def test_criterion_07_endpoint_angles(genus2_traces):
    worst, bad = 0.0, []
    for ci, (c, pd, res) in enumerate(genus2_traces):
        for m, e in enumerate(c.branch_points):
            hits = [(a.vertices if a.endpoint_labels[0] == ("E", m) else a.vertices[::-1])
                    for a in res.arcs for end in a.endpoint_labels if end == ("E", m)]
            if len(hits) != 1 or sp.branch_order(c, pd, m) != 0:
                bad.append((ci, m, len(hits)))
                continue
            dirs = sp.branch_directions(c, pd, m)
            meas = _endpoint_angle(hits[0], e, 1e-4 * c.scale)
            err = min(_adiff(meas, x) for x in dirs)
            worst = max(worst, err)
    ok = not bad and worst <= 1e-3
    _record(7, ok, f"5 genus-2 curves: each E_m on exactly one arc (violations {bad}); max angle error {worst:.1e} rad")


def test_criterion_08_crossing(lame_conj, lame_conj_trace):
    s, c, pd = lame_conj
    res = lame_conj_trace
    xs = sp.find_crossings(c, pd)
    lam = complex(pd.lambda_tilde[0])
    ok_cross = len(xs) == 1 and abs(xs[0].location - lam) < 1e-8 and abs(lam - s.expected_lambda) < 1e-8
    # measured branches of the traced arcs on a small circle around the crossing
    r = 1e-3 * c.scale
    angs = []
    for a in res.arcs:
        d = np.abs(a.vertices - lam)
        for k in np.where(np.diff(np.sign(d - r)) != 0)[0]:
            w = a.vertices[k] - lam
            angs.append(math.atan2(w.imag, w.real) % (2 * math.pi))
    angs = np.sort(angs)
    gaps = np.diff(np.append(angs, angs[0] + 2 * math.pi)) if len(angs) else np.array([])
    gap_err = float(np.abs(gaps - math.pi / 2).max()) if len(angs) == 4 else math.inf
    # Floquet scan on a window around the crossing
    pot = fl.PeriodicPotential.from_lame(s)
    hw, n = 0.3, 41
    cell = 2 * hw / (n - 1)
    arcs = fl.spectrum_scan(pot, (lam.real - hw, lam.real + hw, lam.imag - hw, lam.imag + hw), (n, n))
    v = np.concatenate([a.vertices for a in arcs]) if arcs else np.array([], dtype=complex)
    near = v[np.abs(v - lam) <= 4 * cell]
    dmin = float(np.abs(v - lam).min()) if v.size else math.inf
    sectors = {int(((math.atan2(w.imag, w.real) + math.pi / 4) % (2 * math.pi)) // (math.pi / 2))
               for w in near - lam if abs(w) > 0.5 * cell}
    ok_scan = dmin <= cell and sectors == {0, 1, 2, 3}
    ok = ok_cross and len(angs) == 4 and gap_err <= 1e-2 and ok_scan
    _record(8, ok, f"{len(xs)} crossing at {lam.real:.6f}, {len(angs)} branches, max |gap - pi/2| {gap_err:.1e}; "
                   f"scan: nearest {dmin:.1e} (cell {cell:.3f}), branch sectors {sorted(sectors)}")


def test_criterion_09_asymptote(lame_tilted, lame_tilted_trace):
    _, c, pd = lame_tilted
    res = lame_tilted_trace
    M = max(abs(e) for e in c.branch_points)
    v = res.semi_infinite[0].vertices
    sel = (np.abs(v) >= 10 * M) & (np.abs(v) <= 50 * M)
    y = np.abs(v[sel].imag - complex(pd.mean_V).imag)
    p, _ = np.polyfit(np.log(np.abs(v[sel])), np.log(y), 1)
    ok = sel.sum() >= 20 and -1.15 <= p <= -0.85
    _record(9, ok, f"fit Im z - Im<V> ~ R^p over {int(sel.sum())} vertices in [10, 50] max|E|: p = {p:.4f}")


def test_criterion_10_special_functions():
    worst = {}
    for w3 in (1j, 0.4 + 0.9j, -0.3 + 1.4j):
        L = sf.LatticeParams(1.0, w3)
        s_, t_ = np.meshgrid(np.linspace(0.07, 0.93, 5), np.linspace(0.11, 0.89, 4))
        u = (2 * s_ * L.omega1 + 2 * t_ * L.omega3).ravel()
        p, dp, _, _ = sf.weierstrass(L, u)
        p, dp = np.asarray(p), np.asarray(dp)
        ode = np.abs(dp**2 - (4 * p**3 - L.g2 * p - L.g3)) / np.maximum(1.0, np.abs(dp) ** 2)
        worst["wp_ode"] = max(worst.get("wp_ode", 0.0), float(ode.max()))
        leg = abs(L.eta1 * L.omega3 - L.eta3 * L.omega1 - 0.5j * math.pi)
        worst["legendre"] = max(worst.get("legendre", 0.0), leg)
    im = sf.its_matveev_genus1_check(sf.lame_scenario(1.0, 1j), np.linspace(0.05, 1.95, 20))
    worst["its_matveev"] = im.max_residual
    zs = np.array([-4.0, -1.0 + 0.5j, 0.3, 2.5 - 1.0j, 9.0 + 0.5j, 15.0])
    det = 0.0
    for s in (sf.lame_scenario(1.0, 1j), sf.lame_scenario(1 - 0.8j, 1 + 0.8j, "conjugate_pair", 0.1 + 0.3j)):
        for m in fl.monodromy_batch(fl.PeriodicPotential.from_lame(s), zs):
            det = max(det, abs(m.det - 1) / max(1.0, abs(m.c * m.sx) + abs(m.s * m.cx)))
    worst["det"] = det
    pot = fl.PeriodicPotential.free(math.pi)
    d = fl.discriminant(pot, zs)
    exact = np.array([np.cos(math.pi * np.sqrt(complex(z))) for z in zs])
    worst["free"] = float((np.abs(d - exact) / np.maximum(1.0, np.abs(exact))).max())
    ok = (worst["wp_ode"] <= 1e-10 and worst["legendre"] <= 1e-12 and worst["its_matveev"] <= 1e-7
          and worst["det"] <= 1e-10 and worst["free"] <= 1e-8)
    _record(10, ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_criterion_11_no_loops_and_coverage(sym3, sym3_trace, lame_std, lame_std_trace, lame_conj, lame_conj_trace,
                                            lame_tilted, lame_tilted_trace, genus2_traces):
    matrix = [("sym3", sym3[0], sym3_trace), ("lame", lame_std[1], lame_std_trace),
              ("lame_conj", lame_conj[1], lame_conj_trace), ("lame_tilted", lame_tilted[1], lame_tilted_trace)]
    matrix += [(f"genus2_{k}", c, r) for k, (c, _, r) in enumerate(genus2_traces)]
    bad = []
    for name, c, res in matrix:
        loops = [k for k, a in enumerate(res.arcs) if sp.self_intersections(a.vertices)]
        ends = [l for a in res.arcs for l in a.endpoint_labels]
        reached = {l[1] for l in ends if l != sp.INFINITY and l[0] == "E"}
        n_inf = len(res.semi_infinite)
        kinds_ok = all(a.arc_kind in ("finite", "semi-infinite") for a in res.arcs)
        if loops or n_inf != 1 or reached != set(range(len(c.branch_points))) or res.issues or not kinds_ok:
            bad.append((name, loops, n_inf, sorted(reached), len(res.issues)))
    _record(11, not bad, f"{len(matrix)} scenarios: no self-intersections, all E_m covered, "
                         f"finitely many arcs plus one semi-infinite; violations {bad}")
