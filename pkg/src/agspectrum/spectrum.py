"""Spectral arcs as the zero set of ``Phi = Re W`` with ``W = -2 int_{E_0}^z <g> dz``.

``<g>(z) = i P(z) / (2 y)`` where ``P`` is the normalized monic polynomial
and ``y = R(z)^(1/2)``.  The arcs are traced by predictor-corrector
continuation of ``W`` itself: ``y`` is analytically continued along each arc
(cuts play no role there) and near every branch point the local coordinate
``z = E + w^2`` makes the integrand regular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import curve as cv
from .report import CheckReport

__all__ = [
    "INFINITY",
    "SpectralArc",
    "Crossing",
    "SpectrumResult",
    "TraceOptions",
    "TraceError",
    "mean_g",
    "w_complex",
    "phi",
    "branch_order",
    "branch_directions",
    "find_crossings",
    "trace_arcs",
    "self_intersections",
    "validate_semistrip",
    "weyl_phi_check",
    "result_to_dict",
    "result_to_csv",
    "result_to_svg",
]

INFINITY = "INFINITY"
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_T = 0.5 * (_GL_X + 1)
_GL_W = 0.5 * _GL_W


class TraceError(RuntimeError):
    """Continuation failure; ``location`` holds the offending point."""

    def __init__(self, message: str, location: complex):
        super().__init__(f"{message} at {location:.6g}")
        self.location = location


@dataclass
class SpectralArc:
    """Ordered polyline on the zero set of Phi.

    Attributes
    ----------
    vertices : ndarray of complex
    endpoint_labels : (label, label)
        ``("E", m)``, ``("X", j)`` or ``INFINITY``.
    residuals : ndarray
        Tracked ``|Phi|`` at each vertex.
    arc_kind : str
        ``"finite"``, ``"semi-infinite"`` or ``"floquet-scan"``.
    start_angle, end_angle : float or None
        Direction of the arc as seen from each finite endpoint.
    """

    vertices: np.ndarray
    endpoint_labels: tuple
    residuals: np.ndarray
    arc_kind: str
    start_angle: float | None = None
    end_angle: float | None = None

    def to_dict(self) -> dict:
        lab = lambda l: l if isinstance(l, str) else [l[0], int(l[1])]  # noqa: E731
        return {
            "arc_kind": self.arc_kind,
            "endpoint_labels": [lab(l) for l in self.endpoint_labels],
            "start_angle": self.start_angle,
            "end_angle": self.end_angle,
            "vertices": [[float(z.real), float(z.imag)] for z in self.vertices],
            "residuals": [float(r) for r in self.residuals],
        }


@dataclass
class Crossing:
    index: int
    location: complex
    multiplicity: int
    phi_value: float
    directions: np.ndarray
    measured_angles: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "index": int(self.index),
            "location": [float(self.location.real), float(self.location.imag)],
            "multiplicity": int(self.multiplicity),
            "phi_value": float(self.phi_value),
            "directions": [float(a) for a in self.directions],
            "measured_angles": [float(a) for a in self.measured_angles],
        }


@dataclass
class SpectrumResult:
    arcs: list
    crossings: list
    endpoint_report: list
    asymptote_level: float
    mean_V: complex
    lambda_tilde: np.ndarray
    branch_points: np.ndarray
    R_max: float
    tags: list = field(default_factory=list)
    issues: list = field(default_factory=list)

    @property
    def semi_infinite(self) -> list:
        return [a for a in self.arcs if a.arc_kind == "semi-infinite"]


@dataclass
class TraceOptions:
    """Continuation parameters (lengths are relative to ``max(1, max|E|)``).

    Attributes
    ----------
    h_max : float
        Largest step.
    kappa : float
        Step as a fraction of the distance to the nearest special point.
    r_max : float
        Semi-infinite arcs stop once ``|z| > r_max * max|E|``.
    tol_trace : float
        Bound on the tracked ``|Phi|`` at vertices.
    r_land : float
        Radius at which arcs snap onto a branch point.
    r_cross : float
        Radius at which arcs snap onto a crossing.
    coincidence : float
        Relative tolerance for ``lambda = E`` and ``lambda_i = lambda_j``.
    """

    h_max: float = 0.05
    kappa: float = 0.25
    r_max: float = 50.0
    tol_trace: float = 1e-8
    r_land: float = 1e-9
    r_cross: float = 1e-4
    coincidence: float = 1e-7
    max_steps: int = 200000

    @classmethod
    def from_any(cls, opts) -> "TraceOptions":
        if opts is None:
            return cls()
        if isinstance(opts, cls):
            return opts
        return cls(**dict(opts))


# ---------------------------------------------------------------------------
# pointwise quantities


def _poly(p: cv.PeriodData, z):
    return np.polyval(np.asarray(p.poly)[::-1], z)


def mean_g(c: cv.HyperellipticCurve, p: cv.PeriodData, z, side: int | None = None):
    """``<g>(z) = i P(z) / (2 R(z)^(1/2))`` on the cut plane."""
    return 1j * _poly(p, np.asarray(z, dtype=complex)) / (2 * cv.sqrt_R(c, z, side=side))


def _check_real_periods(c: cv.HyperellipticCurve, p: cv.PeriodData, tol: float = 1e-7):
    per = np.asarray(p.periods_gdz)
    if per.size == 0:
        return
    scale = max(1.0, float(np.abs(per).max()))
    worst = float(np.abs(per.real).max())
    if worst > tol * scale:
        raise ValueError(f"real parts of periods of <g>dz exceed tolerance ({worst:.3g})")


def _on_cut(c: cv.HyperellipticCurve, z: complex, eps: float):
    """``(left normal, nearest finite endpoint)`` of the cut through ``z``, or None."""
    E = c.branch_points
    for a_i, b_i in c.cuts:
        a, b = E[a_i], E[b_i]
        if cv._dist_point_segment(z, a, b) <= eps:
            u = (b - a) / abs(b - a)
            return 1j * u, (a if abs(z - a) <= abs(z - b) else b)
    e, d = E[c.ray_index], c.ray_direction
    if cv._dist_point_segment(z, e, e + d, ray=True) <= eps:
        return 1j * d, e
    return None


def _on_cut_normal(c: cv.HyperellipticCurve, z: complex, eps: float):
    hit = _on_cut(c, z, eps)
    return None if hit is None else hit[0]


def w_complex(c: cv.HyperellipticCurve, p: cv.PeriodData, z: complex, side: int | None = None,
              tol: float = 1e-12, check: bool = True, return_path: bool = False):
    """``W(z) = -i int_{E_0}^z P dz'/y`` along a planned path in the cut plane.

    ``Re W`` is path independent once the periods of ``P dz / y`` are real;
    ``Im W`` refers to the returned path.  Points on a cut need ``side``;
    they are reached through the nearer endpoint of that cut and then along
    the cut with the boundary values of the requested side.
    """
    if check:
        _check_real_periods(c, p)
    z = complex(z)
    E0 = c.branch_points[0]
    eps_on = 1e-11 * c.scale
    hit = _on_cut(c, z, eps_on)
    is_branch = any(abs(z - e) <= eps_on for e in c.branch_points)
    W = 0j
    if hit is not None and not is_branch:
        if side not in (1, -1):
            raise cv.CutError("w_complex on a cut needs side=+1 or -1")
        a = hit[1]
        path = cv.plan_path(c, E0, a) if a != E0 else [E0]
        if len(path) > 1:
            W += -1j * complex(cv.path_integral(c, p.poly, path, tol)[0][0])
        W += -1j * complex(cv.path_integral(c, p.poly, [a, z], tol, side=side)[0][0])
        path = path + [z]
    else:
        path = cv.plan_path(c, E0, z) if z != E0 else [E0]
        if len(path) > 1:
            W = -1j * complex(cv.path_integral(c, p.poly, path, tol)[0][0])
    return (W, path) if return_path else W


def phi(c: cv.HyperellipticCurve, p: cv.PeriodData, z: complex, side: int | None = None,
        tol: float = 1e-12) -> float:
    """``Phi(z) = Re W(z)``; zero exactly on the spectrum."""
    if side is None and _on_cut_normal(c, complex(z), 1e-11 * c.scale) is not None:
        side = 1  # |Phi| is the same on both sides
    return float(w_complex(c, p, z, side=side, tol=tol).real)


def branch_order(c: cv.HyperellipticCurve, p: cv.PeriodData, m: int, coincidence: float = 1e-7) -> int:
    """``N_0``: number of ``lambda_j`` coinciding with ``E_m``."""
    E = c.branch_points[m]
    return int(sum(abs(l - E) <= coincidence * c.scale for l in p.lambda_tilde))


def _local_constant(c, p, m, coincidence):
    E = c.E
    e = E[m]
    lam = [l for l in p.lambda_tilde if abs(l - e) > coincidence * c.scale]
    num = np.prod([e - l for l in lam]) if lam else 1.0
    h0 = np.sqrt(np.prod([e - E[k] for k in range(len(E)) if k != m]))
    return complex(num / h0)


def branch_directions(c: cv.HyperellipticCurve, p: cv.PeriodData, m: int,
                      coincidence: float = 1e-7) -> np.ndarray:
    """Outgoing arc directions at ``E_m``: zeros of ``sin((N0 + 1/2) phi + phi0)``.

    Near ``E_m``, ``W - W(E_m) ~ -i C (z - E_m)^(N0 + 1/2) / (N0 + 1/2)`` with
    ``C = prod' (E_m - lambda) / prod_{k != m} (E_m - E_k)^(1/2)``, so
    ``phi0 = arg C``.  Returned angles lie in ``[0, 2 pi)``, ascending.
    """
    N0 = branch_order(c, p, m, coincidence)
    C = _local_constant(c, p, m, coincidence)
    phi0 = math.atan2(C.imag, C.real)
    nu = N0 + 0.5
    out = []
    for k in range(-2, 2 * N0 + 4):
        a = (k * math.pi - phi0) / nu
        a = a % (2 * math.pi)
        if not any(abs(a - b) < 1e-12 or abs(abs(a - b) - 2 * math.pi) < 1e-12 for b in out):
            out.append(a)
    return np.array(sorted(out)[: 2 * N0 + 1])


def _crossing_directions(c, p, j, M0, y0, coincidence):
    lam = p.lambda_tilde
    l0 = lam[j]
    others = [l for l in lam if abs(l - l0) > coincidence * c.scale]
    C0 = -1j * (np.prod([l0 - l for l in others]) if others else 1.0) / y0
    th0 = math.atan2(C0.imag, C0.real)
    k1 = M0 + 1
    dirs = [((math.pi / 2 + k * math.pi - th0) / k1) % (2 * math.pi) for k in range(2 * k1)]
    return np.array(sorted(dirs))


def find_crossings(c: cv.HyperellipticCurve, p: cv.PeriodData, tol: float = 1e-7,
                   coincidence: float = 1e-7) -> list:
    """Roots ``lambda_j`` (distinct from all ``E_m``) where ``Phi`` vanishes.

    Coincident roots are reported once with their multiplicity ``M0``; the
    ``2 (M0 + 1)`` local arc directions are spaced by ``pi / (M0 + 1)``.
    """
    out = []
    lam = p.lambda_tilde
    seen = []
    scale = c.scale
    for j, l in enumerate(lam):
        if any(abs(l - e) <= coincidence * scale for e in c.branch_points):
            continue
        if any(abs(l - s) <= coincidence * scale for s in seen):
            continue
        seen.append(l)
        M0 = int(sum(abs(l - m) <= coincidence * scale for m in lam))
        val = phi(c, p, l)
        if abs(val) <= tol * math.sqrt(scale):
            y0 = _sqrt_any_side(c, l)
            dirs = _crossing_directions(c, p, j, M0, y0, coincidence)
            out.append(Crossing(j, complex(l), M0, val, dirs))
    return out


def _sqrt_any_side(c, z):
    try:
        return complex(cv.sqrt_R(c, z))
    except cv.CutError:
        return complex(cv.sqrt_R(c, z, side=1))


# ---------------------------------------------------------------------------
# continuation


class _Tracer:
    def __init__(self, c, p, crossings, opts: TraceOptions):
        self.c = c
        self.p = p
        self.o = opts
        self.E = c.E
        self.scale = c.scale
        self.Rc = np.poly(self.E)
        self.dRc = np.polyder(self.Rc)
        self.Pc = np.asarray(p.poly)[::-1]
        self.h_max = opts.h_max * self.scale
        self.R_max = opts.r_max * max(1.0, float(np.abs(self.E).max()))
        self.crossings = crossings
        self.cross_pts = np.array([x.location for x in crossings], dtype=complex)
        allpts = list(self.E) + list(self.cross_pts)
        sep = min(abs(a - b) for i, a in enumerate(allpts) for b in allpts[i + 1:]) if len(allpts) > 1 else 1.0
        self.r_switch = min(0.1 * sep, 0.05 * self.scale)
        self.r_land = opts.r_land * self.scale
        self.r_cross = opts.r_cross * self.scale
        self.lam = np.asarray(p.lambda_tilde, dtype=complex)
        self.Q = [np.atleast_1d(np.poly(np.delete(self.E, k))) for k in range(len(self.E))]

    # -- helpers ----------------------------------------------------------
    def _cont(self, s, prev, lin):
        """Pick the sign of ``s`` closest to the linear prediction ``lin``."""
        return s if abs(s - lin) <= abs(-s - lin) else -s

    def _G(self, mode, xi, aux):
        if mode < 0:
            return -1j * np.polyval(self.Pc, xi) / aux
        z = self.E[mode] + xi * xi
        return -2j * np.polyval(self.Pc, z) / aux

    def _aux_sq(self, mode, xi):
        if mode < 0:
            return np.polyval(self.Rc, xi)
        return np.polyval(self.Q[mode], self.E[mode] + xi * xi)

    def _aux_dsq(self, mode, xi):
        if mode < 0:
            return np.polyval(self.dRc, xi)
        return np.polyval(np.polyder(self.Q[mode]), self.E[mode] + xi * xi) * 2 * xi

    def _advance(self, mode, xi, aux, W, xi1):
        """Move from ``xi`` to ``xi1``; continue ``aux`` and integrate ``W``."""
        d = xi1 - xi
        nodes = xi + d * _GL_T
        a = aux
        x = xi
        vals = np.empty(len(nodes), dtype=complex)
        for i, t in enumerate(nodes):
            s = np.sqrt(complex(self._aux_sq(mode, t)))
            lin = a + self._aux_dsq(mode, x) / (2 * a) * (t - x)
            a = self._cont(s, a, lin)
            x = t
            vals[i] = self._G(mode, t, a)
        s = np.sqrt(complex(self._aux_sq(mode, xi1)))
        lin = a + self._aux_dsq(mode, x) / (2 * a) * (xi1 - x)
        a = self._cont(s, a, lin)
        return a, W + d * complex(vals @ _GL_W)

    def _to_z(self, mode, xi, aux):
        if mode < 0:
            return xi, aux
        return self.E[mode] + xi * xi, xi * aux

    def _from_z(self, k, z, y):
        w = np.sqrt(complex(z - self.E[k]))
        return w, y / w

    def _z_of(self, mode, xi):
        return xi if mode < 0 else self.E[mode] + xi * xi

    def _dist_special(self, z, exclude_branch=None):
        d = np.abs(self.E - z)
        if exclude_branch is not None:
            d = np.delete(d, exclude_branch)
        dl = np.abs(self.lam - z) if self.lam.size else np.array([np.inf])
        return float(min(d.min() if d.size else np.inf, dl.min()))

    def _newton(self, mode, xi, aux, W, tol):
        for _ in range(12):
            if abs(W.real) <= tol:
                return xi, aux, W, True
            G = self._G(mode, xi, aux)
            if G == 0 or not np.isfinite(G):
                return xi, aux, W, False
            xi1 = xi - W.real / G
            aux, W = self._advance(mode, xi, aux, W, xi1)
            xi = xi1
        return xi, aux, W, abs(W.real) <= tol

    # -- arc --------------------------------------------------------------
    def trace(self, z0, y0, W0, direction, origin):
        """Follow the zero set from ``z0`` along ``direction`` (complex unit).

        Returns (vertices, residuals, end_label, end_angle, start_angle).
        """
        o = self.o
        verts = [origin[1]]
        res = [abs(W0.real)]
        # start in local coordinates when close to a branch point
        mode = -1
        xi, aux = z0, y0
        W = W0
        dz_dir = direction
        start_angle = None
        origin_branch = origin[0][1] if origin[0][0] == "E" else None
        left_origin = False
        steps = 0
        while True:
            steps += 1
            if steps > o.max_steps:
                raise TraceError("step budget exhausted", self._z_of(mode, xi))
            z, y = self._to_z(mode, xi, aux)
            # choose coordinates
            dE = np.abs(self.E - z)
            k = int(np.argmin(dE))
            want = k if dE[k] < self.r_switch else -1
            if want != mode:
                if mode >= 0:
                    xi, aux = z, y
                    mode = -1
                if want >= 0:
                    xi, aux = self._from_z(want, z, y)
                    mode = want
            # landing tests
            if mode >= 0:
                r = abs(xi) ** 2
                if r > 1e3 * self.r_land or mode != origin_branch:
                    left_origin = left_origin or mode != origin_branch or r > 1e3 * self.r_land
                if left_origin and r < self.r_land * 4:
                    ang = (2 * math.atan2(xi.imag, xi.real)) % (2 * math.pi)
                    verts.append(complex(self.E[mode]))
                    res.append(abs(W.real))
                    return verts, res, ("E", mode), ang, start_angle
            else:
                left_origin = left_origin or abs(z - origin[1]) > 1e3 * max(self.r_land, self.r_cross)
            if self.cross_pts.size and left_origin:
                dc = np.abs(self.cross_pts - z)
                j = int(np.argmin(dc))
                if dc[j] < self.r_cross:
                    ang = math.atan2((z - self.cross_pts[j]).imag, (z - self.cross_pts[j]).real) % (2 * math.pi)
                    verts.append(complex(self.cross_pts[j]))
                    res.append(abs(W.real))
                    return verts, res, ("X", j), ang, start_angle
            if abs(z) > self.R_max:
                return verts, res, INFINITY, None, start_angle
            # step length (in the active coordinate)
            if mode >= 0:
                d_other = self._dist_special(z, exclude_branch=mode)
                h = min(o.kappa * max(abs(xi), 1e-300), o.kappa * math.sqrt(d_other), math.sqrt(self.h_max))
                d_xi = dz_dir / (2 * xi)
            else:
                h = min(self.h_max, o.kappa * self._dist_special(z))
                d_xi = dz_dir
            d_xi = d_xi / abs(d_xi)
            G = self._G(mode, xi, aux)
            tan = 1j / G
            tan = tan / abs(tan)
            if (tan * d_xi.conjugate()).real < 0:
                tan = -tan
            tolN = 1e-11 * max(1.0, math.sqrt(abs(z)))
            while True:
                xi1 = xi + h * tan
                aux1, W1 = self._advance(mode, xi, aux, W, xi1)
                xi1, aux1, W1, ok = self._newton(mode, xi1, aux1, W1, tolN)
                if ok:
                    G1 = self._G(mode, xi1, aux1)
                    t1 = 1j / G1
                    t1 = t1 / abs(t1)
                    step = xi1 - xi
                    turn = abs(np.angle(t1 * tan.conjugate()))
                    turn = min(turn, math.pi - turn)
                    if abs(step) > 0 and turn < 0.3 and (step * tan.conjugate()).real > 0.5 * h:
                        break
                h *= 0.5
                if h < 1e-14 * max(1.0, abs(xi)):
                    raise TraceError("step-size collapse", self._z_of(mode, xi))
            z_new = self._z_of(mode, xi1)
            z_old = self._z_of(mode, xi)
            dz_dir = (z_new - z_old) / abs(z_new - z_old)
            xi, aux, W = xi1, aux1, W1
            verts.append(complex(z_new))
            res.append(abs(W.real))
            if start_angle is None and origin[0] != INFINITY:
                v = z_new - origin[1]
                start_angle = math.atan2(v.imag, v.real) % (2 * math.pi)


def _angle_diff(a: float, b: float) -> float:
    d = (a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def trace_arcs(c: cv.HyperellipticCurve, p: cv.PeriodData, options=None) -> SpectrumResult:
    """Trace every spectral arc.

    Seeds are the branch points (directions from :func:`branch_directions`)
    and the crossings (directions from the local expansion of ``W``).  Each
    arc ends on another seed, whose matching direction is then consumed, or
    leaves ``|z| <= R_max`` (the semi-infinite arc).
    """
    opts = TraceOptions.from_any(options)
    tags = []
    if not p.real_b_verified and p.normalization != "real-periods":
        _check_real_periods(c, p)
    if not p.real_b_verified:
        tags.append("basis-unverified")
    crossings = find_crossings(c, p, coincidence=opts.coincidence)
    tr = _Tracer(c, p, crossings, opts)
    E = c.E
    issues = []

    # seeds
    seeds = []  # (label, point, angle, W, y_fn)
    branch_dirs = {}
    for m in range(len(E)):
        dirs = branch_directions(c, p, m, opts.coincidence)
        branch_dirs[m] = dirs
        for a in dirs:
            seeds.append([("E", m), complex(E[m]), float(a), False])
    for j, x in enumerate(crossings):
        for a in x.directions:
            seeds.append([("X", j), x.location, float(a), False])

    W_at = {}

    def W_of(label, pt):
        if label not in W_at:
            side = 1 if _on_cut_normal(c, pt, 1e-11 * c.scale) is not None else None
            W_at[label] = w_complex(c, p, pt, side=side, check=False)
        return W_at[label]

    arcs = []
    ends = {}  # label -> list of measured angles
    for seed in seeds:
        if seed[3]:
            continue
        label, pt, ang, _ = seed
        seed[3] = True
        u = complex(math.cos(ang), math.sin(ang))
        W0 = W_of(label, pt)
        if label[0] == "E":
            m = label[1]
            w0 = math.sqrt(tr.r_land * 4e3) * complex(math.cos(ang / 2), math.sin(ang / 2))
            h00 = np.sqrt(complex(np.polyval(tr.Q[m], E[m])))
            # continue h from w = 0 to w0 and integrate W along the way
            aux, Wst = tr._advance(m, 0j, h00, W0, w0)
            xi, aux, Wst, ok = tr._newton(m, w0, aux, Wst, 1e-12)
            z0, y0 = tr._to_z(m, xi, aux)
        else:
            y_l = _sqrt_any_side(c, pt)
            z1 = pt + tr.r_cross * 1e-1 * u
            y0, Wst = tr._advance(-1, pt, y_l, W0, z1)
            z0, y0, Wst, ok = tr._newton(-1, z1, y0, Wst, 1e-12)
        try:
            verts, res, end, end_ang, st_ang = tr.trace(z0, y0, Wst, u, (label, pt))
        except TraceError as exc:
            issues.append({"kind": "trace-error", "seed": list(label), "message": str(exc),
                           "location": [exc.location.real, exc.location.imag]})
            continue
        v0 = verts[1] - pt if len(verts) > 1 else u
        st_ang = math.atan2(v0.imag, v0.real) % (2 * math.pi)
        ends.setdefault(label, []).append(st_ang)
        if end != INFINITY:
            ends.setdefault(end, []).append(end_ang)
            cand = [s for s in seeds if s[0] == end and not s[3]]
            if cand:
                best = min(cand, key=lambda s: _angle_diff(s[2], end_ang))
                tolang = 0.5 * (2 * math.pi / len([s for s in seeds if s[0] == end]))
                if _angle_diff(best[2], end_ang) <= tolang:
                    best[3] = True
                else:
                    issues.append({"kind": "direction-mismatch", "end": list(end), "angle": end_ang})
            else:
                issues.append({"kind": "arrival-at-consumed-seed", "end": list(end), "angle": end_ang})
        kind = "semi-infinite" if end == INFINITY else "finite"
        arcs.append(SpectralArc(np.array(verts), (label, end), np.array(res), kind, st_ang, end_ang))

    report = []
    for m in range(len(E)):
        meas = ends.get(("E", m), [])
        pred = branch_dirs[m]
        errs = [min(_angle_diff(a, b) for b in pred) for a in meas]
        report.append({
            "index": m,
            "E": complex(E[m]),
            "N0": branch_order(c, p, m, opts.coincidence),
            "arc_count": len(meas),
            "predicted_angles": [float(a) for a in pred],
            "measured_angles": [float(a) for a in meas],
            "angle_errors": [float(e) for e in errs],
        })
        if not meas:
            issues.append({"kind": "unreached-branch-point", "index": m})
    for j, x in enumerate(crossings):
        x.measured_angles = sorted(ends.get(("X", j), []))
    n_semi = sum(a.arc_kind == "semi-infinite" for a in arcs)
    if n_semi != 1:
        issues.append({"kind": "semi-infinite-count", "count": n_semi})
    for i, a in enumerate(arcs):
        if self_intersections(a.vertices):
            issues.append({"kind": "self-intersection", "arc": i})
        if a.residuals.size and float(a.residuals.max()) > opts.tol_trace * max(1.0, math.sqrt(tr.R_max)):
            issues.append({"kind": "residual", "arc": i, "max": float(a.residuals.max())})
    return SpectrumResult(arcs, crossings, report, float(np.imag(p.mean_V)), complex(p.mean_V),
                          np.asarray(p.lambda_tilde), E, tr.R_max, tags, issues)


def self_intersections(vertices, merge_radius: float = 0.0) -> list:
    """Index pairs of non-adjacent polyline segments that intersect."""
    v = np.asarray(vertices, dtype=complex)
    if v.size < 4:
        return []
    a, b = v[:-1], v[1:]
    out = []
    d = b - a
    for i in range(len(a) - 2):
        p, r = a[i], d[i]
        aj, dj = a[i + 2:], d[i + 2:]
        den = r.real * dj.imag - r.imag * dj.real
        q = aj - p
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (q.real * dj.imag - q.imag * dj.real) / den
            t = (q.real * r.imag - q.imag * r.real) / den
        hit = (np.abs(den) > 0) & (s > 1e-12) & (s < 1 - 1e-12) & (t > 1e-12) & (t < 1 - 1e-12)
        for j in np.flatnonzero(hit):
            out.append((i, i + 2 + int(j)))
        if merge_radius > 0:
            far = np.abs(a[i + 3:] - p) < merge_radius
            for j in np.flatnonzero(far):
                if abs(np.sum(np.abs(d[i:i + 3 + j]))) > 4 * merge_radius:
                    out.append((i, i + 3 + int(j)))
    return out


# ---------------------------------------------------------------------------
# checks


def validate_semistrip(result: SpectrumResult, V_samples, eps: float = 1e-6) -> CheckReport:
    """All vertices within ``{Im in [min Im V, max Im V], Re >= min Re V}`` up to ``eps``."""
    V = np.asarray(V_samples, dtype=complex)
    M1, M2, M3 = float(V.imag.min()), float(V.imag.max()), float(V.real.min())
    viol = []
    for a in result.arcs:
        z = a.vertices
        viol.append(np.maximum.reduce([np.zeros(z.size), M1 - z.imag, z.imag - M2, M3 - z.real]))
    viol = np.concatenate(viol) if viol else np.zeros(0)
    return CheckReport.from_residuals("semistrip", viol, eps, M1=M1, M2=M2, M3=M3)


def weyl_phi_check(c: cv.HyperellipticCurve, p: cv.PeriodData | None, potential, x: float, z: complex,
                   side: int = 1, h: float = 1e-4, tol: float = 1e-6) -> CheckReport:
    """Riccati, product and sum identities for ``phi = (i y + F_x / 2) / F``.

    Parameters
    ----------
    potential : callable
        ``potential(x, order)`` returns ``[V, V', ..., V^(order)]`` at ``x``.
    side : {+1, -1}
        Sheet: ``y = side * sqrt_R(z)``.

    Returns
    -------
    CheckReport
        Residuals ``[riccati, product, sum]``; the Riccati residual uses a
        central difference of step ``h``.
    """
    from . import symkdv

    n = c.genus
    E = list(c.branch_points)
    cs = [symkdv.c_from_E(E, k) for k in range(1, n + 1)]
    F = symkdv.build_F(n)
    Fx = F.dx()
    H = symkdv.build_H(n)
    need = max(Fx.order(), H.order()) + 1
    y = side * complex(cv.sqrt_R(c, z))

    def parts(xx):
        s = symkdv.NumericPotentialSample(xx, potential(xx, need))
        f = symkdv.evaluate(F, s, z, cs)
        if abs(f) < 1e-12:
            raise ZeroDivisionError("F_n(z, x) vanishes: Dirichlet point collision")
        fx = symkdv.evaluate(Fx, s, z, cs)
        hh = symkdv.evaluate(H, s, z, cs)
        return f, fx, hh, s.values[0]

    def weyl(xx, sgn=1):
        f, fx, _, _ = parts(xx)
        return (1j * sgn * y + 0.5 * fx) / f

    f, fx, hh, V0 = parts(x)
    ph, ph_star = weyl(x, 1), weyl(x, -1)
    dphi = (weyl(x + h) - weyl(x - h)) / (2 * h)
    ric = abs(dphi + ph * ph - V0 + z) / max(1.0, abs(ph) ** 2)
    prod = abs(ph * ph_star - hh / f) / max(1.0, abs(hh / f))
    summ = abs(ph + ph_star - fx / f) / max(1.0, abs(fx / f))
    return CheckReport.from_residuals("weyl_phi", [ric, prod, summ], tol, x=float(x), z=complex(z), side=side)


# ---------------------------------------------------------------------------
# output


def _lab(l):
    return l if l == INFINITY else [l[0], int(l[1])]


def result_to_dict(result: SpectrumResult) -> dict:
    cp = lambda v: [float(complex(v).real), float(complex(v).imag)]  # noqa: E731
    return {
        "branch_points": [cp(e) for e in result.branch_points],
        "lambda_tilde": [cp(l) for l in result.lambda_tilde],
        "mean_V": cp(result.mean_V),
        "asymptote_level": float(result.asymptote_level),
        "R_max": float(result.R_max),
        "tags": list(result.tags),
        "issues": _json_issues(result.issues),
        "crossings": [x.to_dict() for x in result.crossings],
        "endpoint_report": [
            {**r, "E": cp(r["E"])} for r in result.endpoint_report
        ],
        "arcs": [a.to_dict() for a in result.arcs],
    }


def _json_issues(issues):
    out = []
    for it in issues:
        out.append({k: (list(v) if isinstance(v, tuple) else v) for k, v in it.items()})
    return out


def result_to_csv(result: SpectrumResult) -> str:
    lines = ["arc_id,re,im,residual"]
    for i, a in enumerate(result.arcs):
        for z, r in zip(a.vertices, a.residuals):
            lines.append(f"{i},{z.real:.17g},{z.imag:.17g},{r:.6g}")
    return "\n".join(lines) + "\n"


def result_to_svg(result: SpectrumResult, window=None, size: int = 640) -> str:
    """Minimal SVG: arcs, branch points, lambda markers and the asymptote."""
    pts = [z for a in result.arcs for z in a.vertices] + list(result.branch_points)
    if window is None:
        xs = [z.real for z in pts]
        ys = [z.imag for z in pts]
        span = max(1.0, float(np.abs(result.branch_points).max()))
        x0, x1 = min(xs) - 0.2 * span, min(max(xs), 10 * span) + 0.2 * span
        y0, y1 = min(ys + [result.asymptote_level]) - 0.5 * span, max(ys + [result.asymptote_level]) + 0.5 * span
    else:
        x0, x1, y0, y1 = window
    sx = size / (x1 - x0)
    sy = size / (y1 - y0)

    def m(z):
        return f"{(z.real - x0) * sx:.2f},{(y1 - z.imag) * sy:.2f}"

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>']
    ya = (y1 - result.asymptote_level) * sy
    out.append(f'<line x1="0" y1="{ya:.2f}" x2="{size}" y2="{ya:.2f}" stroke="gray" stroke-dasharray="6,4"/>')
    for a in result.arcs:
        keep = [z for z in a.vertices if x0 <= z.real <= x1 and y0 <= z.imag <= y1]
        if len(keep) >= 2:
            out.append('<polyline fill="none" stroke="navy" stroke-width="2" points="'
                       + " ".join(m(z) for z in keep) + '"/>')
    for e in result.branch_points:
        cx, cy = m(complex(e)).split(",")
        out.append(f'<circle cx="{cx}" cy="{cy}" r="4" fill="crimson"/>')
    for l in result.lambda_tilde:
        cx, cy = (float(v) for v in m(complex(l)).split(","))
        out.append(f'<path d="M{cx - 5:.2f},{cy - 5:.2f}L{cx + 5:.2f},{cy + 5:.2f}M{cx - 5:.2f},{cy + 5:.2f}'
                   f'L{cx + 5:.2f},{cy - 5:.2f}" stroke="darkgreen" stroke-width="2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
