"""Hyperelliptic curves ``y^2 = prod (z - E_m)`` of odd degree 2n+1.

Square-root convention
    ``n`` finite cuts join paired branch points and one ray runs from the
    remaining point ``E_r`` to infinity in direction ``d``.  The root is the
    product of one factor per cut,

        pair [E_a, E_b]:  h * sqrt(u - 1) * sqrt(u + 1),  u = (z - mid)/h,
        ray (E_r, d):     i * sqrt(d) * sqrt(-(z - E_r)/d),

    with principal square roots, so each factor is discontinuous exactly on
    its own cut.  For ``d = 1`` this gives ``R^(1/2) ~ z^(n+1/2)`` with
    ``z^(1/2)`` in the upper half plane off the ray: the sheet on which the
    diagonal Green's function decays.  The ``+`` side of a cut is the left of
    its direction of travel (``E_a -> E_b``, resp. ``d``).

Homology basis
    With the chain ``s_0, s_1, ..., s_2n`` (cut endpoints in pairing order,
    then ``E_r``), ``a_j`` is the counterclockwise loop around cut ``j`` and
    ``b_j = -(gamma_2j + gamma_2j+2 + ... + gamma_2n)`` where ``gamma_2m``
    is the lift of the gap segment ``[s_2m-1, s_2m]`` traversed on the
    principal sheet from ``s_2m-1`` to ``s_2m``.  These satisfy
    ``a_i . b_j = delta_ij`` and ``a.a = b.b = 0``.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.integrate import quad_vec

__all__ = [
    "HyperellipticCurve",
    "PeriodData",
    "BasisSearchOutcome",
    "CutError",
    "QuadratureError",
    "PathPlanningError",
    "new_curve",
    "sqrt_R",
    "cut_side",
    "a_period",
    "moment_matrix",
    "cycle_periods",
    "normalize_lambda",
    "real_normalize",
    "b_periods_of_mean_g",
    "symplectic_basis_search",
    "spectral_normalization",
    "dirichlet_mu",
    "plan_path",
    "path_integral",
    "curve_to_dict",
    "curve_from_dict",
]


class CutError(ValueError):
    """Evaluation exactly on a cut without a side flag."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature missed the requested tolerance."""


class PathPlanningError(RuntimeError):
    """No admissible path inside the cut plane was found."""


@dataclass(frozen=True, eq=False)
class HyperellipticCurve:
    """Branch points, cut layout and square-root convention.

    Attributes
    ----------
    branch_points : tuple of complex
        ``E_0..E_2n`` in caller order (indices are labels elsewhere).
    cuts : tuple of (int, int)
        Finite cuts as index pairs ``(a, b)``, oriented ``E_a -> E_b``.
    ray_index : int
        Index of the branch point carrying the ray to infinity.
    ray_direction : complex
        Unit direction of that ray.
    anchor : (complex, complex)
        A reference point and the value of ``sqrt_R`` there.
    """

    branch_points: tuple
    cuts: tuple
    ray_index: int
    ray_direction: complex
    anchor: tuple = field(default=(0j, 0j))
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def genus(self) -> int:
        return len(self.cuts)

    @property
    def E(self) -> np.ndarray:
        return np.array(self.branch_points, dtype=complex)

    @property
    def scale(self) -> float:
        return max(1.0, float(np.abs(self.E).max()))

    @property
    def diameter(self) -> float:
        E = self.E
        if E.size < 2:
            return 1.0
        return float(np.abs(E[:, None] - E[None, :]).max())

    @property
    def chain(self) -> list:
        out = []
        for a, b in self.cuts:
            out += [a, b]
        return out + [self.ray_index]

    def R(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.ones_like(z)
        for e in self.branch_points:
            out = out * (z - e)
        return out

    def R_coeffs(self) -> np.ndarray:
        """Coefficients of ``R`` (highest power first)."""
        return np.poly(self.E)


@dataclass
class BasisSearchOutcome:
    success: bool
    message: str
    objective: float
    transform: np.ndarray
    candidates: int

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "message": self.message,
            "objective": float(self.objective),
            "transform": np.asarray(self.transform).astype(int).tolist(),
            "candidates": int(self.candidates),
        }


@dataclass
class PeriodData:
    """Normalization data for the mean Green's function differential.

    Attributes
    ----------
    a_matrix : ndarray (n, n)
        ``C[j, k] = oint_{a_k} z^j dz / y`` in the current basis.
    lambda_tilde : ndarray (n,)
        Roots of the normalized polynomial, sorted by (Re, Im).
    b_periods_gdz : ndarray (n,)
        b-periods of ``<g> dz = i P(z) dz / (2 y)``.
    mean_V : complex
        ``sum E - 2 sum lambda``.
    basis_transform : ndarray (2n, 2n) of int
        Rows give the current cycles in terms of the default ones.
    poly : ndarray (n+1,)
        Monic normalized polynomial, lowest power first.
    normalization : str
        ``"a-cycles"`` or ``"real-periods"``.
    periods_gdz : ndarray (2n,)
        Periods of ``<g> dz`` over (a_1..a_n, b_1..b_n) of the current basis.
    a_residual : float
        Largest |a-period| of ``P dz / y`` after normalization.
    error_estimate : float
        Quadrature error bound carried from the moments.
    real_b_verified : bool
        All periods of ``<g> dz`` have vanishing real part within tolerance.
    """

    a_matrix: np.ndarray
    lambda_tilde: np.ndarray
    b_periods_gdz: np.ndarray
    mean_V: complex
    basis_transform: np.ndarray
    poly: np.ndarray
    normalization: str
    periods_gdz: np.ndarray
    a_residual: float
    error_estimate: float
    real_b_verified: bool
    search: BasisSearchOutcome | None = None

    def to_dict(self) -> dict:
        cp = lambda v: [float(complex(v).real), float(complex(v).imag)]  # noqa: E731
        return {
            "lambda_tilde": [cp(v) for v in self.lambda_tilde],
            "b_periods_gdz": [cp(v) for v in self.b_periods_gdz],
            "mean_V": cp(self.mean_V),
            "basis_transform": np.asarray(self.basis_transform).astype(int).tolist(),
            "normalization": self.normalization,
            "a_residual": float(self.a_residual),
            "error_estimate": float(self.error_estimate),
            "real_b_verified": bool(self.real_b_verified),
            "search": None if self.search is None else self.search.to_dict(),
        }


# ---------------------------------------------------------------------------
# geometry helpers


def _cross(a: complex, b: complex) -> float:
    return a.real * b.imag - a.imag * b.real


def _segments_intersect(p, q, a, b, ray=False, tol=1e-12):
    """Intersection of segment [p,q] with segment [a,b] (or ray a + t(b-a), t>=0).

    Returns a list of parameters ``s`` along [p,q] at which they meet, with
    ``None`` signalling a collinear overlap.
    """
    r = q - p
    d = b - a
    den = _cross(r, d)
    scale = max(abs(r), abs(d), 1e-300)
    if abs(den) <= tol * scale * scale:
        # parallel
        if abs(_cross(a - p, r)) > tol * scale * max(abs(a - p), scale):
            return []
        # collinear: project onto r
        rr = abs(r) ** 2
        if rr == 0:
            return []
        ta = ((a - p) * r.conjugate()).real / rr
        tb = ((b - p) * r.conjugate()).real / rr
        lo, hi = min(ta, tb), max(ta, tb)
        if ray:
            if tb > ta:
                hi = math.inf
            else:
                lo = -math.inf
        ov_lo, ov_hi = max(lo, 0.0), min(hi, 1.0)
        if ov_hi < ov_lo - tol:
            return []
        if ov_hi - ov_lo <= tol:
            return [ov_lo]
        return [None]
    s = _cross(a - p, d) / den
    t = _cross(a - p, r) / den
    if -tol <= s <= 1 + tol and t >= -tol and (ray or t <= 1 + tol):
        return [min(max(s, 0.0), 1.0)]
    return []


def _cut_list(c: HyperellipticCurve):
    """Cuts as (start, end_or_dir, is_ray, endpoint_indices)."""
    E = c.branch_points
    out = [(E[a], E[b], False, (a, b)) for a, b in c.cuts]
    r = c.ray_index
    out.append((E[r], E[r] + c.ray_direction, True, (r,)))
    return out


def _segment_blocked(c: HyperellipticCurve, p: complex, q: complex, tol=1e-11) -> bool:
    """True if the open segment (p, q) meets any cut.

    Touching a cut only at a shared branch-point endpoint is allowed.
    """
    if p == q:
        return False
    E = c.branch_points
    scale = max(abs(q - p), 1e-300)
    for a, b, is_ray, idx in _cut_list(c):
        hits = _segments_intersect(p, q, a, b, ray=is_ray, tol=tol)
        for s in hits:
            if s is None:
                return True
            pt = p + s * (q - p)
            # allowed: the meeting point is the start/end of the path and a
            # branch point endpoint of this cut
            at_end = s <= tol or s >= 1 - tol
            at_branch = any(abs(pt - E[i]) <= 1e-9 * max(1.0, abs(E[i])) + tol * scale for i in idx)
            if at_end and at_branch:
                continue
            return True
    return False


def _dist_point_segment(z, a, b, ray=False):
    d = b - a
    dd = abs(d) ** 2
    t = ((z - a) * d.conjugate()).real / dd
    t = max(t, 0.0) if ray else min(max(t, 0.0), 1.0)
    return abs(z - (a + t * d))


def cut_side(c: HyperellipticCurve, z: complex, eps: float | None = None):
    """Return ``(cut_index, along)`` if ``z`` lies on a cut, else ``None``.

    ``cut_index`` is ``j`` for finite cut ``j`` or ``-1`` for the ray.
    """
    eps = 1e-12 * c.scale if eps is None else eps
    for j, (a, b, is_ray, _) in enumerate(_cut_list(c)):
        if _dist_point_segment(z, a, b, is_ray) <= eps:
            return (-1 if is_ray else j), None
    return None


# ---------------------------------------------------------------------------
# construction


def _valid_layout(E, cuts, r, d) -> bool:
    c = HyperellipticCurve(tuple(E), tuple(cuts), r, d)
    segs = _cut_list(c)
    for i, j in itertools.combinations(range(len(segs)), 2):
        a1, b1, ray1, _ = segs[i]
        a2, b2, ray2, _ = segs[j]
        if ray1 and not ray2:
            a1, b1, ray1, a2, b2, ray2 = a2, b2, ray2, a1, b1, ray1
        if ray2 and ray1:
            continue
        if _segments_intersect(a1, b1, a2, b2, ray=ray2, tol=1e-12):
            return False
    return True


def new_curve(E: Sequence[complex], pairing_hint=None) -> HyperellipticCurve:
    """Build a curve with a disjoint cut system.

    Parameters
    ----------
    E : sequence of complex
        ``2n+1`` distinct branch points.
    pairing_hint : dict, optional
        ``{"cuts": [[a, b], ...], "ray": r, "direction": d}``.  By default the
        points are sorted by (Re, Im), consecutive ones are paired from the
        left and the last point carries the ray along +1 (rotated minimally if
        it would meet a finite cut).

    Raises
    ------
    ValueError
        Duplicate branch points, even count, or no valid cut system.
    """
    E = [complex(e) for e in E]
    m = len(E)
    if m == 0 or m % 2 == 0:
        raise ValueError("need an odd number (2n+1) of branch points")
    scale = max(1.0, max(abs(e) for e in E))
    for i, j in itertools.combinations(range(m), 2):
        if abs(E[i] - E[j]) <= 1e-12 * scale:
            raise ValueError(f"duplicate branch points E[{i}] = E[{j}]")
    n = (m - 1) // 2
    if pairing_hint is not None:
        cuts = [tuple(int(v) for v in pr) for pr in pairing_hint["cuts"]]
        r = int(pairing_hint["ray"])
        d = complex(pairing_hint.get("direction", 1.0))
        used = sorted([i for pr in cuts for i in pr] + [r])
        if used != list(range(m)) or len(cuts) != n:
            raise ValueError("pairing hint must use every branch point exactly once")
        if abs(d) == 0:
            raise ValueError("ray direction must be nonzero")
        d = d / abs(d)
        if not _valid_layout(E, cuts, r, d):
            raise ValueError("pairing hint gives intersecting cuts")
    else:
        order = sorted(range(m), key=lambda i: (E[i].real, E[i].imag))
        cuts = [(order[2 * j], order[2 * j + 1]) for j in range(n)]
        r = order[-1]
        d = None
        for k in range(0, 129):
            for sgn in ((1,) if k == 0 else (1, -1)):
                cand = complex(np.exp(1j * sgn * k * math.pi / 128))
                if _valid_layout(E, cuts, r, cand):
                    d = cand
                    break
            if d is not None:
                break
        if d is None:
            raise ValueError("no non-intersecting cut system found")
    c = HyperellipticCurve(tuple(E), tuple(cuts), r, d)
    zref = E[r] + 2 * scale * d * complex(np.exp(0.25j))
    anchor = (zref, complex(sqrt_R(c, zref)))
    return replace(c, anchor=anchor)


# ---------------------------------------------------------------------------
# square root


def _pair_factor(za, zb, a, b, side_mask=None, side=0):
    # za = z - a, zb = z - b, passed separately so offsets from an endpoint stay exact
    h = 0.5 * (b - a)
    val = h * np.sqrt(zb / h) * np.sqrt(za / h)
    if side_mask is not None and np.any(side_mask):
        q = np.maximum((-(zb[side_mask] / h) * (za[side_mask] / h)).real, 0.0)
        val[side_mask] = side * h * 1j * np.sqrt(q)
    return val


def _ray_factor(ze, d, side_mask=None, side=0):
    sd = np.sqrt(complex(d))
    val = 1j * sd * np.sqrt(-ze / d)
    if side_mask is not None and np.any(side_mask):
        t = np.maximum((ze[side_mask] / d).real, 0.0)
        val[side_mask] = side * sd * np.sqrt(t)
    return val


def sqrt_R(c: HyperellipticCurve, z, side: int | None = None, eps: float | None = None,
           offsets: dict | None = None):
    """Branch-tracked ``R(z)^(1/2)`` on the cut plane.

    Parameters
    ----------
    c : HyperellipticCurve
    z : complex or array_like
    side : {+1, -1}, optional
        Boundary value to use for points lying on a cut (``+`` is the left
        side of the cut's direction).
    eps : float, optional
        Distance within which a point counts as lying on a cut.
    offsets : dict, optional
        ``{k: z - E_k}`` computed exactly by the caller; used in place of the
        rounded difference near a branch point.

    Raises
    ------
    CutError
        If a point lies on a cut and no side is given.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z).astype(complex)
    eps = 1e-12 * c.scale if eps is None else eps
    E = c.branch_points
    offsets = offsets or {}

    def diff(k):
        return np.atleast_1d(np.asarray(offsets[k], dtype=complex)) if k in offsets else z - E[k]

    out = np.ones(z.shape, dtype=complex)
    for a_i, b_i in c.cuts:
        a, b = E[a_i], E[b_i]
        mid, h = 0.5 * (a + b), 0.5 * (b - a)
        u = (z - mid) / h
        on = (np.abs(u.imag) * abs(h) <= eps) & (np.abs(u.real) <= 1 + eps / abs(h))
        if np.any(on) and side is None:
            raise CutError("sqrt_R evaluated on a finite cut without a side flag")
        out = out * _pair_factor(diff(a_i), diff(b_i), a, b, on if np.any(on) else None, side or 0)
    e, d = E[c.ray_index], c.ray_direction
    w = (z - e) / d
    on = (np.abs(w.imag) <= eps) & (w.real >= -eps)
    if np.any(on) and side is None:
        raise CutError("sqrt_R evaluated on the infinite cut without a side flag")
    out = out * _ray_factor(diff(c.ray_index), d, on if np.any(on) else None, side or 0)
    return complex(out[0]) if scalar else out


def _other_factors(c: HyperellipticCurve, z, j: int):
    """Product of every factor of ``sqrt_R`` except that of finite cut ``j``."""
    E = c.branch_points
    out = np.ones(np.shape(z), dtype=complex)
    for k, (a_i, b_i) in enumerate(c.cuts):
        if k != j:
            out = out * _pair_factor(z - E[a_i], z - E[b_i], E[a_i], E[b_i])
    return out * _ray_factor(z - E[c.ray_index], c.ray_direction)


# ---------------------------------------------------------------------------
# paths and quadrature


def _ring_nodes(c: HyperellipticCurve):
    """Waypoints around every branch point, plus their mutual visibility."""
    if "ring" in c._cache:
        return c._cache["ring"]
    E = c.E
    cuts = _cut_list(c)
    nodes = []
    for i, e in enumerate(E):
        others = [abs(e - f) for k, f in enumerate(E) if k != i]
        segd = [_dist_point_segment(e, a, b, ray) for (a, b, ray, idx) in cuts if i not in idx]
        rho = 0.3 * min(others + segd) if (others or segd) else 0.5
        for k in range(12):
            w = e + rho * complex(np.exp(2j * math.pi * (k + 0.5) / 12))
            dmin = min(_dist_point_segment(w, a, b, ray) for (a, b, ray, _) in cuts)
            if dmin > 0.15 * rho:
                nodes.append(w)
    N = len(nodes)
    adj = [[] for _ in range(N)]
    for i in range(N):
        for j in range(i + 1, N):
            if not _segment_blocked(c, nodes[i], nodes[j]):
                L = abs(nodes[i] - nodes[j])
                adj[i].append((j, L))
                adj[j].append((i, L))
    c._cache["ring"] = (nodes, adj)
    return nodes, adj


def plan_path(c: HyperellipticCurve, p: complex, q: complex) -> list:
    """Polyline from ``p`` to ``q`` that stays inside the cut plane.

    The straight segment is used when admissible; otherwise the shortest
    route through a fixed set of waypoints placed on small circles around
    the branch points (Dijkstra on the visibility graph).
    """
    p, q = complex(p), complex(q)
    if not _segment_blocked(c, p, q):
        return [p, q]
    nodes, adj = _ring_nodes(c)
    N = len(nodes)
    src, dst = N, N + 1
    pts = nodes + [p, q]
    extra = {src: [], dst: []}
    for i in range(N):
        if not _segment_blocked(c, p, nodes[i]):
            extra[src].append((i, abs(p - nodes[i])))
        if not _segment_blocked(c, nodes[i], q):
            extra[dst].append((i, abs(q - nodes[i])))
    dist = {src: 0.0}
    prev = {}
    heap = [(0.0, src)]
    while heap:
        dcur, u = heapq.heappop(heap)
        if u == dst:
            break
        if dcur > dist.get(u, math.inf):
            continue
        if u == src:
            nbrs = extra[src]
        else:
            nbrs = list(adj[u]) if u < N else []
            nbrs += [(dst, L) for (i, L) in extra[dst] if i == u]
        for v, L in nbrs:
            nd = dcur + L
            if nd < dist.get(v, math.inf) - 1e-15:
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    if dst not in prev:
        raise PathPlanningError(f"no admissible path from {p} to {q}")
    path = [q]
    u = dst
    while u != src:
        u = prev[u]
        path.append(pts[u])
    return path[::-1]


def _segment_quad(fun, p: complex, q: complex, tol: float, limit: int = 400, ends=(None, None), near=()):
    """``int_p^q fun(z) dz`` with the substitution ``t = (1 - cos phi)/2``.

    The substitution clusters nodes at both ends and removes inverse
    square-root endpoint singularities.  When ``ends`` names branch-point
    indices at ``p`` and/or ``q``, ``fun`` is called as ``fun(z, offsets)``
    with the exact differences ``z - E_k``.  Points in ``near`` that pass
    close to the segment become quadrature breakpoints.
    """
    d = q - p
    kp, kq = ends
    brk = []
    for e in near:
        if min(abs(e - p), abs(e - q)) < 1e-6 * abs(d):
            continue
        t = ((e - p) * d.conjugate()).real / abs(d) ** 2
        if 1e-6 < t < 1 - 1e-6 and abs(p + t * d - e) < 0.2 * abs(d):
            brk.append(2 * math.asin(math.sqrt(t)))

    def g(phi):
        t = np.sin(0.5 * phi) ** 2
        z = p + d * t
        if kp is None and kq is None:
            v = fun(z)
        else:
            offs = {}
            if kp is not None:
                offs[kp] = d * t
            if kq is not None:
                offs[kq] = -d * np.cos(0.5 * phi) ** 2
            v = fun(z, offs)
        return v * (0.5 * np.sin(phi)) * d

    val, err, info = quad_vec(g, 0.0, math.pi, epsabs=tol, epsrel=tol, norm="max", limit=limit,
                              points=sorted(brk) or None, full_output=True)
    _check_quad(info, val, err, tol)
    return val, float(err)


def _check_quad(info, val, err, tol):
    if not info.success and err > tol * max(1.0, float(np.abs(val).max())):
        raise QuadratureError(f"quadrature did not reach tolerance {tol:g} (error estimate {err:.3g})")


def path_integral(c: HyperellipticCurve, coeffs, path: Sequence[complex], tol: float = 1e-12,
                  sheet: int = 1, side: int | None = None):
    """``int P(z) dz / y`` along a polyline inside the cut plane.

    Parameters
    ----------
    coeffs : array_like
        ``P`` as a coefficient matrix: shape (n_poly, deg+1), lowest power
        first; a 1-D array is treated as one polynomial.
    path : sequence of complex
        Polyline vertices; every segment must avoid cuts.
    sheet : {+1, -1}
        Multiply ``sqrt_R`` by this sign.
    side : {+1, -1}, optional
        Boundary values for a path running along a cut.

    Returns
    -------
    values : ndarray (n_poly,)
    error : float
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    powers = np.arange(coeffs.shape[1])

    def fun(z, offsets=None):
        z = complex(z)
        if side is not None:
            y = sqrt_R(c, z, side=side, eps=1e-12 * c.scale, offsets=offsets)
        else:
            try:
                y = sqrt_R(c, z, eps=0.0, offsets=offsets)
            except CutError:
                # only reachable within rounding distance of a branch point,
                # where the contribution is negligible
                y = sqrt_R(c, z, side=1, eps=0.0, offsets=offsets)
        if y == 0:
            return np.zeros(coeffs.shape[0], dtype=complex)
        return coeffs @ (z**powers) / (sheet * y)

    total = np.zeros(coeffs.shape[0], dtype=complex)
    err = 0.0
    E = c.branch_points

    def which(v):
        for k, e in enumerate(E):
            if v == e:
                return k
        return None

    for a, b in zip(path[:-1], path[1:]):
        v, e = _segment_quad(fun, a, b, tol, ends=(which(a), which(b)), near=E)
        total += v
        err += e
    return total, err


def _a_loop_moments(c: HyperellipticCurve, j: int, deg: int, tol: float):
    """``oint_{a_j} z^k dz / y`` for ``k = 0..deg`` (counterclockwise loop).

    Collapsing the loop onto the cut with ``z = mid + h cos(theta)`` gives
    ``2i int_0^pi z^k / Q(z) dtheta`` where ``Q`` omits the cut's own factor.
    """
    E = c.branch_points
    a_i, b_i = c.cuts[j]
    a, b = E[a_i], E[b_i]
    mid, h = 0.5 * (a + b), 0.5 * (b - a)
    powers = np.arange(deg + 1)

    def g(theta):
        z = mid + h * np.cos(theta)
        return (z**powers) / complex(_other_factors(c, np.array([z]), j)[0])

    val, err, info = quad_vec(g, 0.0, math.pi, epsabs=tol, epsrel=tol, norm="max", limit=400,
                              full_output=True)
    _check_quad(info, val, err, tol)
    return 2j * val, 2 * float(err)


def _gap_moments(c: HyperellipticCurve, m: int, deg: int, tol: float):
    """``2 int_{s_2m-1}^{s_2m} z^k dz / y`` on the principal sheet (m = 1..n)."""
    E = c.branch_points
    ch = c.chain
    p, q = E[ch[2 * m - 1]], E[ch[2 * m]]
    path = plan_path(c, p, q)
    eye = np.eye(deg + 1)
    v, e = path_integral(c, eye, path, tol)
    return 2 * v, 2 * e


def moment_matrix(c: HyperellipticCurve, tol: float = 1e-12):
    """Periods of ``z^k dz / y`` (k = 0..n) over the default basis.

    Returns
    -------
    M : ndarray (2n, n+1)
        Rows ``a_1..a_n, b_1..b_n``.
    err : float
    """
    key = ("moments", tol)
    if key in c._cache:
        return c._cache[key]
    n = c.genus
    M = np.zeros((2 * n, n + 1), dtype=complex)
    err = 0.0
    for j in range(n):
        M[j], e = _a_loop_moments(c, j, n, tol)
        err = max(err, e)
    gaps = []
    for m in range(1, n + 1):
        g, e = _gap_moments(c, m, n, tol)
        gaps.append(g)
        err = max(err, e)
    for j in range(n):
        M[n + j] = -sum(gaps[j:])
    c._cache[key] = (M, err)
    return M, err


def a_period(c: HyperellipticCurve, poly_coeffs, j: int, tol: float = 1e-12):
    """``oint_{a_j} P(z) dz / y`` for the j-th cut (1-based), with error estimate."""
    n = c.genus
    if not 1 <= j <= n:
        raise ValueError("j must be in 1..n")
    coeffs = np.asarray(poly_coeffs, dtype=complex)
    vals, err = _a_loop_moments(c, j - 1, len(coeffs) - 1, tol)
    return complex(vals @ coeffs), err * float(np.abs(coeffs).sum())


def cycle_periods(c: HyperellipticCurve, poly_coeffs, transform=None, tol: float = 1e-12) -> np.ndarray:
    """Periods of ``P dz / y`` over ``(a_1..a_n, b_1..b_n)`` of a basis."""
    n = c.genus
    M, _ = moment_matrix(c, tol)
    coeffs = np.zeros(n + 1, dtype=complex)
    pc = np.asarray(poly_coeffs, dtype=complex)
    if pc.size > n + 1:
        raise ValueError("polynomial degree exceeds the genus")
    coeffs[: pc.size] = pc
    X = np.eye(2 * n) if transform is None else np.asarray(transform, dtype=float)
    return X @ (M @ coeffs)


# ---------------------------------------------------------------------------
# normalization


def _sorted_roots(poly_low_first) -> np.ndarray:
    r = np.roots(np.asarray(poly_low_first, dtype=complex)[::-1])
    return np.array(sorted(r, key=lambda v: (round(v.real, 12), round(v.imag, 12))), dtype=complex)


def _build_period_data(c, M, err, X, coeffs, normalization, tol_real, search=None) -> PeriodData:
    n = c.genus
    Mt = X @ M
    lam = _sorted_roots(coeffs) if n else np.zeros(0, dtype=complex)
    per = Mt @ coeffs
    gdz = 0.5j * per
    scale = max(1.0, float(np.abs(gdz).max())) if gdz.size else 1.0
    verified = bool(np.all(np.abs(gdz.real) <= tol_real * scale))
    return PeriodData(
        a_matrix=Mt[:n, :n].T.copy(),
        lambda_tilde=lam,
        b_periods_gdz=gdz[n:],
        mean_V=complex(sum(c.branch_points) - 2 * lam.sum()),
        basis_transform=np.asarray(X, dtype=np.int64),
        poly=coeffs,
        normalization=normalization,
        periods_gdz=gdz,
        a_residual=float(np.abs(per[:n]).max()) if n else 0.0,
        error_estimate=err,
        real_b_verified=verified,
        search=search,
    )


def normalize_lambda(c: HyperellipticCurve, transform=None, tol: float = 1e-12,
                     tol_real: float = 1e-8) -> PeriodData:
    """Monic ``P`` of degree n with vanishing a-periods of ``P dz / y``.

    Parameters
    ----------
    transform : array_like (2n, 2n), optional
        Integer symplectic matrix; rows express the cycles of the basis in
        terms of the default cycles.

    Raises
    ------
    np.linalg.LinAlgError
        If the a-period matrix is singular.
    """
    n = c.genus
    M, err = moment_matrix(c, tol)
    X = np.eye(2 * n, dtype=np.int64) if transform is None else np.asarray(transform, dtype=np.int64)
    Mt = X @ M
    A = Mt[:n, :n]
    if n:
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > 1e13:
            raise np.linalg.LinAlgError("a-period matrix is singular")
        low = np.linalg.solve(A, -Mt[:n, n])
    else:
        low = np.zeros(0, dtype=complex)
    coeffs = np.concatenate([low, [1.0 + 0j]])
    return _build_period_data(c, M, err, X, coeffs, "a-cycles", tol_real)


def real_normalize(c: HyperellipticCurve, tol: float = 1e-12, tol_real: float = 1e-8) -> PeriodData:
    """Monic ``P`` of degree n with all 2n periods of ``P dz / y`` real.

    Equivalent to a-normalization in any basis where the b-periods of
    ``<g> dz`` are imaginary, but needs no basis search.  The 2n real
    conditions on the n complex coefficients form a square real system.
    """
    n = c.genus
    M, err = moment_matrix(c, tol)
    if n:
        A = M[:, :n]
        Ar = np.block([[A.imag, A.real]])
        rhs = -M[:, n].imag
        sol = np.linalg.solve(Ar, rhs)
        low = sol[:n] + 1j * sol[n:]
    else:
        low = np.zeros(0, dtype=complex)
    coeffs = np.concatenate([low, [1.0 + 0j]])
    pd = _build_period_data(c, M, err, np.eye(2 * n, dtype=np.int64), coeffs, "real-periods", tol_real)
    return pd


def b_periods_of_mean_g(c: HyperellipticCurve, p: PeriodData) -> np.ndarray:
    """b-periods of ``<g> dz`` over the basis recorded in ``p``."""
    n = c.genus
    M, _ = moment_matrix(c)
    per = np.asarray(p.basis_transform, dtype=float) @ (M @ p.poly)
    return 0.5j * per[n:]


def _symplectic_J(n: int) -> np.ndarray:
    J = np.zeros((2 * n, 2 * n), dtype=np.int64)
    J[:n, n:] = np.eye(n, dtype=np.int64)
    J[n:, :n] = -np.eye(n, dtype=np.int64)
    return J


def _objective(pd: PeriodData) -> float:
    b = pd.b_periods_gdz
    if b.size == 0:
        return 0.0
    scale = max(1.0, float(np.abs(b).max()))
    return float(np.abs(b.real).max()) / scale


def _genus1_candidates(bound: int):
    rng = range(-bound, bound + 1)
    for A, B, C, D in itertools.product(rng, repeat=4):
        if A * D - B * C == 1:
            yield np.array([[A, B], [C, D]], dtype=np.int64)


def _primitive(v) -> bool:
    return math.gcd(*[abs(int(x)) for x in v]) == 1


def _lagrangian_candidates(c: HyperellipticCurve, bound: int, tol: float):
    """Symplectic bases whose a-cycles kill the real-normalized differential."""
    n = c.genus
    J = _symplectic_J(n)
    pr = real_normalize(c)
    M, _ = moment_matrix(c)
    v = (M @ pr.poly).real
    vscale = max(1e-300, float(np.abs(v).max()))
    rng = range(-bound, bound + 1)
    kernel = []
    for k in itertools.product(rng, repeat=2 * n):
        k = np.array(k, dtype=np.int64)
        nz = np.flatnonzero(k)
        if nz.size == 0 or k[nz[0]] < 0 or not _primitive(k):
            continue
        if abs(float(k @ v)) <= tol * vscale * float(np.abs(k).sum()):
            kernel.append(k)
    kernel.sort(key=lambda k: (int(np.abs(k).max()), tuple(k)))
    boxes = [np.array(w, dtype=np.int64) for w in itertools.product(rng, repeat=2 * n)]
    for combo in itertools.combinations(range(len(kernel)), n):
        ks = np.array([kernel[i] for i in combo])
        if np.any(ks @ J @ ks.T):
            continue
        if np.linalg.matrix_rank(ks.astype(float)) < n:
            continue
        ws = []
        for j in range(n):
            target = np.zeros(n, dtype=np.int64)
            target[j] = 1
            found = None
            for w in boxes:
                if np.array_equal(ks @ J @ w, target):
                    found = w.copy()
                    break
            if found is None:
                break
            ws.append(found)
        if len(ws) < n:
            continue
        # make the duals mutually isotropic
        for j in range(n):
            for i in range(j):
                t = int(ws[i] @ J @ ws[j])
                ws[j] = ws[j] + t * ks[i]
        X = np.vstack([ks, np.array(ws)])
        if np.array_equal(X @ J @ X.T, J):
            yield X


def symplectic_basis_search(c: HyperellipticCurve, p: PeriodData | None = None, bound: int = 3,
                            tol: float = 1e-8) -> PeriodData:
    """Search integer symplectic basis changes for imaginary b-periods of ``<g> dz``.

    Genus one enumerates every ``[[A, B], [C, D]]`` with ``AD - BC = 1`` and
    entries bounded by ``bound``.  Higher genus searches bounded integer
    cycle vectors along which the real-normalized differential has zero
    period, assembles isotropic n-tuples and completes them to symplectic
    bases.  The returned data carries a :class:`BasisSearchOutcome` in
    ``search``; failure is reported there, not raised.
    """
    n = c.genus
    ident = np.eye(2 * n, dtype=np.int64)
    best = normalize_lambda(c) if p is None else p
    best_obj = _objective(best)
    count = 1
    if bound >= 1 and n >= 1 and best_obj > tol:
        cands = _genus1_candidates(bound) if n == 1 else _lagrangian_candidates(c, bound, tol)
        scored = []
        for X in cands:
            count += 1
            try:
                pd = normalize_lambda(c, X)
            except np.linalg.LinAlgError:
                continue
            obj = _objective(pd)
            scored.append((obj > tol, int(np.abs(X).max()), round(obj, 14), tuple(X.ravel()), pd))
        if scored:
            scored.sort(key=lambda s: s[:4])
            top = scored[0]
            if top[2] < best_obj:
                best, best_obj = top[4], _objective(top[4])
    ok = best_obj <= tol
    msg = "real b-periods eliminated" if ok else "non-quasi-periodic or bound too small"
    X = best.basis_transform if best is not None else ident
    best.search = BasisSearchOutcome(ok, msg, best_obj, X, count)
    best.real_b_verified = ok
    return best


def spectral_normalization(c: HyperellipticCurve, bound: int = 3, tol: float = 1e-8) -> PeriodData:
    """Period data suitable for the spectral antiderivative.

    Runs the symplectic search; if it fails, falls back to the basis-free
    real-period normalization (same roots whenever a good basis exists) and
    leaves ``real_b_verified`` False so callers can tag results.
    """
    pd = symplectic_basis_search(c, None, bound, tol)
    if pd.search is not None and pd.search.success:
        return pd
    pr = real_normalize(c)
    pr.search = pd.search
    pr.real_b_verified = False
    return pr


# ---------------------------------------------------------------------------
# Dirichlet data


def dirichlet_mu(c: HyperellipticCurve, p: PeriodData | None, V_sample, n: int | None = None,
                 z_grid=None) -> np.ndarray:
    """Zeros of ``F_n(., x)`` at a potential sample.

    The integration constants are taken from the branch points.  If
    ``z_grid`` is given the roots are returned in the order of the nearest
    grid points (useful for continuity across samples).
    """
    from . import symkdv

    n = c.genus if n is None else n
    E = list(c.branch_points)
    cs = [symkdv.c_from_E(E, k) for k in range(1, n + 1)]
    coeffs = symkdv.z_coefficients(symkdv.build_F(n), V_sample, cs)
    if not np.all(np.isfinite(coeffs)):
        raise ArithmeticError("non-finite coefficients in F_n")
    roots = np.roots(coeffs[::-1]) if n else np.zeros(0, dtype=complex)
    if z_grid is not None:
        g = np.asarray(z_grid, dtype=complex)
        roots = np.array(sorted(roots, key=lambda r: int(np.argmin(np.abs(g - r)))))
    else:
        roots = np.array(sorted(roots, key=lambda v: (v.real, v.imag)))
    return roots


# ---------------------------------------------------------------------------
# serialization


def curve_to_dict(c: HyperellipticCurve) -> dict:
    cp = lambda v: [float(complex(v).real), float(complex(v).imag)]  # noqa: E731
    return {
        "branch_points": [cp(e) for e in c.branch_points],
        "cuts": [[int(a), int(b)] for a, b in c.cuts],
        "ray": {"index": int(c.ray_index), "direction": cp(c.ray_direction)},
        "anchor": {"z": cp(c.anchor[0]), "sqrt_R": cp(c.anchor[1])},
        "convention": "product of per-cut principal-root factors; R^(1/2) ~ z^(n+1/2) along the ray",
    }


def curve_from_dict(d: dict) -> HyperellipticCurve:
    E = [complex(a, b) for a, b in d["branch_points"]]
    hint = None
    if "cuts" in d and "ray" in d:
        ray = d["ray"]
        hint = {"cuts": d["cuts"], "ray": ray["index"], "direction": complex(*ray["direction"])}
    return new_curve(E, hint)
