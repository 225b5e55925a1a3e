"""Exact differential-polynomial algebra for the stationary KdV hierarchy.

A :class:`DifferentialPolynomial` is a finite sum of monomials

    coeff * V^a0 * V_x^a1 * V_xx^a2 * ... * z^b * c1^d1 * c2^d2 * ...

with exact rational coefficients.  The recursion

    f_0 = 1,    f_{l,x} = -1/4 f_{l-1,xxx} + V f_{l-1,x} + 1/2 V_x f_{l-1}

is integrated symbolically, each step introducing a fresh constant ``c_l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "DifferentialPolynomial",
    "NumericPotentialSample",
    "IntegrationError",
    "IdentityReport",
    "V",
    "Z",
    "const",
    "c_symbol",
    "V_derivative",
    "next_f",
    "f_poly",
    "homogeneous_f",
    "skdv",
    "build_F",
    "build_H",
    "reduce_modulo_skdv",
    "verify_core_identities",
    "c_from_E",
    "c_from_E_by_matching",
    "evaluate",
    "z_coefficients",
    "to_text",
    "to_latex",
]


class IntegrationError(ArithmeticError):
    """Raised when a differential polynomial is not an exact x-derivative."""


def _strip(t: tuple) -> tuple:
    n = len(t)
    while n and t[n - 1] == 0:
        n -= 1
    return tuple(t[:n])


# monomial key: (V-derivative powers, z power, c powers), trailing zeros stripped
Key = tuple


def _key(v=(), z=0, c=()) -> Key:
    return (_strip(tuple(v)), int(z), _strip(tuple(c)))


def _add_tuples(a: tuple, b: tuple) -> tuple:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, x in enumerate(b):
        out[i] += x
    return _strip(tuple(out))


class DifferentialPolynomial:
    """Polynomial in ``V, V_x, V_xx, ...``, ``z`` and ``c_1, c_2, ...`` over Q.

    Instances are immutable; arithmetic returns new objects.  Equality is
    structural on the canonical (zero-free) term map.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Key, Fraction] | None = None):
        clean = {}
        for k, v in (terms or {}).items():
            v = Fraction(v)
            if v:
                clean[k] = v
        self._terms = clean
        self._hash = None

    # -- construction helpers -------------------------------------------------
    @classmethod
    def constant(cls, value) -> "DifferentialPolynomial":
        return cls({_key(): Fraction(value)})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    # -- algebra ----------------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out.get(k, 0) + v
        return DifferentialPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return DifferentialPolynomial({k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        out: dict = {}
        for (v1, z1, c1), a in self._terms.items():
            for (v2, z2, c2), b in other._terms.items():
                k = (_add_tuples(v1, v2), z1 + z2, _add_tuples(c1, c2))
                out[k] = out.get(k, 0) + a * b
        return DifferentialPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = DifferentialPolynomial.constant(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, DifferentialPolynomial):
            try:
                other = _coerce(other)
            except TypeError:
                return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    def __repr__(self):
        return f"DifferentialPolynomial({to_text(self)!r})"

    # -- structure --------------------------------------------------------------
    def dx(self, times: int = 1) -> "DifferentialPolynomial":
        """Total x-derivative (``z`` and the ``c_k`` are constants)."""
        p = self
        for _ in range(times):
            out: dict = {}
            for (v, z, c), a in p._terms.items():
                for i, e in enumerate(v):
                    if not e:
                        continue
                    nv = list(v) + [0]
                    nv[i] -= 1
                    nv[i + 1] += 1
                    k = (_strip(tuple(nv)), z, c)
                    out[k] = out.get(k, 0) + a * e
            p = DifferentialPolynomial(out)
        return p

    def order(self) -> int:
        """Highest V-derivative order present, -1 if V does not appear."""
        return max((len(v) - 1 for (v, _, _) in self._terms), default=-1)

    def z_degree(self) -> int:
        return max((z for (_, z, _) in self._terms), default=-1)

    def z_coefficient(self, k: int) -> "DifferentialPolynomial":
        return DifferentialPolynomial({(v, 0, c): a for (v, z, c), a in self._terms.items() if z == k})

    def substitute_c(self, values: Mapping[int, Fraction]) -> "DifferentialPolynomial":
        """Substitute exact values for some of the constants ``c_k`` (1-based)."""
        out: dict = {}
        for (v, z, c), a in self._terms.items():
            keep = list(c)
            factor = Fraction(1)
            for i, e in enumerate(c):
                if e and (i + 1) in values:
                    factor *= Fraction(values[i + 1]) ** e
                    keep[i] = 0
            k = (v, z, _strip(tuple(keep)))
            out[k] = out.get(k, 0) + a * factor
        return DifferentialPolynomial(out)

    def zero_constants(self) -> "DifferentialPolynomial":
        return DifferentialPolynomial({k: a for k, a in self._terms.items() if not k[2]})

    def substitute_constant_V(self, value=0) -> "DifferentialPolynomial":
        """Set ``V`` to a constant: all derivatives vanish, ``V -> value``."""
        out: dict = {}
        value = Fraction(value)
        for (v, z, c), a in self._terms.items():
            if len(v) > 1:
                continue
            e = v[0] if v else 0
            k = ((), z, c)
            out[k] = out.get(k, 0) + a * value**e
        return DifferentialPolynomial(out)

    def constants_used(self) -> int:
        return max((len(c) for (_, _, c) in self._terms), default=0)


def _coerce(x) -> DifferentialPolynomial:
    if isinstance(x, DifferentialPolynomial):
        return x
    if isinstance(x, (int, Fraction)):
        return DifferentialPolynomial.constant(x)
    raise TypeError(f"cannot use {type(x).__name__} in a DifferentialPolynomial")


def V_derivative(k: int) -> DifferentialPolynomial:
    """The generator ``V^(k)``."""
    v = [0] * (k + 1)
    v[k] = 1
    return DifferentialPolynomial({_key(v): 1})


def c_symbol(k: int) -> DifferentialPolynomial:
    """The integration constant ``c_k`` (k >= 1)."""
    c = [0] * k
    c[k - 1] = 1
    return DifferentialPolynomial({_key(c=c): 1})


def const(value) -> DifferentialPolynomial:
    return DifferentialPolynomial.constant(value)


V = V_derivative(0)
Z = DifferentialPolynomial({_key(z=1): 1})


# ---------------------------------------------------------------------------
# integration


def integrate_x(p: DifferentialPolynomial) -> DifferentialPolynomial:
    """Exact antiderivative in x with zero integration constant.

    Works from the highest derivative order down: every term of top order
    ``k`` must be linear in ``V^(k)``, say ``r * (V^(k-1))^j * V^(k)`` with
    ``r`` free of ``V^(k-1)``; then ``r (V^(k-1))^(j+1)/(j+1)`` is subtracted
    out and the loop continues on the remainder.

    Raises
    ------
    IntegrationError
        If the input is not an exact derivative.
    """
    rest = p
    result = DifferentialPolynomial()
    for _ in range(10_000):
        if not rest:
            return result
        k = rest.order()
        if k <= 0:
            raise IntegrationError(f"not an exact x-derivative: residual {to_text(rest)}")
        chunk: dict = {}
        for (v, z, c), a in rest.items():
            if len(v) - 1 != k:
                continue
            if v[k] != 1:
                raise IntegrationError(
                    f"term nonlinear in the top derivative: {to_text(DifferentialPolynomial({(v, z, c): a}))}"
                )
            j = v[k - 1]
            # strip the V^(k) factor and raise V^(k-1) by one
            nv = list(v[:k])
            nv[k - 1] = j + 1
            key = (_strip(tuple(nv)), z, c)
            chunk[key] = chunk.get(key, 0) + a / (j + 1)
        piece = DifferentialPolynomial(chunk)
        result = result + piece
        rest = rest - piece.dx()
    raise IntegrationError("integration did not terminate")


# ---------------------------------------------------------------------------
# hierarchy


def next_f(prev: DifferentialPolynomial, level: int) -> DifferentialPolynomial:
    """``f_level`` from ``f_{level-1}``, adding the fresh constant ``c_level``."""
    if level < 1:
        raise ValueError("level must be >= 1")
    rhs = Fraction(-1, 4) * prev.dx(3) + V * prev.dx() + Fraction(1, 2) * V.dx() * prev
    return integrate_x(rhs) + c_symbol(level)


@lru_cache(maxsize=None)
def f_poly(l: int) -> DifferentialPolynomial:
    """``f_l`` with symbolic constants ``c_1..c_l``."""
    if l < 0:
        raise ValueError("l must be >= 0")
    if l == 0:
        return const(1)
    return next_f(f_poly(l - 1), l)


@lru_cache(maxsize=None)
def homogeneous_f(l: int) -> DifferentialPolynomial:
    """``f_l`` with every integration constant set to zero."""
    if l < 0:
        raise ValueError("l must be >= 0")
    return f_poly(l).zero_constants()


@lru_cache(maxsize=None)
def skdv(n: int) -> DifferentialPolynomial:
    """The stationary KdV expression ``-2 d/dx f_{n+1}``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return -2 * f_poly(n + 1).dx()


@lru_cache(maxsize=None)
def build_F(n: int) -> DifferentialPolynomial:
    """``F_n = sum_l f_{n-l} z^l``, monic of degree n in z."""
    if n < 0:
        raise ValueError("n must be >= 0")
    out = DifferentialPolynomial()
    for l in range(n + 1):
        out = out + f_poly(n - l) * Z**l
    return out


@lru_cache(maxsize=None)
def build_H(n: int) -> DifferentialPolynomial:
    """``H_{n+1} = 1/2 F_{n,xx} + (z - V) F_n``."""
    F = build_F(n)
    return Fraction(1, 2) * F.dx(2) + (Z - V) * F


# ---------------------------------------------------------------------------
# reduction modulo the stationary equation


def _substitute_top(p: DifferentialPolynomial, order: int, rule: DifferentialPolynomial) -> DifferentialPolynomial:
    """Replace every ``V^(order)`` in ``p`` by ``rule``."""
    out = DifferentialPolynomial()
    cache = {1: rule}
    for (v, z, c), a in p.items():
        e = v[order] if len(v) > order else 0
        if not e:
            out = out + DifferentialPolynomial({(v, z, c): a})
            continue
        nv = list(v)
        nv[order] = 0
        if e not in cache:
            cache[e] = rule**e
        out = out + DifferentialPolynomial({(_strip(tuple(nv)), z, c): a}) * cache[e]
    return out


class StationaryReducer:
    """Normal forms modulo ``sKdV_n = 0`` and all its x-derivatives.

    ``sKdV_n`` has the top term ``-(-1/4)^n V^(2n+1)`` (constant coefficient),
    so it can be solved for ``V^(2n+1)``; derivatives of that rule give the
    rewriting rules for every higher order.
    """

    def __init__(self, n: int):
        self.n = n
        self.top = 2 * n + 1
        s = skdv(n)
        lead_key = _key([0] * self.top + [1])
        lead = s.terms.get(lead_key)
        if lead is None or s.order() != self.top:
            raise ArithmeticError("unexpected leading term in sKdV")
        self.lead = lead
        rest = s - DifferentialPolynomial({lead_key: lead})
        self._rules = {self.top: (-1 / Fraction(lead)) * rest}

    def rule(self, order: int) -> DifferentialPolynomial:
        if order not in self._rules:
            prev = self.rule(order - 1)
            self._rules[order] = self.reduce(prev.dx())
        return self._rules[order]

    def reduce(self, p: DifferentialPolynomial) -> DifferentialPolynomial:
        while p.order() >= self.top:
            k = p.order()
            p = _substitute_top(p, k, self.rule(k))
        return p


def reduce_modulo_skdv(p: DifferentialPolynomial, n: int) -> DifferentialPolynomial:
    """Normal form of ``p`` modulo ``sKdV_n`` and its x-derivatives."""
    return StationaryReducer(n).reduce(p)


@dataclass
class IdentityReport:
    """Result of :func:`verify_core_identities`."""

    n: int
    passed: bool
    identity_i: bool
    identity_ii: bool
    identity_iii: bool
    R: DifferentialPolynomial
    residuals: dict

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "passed": self.passed,
            "identity_i": self.identity_i,
            "identity_ii": self.identity_ii,
            "identity_iii": self.identity_iii,
            "R": to_text(self.R),
            "residuals": {k: to_text(v) for k, v in self.residuals.items()},
        }


def verify_core_identities(n: int) -> IdentityReport:
    """Check the three algebraic identities satisfied by ``F_n`` on solutions.

    (i)   ``F_xxx - 4 (V - z) F_x - 2 V_x F = 0``
    (ii)  ``R = 1/2 F_xx F - 1/4 F_x^2 - (V - z) F^2`` has vanishing x-derivative
          and is monic of degree 2n+1 in z
    (iii) ``R + 1/4 F_x^2 = F H``

    All three are taken modulo ``sKdV_n = 0``.  For ``n = 0`` the potential is
    forced to be constant and ``V_x = 0`` is the whole ideal.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    red = StationaryReducer(n)
    F = build_F(n)
    H = build_H(n)
    e1 = red.reduce(F.dx(3) - 4 * (V - Z) * F.dx() - 2 * V.dx() * F)
    R = Fraction(1, 2) * F.dx(2) * F - Fraction(1, 4) * F.dx() ** 2 - (V - Z) * F**2
    Rr = red.reduce(R)
    e2 = red.reduce(Rr.dx())
    monic = Rr.z_degree() == 2 * n + 1 and Rr.z_coefficient(2 * n + 1) == const(1)
    e3 = red.reduce(R + Fraction(1, 4) * F.dx() ** 2 - F * H)
    ok1, ok2, ok3 = not e1, (not e2) and monic, not e3
    res = {}
    if e1:
        res["i"] = e1
    if e2:
        res["ii"] = e2
    if e3:
        res["iii"] = e3
    return IdentityReport(n, ok1 and ok2 and ok3, ok1, ok2, ok3, Rr, res)


# ---------------------------------------------------------------------------
# constants from branch points


def c_from_E(E: Sequence, k: int):
    """Integration constant ``c_k`` as a symmetric function of the branch points.

    Direct evaluation of

        c_k(E) = - sum_{j_0+...+j_2n = k} prod_m (2 j_m)! E_m^{j_m}
                 / (2^{2k} (j_m!)^2 (2 j_m - 1))

    Exact for integer/rational input (returns a Fraction), complex otherwise.
    """
    E = list(E)
    if k < 1:
        raise ValueError("k must be >= 1")
    exact = all(isinstance(e, (int, Fraction)) for e in E)
    coef = [Fraction(math.factorial(2 * j), (math.factorial(j) ** 2) * (2 * j - 1)) for j in range(k + 1)]
    total = Fraction(0) if exact else 0j
    for js in _compositions(k, len(E)):
        term = Fraction(1) if exact else 1 + 0j
        for e, j in zip(E, js):
            if j:
                term = term * coef[j] * (Fraction(e) ** j if exact else complex(e) ** j)
            else:
                term = term * coef[0]
        total += term
    scale = Fraction(1, 2 ** (2 * k))
    return -scale * total if exact else complex(-float(scale) * total)


def _compositions(k: int, parts: int):
    """All tuples of ``parts`` non-negative integers summing to ``k``."""
    if parts == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _compositions(k - first, parts - 1):
            yield (first,) + rest


def c_from_E_by_matching(E: Sequence, n: int) -> list:
    """``c_1..c_n`` by matching ``R_{2n+1}`` against ``prod (z - E_m)``.

    The reduced ``R`` from identity (ii) has top coefficients
    (``z^(2n+1-k)``, ``k <= n``) free of V; each is ``2 c_k`` plus a
    polynomial in ``c_1..c_{k-1}``, so the system is solved triangularly.
    """
    E = [Fraction(e) for e in E]
    if len(E) != 2 * n + 1:
        raise ValueError("need 2n+1 branch points")
    rep = verify_core_identities(n)
    R = rep.R
    # elementary symmetric functions of E with alternating signs
    target = [Fraction(1)]
    for e in E:
        target = [a - e * b for a, b in zip(target + [0], [0] + target)]
    # target[i] is the coefficient of z^(2n+1-i)
    cs: dict = {}
    for k in range(1, n + 1):
        coeff = R.z_coefficient(2 * n + 1 - k).substitute_c(cs)
        if coeff.order() >= 0:
            raise ArithmeticError(f"coefficient of z^{2 * n + 1 - k} depends on V")
        lin = coeff.terms.get(_key(c=[0] * (k - 1) + [1]), Fraction(0))
        rest = coeff - lin * c_symbol(k)
        if rest.constants_used() >= k or lin == 0:
            raise ArithmeticError("coefficient matching is not triangular")
        rest_val = rest.terms.get(_key(), Fraction(0))
        cs[k] = (target[k] - rest_val) / lin
    return [cs[k] for k in range(1, n + 1)]


# ---------------------------------------------------------------------------
# numerics


@dataclass(frozen=True)
class NumericPotentialSample:
    """Values ``V^(k)(x)`` for ``k = 0..K`` at a point ``x``."""

    x: float
    values: tuple

    def __init__(self, x: float, values: Iterable):
        object.__setattr__(self, "x", float(x))
        object.__setattr__(self, "values", tuple(complex(v) for v in values))

    @property
    def order(self) -> int:
        return len(self.values) - 1


def _check_sample(p: DifferentialPolynomial, sample: NumericPotentialSample):
    if p.order() > sample.order:
        raise ValueError(f"sample carries derivatives up to order {sample.order}, need {p.order()}")


def evaluate(p: DifferentialPolynomial, sample: NumericPotentialSample, z: complex, c: Sequence) -> complex:
    """Numeric value of ``p`` with ``V^(k)``, ``z`` and ``c_k`` substituted."""
    _check_sample(p, sample)
    c = [complex(x) for x in c]
    if p.constants_used() > len(c):
        raise ValueError(f"need {p.constants_used()} constants, got {len(c)}")
    vals = sample.values
    total = 0j
    for (v, zp, cp), a in p.items():
        term = complex(a) * complex(z) ** zp
        for i, e in enumerate(v):
            if e:
                term *= vals[i] ** e
        for i, e in enumerate(cp):
            if e:
                term *= c[i] ** e
        total += term
    return total


def z_coefficients(p: DifferentialPolynomial, sample: NumericPotentialSample, c: Sequence) -> np.ndarray:
    """Numeric coefficients of ``p`` as a polynomial in z, lowest power first."""
    deg = max(p.z_degree(), 0)
    return np.array([evaluate(p.z_coefficient(k), sample, 0, c) for k in range(deg + 1)])


# ---------------------------------------------------------------------------
# text output


def _sort_key(item):
    (v, z, c), _ = item
    return (-z, c, sum(v), tuple(-x for x in v[::-1]), v)


def _vname(k: int, latex: bool) -> str:
    if latex:
        return "V" if k == 0 else ("V_{" + "x" * k + "}" if k < 4 else f"V^{{({k})}}")
    return "V" if k == 0 else ("V_" + "x" * k if k < 4 else f"V^({k})")


def _factor_list(v, z, c, latex: bool):
    parts = []
    for i, e in enumerate(c):
        if e:
            name = f"c_{{{i + 1}}}" if latex else f"c{i + 1}"
            parts.append(name if e == 1 else (f"{name}^{{{e}}}" if latex else f"{name}^{e}"))
    for i, e in enumerate(v):
        if e:
            name = _vname(i, latex)
            if e > 1 and latex and i:
                name = "(" + name + ")"
            elif e > 1 and i:
                name = "(" + name + ")"
            parts.append(name if e == 1 else (f"{name}^{{{e}}}" if latex else f"{name}^{e}"))
    if z:
        parts.append("z" if z == 1 else (f"z^{{{z}}}" if latex else f"z^{z}"))
    return parts


def _format(p: DifferentialPolynomial, latex: bool) -> str:
    if not p:
        return "0"
    out = []
    for (key, a) in sorted(p.items(), key=_sort_key):
        v, z, c = key
        factors = _factor_list(v, z, c, latex)
        sign = "-" if a < 0 else "+"
        mag = abs(a)
        if latex:
            num = "" if (mag == 1 and factors) else (
                str(mag.numerator) if mag.denominator == 1 else f"\\frac{{{mag.numerator}}}{{{mag.denominator}}}"
            )
            body = num + " ".join(factors)
        else:
            num = "" if (mag == 1 and factors) else str(mag)
            body = "*".join(([num] if num else []) + factors)
        out.append((sign, body))
    first_sign, first = out[0]
    s = ("-" if first_sign == "-" else "") + first
    for sign, body in out[1:]:
        s += f" {sign} {body}"
    return s


def to_text(p: DifferentialPolynomial) -> str:
    """Deterministic plain-text rendering, e.g. ``-1/8*V_xx + 3/8*V^2 + 1/2*c1*V + c2``."""
    return _format(p, latex=False)


def to_latex(p: DifferentialPolynomial) -> str:
    return _format(p, latex=True)


def parse_simple(terms: Iterable[tuple]) -> DifferentialPolynomial:
    """Build a polynomial from ``(coeff, vpowers, zpower, cpowers)`` tuples."""
    out: dict = {}
    for coeff, v, z, c in terms:
        k = _key(v, z, c)
        out[k] = out.get(k, 0) + Fraction(coeff)
    return DifferentialPolynomial(out)


def all_f(n: int) -> list:
    return [f_poly(l) for l in range(n + 1)]
