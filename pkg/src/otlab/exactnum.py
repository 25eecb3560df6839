"""Exact arithmetic: rational polynomials and the number field Q[x]/(f).

Polynomials store their coefficients constant term first, as fully reduced
``Fraction`` objects.  Nothing in this module touches floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

from flint import fmpz_poly, nmod_poly

FIRST_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47,
                53, 59, 61, 67, 71, 73, 79, 83, 89, 97)


class FieldMismatch(ValueError):
    pass


def _frac(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, float):
        raise TypeError("floats are not accepted as exact coefficients")
    return Fraction(c)


class Poly:
    """Univariate polynomial over Q, coefficients constant term first."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [_frac(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(cs)

    @classmethod
    def x(cls) -> Poly:
        return cls((0, 1))

    @property
    def degree(self) -> int:
        # the zero polynomial gets degree -1
        return len(self.coeffs) - 1

    @property
    def lc(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_monic_integer(self) -> bool:
        return (bool(self.coeffs) and self.lc == 1
                and all(c.denominator == 1 for c in self.coeffs))

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self.coeffs == Poly((other,)).coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"Poly({[str(c) for c in self.coeffs]})"

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            a = abs(c)
            if k == 0:
                body = str(a)
            else:
                mono = "x" if k == 1 else f"x^{k}"
                body = mono if a == 1 else f"{a}*{mono}"
            parts.append((sign, body))
        head_sign, head = parts[0]
        out = ("-" if head_sign == "-" else "") + head
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __neg__(self) -> Poly:
        return Poly(-c for c in self.coeffs)

    def __add__(self, other) -> Poly:
        other = _as_poly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (n - len(other.coeffs))
        return Poly(x + y for x, y in zip(a, b))

    __radd__ = __add__

    def __sub__(self, other) -> Poly:
        return self + (-_as_poly(other))

    def __rsub__(self, other) -> Poly:
        return _as_poly(other) - self

    def __mul__(self, other) -> Poly:
        other = _as_poly(other)
        if self.is_zero() or other.is_zero():
            return Poly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Poly(out)

    __rmul__ = __mul__

    def scale(self, c) -> Poly:
        c = _frac(c)
        return Poly(c * a for a in self.coeffs)

    def __divmod__(self, other) -> tuple[Poly, Poly]:
        other = _as_poly(other)
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = len(rem) - len(other.coeffs)
        if dq < 0:
            return Poly(), self
        quot = [Fraction(0)] * (dq + 1)
        lead = other.lc
        m = other.degree
        for k in range(dq, -1, -1):
            q = rem[k + m] / lead
            quot[k] = q
            if q:
                for j, b in enumerate(other.coeffs):
                    rem[k + j] -= q * b
        return Poly(quot), Poly(rem[:m])

    def __mod__(self, other) -> Poly:
        return divmod(self, other)[1]

    def __floordiv__(self, other) -> Poly:
        return divmod(self, other)[0]

    def __call__(self, x):
        return poly_eval_exact(self, x)

    def derivative(self) -> Poly:
        return Poly(k * c for k, c in enumerate(self.coeffs) if k > 0)

    def monic(self) -> Poly:
        if self.is_zero():
            return self
        return self.scale(1 / self.lc)

    def content_free(self) -> Poly:
        """Primitive integer multiple with positive leading coefficient."""
        if self.is_zero():
            return self
        from math import gcd, lcm
        den = lcm(*(c.denominator for c in self.coeffs))
        ints = [int(c * den) for c in self.coeffs]
        g = 0
        for v in ints:
            g = gcd(g, v)
        ints = [v // g for v in ints]
        if ints[-1] < 0:
            ints = [-v for v in ints]
        return Poly(ints)

    def int_coeffs(self) -> list[int]:
        if any(c.denominator != 1 for c in self.coeffs):
            raise ValueError(f"{self} does not have integer coefficients")
        return [int(c) for c in self.coeffs]


def _as_poly(p) -> Poly:
    if isinstance(p, Poly):
        return p
    return Poly((p,))


def poly_eval_exact(f: Poly, x) -> Fraction:
    """Horner evaluation at a rational point."""
    x = _frac(x)
    acc = Fraction(0)
    for c in reversed(f.coeffs):
        acc = acc * x + c
    return acc


def poly_gcd(a: Poly, b: Poly) -> Poly:
    while not b.is_zero():
        a, b = b, a % b
    return a.monic()


def poly_xgcd(a: Poly, b: Poly) -> tuple[Poly, Poly, Poly]:
    """Return (g, u, v) with u*a + v*b = g, g monic."""
    r0, r1 = a, b
    s0, s1 = Poly((1,)), Poly()
    t0, t1 = Poly(), Poly((1,))
    while not r1.is_zero():
        q, r = divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if r0.is_zero():
        return r0, s0, t0
    inv = 1 / r0.lc
    return r0.scale(inv), s0.scale(inv), t0.scale(inv)


def resultant(f: Poly, g: Poly) -> Fraction:
    """Res(f, g) by the Euclidean recurrence over Q."""
    if f.is_zero() or g.is_zero():
        return Fraction(0)
    m, n = f.degree, g.degree
    if n == 0:
        return g.lc ** m
    if m == 0:
        return f.lc ** n
    if m < n:
        sign = -1 if (m * n) % 2 else 1
        return sign * resultant(g, f)
    # Res(f, g) = (-1)^{mn} lc(g)^{m - deg r} Res(g, r), r = f mod g
    r = f % g
    if r.is_zero():
        return Fraction(0)
    sign = -1 if (m * n) % 2 else 1
    return sign * g.lc ** (m - r.degree) * resultant(g, r)


def discriminant(f: Poly) -> Fraction:
    n = f.degree
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    return sign * resultant(f, f.derivative()) / f.lc


@dataclass(frozen=True, eq=False)
class NumberField:
    """K = Q[x]/(f) for a monic integer polynomial f.

    Irreducibility is not re-checked here; see ``irreducibility_certificate``.
    """

    f: Poly
    asserted_irreducible: bool = False

    def __post_init__(self):
        if not self.f.is_monic_integer():
            raise ValueError("defining polynomial must be monic with integer coefficients")
        if self.f.degree < 1:
            raise ValueError("defining polynomial must have positive degree")

    @property
    def degree(self) -> int:
        return self.f.degree

    def __eq__(self, other) -> bool:
        return isinstance(other, NumberField) and self.f == other.f

    def __hash__(self) -> int:
        return hash(("NumberField", self.f))

    def __call__(self, rep) -> FieldElem:
        if isinstance(rep, FieldElem):
            if rep.field != self:
                raise FieldMismatch("element belongs to a different field")
            return rep
        if not isinstance(rep, Poly):
            rep = Poly(rep) if isinstance(rep, (list, tuple)) else Poly((rep,))
        return FieldElem(self, rep % self.f)

    @property
    def gen(self) -> FieldElem:
        return self(Poly.x())

    def one(self) -> FieldElem:
        return self(1)

    def zero(self) -> FieldElem:
        return self(0)


class FieldElem:
    """Element of a NumberField, stored as its reduced representative."""

    __slots__ = ("field", "rep")

    def __init__(self, field: NumberField, rep: Poly):
        if rep.degree >= field.degree:
            rep = rep % field.f
        self.field = field
        self.rep = rep

    def _check(self, other) -> FieldElem:
        if not isinstance(other, FieldElem):
            return self.field(other)
        if other.field != self.field:
            raise FieldMismatch("elements belong to different fields")
        return other

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.rep == Poly((other,))
        if not isinstance(other, FieldElem):
            return NotImplemented
        return self.field == other.field and self.rep == other.rep

    def __hash__(self) -> int:
        return hash((self.field, self.rep))

    def __repr__(self) -> str:
        return f"FieldElem({str(self.rep).replace('x', 'a')})"

    def __add__(self, other) -> FieldElem:
        other = self._check(other)
        return FieldElem(self.field, self.rep + other.rep)

    __radd__ = __add__

    def __sub__(self, other) -> FieldElem:
        other = self._check(other)
        return FieldElem(self.field, self.rep - other.rep)

    def __rsub__(self, other) -> FieldElem:
        return self._check(other) - self

    def __neg__(self) -> FieldElem:
        return FieldElem(self.field, -self.rep)

    def __mul__(self, other) -> FieldElem:
        other = self._check(other)
        return FieldElem(self.field, (self.rep * other.rep) % self.field.f)

    __rmul__ = __mul__

    def inverse(self) -> FieldElem:
        if self.rep.is_zero():
            raise ZeroDivisionError("inverse of zero field element")
        g, u, _ = poly_xgcd(self.rep, self.field.f)
        if g.degree != 0:
            raise ValueError("non-invertible element: defining polynomial is reducible")
        return FieldElem(self.field, u % self.field.f)

    def __truediv__(self, other) -> FieldElem:
        return self * self._check(other).inverse()

    def __pow__(self, k: int) -> FieldElem:
        if k < 0:
            return self.inverse() ** (-k)
        result = self.field.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def is_integral_rep(self) -> bool:
        return all(c.denominator == 1 for c in self.rep.coeffs)

    def coefficients(self) -> list[Fraction]:
        n = self.field.degree
        return list(self.rep.coeffs) + [Fraction(0)] * (n - len(self.rep.coeffs))


def elem_arith(a: FieldElem, b: FieldElem | None, op: str) -> FieldElem:
    if op == "add":
        return a + a._check(b)
    if op == "sub":
        return a - a._check(b)
    if op == "mul":
        return a * a._check(b)
    if op == "inv":
        return a.inverse()
    raise ValueError(f"unknown operation {op!r}")


def norm(a: FieldElem) -> Fraction:
    """N_{K/Q}(a) = Res(f, rep) / lc(f)^deg(rep)."""
    if a.rep.is_zero():
        return Fraction(0)
    f = a.field.f
    return resultant(f, a.rep) / f.lc ** a.rep.degree


def multiplication_matrix(a: FieldElem) -> list[list[Fraction]]:
    """Matrix of x -> a*x on the power basis (columns are images of a^j)."""
    n = a.field.degree
    cols = []
    power = a.field.one()
    alpha = a.field.gen
    for _ in range(n):
        cols.append((a * power).coefficients())
        power = power * alpha
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def det_exact(m: Sequence[Sequence[Fraction]]) -> Fraction:
    a = [list(map(Fraction, row)) for row in m]
    n = len(a)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        for r in range(col + 1, n):
            factor = a[r][col] / a[col][col]
            if factor:
                for c in range(col, n):
                    a[r][c] -= factor * a[col][c]
    return det


# ---------- irreducibility ----------

@dataclass(frozen=True)
class IrreducibilityCertificate:
    status: str  # "certified" | "reducible" | "unknown"
    reason: str
    factor: Poly | None = None
    prime: int | None = None

    @property
    def certified(self) -> bool:
        return self.status == "certified"

    @property
    def reducible(self) -> bool:
        return self.status == "reducible"


def _rational_roots(f: Poly) -> list[Fraction]:
    """Rational roots of a monic integer polynomial (all integers)."""
    coeffs = f.int_coeffs()
    k = 0
    while coeffs[k] == 0:
        k += 1
    roots = [Fraction(0)] if k else []
    c0 = abs(coeffs[k])
    divisors = [d for d in range(1, int(c0 ** 0.5) + 1) if c0 % d == 0]
    divisors = sorted(set(divisors + [c0 // d for d in divisors]))
    for d in divisors:
        for r in (d, -d):
            if poly_eval_exact(f, r) == 0:
                roots.append(Fraction(r))
    return roots


def _subset_sums(degrees: list[int]) -> set[int]:
    sums = {0}
    for d in degrees:
        sums |= {x + d for x in sums}
    return sums


def irreducibility_certificate(f: Poly) -> IrreducibilityCertificate:
    """Sufficient-condition irreducibility test for monic integer f.

    A factorization over Z of degree d would reduce mod every good prime p
    to a product containing a factor of degree d, so d must be a subset sum
    of the mod-p factor degrees for every p.  If no proper d survives the
    first 25 primes, f is irreducible.
    """
    if not f.is_monic_integer():
        raise ValueError("irreducibility test needs a monic integer polynomial")
    n = f.degree
    if n <= 0:
        raise ValueError("constant polynomial")
    if n == 1:
        return IrreducibilityCertificate("certified", "linear polynomial")
    roots = _rational_roots(f)
    if roots:
        r = roots[0]
        return IrreducibilityCertificate("reducible", f"rational root {r}", Poly((-r, 1)))
    if n <= 3:
        return IrreducibilityCertificate("certified", "degree <= 3 without rational roots")
    g = poly_gcd(f, f.derivative())
    if g.degree > 0:
        return IrreducibilityCertificate("reducible", "repeated factor", g)
    disc = discriminant(f)
    ints = f.int_coeffs()
    possible = set(range(1, n))
    for p in FIRST_PRIMES:
        if disc.numerator % p == 0:
            continue
        _, factors = nmod_poly(ints, p).factor()
        degs = []
        for fac, mult in factors:
            degs.extend([fac.degree()] * mult)
        if len(degs) == 1:
            return IrreducibilityCertificate("certified", f"irreducible modulo {p}", prime=p)
        possible &= _subset_sums(degs)
        if not possible - {0, n}:
            return IrreducibilityCertificate(
                "certified", f"factor degree patterns incompatible up to p = {p}", prime=p)
    # patterns allow a factor: ask an integer factorizer for a witness, then check it
    _, facs = fmpz_poly(ints).factor()
    for fac, _mult in facs:
        if 0 < fac.degree() < n:
            cand = Poly(int(c) for c in fac.coeffs())
            if (f % cand).is_zero():
                return IrreducibilityCertificate("reducible", "exact factor found", cand)
    return IrreducibilityCertificate("unknown", "mod-p patterns inconclusive")


def elements_of_height(field: NumberField, bound: int):
    """Yield all elements whose integer rep coefficients lie in [-bound, bound]."""
    n = field.degree
    for coeffs in product(range(-bound, bound + 1), repeat=n):
        yield field(list(coeffs))
