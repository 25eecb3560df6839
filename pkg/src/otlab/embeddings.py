"""Certified embeddings K -> C and certification of multiplicative relations.

Canonical embedding order: the s real roots ascending (indices 1..s), then
one representative per conjugate pair in the upper half plane sorted by
(real part, imaginary part) (indices s+1..s+t), then their conjugates in the
same order (indices s+t+1..s+2t).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Sequence

import numpy as np
from flint import acb, arb

from .balls import (
    DEFAULT_PRECISION,
    GUARD_BITS,
    InconclusiveError,
    arb_to_fraction,
    excludes_zero,
    precision_cap,
    to_arb,
    width,
    working_precision,
)
from .exactnum import FieldElem, NumberField, Poly, poly_eval_exact

ExponentVector = tuple[int, ...]

VERIFIED = "verified"
REFUTED = "refuted"
INCONCLUSIVE = "inconclusive"


class RootIsolationError(RuntimeError):
    pass


# ---------- Sturm sequences ----------

def sturm_sequence(f: Poly) -> list[Poly]:
    seq = [f, f.derivative()]
    while not seq[-1].is_zero():
        seq.append(-(seq[-2] % seq[-1]))
    return seq[:-1]


def _sign_changes(seq: Sequence[Poly], x: Fraction) -> int:
    signs = []
    for p in seq:
        v = poly_eval_exact(p, x)
        if v:
            signs.append(v > 0)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _cauchy_bound(f: Poly) -> Fraction:
    lead = abs(f.lc)
    m = max(abs(c) for c in f.coeffs[:-1]) if f.degree > 0 else Fraction(0)
    bound = 1 + m / lead
    # round up to a power of two so every bisection point is dyadic
    return Fraction(2) ** max(0, math.ceil(math.log2(bound)) + 1)


def isolate_real_roots(f: Poly) -> list[tuple[Fraction, Fraction]]:
    """Disjoint dyadic intervals (lo, hi], each holding exactly one real root."""
    seq = sturm_sequence(f)
    if seq[-1].degree > 0:
        raise RootIsolationError("polynomial has repeated roots")
    bound = _cauchy_bound(f)
    out = []
    stack = [(-bound, bound, _sign_changes(seq, -bound), _sign_changes(seq, bound))]
    while stack:
        lo, hi, vlo, vhi = stack.pop()
        count = vlo - vhi
        if count == 0:
            continue
        if count == 1:
            out.append((lo, hi))
            continue
        mid = (lo + hi) / 2
        if poly_eval_exact(f, mid) == 0:
            raise RootIsolationError(f"rational root {mid}")
        vmid = _sign_changes(seq, mid)
        stack.append((lo, mid, vlo, vmid))
        stack.append((mid, hi, vmid, vhi))
    return sorted(out)


def count_real_roots(f: Poly) -> int:
    seq = sturm_sequence(f)
    b = _cauchy_bound(f)
    return _sign_changes(seq, -b) - _sign_changes(seq, b)


# ---------- ball evaluation ----------

def _horner(coeffs: Sequence, z):
    acc = 0 * z
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


class EmbeddingSystem:
    """Certified enclosures of all roots of f, refinable on demand.

    ``root(i, prec)`` and ``embed(a, i, prec)`` return balls whose width
    (real radius + imaginary radius) is at most 2^-prec.  Refinement is
    guarded by a lock, so concurrent callers are safe.
    """

    def __init__(self, field: NumberField, precision: int = DEFAULT_PRECISION):
        if precision < 64:
            raise ValueError("precision must be at least 64 bits")
        self.field = field
        self.precision = precision
        f = field.f
        self._coeffs = [to_arb(c) for c in f.coeffs]
        self._dcoeffs = [to_arb(c) for c in f.derivative().coeffs]
        self._lock = threading.RLock()
        self._cache: dict = {}
        self._isolate(precision)

    # -- construction --

    def _isolate(self, prec: int) -> None:
        f = self.field.f
        n = f.degree
        intervals = isolate_real_roots(f)
        s = len(intervals)
        if (n - s) % 2:
            raise RootIsolationError("non-real root count is odd")
        t = (n - s) // 2
        self.s, self.t, self.n = s, t, n
        # real roots: rational isolating intervals, then refined brackets
        self._real = [(lo, hi) for lo, hi in intervals]
        self._real_prec = [0] * s
        # complex roots: companion-matrix estimates, polished and certified
        approx = np.roots([float(c) for c in reversed(f.coeffs)])
        upper = sorted((z for z in approx if z.imag > 0), key=lambda z: -z.imag)
        if len(upper) < t:
            raise RootIsolationError("could not locate the complex roots numerically")
        upper = upper[:t]
        boxes = []
        for z in upper:
            boxes.append(self._certify_complex(complex(z), prec, parent=None))
        boxes.sort(key=lambda b: (arb_to_fraction(b.real), arb_to_fraction(b.imag)))
        for a, b in combinations(boxes, 2):
            if a.real.overlaps(b.real) and a.imag.overlaps(b.imag):
                raise RootIsolationError("complex root enclosures are not disjoint")
        self._complex = boxes
        self._complex_prec = [prec] * t

    def _certify_complex(self, z0, prec: int, parent: acb | None) -> acb:
        """Newton-polish z0 then certify a unique root in a small box (Krawczyk).

        The box has half-width 2^-(prec+2) in both coordinates; its imaginary
        part must be positive and, when refining, it must sit inside `parent`.
        """
        cap = precision_cap()
        target = prec
        while target <= 4 * cap:
            with working_precision(target + GUARD_BITS):
                if isinstance(z0, acb):
                    z = acb(z0.real.mid(), z0.imag.mid())
                else:
                    z = acb(z0.real, z0.imag)
                for _ in range(200):
                    step = _horner(self._coeffs, z) / _horner(self._dcoeffs, z)
                    z = acb((z - step).real.mid(), (z - step).imag.mid())
                    if abs(step).upper() < arb(2) ** (-(target + 16)):
                        break
                y = 1 / _horner(self._dcoeffs, z)
                y = acb(y.real.mid(), y.imag.mid())
                r = arb(2) ** (-(prec + 2))
                for _ in range(4):
                    box = acb(arb(z.real.mid(), r), arb(z.imag.mid(), r))
                    k = (z - y * _horner(self._coeffs, z)
                         + (1 - y * _horner(self._dcoeffs, box)) * (box - z))
                    ok = box.contains_interior(k) and box.imag.lower() > 0
                    if ok and parent is not None:
                        ok = parent.contains(box)
                    if ok:
                        return box
                    r = r / 2
            z0 = z
            target *= 2
        raise RootIsolationError("could not certify a complex root enclosure")

    def _refine_real(self, j: int, prec: int) -> None:
        f = self.field.f
        lo, hi = self._real[j]
        wp = prec + GUARD_BITS
        with working_precision(wp):
            # coarse bisection keeps Newton inside the bracket
            while hi - lo > Fraction(1, 2 ** 40):
                mid = (lo + hi) / 2
                v = poly_eval_exact(f, mid)
                if v == 0 or poly_eval_exact(f, hi) == 0:
                    raise RootIsolationError(f"rational root {mid}")
                if (v > 0) == (poly_eval_exact(f, hi) > 0):
                    hi = mid
                else:
                    lo = mid
            x = to_arb((lo + hi) / 2)
            for _ in range(200):
                step = _horner(self._coeffs, x) / _horner(self._dcoeffs, x)
                x = arb((x - step).mid())
                if abs(step).upper() < arb(2) ** (-(prec + 16)):
                    break
            xm = arb_to_fraction(x)
            delta = Fraction(1, 2 ** (prec + 2))
            for _ in range(40):
                a, b = xm - delta, xm + delta
                if a < lo or b > hi:
                    a, b = max(a, lo), min(b, hi)
                fa = _horner(self._coeffs, to_arb(a))
                fb = _horner(self._coeffs, to_arb(b))
                if excludes_zero(fa) and excludes_zero(fb) and (fa > 0) != (fb > 0):
                    if b - a <= Fraction(1, 2 ** prec):
                        self._real[j] = (a, b)
                        self._real_prec[j] = prec
                        return
                delta /= 2
        raise RootIsolationError("real root refinement failed")

    # -- access --

    def _ensure(self, i: int, prec: int) -> None:
        with self._lock:
            if i <= self.s:
                j = i - 1
                if self._real_prec[j] < prec:
                    self._refine_real(j, prec)
            else:
                j = (i - self.s - 1) % self.t
                if self._complex_prec[j] < prec:
                    old = self._complex[j]
                    self._complex[j] = self._certify_complex(old, prec, parent=old)
                    self._complex_prec[j] = prec

    def root(self, i: int, prec: int | None = None) -> acb:
        """Certified enclosure of the root for canonical index i (1-based)."""
        if not 1 <= i <= self.n:
            raise IndexError(f"embedding index {i} outside 1..{self.n}")
        prec = prec or self.precision
        self._ensure(i, prec)
        if i <= self.s:
            lo, hi = self._real[i - 1]
            with working_precision(prec + GUARD_BITS):
                return acb(to_arb(lo).union(to_arb(hi)), 0)
        j = i - self.s - 1
        box = self._complex[j % self.t]
        if j < self.t:
            return box
        with working_precision(prec + GUARD_BITS):
            return box.conjugate()

    def real_interval(self, i: int) -> tuple[Fraction, Fraction]:
        return self._real[i - 1]

    def embed(self, a: FieldElem, i: int, prec: int | None = None) -> acb:
        """sigma_i(a) as a ball of width at most 2^-prec."""
        if a.field != self.field:
            raise ValueError("element from a different field")
        if not 1 <= i <= self.n:
            raise IndexError(f"embedding index {i} outside 1..{self.n}")
        prec = prec or self.precision
        key = (a.rep.coeffs, i, prec)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if a.rep.degree <= 0:
            val = acb(to_arb(a.rep.lc)) if a.rep.degree == 0 else acb(0)
            self._cache[key] = val
            return val
        conj = i > self.s + self.t
        base = i - self.t if conj else i
        coeffs = a.rep.coeffs
        cap = precision_cap()
        extra = 8
        while True:
            rp = prec + extra
            root = self.root(base, rp)
            with working_precision(rp + GUARD_BITS):
                cs = [to_arb(c) for c in coeffs]
                if base <= self.s:
                    val = acb(_horner(cs, root.real), 0)
                else:
                    val = _horner(cs, root)
            if width(val) <= arb(2) ** (-prec):
                break
            extra *= 2
            if rp > 4 * cap:
                raise InconclusiveError("embedding evaluation did not reach target width", rp)
        if conj:
            with working_precision(rp + GUARD_BITS):
                val = val.conjugate()
        self._cache[key] = val
        return val

    @property
    def signature(self) -> tuple[int, int]:
        return self.s, self.t

    def conjugate_index(self, i: int) -> int:
        if i <= self.s:
            return i
        if i <= self.s + self.t:
            return i + self.t
        return i - self.t


def isolate_roots(field: NumberField, precision: int = DEFAULT_PRECISION) -> EmbeddingSystem:
    return EmbeddingSystem(field, precision)


def embed(system: EmbeddingSystem, a: FieldElem, i: int, precision: int | None = None) -> acb:
    return system.embed(a, i, precision)


# ---------- relation certification ----------

@dataclass(frozen=True)
class RelationVerdict:
    status: str
    precision_used: int
    residual: str
    exponents: ExponentVector = ()
    per_generator: tuple[str, ...] = field(default=(), compare=False)

    @property
    def verified(self) -> bool:
        return self.status == VERIFIED

    @property
    def refuted(self) -> bool:
        return self.status == REFUTED

    def to_json(self) -> dict:
        return {
            "exponents": list(self.exponents),
            "status": self.status,
            "precision_used": self.precision_used,
            "residual_bound": self.residual,
        }


def _falling(n: int, k: int) -> int:
    out = 1
    for j in range(k):
        out *= n - j
    return out


def compositum_degree_bound(n: int, support: int) -> int:
    """Degree bound for the field generated by `support` conjugates of K."""
    return min(math.factorial(n), _falling(n, max(support, 1)))


def height_upper(system: EmbeddingSystem, u: FieldElem) -> arb:
    """Upper bound for the absolute logarithmic Weil height of u.

    With d the common denominator of u's rep, d*u is an algebraic integer,
    so h(u) <= log d + (1/n) sum_i log max(1, |sigma_i(d*u)|).
    """
    key = ("height", u.rep.coeffs)
    hit = system._cache.get(key)
    if hit is not None:
        return hit
    den = math.lcm(*(c.denominator for c in u.rep.coeffs)) if u.rep.coeffs else 1
    v = u * den
    with working_precision(128):
        total = arb(0)
        for i in range(1, system.n + 1):
            m = abs(system.embed(v, i, 64))
            total += arb(m.upper()).log() if m.upper() > 1 else arb(0)
        h = arb(den).log() + total / system.n
        h = arb(h.upper())
    system._cache[key] = h
    return h


def _residual_str(x: arb) -> str:
    u = arb_to_fraction(x.upper())
    if u == 0:
        return "0"
    return f"{float(u):.3e}" if u > Fraction(1, 10 ** 300) else \
        f"2^{u.numerator.bit_length() - u.denominator.bit_length() + 1}"


def certify_relation(system: EmbeddingSystem, units: Sequence[FieldElem],
                     e: Sequence[int], precision: int | None = None) -> RelationVerdict:
    """Decide whether prod_i sigma_i(u)^{e_i} = 1 for every u in `units`.

    Refuted when some product ball excludes 1.  Verified when |P(u) - 1| is
    below the Liouville-type separation bound for nonzero algebraic numbers
    of the relevant degree and height, so P(u) - 1 must vanish.
    """
    e = tuple(int(x) for x in e)
    if len(e) != system.n:
        raise ValueError(f"exponent vector has length {len(e)}, expected {system.n}")
    support = [i + 1 for i, x in enumerate(e) if x]
    start = precision or system.precision
    if not support:
        return RelationVerdict(VERIFIED, start, "0", e, tuple(VERIFIED for _ in units))
    cap = precision_cap()
    deg = compositum_degree_bound(system.n, len(support))
    weight = sum(abs(x) for x in e)
    statuses = []
    worst = arb(0)
    used = start
    for u in units:
        with working_precision(128):
            h = height_upper(system, u)
            # log(1/delta) = D (weight * h + log 2)
            log_inv_delta = deg * (weight * h + arb(2).log())
            need = int(arb_to_fraction((log_inv_delta / arb(2).log()).upper())) + 1
        prec = start
        status = INCONCLUSIVE
        while True:
            with working_precision(prec + GUARD_BITS):
                p = acb(1)
                for i in support:
                    z = system.embed(u, i, prec)
                    p *= z ** e[i - 1] if e[i - 1] > 0 else 1 / z ** (-e[i - 1])
                diff = p - 1
                mag = abs(diff)
                if excludes_zero(diff):
                    status = REFUTED
                elif mag.upper() < (-log_inv_delta).exp().lower():
                    status = VERIFIED
            used = max(used, prec)
            if status != INCONCLUSIVE:
                break
            nxt = max(prec * 2, need + 32 if need + 32 > prec else prec * 2)
            if nxt > cap:
                break
            prec = nxt
        statuses.append(status)
        if arb_to_fraction(mag.upper()) > arb_to_fraction(worst.upper()):
            worst = arb(mag.upper())
        if status == REFUTED:
            break
    if REFUTED in statuses:
        overall = REFUTED
    elif all(st == VERIFIED for st in statuses):
        overall = VERIFIED
    else:
        overall = INCONCLUSIVE
    return RelationVerdict(overall, used, _residual_str(worst), e, tuple(statuses))


def indicator(n: int, indices) -> ExponentVector:
    v = [0] * n
    for i in indices:
        v[i - 1] += 1
    return tuple(v)


def detect_relations(system: EmbeddingSystem, units: Sequence[FieldElem],
                     max_support: int, exponent_bound: int = 1) -> list[ExponentVector]:
    """All certified relations with support size <= max_support.

    Nonzero entries range over 1..exponent_bound.  Any inconclusive
    certification aborts, so the result never silently undercounts.
    """
    if max_support > system.n:
        raise ValueError("max_support exceeds the number of embeddings")
    found = []
    for k in range(1, max_support + 1):
        for supp in combinations(range(1, system.n + 1), k):
            for exps in product(range(1, exponent_bound + 1), repeat=k):
                e = [0] * system.n
                for i, x in zip(supp, exps):
                    e[i - 1] = x
                verdict = certify_relation(system, units, e)
                if verdict.status == INCONCLUSIVE:
                    raise InconclusiveError(
                        f"relation {e} inconclusive at {verdict.precision_used} bits",
                        verdict.precision_used)
                if verdict.verified:
                    found.append(tuple(e))
    return sorted(found, key=lambda v: (sum(1 for x in v if x), [-x for x in v]))
