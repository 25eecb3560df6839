"""Admissibility of (K, U) and the solvmanifold structure constants B, C.

For generators u_1..u_s of U:

    L[j][k] = log sigma_k(u_j)                 (k <= s)
    M[j][i] = 2 log |sigma_{s+i}(u_j)|         (i <= t)
    B = L^{-1} M,   C[:, i] = L^{-1} (Arg sigma_{s+i}(u_j) + 2 pi branch[j][i])_j
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
import math
from typing import Sequence

from flint import acb, arb
import numpy as np

from .balls import (
    GUARD_BITS,
    InconclusiveError,
    arb_to_fraction,
    decimal_string,
    excludes_zero,
    precision_cap,
    width,
    working_precision,
)
from .embeddings import INCONCLUSIVE, EmbeddingSystem, RelationVerdict, certify_relation, isolate_roots
from .exactnum import FieldElem, NumberField, norm


class OTPreconditionError(ValueError):
    """Input does not define an OT manifold (signature, rank, positivity...)."""


class IntervalSingular(ArithmeticError):
    pass


# ---------- interval linear algebra ----------

def interval_solve(a: Sequence[Sequence[arb]], b: Sequence[Sequence[arb]]):
    """Solve a X = b by Gaussian elimination with certified pivots.

    Returns (X, det).  Raises IntervalSingular when every candidate pivot
    ball contains zero.
    """
    n = len(a)
    m = [list(row) + list(rhs) for row, rhs in zip(a, b)]
    ncols = len(m[0])
    det = arb(1)
    for col in range(n):
        best = None
        for r in range(col, n):
            if excludes_zero(m[r][col]):
                mag = abs(m[r][col]).lower()
                if best is None or mag > best[1]:
                    best = (r, mag)
        if best is None:
            raise IntervalSingular(f"pivot {col} contains zero")
        r = best[0]
        if r != col:
            m[col], m[r] = m[r], m[col]
            det = -det
        piv = m[col][col]
        det *= piv
        for rr in range(n):
            if rr == col:
                continue
            factor = m[rr][col] / piv
            for c in range(col, ncols):
                m[rr][c] -= factor * m[col][c]
    x = [[m[r][c] / m[r][r] for c in range(n, ncols)] for r in range(n)]
    return x, det


# ---------- data types ----------

@dataclass(frozen=True)
class AdmissibilityCertificate:
    admissible: bool
    determinant: arb | None
    precision: int
    reason: str
    dependency: tuple[int, ...] | None = None

    def to_json(self) -> dict:
        out = {"admissible": self.admissible, "precision": self.precision,
               "reason": self.reason}
        if self.determinant is not None:
            out["det_L"] = decimal_string(self.determinant)
        if self.dependency is not None:
            out["exact_dependency"] = list(self.dependency)
        return out


@dataclass(frozen=True)
class UnitGroup:
    generators: tuple[FieldElem, ...]
    totally_positive: tuple[bool, ...]

    def __len__(self) -> int:
        return len(self.generators)


@dataclass
class OTData:
    """Arithmetic payload of X(K, U)."""

    field: NumberField
    system: EmbeddingSystem
    units: UnitGroup
    precision: int
    L: list[list[arb]]
    M: list[list[arb]]
    B: list[list[arb]]
    admissibility: AdmissibilityCertificate
    row_sum_residuals: list[arb]
    branch: tuple[tuple[int, ...], ...] = ()
    C: list[list[arb]] = field(default_factory=list)
    C_reconstruction: arb | None = None
    relations: dict = field(default_factory=dict, repr=False)

    @property
    def s(self) -> int:
        return self.system.s

    @property
    def t(self) -> int:
        return self.system.t

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def generators(self) -> tuple[FieldElem, ...]:
        return self.units.generators


# ---------- operations ----------

def _escalate(system: EmbeddingSystem, fn, start: int):
    """Run fn(prec) with doubling precision until it stops raising IntervalSingular."""
    prec = start
    cap = precision_cap()
    while True:
        try:
            return fn(prec), prec
        except IntervalSingular as exc:
            if prec * 2 > cap:
                raise InconclusiveError(str(exc), prec) from exc
            prec *= 2


def check_totally_positive(system: EmbeddingSystem, u: FieldElem,
                           precision: int | None = None) -> bool:
    """True iff every real embedding of u is certified positive."""
    prec = precision or system.precision
    cap = precision_cap()
    for i in range(1, system.s + 1):
        p = prec
        while True:
            z = system.embed(u, i, p)
            if excludes_zero(z.real):
                if z.real < 0:
                    return False
                break
            if p * 2 > cap:
                raise InconclusiveError(f"sign of sigma_{i}(u) undecided", p)
            p *= 2
    return True


def l_map(system: EmbeddingSystem, u: FieldElem, precision: int | None = None) -> list[arb]:
    """(log sigma_1(u), ..., log sigma_s(u), 2 log|sigma_{s+1}(u)|, ...)."""
    prec = precision or system.precision
    out = []
    with working_precision(prec + GUARD_BITS):
        for k in range(1, system.s + 1):
            out.append(system.embed(u, k, prec).real.log())
        for i in range(1, system.t + 1):
            z = system.embed(u, system.s + i, prec)
            out.append((z.real ** 2 + z.imag ** 2).log())
    return out


def _log_matrices(system: EmbeddingSystem, gens: Sequence[FieldElem], prec: int):
    L, M = [], []
    for u in gens:
        row = l_map(system, u, prec)
        L.append(row[:system.s])
        M.append(row[system.s:])
    return L, M


def _is_trivial_product(gens: Sequence[FieldElem], m: Sequence[int]) -> bool:
    one = gens[0].field.one()
    val = one
    for u, e in zip(gens, m):
        if e:
            val = val * u ** e
    return val == one


def find_exact_dependency(gens: Sequence[FieldElem], bound: int = 3,
                          L: Sequence[Sequence[arb]] | None = None) -> tuple[int, ...] | None:
    """Nonzero m with prod u_j^m_j = 1, checked exactly in K.

    Small vectors (|m_j| <= bound) are tried first.  If log-embedding rows L
    are given, a float null vector of L is rationalized and tried as well.
    """
    if not gens:
        return None
    k = len(gens)
    vectors = [m for m in product(range(-bound, bound + 1), repeat=k) if any(m)]
    vectors.sort(key=lambda m: (max(abs(x) for x in m), sum(abs(x) for x in m), m))
    for m in vectors:
        # fix a sign so m and -m are not both tried
        first = next(x for x in m if x)
        if first < 0:
            continue
        if _is_trivial_product(gens, m):
            return m
    if L is not None:
        m = _null_vector_guess(L)
        if m is not None and _is_trivial_product(gens, m):
            return m
    return None


def _null_vector_guess(L: Sequence[Sequence[arb]], max_den: int = 256) -> tuple[int, ...] | None:
    a = np.array([[float(x.mid()) for x in row] for row in L], dtype=float)
    _, _, vh = np.linalg.svd(a.T)
    v = vh[-1]
    j = int(np.argmax(np.abs(v)))
    if v[j] == 0:
        return None
    ratios = [Fraction(float(x / v[j])).limit_denominator(max_den) for x in v]
    den = math.lcm(*(r.denominator for r in ratios))
    m = [int(r * den) for r in ratios]
    g = math.gcd(*m)
    return tuple(x // g for x in m) if g else None


def check_admissible(system: EmbeddingSystem, units: UnitGroup | Sequence[FieldElem],
                     precision: int | None = None) -> AdmissibilityCertificate:
    """Certify det L != 0 for the s x s matrix of real log-embeddings.

    A determinant ball containing zero first triggers an exact search for a
    multiplicative dependency (which certifies a rank drop, since sigma_1 is
    injective); otherwise precision is doubled up to the cap.
    """
    gens = units.generators if isinstance(units, UnitGroup) else tuple(units)
    s = system.s
    if len(gens) != s:
        raise OTPreconditionError(
            f"unit rank mismatch: {len(gens)} generators for s = {s}")
    prec = precision or system.precision
    cap = precision_cap()
    dep_checked = False
    while True:
        L, _ = _log_matrices(system, gens, prec)
        with working_precision(prec + GUARD_BITS):
            try:
                _, det = interval_solve(L, [[arb(0)] for _ in range(s)])
            except IntervalSingular:
                det = None
        if det is not None and excludes_zero(det):
            return AdmissibilityCertificate(True, det, prec, "det L certified nonzero")
        if not dep_checked:
            dep = find_exact_dependency(gens, L=L)
            dep_checked = True
            if dep is not None:
                return AdmissibilityCertificate(
                    False, det, prec, "exact multiplicative dependency among generators", dep)
        if prec * 2 > cap:
            raise InconclusiveError("det L interval contains 0 at the precision cap", prec)
        prec *= 2


def compute_b_matrix(system: EmbeddingSystem, gens: Sequence[FieldElem], prec: int):
    """B = L^{-1} M with certified row sums; returns (B, L, M, residuals)."""
    L, M = _log_matrices(system, gens, prec)
    with working_precision(prec + GUARD_BITS):
        B, _ = interval_solve(L, M)
        residuals = [sum(row, arb(0)) + 1 for row in B]
    for k, r in enumerate(residuals):
        if not r.contains(0):
            raise ArithmeticError(f"row {k + 1} of B does not sum to -1: {r}")
    return B, L, M, residuals


def compute_c_matrix(data: OTData, branch: Sequence[Sequence[int]] | None = None):
    """Solve L C[:, i] = Arg sigma_{s+i}(u_j) + 2 pi branch[j][i].

    Returns (C, reconstruction residual bound).  The residual is the largest
    distance between sigma_{s+i}(u_j) and exp(sum_k L[j][k] (B[k][i]/2 + i C[k][i])).
    """
    s, t = data.s, data.t
    if branch is None:
        branch = [[0] * t for _ in range(s)]
    prec = data.precision
    with working_precision(prec + GUARD_BITS):
        two_pi = 2 * arb.pi()
        rhs = []
        for j, u in enumerate(data.generators):
            row = []
            for i in range(1, t + 1):
                z = data.system.embed(u, s + i, prec)
                row.append(z.arg() + two_pi * branch[j][i - 1])
            rhs.append(row)
        C, _ = interval_solve(data.L, rhs)
        worst = arb(0)
        for j, u in enumerate(data.generators):
            for i in range(t):
                expo = acb(0)
                for k in range(s):
                    expo += data.L[j][k] * acb(data.B[k][i] / 2, C[k][i])
                recon = expo.exp()
                z = data.system.embed(u, s + i + 1, prec)
                d = abs(recon - z)
                if d.upper() > worst.upper():
                    worst = arb(d.upper())
    return C, worst


def build_ot_data(field: NumberField, units: Sequence, precision: int = 256,
                  system: EmbeddingSystem | None = None,
                  branch: Sequence[Sequence[int]] | None = None) -> OTData:
    """Validate (K, U) and compute L, B, C.  Raises OTPreconditionError."""
    system = system or isolate_roots(field, precision)
    s, t = system.s, system.t
    if s < 1 or t < 1:
        raise OTPreconditionError(f"OT manifolds need s >= 1 and t >= 1, got (s, t) = ({s}, {t})")
    gens = tuple(field(u) for u in units)
    if len(gens) != s:
        raise OTPreconditionError(f"unit rank mismatch: {len(gens)} generators for s = {s}")
    for u in gens:
        if u.rep.is_zero() or abs(norm(u)) != 1:
            raise OTPreconditionError(f"{u} is not a unit (norm != +-1)")
        if not u.is_integral_rep():
            raise OTPreconditionError(f"{u} has non-integral coefficients")
    positive = tuple(check_totally_positive(system, u, precision) for u in gens)
    if not all(positive):
        bad = [str(u) for u, ok in zip(gens, positive) if not ok]
        raise OTPreconditionError(f"units not totally positive: {', '.join(bad)}")
    group = UnitGroup(gens, positive)
    cert = check_admissible(system, group, precision)
    if not cert.admissible:
        raise OTPreconditionError(f"unit group is not admissible: {cert.reason}")

    def attempt(prec):
        return compute_b_matrix(system, gens, prec)

    (B, L, M, residuals), used = _escalate(system, attempt, max(precision, cert.precision))
    data = OTData(field, system, group, used, L, M, B, cert, residuals)
    data.branch = tuple(tuple(r) for r in (branch or [[0] * t for _ in range(s)]))
    data.C, data.C_reconstruction = compute_c_matrix(data, data.branch)
    return data


def relation(data: OTData, e) -> RelationVerdict:
    """Memoized certify_relation on all generators; inconclusive raises."""
    key = tuple(e)
    hit = data.relations.get(key)
    if hit is None:
        hit = certify_relation(data.system, data.generators, key, data.precision)
        if hit.status == INCONCLUSIVE:
            raise InconclusiveError(f"relation {list(key)} undecided", hit.precision_used)
        data.relations[key] = hit
    return hit


def row_sum_widths(data: OTData) -> list[Fraction]:
    return [arb_to_fraction(width(r).upper()) for r in data.row_sum_residuals]
