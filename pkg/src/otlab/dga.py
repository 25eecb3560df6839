"""Exterior calculus on left-invariant forms of the OT solvable Lie group.

Co-frame generators, in their fixed total order (0-based indices):

    w1..ws, g1..gt, cw1..cws, cg1..cgt        (c = complex conjugate)

with structure equations

    d w_k = (i/2) w_k ^ cw_k
    d g_i = sum_k (i b_ki/4 - c_ki/2) w_k ^ g_i + (-i b_ki/4 + c_ki/2) cw_k ^ g_i

and the conjugate rules.  Coefficients live in a sympy polynomial ring over
the Gaussian rationals whose variables are the structure constants b_ki, c_ki
(taken real), plus optional extra atoms.  Zero tests are therefore exact.
Numeric structure constants are handled by keeping the atoms symbolic and
evaluating coefficients at arb balls only at the end.

Sign conventions: J acts on a (p, q) term as multiplication by i^(p - q),
d^c = -J^{-1} d J, so that dd^c = -2i del delbar.  Contractions delete a
letter with sign (-1)^position.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
import random
from typing import Iterable, Mapping, Sequence

from flint import acb, arb, fmpq
from sympy.polys.domains import QQ_I
from sympy.polys.rings import PolyElement, ring

from .balls import working_precision


class DGAConsistencyError(AssertionError):
    """A closed formula disagreed with the symbolic expansion."""


def _sort_word(word: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sort a wedge word; return (sign, sorted word) or (0, ()) if a letter repeats."""
    w = list(word)
    sign = 1
    for i in range(1, len(w)):
        j = i
        while j > 0 and w[j - 1] > w[j]:
            w[j - 1], w[j] = w[j], w[j - 1]
            sign = -sign
            j -= 1
        if j > 0 and w[j - 1] == w[j]:
            return 0, ()
    for a, b in zip(w, w[1:]):
        if a == b:
            return 0, ()
    return sign, tuple(w)


class FormAlgebra:
    """Exterior algebra on the co-frame of an OT manifold of type (s, t)."""

    def __init__(self, s: int, t: int, extra_atoms: Sequence[str] = ()):
        if s < 1 or t < 1:
            raise ValueError("need s >= 1 and t >= 1")
        self.s, self.t = s, t
        self.n = s + t
        self.b_names = [[f"b{k + 1}_{i + 1}" for i in range(t)] for k in range(s)]
        self.c_names = [[f"c{k + 1}_{i + 1}" for i in range(t)] for k in range(s)]
        names = [x for row in self.b_names for x in row] + [x for row in self.c_names for x in row]
        names += list(extra_atoms)
        self.ring, *gens = ring(names, QQ_I)
        self.atoms = dict(zip(names, gens))
        self.I = self.ring(QQ_I(0, 1))
        self.one = self.ring(1)
        self.zero = self.ring(0)

    # -- generators --

    def w(self, k: int) -> int:
        return k

    def g(self, i: int) -> int:
        return self.s + i

    def bar(self, idx: int) -> int:
        return idx + self.n if idx < self.n else idx - self.n

    def name(self, idx: int) -> str:
        base = idx if idx < self.n else idx - self.n
        label = f"w{base + 1}" if base < self.s else f"g{base - self.s + 1}"
        return label if idx < self.n else "c" + label

    def bidegree(self, word: Sequence[int]) -> tuple[int, int]:
        p = sum(1 for x in word if x < self.n)
        return p, len(word) - p

    def coerce(self, c) -> PolyElement:
        if isinstance(c, PolyElement):
            return c
        if isinstance(c, complex):
            return self.ring(QQ_I(Fraction(c.real), Fraction(c.imag)))
        if isinstance(c, tuple) and len(c) == 2:
            return self.ring(QQ_I(Fraction(c[0]), Fraction(c[1])))
        if isinstance(c, str):
            return self.atoms[c]
        if isinstance(c, Fraction):
            return self.ring(QQ_I(c, 0))
        return self.ring(c)

    def conj_coeff(self, c: PolyElement) -> PolyElement:
        return self.ring({m: QQ_I(v.x, -v.y) for m, v in c.items()})

    # -- form construction --

    def form(self, terms: Mapping | Iterable = ()) -> InvariantForm:
        acc: dict = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for word, c in items:
            sign, w = _sort_word(word)
            if sign == 0:
                continue
            c = self.coerce(c)
            acc[w] = acc.get(w, self.zero) + (c if sign > 0 else -c)
        return InvariantForm(self, {w: c for w, c in acc.items() if c})

    def word(self, *letters: int, coeff=1) -> InvariantForm:
        return self.form([(letters, coeff)])

    def scalar(self, c) -> InvariantForm:
        return self.form([((), c)])

    def random_form(self, rng: random.Random, degree: int | None = None, terms: int = 4,
                    height: int = 3) -> InvariantForm:
        out = []
        for _ in range(terms):
            k = degree if degree is not None else rng.randint(0, 2 * self.n)
            word = tuple(rng.sample(range(2 * self.n), k))
            c = (Fraction(rng.randint(-height, height), rng.randint(1, height)),
                 Fraction(rng.randint(-height, height), rng.randint(1, height)))
            out.append((word, c))
        return self.form(out)


@dataclass
class StructureConstants:
    """B and C as coefficient-ring elements, with optional numeric values for atoms."""

    algebra: FormAlgebra
    B: list[list[PolyElement]]
    C: list[list[PolyElement]]
    assignment: dict | None = None

    @property
    def s(self) -> int:
        return self.algebra.s

    @property
    def t(self) -> int:
        return self.algebra.t

    @cached_property
    def _dgen(self) -> dict:
        alg = self.algebra
        I = alg.I
        rules = {}
        for k in range(alg.s):
            rules[alg.w(k)] = alg.form([((alg.w(k), alg.bar(alg.w(k))), I / 2)])
        for i in range(alg.t):
            gi = alg.g(i)
            terms = []
            for k in range(alg.s):
                b, c = self.B[k][i], self.C[k][i]
                terms.append(((alg.w(k), gi), I * b / 4 - c / 2))
                terms.append(((alg.bar(alg.w(k)), gi), -I * b / 4 + c / 2))
            rules[gi] = alg.form(terms)
        for idx in list(rules):
            rules[alg.bar(idx)] = rules[idx].conj()
        return rules

    def d_generator(self, idx: int) -> InvariantForm:
        return self._dgen[idx]

    def row_sums(self) -> list[PolyElement]:
        return [sum(row, self.algebra.zero) for row in self.B]

    def evaluate(self, c: PolyElement, prec: int = 256) -> acb:
        """Evaluate a coefficient at the numeric assignment (arb balls)."""
        if self.assignment is None:
            raise ValueError("structure constants carry no numeric assignment")
        return evaluate_coefficient(self.algebra, c, self.assignment, prec)


def evaluate_coefficient(alg: FormAlgebra, c: PolyElement, assignment: Mapping, prec: int = 256) -> acb:
    names = [str(g) for g in alg.ring.gens]
    with working_precision(prec):
        total = acb(0)
        for mono, v in c.items():
            term = acb(arb(fmpq(v.x.numerator, v.x.denominator)), arb(fmpq(v.y.numerator, v.y.denominator)))
            for name, e in zip(names, mono):
                if e:
                    term *= acb(assignment[name]) ** e
            total += term
    return total


def symbolic_structure(s: int, t: int, row_sums: bool = True,
                       extra_atoms: Sequence[str] = ()) -> StructureConstants:
    """Generic B, C atoms; with row_sums, b_{k,t} is eliminated via sum_i b_ki = -1."""
    alg = FormAlgebra(s, t, extra_atoms)
    B = [[alg.atoms[alg.b_names[k][i]] for i in range(t)] for k in range(s)]
    C = [[alg.atoms[alg.c_names[k][i]] for i in range(t)] for k in range(s)]
    if row_sums:
        for k in range(s):
            B[k][t - 1] = -alg.one - sum(B[k][:t - 1], alg.zero)
    return StructureConstants(alg, B, C)


def rational_structure(B: Sequence[Sequence], C: Sequence[Sequence] | None = None,
                       extra_atoms: Sequence[str] = ()) -> StructureConstants:
    s, t = len(B), len(B[0])
    alg = FormAlgebra(s, t, extra_atoms)
    C = C if C is not None else [[0] * t for _ in range(s)]
    return StructureConstants(
        alg,
        [[alg.coerce(Fraction(x)) for x in row] for row in B],
        [[alg.coerce(Fraction(x)) for x in row] for row in C],
    )


def numeric_structure(B: Sequence[Sequence[arb]], C: Sequence[Sequence[arb]],
                      row_sums: bool = True) -> StructureConstants:
    """Symbolic atoms with an arb assignment taken from a computed manifold.

    With row_sums, the last column of B is eliminated symbolically (the
    row-sum identity is certified upstream), so identities that rely on it
    hold exactly rather than up to ball width.
    """
    s, t = len(B), len(B[0])
    sc = symbolic_structure(s, t, row_sums=row_sums)
    alg = sc.algebra
    assignment = {}
    for k in range(s):
        for i in range(t):
            assignment[alg.b_names[k][i]] = B[k][i]
            assignment[alg.c_names[k][i]] = C[k][i]
    sc.assignment = assignment
    return sc


class InvariantForm:
    """Immutable sparse element of the exterior algebra."""

    __slots__ = ("algebra", "terms")

    def __init__(self, algebra: FormAlgebra, terms: dict):
        self.algebra = algebra
        self.terms = terms

    def __repr__(self) -> str:
        return f"InvariantForm({self.render()})"

    def __eq__(self, other) -> bool:
        if isinstance(other, int) and other == 0:
            return not self.terms
        return isinstance(other, InvariantForm) and self.terms == other.terms

    def __hash__(self):
        return hash(tuple(sorted(self.terms)))

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: InvariantForm) -> InvariantForm:
        acc = dict(self.terms)
        zero = self.algebra.zero
        for w, c in other.terms.items():
            v = acc.get(w, zero) + c
            if v:
                acc[w] = v
            else:
                acc.pop(w, None)
        return InvariantForm(self.algebra, acc)

    def __neg__(self) -> InvariantForm:
        return InvariantForm(self.algebra, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other: InvariantForm) -> InvariantForm:
        return self + (-other)

    def scale(self, c) -> InvariantForm:
        c = self.algebra.coerce(c)
        out = {}
        for w, v in self.terms.items():
            p = v * c
            if p:
                out[w] = p
        return InvariantForm(self.algebra, out)

    def wedge(self, other: InvariantForm) -> InvariantForm:
        acc: dict = {}
        zero = self.algebra.zero
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                sign, w = _sort_word(w1 + w2)
                if sign == 0:
                    continue
                p = c1 * c2
                acc[w] = acc.get(w, zero) + (p if sign > 0 else -p)
        return InvariantForm(self.algebra, {w: c for w, c in acc.items() if c})

    __xor__ = wedge

    def degree_set(self) -> set[int]:
        return {len(w) for w in self.terms}

    def coefficient(self, word: Sequence[int]):
        sign, w = _sort_word(word)
        if sign == 0:
            return self.algebra.zero
        c = self.terms.get(w, self.algebra.zero)
        return c if sign > 0 else -c

    def conj(self) -> InvariantForm:
        alg = self.algebra
        return alg.form([(tuple(alg.bar(x) for x in w), alg.conj_coeff(c)) for w, c in self.terms.items()])

    def d(self, sc: StructureConstants) -> InvariantForm:
        acc: dict = {}
        zero = self.algebra.zero
        for word, c in self.terms.items():
            for j, letter in enumerate(word):
                prefix_sign = -1 if j % 2 else 1
                for pair, dc in sc.d_generator(letter).terms.items():
                    sign, w = _sort_word(word[:j] + pair + word[j + 1:])
                    if sign == 0:
                        continue
                    p = c * dc
                    acc[w] = acc.get(w, zero) + (p if sign * prefix_sign > 0 else -p)
        return InvariantForm(self.algebra, {w: v for w, v in acc.items() if v})

    def project(self, p: int, q: int) -> InvariantForm:
        alg = self.algebra
        return InvariantForm(alg, {w: c for w, c in self.terms.items() if alg.bidegree(w) == (p, q)})

    def _bidegree_map(self, fn) -> InvariantForm:
        alg = self.algebra
        out = {}
        for w, c in self.terms.items():
            p, q = alg.bidegree(w)
            out[w] = c * fn(p, q)
        return InvariantForm(alg, out)

    def J(self) -> InvariantForm:
        I = self.algebra.I
        return self._bidegree_map(lambda p, q: I ** ((p - q) % 4))

    def J_inv(self) -> InvariantForm:
        I = self.algebra.I
        return self._bidegree_map(lambda p, q: I ** ((q - p) % 4))

    def dc(self, sc: StructureConstants) -> InvariantForm:
        """d^c = -J^{-1} d J."""
        return -(self.J().d(sc).J_inv())

    def _split_d(self, sc: StructureConstants, holo: bool) -> InvariantForm:
        alg = self.algebra
        out = alg.form([])
        for w, c in self.terms.items():
            p, q = alg.bidegree(w)
            target = (p + 1, q) if holo else (p, q + 1)
            out = out + InvariantForm(alg, {w: c}).d(sc).project(*target)
        return out

    def partial(self, sc: StructureConstants) -> InvariantForm:
        return self._split_d(sc, True)

    def partial_bar(self, sc: StructureConstants) -> InvariantForm:
        return self._split_d(sc, False)

    def interior(self, letter: int) -> InvariantForm:
        """Contraction with the dual frame vector of `letter`."""
        out = {}
        for w, c in self.terms.items():
            if letter in w:
                j = w.index(letter)
                nw = w[:j] + w[j + 1:]
                out[nw] = c if j % 2 == 0 else -c
        return InvariantForm(self.algebra, out)

    def evaluate(self, sc: StructureConstants, prec: int = 256) -> dict:
        return {w: sc.evaluate(c, prec) for w, c in self.terms.items()}

    def render(self) -> str:
        if not self.terms:
            return "0"
        alg = self.algebra
        parts = []
        for w in sorted(self.terms, key=lambda w: (len(w), w)):
            coef = _render_coeff(self.terms[w])
            body = "^".join(alg.name(x) for x in w) if w else "1"
            parts.append(f"({coef}) {body}")
        return " + ".join(parts)


def _render_coeff(c: PolyElement) -> str:
    text = str(c.as_expr()).replace("I", "i").replace("**", "^")
    return text.replace(" ", "")


# ---------- metric witnesses ----------

def hermitian_two_form(alg: FormAlgebra, a: Sequence[Sequence]) -> InvariantForm:
    """Omega = sum_{i,j} a_{i jbar} i alpha_i ^ conj(alpha_j)."""
    n = alg.n
    terms = []
    for i in range(n):
        for j in range(n):
            c = alg.coerce(a[i][j])
            if c:
                terms.append(((i, alg.bar(j)), c * alg.I))
    return alg.form(terms)


def interleaved_monomial(alg: FormAlgebra, drop_holo: int | None, drop_anti: int | None) -> tuple[int, ...]:
    """alpha_1 ^ cbar alpha_1 ^ ... ^ alpha_n ^ cbar alpha_n with letters removed."""
    word = []
    for k in range(alg.n):
        if k != drop_holo:
            word.append(k)
        if k != drop_anti:
            word.append(alg.bar(k))
    return tuple(word)


@dataclass
class PluriclosedObstruction:
    expansion: list[list]   # [i][k]: coefficient of w_k ^ cw_k in i_{g_i} i_{cg_i} d J d Omega
    formula: list[list]
    contracted: list[InvariantForm]

    @property
    def agree(self) -> bool:
        return self.expansion == self.formula

    def vanishes(self) -> bool:
        return all(not c for row in self.expansion for c in row)


def obstruction_formula(sc: StructureConstants, a_diag) -> list[list]:
    """-(a_{s+i, s+i} / 2) b_ki (b_ki + 1), indexed [i][k]."""
    alg = sc.algebra
    out = []
    for i in range(sc.t):
        a = alg.coerce(a_diag[i])
        out.append([-(a / 2) * sc.B[k][i] * (sc.B[k][i] + 1) for k in range(sc.s)])
    return out


def pluriclosed_obstruction(sc: StructureConstants, a: Sequence[Sequence]) -> PluriclosedObstruction:
    """Contract dJd(Omega) against g_i, cg_i and read off the w_k ^ cw_k coefficients.

    The same numbers are produced by the closed formula; disagreement raises.
    """
    alg = sc.algebra
    omega = hermitian_two_form(alg, a)
    ddc = omega.d(sc).J().d(sc)
    expansion, contracted = [], []
    for i in range(sc.t):
        gi = alg.g(i)
        y = ddc.interior(alg.bar(gi)).interior(gi)
        contracted.append(y)
        expansion.append([y.coefficient((alg.w(k), alg.bar(alg.w(k)))) for k in range(sc.s)])
    formula = obstruction_formula(sc, [a[sc.s + i][sc.s + i] for i in range(sc.t)])
    result = PluriclosedObstruction(expansion, formula, contracted)
    if not result.agree:
        raise DGAConsistencyError("closed obstruction formula disagrees with the expansion")
    return result


@dataclass
class BalancedObstruction:
    m: list      # coefficient of m_k (alpha_k removed), k < s
    m_bar: list  # coefficient of m_kbar (conj alpha_k removed)
    d_omega: InvariantForm

    def nonvanishing(self, sc: StructureConstants | None = None) -> bool:
        if sc is not None and sc.assignment is not None:
            from .balls import excludes_zero
            return all(excludes_zero(sc.evaluate(c)) for c in self.m)
        return all(bool(c) for c in self.m)


def _m_coefficient(alg: FormAlgebra, form: InvariantForm, word: tuple[int, ...]):
    # m_k carries the prefactor i^(n-1)
    return form.coefficient(word) * alg.I ** ((1 - alg.n) % 4)


def balanced_form(alg: FormAlgebra, a: Sequence[Sequence]) -> InvariantForm:
    """Omega_0 = i^(n-1) sum a_{i jbar} m_{i jbar}."""
    pref = alg.I ** ((alg.n - 1) % 4)
    terms = []
    for i in range(alg.n):
        for j in range(alg.n):
            c = alg.coerce(a[i][j])
            if c:
                terms.append((interleaved_monomial(alg, i, j), c * pref))
    return alg.form(terms)


def balanced_obstruction(sc: StructureConstants, a: Sequence[Sequence]) -> BalancedObstruction:
    """Coefficients of m_k, m_kbar (k <= s) in d Omega_0.

    The structure equations give m_k coefficient -(i/2) a_{k kbar} sum_i b_ki,
    which is +(i/2) a_{k kbar} once the row sums equal -1.  Any other value
    raises.
    """
    alg = sc.algebra
    omega0 = balanced_form(alg, a)
    d0 = omega0.d(sc)
    m, m_bar = [], []
    for k in range(sc.s):
        m.append(_m_coefficient(alg, d0, interleaved_monomial(alg, k, None)))
        m_bar.append(_m_coefficient(alg, d0, interleaved_monomial(alg, None, k)))
    row_sums = sc.row_sums()
    for k in range(sc.s):
        expected = -alg.I / 2 * alg.coerce(a[k][k]) * row_sums[k]
        if m[k] != expected or m_bar[k] != -expected:
            raise DGAConsistencyError(f"m_{k + 1} coefficient {m[k]} differs from (i/2) a_kk")
    return BalancedObstruction(m, m_bar, d0)


def lcb_form(alg: FormAlgebra) -> InvariantForm:
    """i^(n-1) sum_i m_{i ibar}."""
    n = alg.n
    eye = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    return balanced_form(alg, eye)


def lee_form(alg: FormAlgebra, coefficient=None) -> InvariantForm:
    """theta_0 = sum_k lam (w_k - cw_k); lam defaults to 1/(2i)."""
    lam = alg.coerce(coefficient) if coefficient is not None else -alg.I / 2
    terms = []
    for k in range(alg.s):
        terms.append(((alg.w(k),), lam))
        terms.append(((alg.bar(alg.w(k)),), -lam))
    return alg.form(terms)


@dataclass
class LcbCheck:
    residual: InvariantForm
    d_theta: InvariantForm
    ok: bool

    def offending_terms(self) -> str:
        return self.residual.render()


def verify_lcb(sc: StructureConstants, lee_coefficient=None, prec: int = 256) -> LcbCheck:
    """Check d Omega_0 = theta_0 ^ Omega_0 and d theta_0 = 0.

    Symbolic structure constants must give an exactly vanishing residual;
    numeric ones (with an arb assignment) must give residual balls that
    contain zero.
    """
    alg = sc.algebra
    omega0 = lcb_form(alg)
    theta = lee_form(alg, lee_coefficient)
    residual = omega0.d(sc) - theta.wedge(omega0)
    dtheta = theta.d(sc)
    if sc.assignment is None:
        ok = residual.is_zero() and dtheta.is_zero()
    else:
        ok = all(sc.evaluate(c, prec).real.contains(0) and sc.evaluate(c, prec).imag.contains(0)
                 for c in list(residual.terms.values()) + list(dtheta.terms.values()))
    return LcbCheck(residual, dtheta, ok)


def pluriclosed_metric_form(alg: FormAlgebra) -> InvariantForm:
    """sum_k i w_k ^ cw_k + i g_k ^ cg_k (the pluriclosed metric in the frame)."""
    n = alg.n
    eye = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    return hermitian_two_form(alg, eye)
