"""Existence verdicts for lcK, pluriclosed, balanced and lcb metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from flint import arb

from .balls import GUARD_BITS, decimal_string, excludes_zero, upper, working_precision
from .cohomology import betti3, check_pluriclosed_consequences, dolbeault_dim
from .dga import (
    balanced_obstruction,
    numeric_structure,
    obstruction_formula,
    verify_lcb,
)
from .embeddings import RelationVerdict
from .otstruct import OTData, relation

LCK, PLURICLOSED, BALANCED, LCB = "lcK", "pluriclosed", "balanced", "lcb"


class InconsistencyError(AssertionError):
    """Two independent routes to the same fact disagreed."""


class DimensionError(ValueError):
    pass


@dataclass
class MetricVerdict:
    kind: str
    exists: bool
    witness: Any = None
    certification: list[RelationVerdict] = field(default_factory=list)
    note: str = ""

    def to_json(self) -> dict:
        out = {"kind": self.kind, "exists": self.exists,
               "witness": self.witness,
               "certificates": [c.to_json() for c in self.certification]}
        if self.note:
            out["note"] = self.note
        return out


def _pair_vector(data: OTData, i: int, j: int) -> tuple[int, ...]:
    """|sigma_{s+i}|^2 / |sigma_{s+j}|^2 as an exponent vector (1-based i, j)."""
    s, t = data.s, data.t
    e = [0] * data.n
    e[s + i - 1] += 1
    e[s + t + i - 1] += 1
    e[s + j - 1] -= 1
    e[s + t + j - 1] -= 1
    return tuple(e)


def _columns_equal(data: OTData, i: int, j: int) -> bool:
    """False when some pair of B entries in columns i, j is certainly distinct."""
    for k in range(data.s):
        if not data.B[k][i - 1].overlaps(data.B[k][j - 1]):
            return False
    return True


def decide_lck(data: OTData) -> MetricVerdict:
    certs = []
    exists = True
    failures = []
    for i in range(1, data.t + 1):
        for j in range(i + 1, data.t + 1):
            v = relation(data, _pair_vector(data, i, j))
            certs.append(v)
            by_b = _columns_equal(data, i, j)
            if v.verified != by_b:
                raise InconsistencyError(
                    f"lcK pair ({i}, {j}): relation {v.status} but B columns "
                    f"{'overlap' if by_b else 'differ'}")
            if not v.verified:
                exists = False
                failures.append([i, j])
    witness = None if exists else {"unequal_moduli_pairs": failures}
    return MetricVerdict(LCK, exists, witness, certs)


def _screen_distance(x: arb, target: int) -> Fraction:
    return upper(abs(x - target))


def decide_pluriclosed(data: OTData) -> MetricVerdict:
    s, t = data.s, data.t
    if s != t:
        return MetricVerdict(PLURICLOSED, False, None, [], f"s = {s} != t = {t}")
    tol = Fraction(1, 2 ** (data.precision // 4))
    perm = []
    for i in range(t):
        col = [data.B[k][i] for k in range(s)]
        near_m1 = [k for k in range(s) if _screen_distance(col[k], -1) < tol]
        near_0 = [k for k in range(s) if _screen_distance(col[k], 0) < tol]
        if len(near_m1) != 1 or len(near_0) != s - 1:
            return MetricVerdict(PLURICLOSED, False, None, [],
                                 f"column {i + 1} of B is not a negated unit vector")
        perm.append(near_m1[0] + 1)
    if sorted(perm) != list(range(1, s + 1)):
        return MetricVerdict(PLURICLOSED, False, None, [], "column pattern is not a permutation")
    certs = []
    for i, k in enumerate(perm, start=1):
        e = [0] * data.n
        e[k - 1] += 1
        e[s + i - 1] += 1
        e[s + t + i - 1] += 1
        v = relation(data, e)
        certs.append(v)
        if not v.verified:
            return MetricVerdict(PLURICLOSED, False, None, certs,
                                 f"relation for column {i} refuted")
    # B = -P within certified widths
    for k in range(s):
        for i in range(t):
            target = -1 if perm[i] == k + 1 else 0
            if not data.B[k][i].contains(target):
                raise InconsistencyError(f"B[{k + 1}][{i + 1}] excludes {target} after certification")
    return MetricVerdict(PLURICLOSED, True, {"permutation": perm}, certs)


def _acb_text(z) -> dict:
    return {"re": decimal_string(z.real, 20), "im": decimal_string(z.imag, 20)}


def pluriclosed_obstruction_values(data: OTData) -> list[list]:
    """Closed-form obstruction at the manifold's B with a = identity, as balls."""
    sc = numeric_structure(data.B, data.C)
    table = obstruction_formula(sc, [1] * data.t)
    return [[sc.evaluate(c, data.precision) for c in row] for row in table]


def decide_balanced(data: OTData) -> MetricVerdict:
    """Never exists; the witness is the m_k part of d Omega_0 on this manifold."""
    sc = numeric_structure(data.B, data.C)
    n = data.n
    eye = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    obs = balanced_obstruction(sc, eye)
    values = [sc.evaluate(c, data.precision) for c in obs.m]
    if not all(excludes_zero(v) for v in values):
        raise InconsistencyError("balanced obstruction vanished on a positive form")
    witness = {
        "form": "Omega_0 = i^(n-1) sum_i m_{i ibar}",
        "m_coefficients": [_acb_text(v) for v in values],
    }
    return MetricVerdict(BALANCED, False, witness, [])


def lee_form_coefficients(data: OTData) -> list[dict]:
    return [{"generator": f"w{k + 1}", "coefficient": "1/(2i)"} for k in range(data.s)] + \
           [{"generator": f"cw{k + 1}", "coefficient": "-1/(2i)"} for k in range(data.s)]


def lcb_exponents(data: OTData) -> list[list[arb]]:
    """Exponent matrix E = -B: the dz_i ^ dzbar_i coefficient is prod_k (Im w_k)^E[k][i]."""
    with working_precision(data.precision + GUARD_BITS):
        return [[-b for b in row] for row in data.B]


def lcb_metric(data: OTData) -> MetricVerdict:
    sc = numeric_structure(data.B, data.C)
    check = verify_lcb(sc, prec=data.precision)
    if not check.ok:
        raise InconsistencyError("lcb identity failed: " + check.offending_terms())
    witness = {
        "lee_form": lee_form_coefficients(data),
        "coordinate_exponents": [[decimal_string(x, 20) for x in row] for row in lcb_exponents(data)],
        "dga_residual": check.residual.render(),
        "d_lee": check.d_theta.render(),
    }
    return MetricVerdict(LCB, True, witness, [])


@dataclass
class Classification:
    lck: MetricVerdict
    pluriclosed: MetricVerdict
    balanced: MetricVerdict
    lcb: MetricVerdict

    def verdicts(self) -> list[MetricVerdict]:
        return [self.lck, self.pluriclosed, self.balanced, self.lcb]

    def to_json(self) -> list[dict]:
        return [v.to_json() for v in self.verdicts()]


def corollary_gate(s: int, t: int, lck: bool, pluriclosed: bool) -> None:
    """lcK together with pluriclosed only happens on Inoue-Bombieri surfaces."""
    if lck and pluriclosed and (s, t) != (1, 1):
        raise InconsistencyError(f"lcK and pluriclosed on a manifold of type ({s}, {t})")


def classify(data: OTData) -> Classification:
    """All four verdicts plus the surface gate: lcK and pluriclosed forces s = t = 1."""
    out = Classification(decide_lck(data), decide_pluriclosed(data),
                         decide_balanced(data), lcb_metric(data))
    if out.balanced.exists or not out.lcb.exists:
        raise InconsistencyError("balanced/lcb verdicts deviate from their constant values")
    corollary_gate(data.s, data.t, out.lck.exists, out.pluriclosed.exists)
    if out.pluriclosed.exists:
        check_pluriclosed_consequences(data)
        for row in pluriclosed_obstruction_values(data):
            for v in row:
                if excludes_zero(v):
                    raise InconsistencyError("pluriclosed verdict with non-vanishing obstruction")
    return out


def classify_dim4(data: OTData) -> dict:
    if data.s + data.t != 4:
        raise DimensionError(f"complex dimension is {data.s + data.t}, not 4")
    plc = decide_pluriclosed(data).exists
    b3 = betti3(data)
    h21 = dolbeault_dim(data, 2, 1)
    conditions = (plc, b3 == 2, h21 == 2)
    equivalent = len(set(conditions)) == 1
    if not equivalent:
        raise InconsistencyError(f"dimension-4 conditions disagree: {conditions}")
    return {"pluriclosed": plc, "b3": b3, "h21": h21, "equivalent": equivalent}


__all__ = [
    "BALANCED", "LCB", "LCK", "PLURICLOSED",
    "Classification", "DimensionError", "InconsistencyError", "MetricVerdict",
    "classify", "classify_dim4", "corollary_gate", "decide_balanced", "decide_lck",
    "decide_pluriclosed", "lcb_exponents", "lcb_metric", "lee_form_coefficients",
    "pluriclosed_obstruction_values",
]
