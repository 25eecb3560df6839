"""Relation counts, the third Betti number and Dolbeault dimensions.

All counts are built from certified relations prod sigma_i(u)^{e_i} = 1,
so an undecidable membership aborts instead of skewing a count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

from .embeddings import indicator
from .otstruct import OTData, relation


class CohomologyConsistencyError(AssertionError):
    pass


@dataclass
class CohomologyTable:
    b3: int
    rho2: int
    rho3: int
    hodge: dict[tuple[int, int], int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "b3": self.b3,
            "rho2": self.rho2,
            "rho3": self.rho3,
            "hodge": {f"h{p},{q}": v for (p, q), v in sorted(self.hodge.items())},
        }


def relation_subsets(data: OTData, k: int) -> list[tuple[int, ...]]:
    """Unordered k-subsets S of {1..s+2t} with prod_{i in S} sigma_i(u) = 1 on U."""
    return [S for S in combinations(range(1, data.n + 1), k)
            if relation(data, indicator(data.n, S)).verified]


def count_rho(data: OTData, k: int) -> int:
    if k not in (2, 3):
        raise ValueError("k must be 2 or 3")
    return len(relation_subsets(data, k))


def betti3(data: OTData) -> int:
    s = data.s
    return comb(s, 3) + s * count_rho(data, 2) + count_rho(data, 3)


def _dolbeault_count(data: OTData, p: int, j: int) -> int:
    s, t = data.s, data.t
    total = 0
    for I in combinations(range(1, s + t + 1), p):
        for J in combinations(range(1, t + 1), j):
            idx = list(I) + [s + t + x for x in J]
            if relation(data, indicator(data.n, idx)).verified:
                total += 1
    return total


def dolbeault_dim(data: OTData, p: int, q: int) -> int:
    """sum_{i+j=q} C(s, i) #{(I, J): |I| = p, |J| = j, sigma_I sigma_Jbar = 1}.

    I ranges over subsets of {1..s+t}, J over subsets of {1..t}, and Jbar
    uses the conjugate indices s+t+j.
    """
    s, t = data.s, data.t
    if not (0 <= p <= s + t and 0 <= q <= s + t):
        raise ValueError(f"(p, q) = ({p}, {q}) outside 0..{s + t}")
    total = 0
    for i in range(0, q + 1):
        j = q - i
        if i > s or j > t:
            continue
        total += comb(s, i) * _dolbeault_count(data, p, j)
    return total


def default_hodge_pairs(data: OTData) -> list[tuple[int, int]]:
    m = data.s + data.t
    pairs = {(p, q) for p in range(m + 1) for q in range(m + 1) if p + q <= 3}
    if m >= 2:
        pairs.add((2, 1))
    return sorted(pairs)


def cohomology_table(data: OTData, hodge_pairs: Iterable[Sequence[int]] | None = None) -> CohomologyTable:
    rho2, rho3 = count_rho(data, 2), count_rho(data, 3)
    b3 = comb(data.s, 3) + data.s * rho2 + rho3
    pairs = default_hodge_pairs(data) if hodge_pairs is None else [tuple(x) for x in hodge_pairs]
    hodge = {(p, q): dolbeault_dim(data, p, q) for p, q in pairs}
    if (0, 0) in hodge and hodge[(0, 0)] != 1:
        raise CohomologyConsistencyError(f"h0,0 = {hodge[(0, 0)]}")
    return CohomologyTable(b3, rho2, rho3, hodge)


def check_pluriclosed_consequences(data: OTData, table: CohomologyTable | None = None) -> None:
    """For a pluriclosed manifold: rho2 = 0, rho3 = s and h2,1 = s."""
    table = table or cohomology_table(data, [(2, 1)])
    h21 = table.hodge.get((2, 1))
    if h21 is None:
        h21 = dolbeault_dim(data, 2, 1)
    problems = []
    if table.rho2 != 0:
        problems.append(f"rho2 = {table.rho2}")
    if table.rho3 != data.s:
        problems.append(f"rho3 = {table.rho3} != s")
    if h21 != data.s:
        problems.append(f"h2,1 = {h21} != s")
    if problems:
        raise CohomologyConsistencyError("pluriclosed manifold with " + ", ".join(problems))
