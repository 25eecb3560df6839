"""Scan families of monic integer polynomials for OT manifolds with a target metric.

Pipeline per polynomial: irreducibility certificate, signature, low-height
unit candidates, admissible s-subsets, verdict, then a fresh re-analysis at
doubled precision before a hit is emitted.  Iteration order is fixed, so the
output depends only on the spec.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Iterable, Iterator, Sequence

from .balls import InconclusiveError, decimal_string
from .embeddings import EmbeddingSystem, isolate_roots
from .exactnum import FieldElem, NumberField, Poly, elements_of_height, irreducibility_certificate, norm
from .metrics import classify, decide_lck, decide_pluriclosed
from .otstruct import OTPreconditionError, UnitGroup, build_ot_data, check_admissible, check_totally_positive

log = logging.getLogger("otlab.search")

TARGETS = ("pluriclosed", "lcK")


class SearchSpecError(ValueError):
    pass


@dataclass(frozen=True)
class SearchSpec:
    slots: tuple[tuple[int, ...], ...]   # allowed values per coefficient, constant term first
    target: str = "pluriclosed"
    unit_bound: int = 1
    given_units: tuple[tuple[int, ...], ...] | None = None
    precision: int = 256
    max_polynomials: int | None = None
    max_hits: int | None = None
    max_groups: int | None = None
    max_seconds: float | None = None

    @classmethod
    def from_json(cls, obj: dict) -> SearchSpec:
        try:
            raw = obj["family"]["coefficients"]
        except (KeyError, TypeError) as exc:
            raise SearchSpecError("spec needs family.coefficients") from exc
        slots = tuple(_slot_values(x) for x in raw)
        if slots and any(slots) and slots[-1] != (1,):
            raise SearchSpecError("leading coefficient slot must be exactly 1 (monic family)")
        target = obj.get("target", "pluriclosed")
        if target not in TARGETS:
            raise SearchSpecError(f"target must be one of {TARGETS}")
        strategy = obj.get("unit_strategy", {"kind": "low_height_scan", "bound": 1})
        given = None
        bound = 1
        if strategy.get("kind") == "given_list":
            given = tuple(tuple(int(c) for c in u) for u in strategy["units"])
        elif strategy.get("kind") == "low_height_scan":
            bound = int(strategy.get("bound", 1))
            if bound < 1:
                raise SearchSpecError("unit bound must be >= 1")
        else:
            raise SearchSpecError("unit_strategy.kind must be given_list or low_height_scan")
        limits = obj.get("limits", {})
        return cls(slots, target, bound, given, int(obj.get("precision", 256)),
                   limits.get("max_polynomials"), limits.get("max_hits"),
                   limits.get("max_groups"), limits.get("max_seconds"))

    def digest(self) -> str:
        blob = json.dumps(self.__dict__, sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()

    def polynomials(self) -> Iterator[tuple[int, ...]]:
        if not self.slots or any(len(s) == 0 for s in self.slots):
            return
        count = 0
        for coeffs in product(*self.slots):
            if self.max_polynomials is not None and count >= self.max_polynomials:
                return
            count += 1
            yield coeffs


def _slot_values(x) -> tuple[int, ...]:
    if isinstance(x, int):
        return (x,)
    if isinstance(x, list):
        return tuple(int(v) for v in x)
    if isinstance(x, dict):
        return tuple(range(int(x["min"]), int(x["max"]) + 1))
    raise SearchSpecError(f"bad coefficient slot {x!r}")


# ---------- units ----------

@dataclass(frozen=True)
class UnitCandidate:
    elem: FieldElem
    source: FieldElem
    squared: bool


def _rank_key(u: FieldElem) -> tuple:
    c = [int(x) for x in u.coefficients()]
    return (u.rep.degree, sum(abs(x) for x in c), tuple(reversed(c)))


def unit_candidates(field: NumberField, bound: int,
                    system: EmbeddingSystem | None = None) -> list[UnitCandidate]:
    """Totally positive units of height <= bound (squared if needed), deduplicated."""
    if bound < 1:
        raise ValueError("bound must be >= 1")
    system = system or isolate_roots(field)
    one = field.one()
    seen: dict = {}
    for a in elements_of_height(field, bound):
        if a.rep.is_zero() or abs(norm(a)) != 1:
            continue
        squared = not check_totally_positive(system, a)
        u = a * a if squared else a
        if u == one or u.rep.coeffs in seen:
            continue
        seen[u.rep.coeffs] = UnitCandidate(u, a, squared)
    return sorted(seen.values(), key=lambda c: _rank_key(c.elem))


def candidate_units(field: NumberField, bound: int,
                    system: EmbeddingSystem | None = None) -> list[FieldElem]:
    return [c.elem for c in unit_candidates(field, bound, system)]


def assemble_admissible(field: NumberField, candidates: Sequence[FieldElem],
                        system: EmbeddingSystem | None = None,
                        limit: int | None = None) -> Iterator[UnitGroup]:
    """Lazily yield certified admissible s-subsets of the candidates, in order."""
    system = system or isolate_roots(field)
    s = system.s
    tried = 0
    for combo in combinations(candidates, s):
        if limit is not None and tried >= limit:
            return
        tried += 1
        cert = check_admissible(system, combo)
        if cert.admissible:
            yield UnitGroup(tuple(combo), tuple(True for _ in combo))


# ---------- per-polynomial scan ----------

@dataclass
class ScanOutcome:
    polynomial: tuple[int, ...]
    hit: dict | None = None
    reason: str = ""


def _int_rep(u: FieldElem) -> list[int]:
    return [int(c) for c in u.rep.coeffs]


def _target_holds(data, target: str) -> bool:
    return (decide_pluriclosed(data) if target == "pluriclosed" else decide_lck(data)).exists


def _hit_record(coeffs, spec: SearchSpec, group_units, squared, data, report) -> dict:
    plc = report.pluriclosed
    return {
        "polynomial": list(coeffs),
        "signature": [data.s, data.t],
        "target": spec.target,
        "units": [_int_rep(u) for u in group_units],
        "squared": list(squared),
        "precision": spec.precision,
        "reverified_precision": data.precision,
        "B": [[decimal_string(x, 20) for x in row] for row in data.B],
        "verdicts": {v.kind: v.exists for v in report.verdicts()},
        "pluriclosed_witness": plc.witness,
    }


def scan_polynomial(coeffs: Sequence[int], spec: SearchSpec) -> ScanOutcome:
    coeffs = tuple(coeffs)
    f = Poly(coeffs)
    out = ScanOutcome(coeffs)
    if f.degree < 3 or not f.is_monic_integer():
        out.reason = "degree < 3 or not monic"
        return out
    cert = irreducibility_certificate(f)
    if not cert.certified:
        out.reason = f"irreducibility {cert.status}: {cert.reason}"
        return out
    field = NumberField(f)
    try:
        system = isolate_roots(field, spec.precision)
        s, t = system.s, system.t
        if s < 1 or t < 1:
            out.reason = f"signature ({s}, {t}) is not OT"
            return out
        if spec.target == "pluriclosed" and s != t:
            out.reason = f"signature ({s}, {t}) has s != t"
            return out
        if spec.given_units is not None:
            cands = []
            for rep in spec.given_units:
                a = field(list(rep))
                if a.rep.is_zero() or abs(norm(a)) != 1:
                    continue
                sq = not check_totally_positive(system, a)
                cands.append(UnitCandidate(a * a if sq else a, a, sq))
        else:
            cands = unit_candidates(field, spec.unit_bound, system)
        if len(cands) < s:
            out.reason = f"only {len(cands)} totally positive unit candidates for s = {s}"
            return out
        squared_of = {c.elem.rep.coeffs: c.squared for c in cands}
        for group in assemble_admissible(field, [c.elem for c in cands], system, spec.max_groups):
            data = build_ot_data(field, [u.rep.coeffs for u in group.generators],
                                 spec.precision, system)
            if not _target_holds(data, spec.target):
                continue
            # independent re-analysis at doubled precision
            fresh_field = NumberField(Poly(coeffs))
            fresh = build_ot_data(fresh_field, [_int_rep(u) for u in group.generators],
                                  2 * spec.precision)
            report = classify(fresh)
            if not _target_holds(fresh, spec.target):
                raise InconclusiveError("hit did not survive re-verification", 2 * spec.precision)
            squared = [squared_of[u.rep.coeffs] for u in group.generators]
            out.hit = _hit_record(coeffs, spec, group.generators, squared, fresh, report)
            return out
        out.reason = "no admissible unit group achieves the target"
    except (OTPreconditionError, InconclusiveError) as exc:
        out.reason = f"{type(exc).__name__}: {exc}"
    return out


# ---------- driver ----------

@dataclass
class SearchResult:
    hits: list[dict] = field(default_factory=list)
    skipped: list[tuple[list[int], str]] = field(default_factory=list)
    complete: bool = True


def _scan_star(args):
    return scan_polynomial(*args)


def _dump(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def _load_checkpoint(path: str, digest: str) -> dict | None:
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        ck = json.load(fh)
    if ck.get("spec_digest") != digest:
        raise SearchSpecError("checkpoint belongs to a different search spec")
    return ck


def _write_checkpoint(path: str, digest: str, processed: int, lines: int, hits: int) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump({"spec_digest": digest, "processed": processed, "lines": lines, "hits": hits}, fh)
    os.replace(tmp, path)


def run_search(spec: SearchSpec, out_path: str | None = None, checkpoint: str | None = None,
               workers: int = 1, stop_after: int | None = None) -> SearchResult:
    """Run the scan; hits are streamed to out_path as JSON lines.

    With a checkpoint, progress is recorded after every polynomial and an
    existing checkpoint resumes the run, truncating any partially written
    output.  stop_after simulates an interruption after that many polynomials.
    """
    digest = spec.digest()
    polys = list(spec.polynomials())
    start, lines, nhits = 0, 0, 0
    result = SearchResult()
    if checkpoint:
        ck = _load_checkpoint(checkpoint, digest)
        if ck is not None:
            start, lines, nhits = ck["processed"], ck["lines"], ck["hits"]
    fh = None
    if out_path is not None:
        if start and os.path.exists(out_path):
            with open(out_path) as src:
                kept = src.readlines()[:lines]
            for line in kept:
                result.hits.append(json.loads(line))
            fh = open(out_path, "w")
            fh.writelines(kept)
        else:
            fh = open(out_path, "w")
    t0 = time.monotonic()
    todo = polys[start:]
    if stop_after is not None:
        todo = todo[:stop_after]
    try:
        if workers > 1 and len(todo) > 1:
            pool = ProcessPoolExecutor(max_workers=workers)
            outcomes: Iterable[ScanOutcome] = pool.map(_scan_star, [(p, spec) for p in todo])
        else:
            pool = None
            outcomes = (scan_polynomial(p, spec) for p in todo)
        processed = start
        for outcome in outcomes:
            processed += 1
            if outcome.hit is not None:
                result.hits.append(outcome.hit)
                nhits += 1
                if fh is not None:
                    fh.write(_dump(outcome.hit) + "\n")
                    fh.flush()
                    lines += 1
            else:
                log.info("skip %s: %s", list(outcome.polynomial), outcome.reason)
                result.skipped.append((list(outcome.polynomial), outcome.reason))
            if checkpoint:
                _write_checkpoint(checkpoint, digest, processed, lines, nhits)
            if spec.max_hits is not None and nhits >= spec.max_hits:
                break
            if spec.max_seconds is not None and time.monotonic() - t0 > spec.max_seconds:
                log.warning("time cap reached after %d polynomials", processed)
                result.complete = False
                break
        if processed < len(polys) and (spec.max_hits is None or nhits < spec.max_hits):
            result.complete = False
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    finally:
        if fh is not None:
            fh.close()
    return result


def dumps_hits(hits: Sequence[dict]) -> str:
    return "".join(_dump(h) + "\n" for h in hits)
