"""Command line entry point: analyze, verify-paper-example, search."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from fractions import Fraction
from importlib import resources
from typing import Sequence

import jsonschema

from . import __version__
from .balls import InconclusiveError, complex_string, decimal_string, upper
from .cohomology import CohomologyConsistencyError, cohomology_table
from .dga import (
    DGAConsistencyError,
    balanced_obstruction,
    numeric_structure,
    pluriclosed_obstruction,
    symbolic_structure,
    verify_lcb,
)
from .embeddings import isolate_real_roots
from .exactnum import NumberField, Poly, discriminant, irreducibility_certificate, norm, poly_eval_exact
from .metrics import InconsistencyError, classify, classify_dim4
from .otstruct import OTPreconditionError, build_ot_data, row_sum_widths
from .search import SearchSpec, SearchSpecError, candidate_units, dumps_hits, run_search

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_PRECONDITION, EXIT_INCONCLUSIVE, EXIT_INTERNAL = 0, 1, 2, 3, 4, 5
ALL_REQUESTS = ("structure", "metrics", "cohomology", "dga-verify", "dim4")


class CLIError(Exception):
    def __init__(self, kind: str, message: str, code: int):
        super().__init__(message)
        self.kind, self.message, self.code = kind, message, code

    def to_json(self) -> dict:
        return {"error": {"type": self.kind, "message": self.message}, "version": __version__}


def _data_file(name: str) -> str:
    return resources.files("otlab.data").joinpath(name).read_text()


def load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise CLIError("io", f"no such file: {path}", EXIT_USAGE) from exc
    except json.JSONDecodeError as exc:
        raise CLIError("schema", f"invalid JSON in {path}: {exc}", EXIT_USAGE) from exc


def validate_manifest(manifest: dict) -> None:
    schema = json.loads(_data_file("manifest.schema.json"))
    try:
        jsonschema.validate(manifest, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise CLIError("schema", f"{where}: {exc.message}", EXIT_USAGE) from exc


def _precondition(msg: str) -> CLIError:
    return CLIError("precondition", msg, EXIT_PRECONDITION)


# ---------- analyze ----------

def _dga_section(data, verdicts) -> dict:
    s, t = data.s, data.t
    sym = symbolic_structure(s, t)
    alg = sym.algebra
    n = alg.n
    eye = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    d2 = all(alg.word(g).d(sym).d(sym).is_zero() for g in range(2 * n))
    lcb_sym = verify_lcb(sym)
    bal = balanced_obstruction(sym, eye)
    num = numeric_structure(data.B, data.C)
    obs = pluriclosed_obstruction(num, eye)
    values = [[num.evaluate(c, data.precision) for c in row] for row in obs.expansion]
    vanishes = all(v.real.contains(0) and v.imag.contains(0) for row in values for v in row)
    if vanishes != verdicts.pluriclosed.exists and s == t:
        raise InconsistencyError("pluriclosed obstruction disagrees with the arithmetic verdict")
    return {
        "d_squared_zero_on_generators": d2,
        "lcb_identity_symbolic": lcb_sym.ok,
        "lcb_residual": lcb_sym.residual.render(),
        "balanced_m_coefficients": [str(c.as_expr()).replace("I", "i") for c in bal.m],
        "pluriclosed_obstruction": {
            "formula_matches_expansion": obs.agree,
            "coefficients": [[complex_string(v, 20) for v in row] for row in values],
            "vanishes": vanishes,
        },
    }


def analyze_manifest(manifest: dict, precision: int | None = None,
                     assert_irreducible: bool | None = None,
                     hodge: Sequence[Sequence[int]] | None = None,
                     timing: bool = False) -> dict:
    """Full pipeline; raises CLIError for every anticipated failure."""
    validate_manifest(manifest)
    t0 = time.perf_counter()
    prec = precision or manifest.get("precision", 256)
    asserted = manifest.get("assert_irreducible", False) if assert_irreducible is None else assert_irreducible
    requests = manifest.get("requests") or list(ALL_REQUESTS)
    f = Poly(manifest["polynomial"])
    if f.degree < 1 or not f.is_monic_integer():
        raise _precondition("polynomial must be monic with integer coefficients")
    cert = irreducibility_certificate(f)
    if cert.reducible:
        raise CLIError("reducible", f"polynomial is reducible: factor {cert.factor}", EXIT_PRECONDITION)
    if not cert.certified and not asserted:
        raise _precondition("irreducibility not certified; pass --assert-irreducible to proceed")
    field = NumberField(f, asserted_irreducible=not cert.certified)
    try:
        data = build_ot_data(field, manifest["units"], prec, branch=manifest.get("branch"))
    except OTPreconditionError as exc:
        raise _precondition(str(exc)) from exc

    report: dict = {"version": __version__, "input": dict(manifest, precision=prec)}
    report["field"] = {
        "polynomial": [int(c) for c in f.coeffs],
        "degree": f.degree,
        "discriminant": str(discriminant(f)),
        "irreducibility": {"status": "asserted" if not cert.certified else cert.status,
                           "reason": cert.reason, "prime": cert.prime},
    }
    report["signature"] = {"s": data.s, "t": data.t}
    system = data.system
    report["embeddings"] = [
        {"index": i, "kind": "real" if i <= data.s else "complex",
         "value": complex_string(system.root(i, prec), 30)}
        for i in range(1, data.n + 1)
    ]
    report["units"] = [{"rep": [int(c) for c in u.coefficients()], "norm": str(norm(u)),
                        "totally_positive": pos}
                       for u, pos in zip(data.generators, data.units.totally_positive)]
    if "structure" in requests:
        report["structure"] = {
            "admissibility": data.admissibility.to_json(),
            "B": [[decimal_string(x) for x in row] for row in data.B],
            "C": [[decimal_string(x) for x in row] for row in data.C],
            "C_branch": [list(r) for r in data.branch],
            "C_reconstruction_error": decimal_string(data.C_reconstruction, 5),
            "B_row_sum_residuals": [decimal_string(r, 5) for r in data.row_sum_residuals],
            "B_row_sum_widths_below_half_precision": all(
                w < 2 ** -(data.precision // 2) for w in row_sum_widths(data)),
        }
    verdicts = None
    if {"metrics", "dga-verify", "dim4"} & set(requests):
        verdicts = classify(data)
        if "metrics" in requests:
            report["verdicts"] = verdicts.to_json()
    if "cohomology" in requests:
        report["cohomology"] = cohomology_table(data, hodge if hodge is not None
                                                else manifest.get("hodge_pairs")).to_json()
    if "dga-verify" in requests:
        report["dga_verification"] = _dga_section(data, verdicts)
    if "dim4" in requests:
        report["dim4"] = classify_dim4(data) if data.s + data.t == 4 else None
    report["precision_trace"] = {
        "requested": prec,
        "structure": data.precision,
        "admissibility": data.admissibility.precision,
        "max_relation": max((v.precision_used for v in data.relations.values()), default=prec),
        "relations_certified": len(data.relations),
    }
    if timing:
        report["timing"] = {"seconds": round(time.perf_counter() - t0, 3)}
    return report


def run_analysis(manifest: dict, **kw) -> tuple[dict, int]:
    try:
        return analyze_manifest(manifest, **kw), EXIT_OK
    except CLIError as exc:
        return exc.to_json(), exc.code
    except InconclusiveError as exc:
        return CLIError("inconclusive", f"{exc} (precision {exc.precision})", EXIT_INCONCLUSIVE).to_json(), \
            EXIT_INCONCLUSIVE
    except (InconsistencyError, DGAConsistencyError, CohomologyConsistencyError) as exc:
        return CLIError("internal-inconsistency", str(exc), EXIT_INTERNAL).to_json(), EXIT_INTERNAL


def render(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


# ---------- verify-paper-example ----------

def bundled_manifest(name: str) -> dict:
    return json.loads(_data_file(name))


def reference_example_checks(precision: int = 256, manifest: dict | None = None) -> list[tuple[str, str, str]]:
    """Run the bundled examples; each check is (name, status, detail).

    status is "pass", "fail" or "inconclusive".
    """
    checks: list[tuple[str, str, str]] = []

    def check(name, ok, detail=""):
        checks.append((name, "pass" if ok else "fail", str(detail)))

    sextic = manifest or bundled_manifest("sextic_example.json")
    f = Poly(sextic["polynomial"])
    check("sextic: f(1) = 1", poly_eval_exact(f, 1) == 1, poly_eval_exact(f, 1))
    check("sextic: f(0) = 1", poly_eval_exact(f, 0) == 1, poly_eval_exact(f, 0))
    roots = isolate_real_roots(f)
    check("sextic: real roots isolated in (1/2, 1)",
          len(roots) == 2 and all(lo >= 0.5 and hi <= 1 for lo, hi in roots), roots)
    report, code = run_analysis(dict(sextic, requests=list(ALL_REQUESTS)), precision=precision)
    if code == EXIT_INCONCLUSIVE:
        checks.append(("sextic: analysis", "inconclusive", report["error"]["message"]))
        return checks + _inoue_checks(precision)
    if code != EXIT_OK:
        check("sextic: analysis completes (admissible unit group of full rank)", False,
              report["error"]["message"])
        return checks + _inoue_checks(precision)
    field = NumberField(f)
    a = field.gen
    check("sextic: N(a) = 1", norm(a) == 1, norm(a))
    check("sextic: N(1 - a) = 1", norm(1 - a) == 1, norm(1 - a))
    sig = report["signature"]
    check("sextic: signature (2, 2)", (sig["s"], sig["t"]) == (2, 2), sig)
    check("sextic: admissible", report["structure"]["admissibility"]["admissible"])
    v = {x["kind"]: x for x in report["verdicts"]}
    perm = (v["pluriclosed"]["witness"] or {}).get("permutation")
    check("sextic: pluriclosed with permutation witness",
          v["pluriclosed"]["exists"] and perm is not None and sorted(perm) == [1, 2], perm)
    check("sextic: not lcK", not v["lcK"]["exists"])
    check("sextic: not balanced", not v["balanced"]["exists"])
    check("sextic: lcb", v["lcb"]["exists"])
    coh = report["cohomology"]
    check("sextic: rho2 = 0", coh["rho2"] == 0, coh["rho2"])
    check("sextic: b3 = 2", coh["b3"] == 2, coh["b3"])
    check("sextic: h2,1 = 2", coh["hodge"].get("h2,1") == 2, coh["hodge"].get("h2,1"))
    dim4 = report["dim4"]
    check("sextic: dimension-4 equivalence", dim4 == {"pluriclosed": True, "b3": 2, "h21": 2,
                                                      "equivalent": True}, dim4)
    cands = candidate_units(field, 1)
    check("sextic: height-1 unit scan contains a and 1 - a", a in cands and (1 - a) in cands)
    return checks + _inoue_checks(precision)


def _inoue_checks(precision: int) -> list[tuple[str, str, str]]:
    checks = []

    def check(name, ok, detail=""):
        checks.append((name, "pass" if ok else "fail", str(detail)))

    manifest = bundled_manifest("inoue_cubic.json")
    report, code = run_analysis(manifest, precision=precision)
    if code != EXIT_OK:
        status = "inconclusive" if code == EXIT_INCONCLUSIVE else "fail"
        return [("cubic: analysis", status, report["error"]["message"])]
    sig = report["signature"]
    check("cubic: signature (1, 1)", (sig["s"], sig["t"]) == (1, 1), sig)
    field = NumberField(Poly(manifest["polynomial"]))
    data = build_ot_data(field, manifest["units"], precision)
    b = data.B[0][0]
    if upper(abs(b + 1)) < Fraction(1, 2 ** 200):
        check("cubic: B = [[-1]] within 2^-200", True)
    elif b.contains(-1):
        checks.append(("cubic: B = [[-1]] within 2^-200", "inconclusive",
                       f"ball width exceeds the tolerance at {precision} bits"))
    else:
        check("cubic: B = [[-1]] within 2^-200", False, report["structure"]["B"])
    v = {x["kind"]: x for x in report["verdicts"]}
    check("cubic: lcK", v["lcK"]["exists"])
    check("cubic: pluriclosed", v["pluriclosed"]["exists"])
    check("cubic: not balanced", not v["balanced"]["exists"])
    check("cubic: b3 = 1", report["cohomology"]["b3"] == 1, report["cohomology"]["b3"])
    check("cubic: surface gate (lcK and pluriclosed with s = t = 1)",
          v["lcK"]["exists"] and v["pluriclosed"]["exists"] and (sig["s"], sig["t"]) == (1, 1))
    return checks


# ---------- argparse ----------

def _parse_hodge(text: str) -> list[list[int]]:
    nums = [int(x) for x in text.replace(";", ",").split(",") if x.strip()]
    if len(nums) % 2:
        raise argparse.ArgumentTypeError("--hodge expects an even number of integers p,q[,p,q...]")
    return [nums[i:i + 2] for i in range(0, len(nums), 2)]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="otlab", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analyze a manifest and print a JSON report")
    a.add_argument("manifest")
    a.add_argument("--precision", type=int)
    a.add_argument("--out")
    a.add_argument("--assert-irreducible", action="store_true", default=None)
    a.add_argument("--hodge", type=_parse_hodge)
    a.add_argument("--timing", action="store_true", help="include wall-clock timing (breaks byte identity)")

    v = sub.add_parser("verify-paper-example", help="check the bundled sextic and cubic examples")
    v.add_argument("--precision", type=int, default=256)
    v.add_argument("--manifest", help="replace the bundled sextic manifest")
    v.add_argument("--out")

    s = sub.add_parser("search", help="scan a polynomial family; hits as JSON lines")
    s.add_argument("spec", nargs="?", help="search spec JSON (default: bundled sextic family)")
    s.add_argument("--out")
    s.add_argument("--resume", metavar="CKPT")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--precision", type=int)
    return p


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_analyze(args) -> int:
    try:
        manifest = load_json(args.manifest)
    except CLIError as exc:
        _emit(render(exc.to_json()), args.out)
        return exc.code
    report, code = run_analysis(manifest, precision=args.precision,
                                assert_irreducible=args.assert_irreducible,
                                hodge=args.hodge, timing=args.timing)
    _emit(render(report), args.out)
    return code


def _cmd_verify(args) -> int:
    manifest = None
    if args.manifest:
        try:
            manifest = load_json(args.manifest)
        except CLIError as exc:
            _emit(render(exc.to_json()), args.out)
            return exc.code
    checks = reference_example_checks(args.precision, manifest)
    lines = [f"[{status.upper():>12}] {name}" + (f"  ({detail})" if detail and status != "pass" else "")
             for name, status, detail in checks]
    npass = sum(1 for _, st, _ in checks if st == "pass")
    lines.append(f"{npass}/{len(checks)} checks passed")
    _emit("\n".join(lines) + "\n", args.out)
    if any(st == "fail" for _, st, _ in checks):
        return EXIT_FAIL
    if any(st == "inconclusive" for _, st, _ in checks):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _cmd_search(args) -> int:
    try:
        raw = load_json(args.spec) if args.spec else json.loads(_data_file("sextic_family_search.json"))
        jsonschema.validate(raw, json.loads(_data_file("search.schema.json")))
        if args.precision:
            raw = dict(raw, precision=args.precision)
        spec = SearchSpec.from_json(raw)
    except CLIError as exc:
        sys.stderr.write(render(exc.to_json()))
        return exc.code
    except (jsonschema.ValidationError, SearchSpecError) as exc:
        msg = exc.message if isinstance(exc, jsonschema.ValidationError) else str(exc)
        sys.stderr.write(render(CLIError("schema", msg, EXIT_USAGE).to_json()))
        return EXIT_USAGE
    if args.resume and not args.out:
        sys.stderr.write(render(CLIError("usage", "--resume needs --out", EXIT_USAGE).to_json()))
        return EXIT_USAGE
    result = run_search(spec, args.out, args.resume, workers=args.workers)
    if not args.out:
        sys.stdout.write(dumps_hits(result.hits))
    sys.stderr.write(f"{len(result.hits)} hit(s), {len(result.skipped)} skipped\n")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handler = {"analyze": _cmd_analyze, "verify-paper-example": _cmd_verify,
               "search": _cmd_search}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
