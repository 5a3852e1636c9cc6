"""Command-line entry point: ``artifact report | verify | words``.

Exit codes: 0 when everything checked passes, 1 on a verification failure
(or a distinguished word pair), 2 on malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Any, Sequence

from . import intmat as im
from .ci_lattice import (
    SCOPE_NOTE,
    CompleteIntersection,
    LatticeInvariantError,
    build_lattice,
    fano_family,
    hypersurface_rotation_check,
    residual_sublattice,
    verify_identities,
)
from .dimension_calculus import EmptyResidual, dimension_report
from .euler_ring import AmbientSpace
from .functor_words import (
    DistinguishedBy,
    Equal,
    EqualInAllModels,
    WordError,
    equal_words,
    evaluate,
    normalize,
    parse_word,
)
from .quadric_spinor import ExponentNotIntegral, verify_quadric_divisor_identity, verify_refined_identity
from .word_models import STANDARD_SPECS, model_from_spec

REPORT_SCHEMA = "artifact.report/1"
VERIFY_SCHEMA = "artifact.verify/1"
WORDS_SCHEMA = "artifact.words/1"

# Static reference data; nothing here is computed by the package.
CATALOG = (
    ("Gr(k, m)", "zero when gcd(k, m) = 1; expected completely orthogonal exceptional otherwise"),
    ("P^(m-1) x P^(m-1), S_2-invariant", "zero for m odd; 2m completely orthogonal exceptional objects for m even"),
    ("(P^1)^k, S_k-invariant", "zero for k odd; completely orthogonal exceptional for k even"),
    ("(P^(m-1))^3, S_3-invariant", "zero when gcd(3, m) = 1; completely orthogonal exceptional for m = 3"),
    ("IGr(3, 8)", "completely orthogonal exceptional collection"),
    ("E6/P1", "completely orthogonal exceptional collection"),
    ("IGr(2, 2k)", "representations of the A_(k-1) quiver"),
    ("Fl(1, 2k-1; 2k)", "representations of the A_(2k-1) quiver"),
    ("F4/P4", "representations of the A_2 quiver"),
    ("odd-dimensional quadric", "two completely orthogonal exceptional objects (spinor bundles)"),
    ("OGr(2, 2k)", "representations of the D_k quiver"),
)


class InputError(ValueError):
    pass


def _json_default(obj: Any) -> Any:
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _rat(x) -> str | None:
    return None if x is None else str(Fraction(x))


def dump(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, default=_json_default, ensure_ascii=False)


def _ints(text: str, what: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"{what} must be a comma-separated list of integers, got {text!r}") from None


# ---------------------------------------------------------------------------
# report


def entry_from_dict(raw: dict) -> tuple[CompleteIntersection, int | None]:
    if not isinstance(raw, dict):
        raise InputError("each entry must be a JSON object")
    if ("n" in raw) == ("weights" in raw):
        raise InputError("give exactly one of 'n' or 'weights'")
    try:
        space = AmbientSpace.projective(int(raw["n"])) if "n" in raw else AmbientSpace(tuple(raw["weights"]))
        degrees = tuple(int(d) for d in raw.get("degrees", ()))
        X = CompleteIntersection(space, degrees)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    split = raw.get("split")
    if split is not None:
        try:
            X.with_split(int(split))
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    return X, split


def _dimensions(X: CompleteIntersection) -> tuple[dict | None, str | None]:
    if not X.is_straight:
        return None, "Serre dimension formulas are implemented for P^n only"
    try:
        rep = dimension_report(X)
    except EmptyResidual as exc:
        return None, str(exc)
    led = rep.twist_dims
    return {
        "usdim": _rat(rep.usdim),
        "lsdim": _rat(rep.lsdim),
        "frac_cy": _rat(rep.frac_cy),
        "hochschild_level": rep.hl,
        "geometric_possible": rep.geometric.possible,
        "geometric_dim": rep.geometric.required_dim,
        "serre_invariant_possible": rep.serre_invariant_possible,
        "twist_dims": {
            "source": None if led.source is None else [_rat(led.source.upper), _rat(led.source.lower)],
            "target": [_rat(led.target.upper), _rat(led.target.lower)],
        },
    }, None


def _lattice_summary(X: CompleteIntersection) -> dict:
    L = build_lattice(X)
    out = {
        "rank": L.rank,
        "gram_det": im.det(L.gram) if L.rank else 1,
        "alpha_det": im.det(L.alpha) if L.rank else 1,
        "dim": X.dim,
        "index": X.index,
    }
    if X.is_straight and X.k:
        out["residual_rank"] = residual_sublattice(L, X).rank
    return out


def cmd_report(X: CompleteIntersection, split: int | None, max_lattice_n: int) -> dict:
    dims, note = _dimensions(X)
    entry: dict = {
        "input": {"weights": list(X.space.weights), "degrees": list(X.degrees), "split": split},
        "variety": str(X),
        "dimensions": dims,
        "lattice": _lattice_summary(X),
        "assumptions": {"smoothly_attainable": True, "scope": SCOPE_NOTE},
        "verification": [],
    }
    if note:
        entry["dimensions_note"] = note
    if X.is_straight and X.k and X.n <= max_lattice_n:
        targets = [X.with_split(split)] if split is not None else X.splits()
        for Y in targets:
            entry["verification"].append(verify_identities(Y).to_json())
        if X.k == 1:
            chk = hypersurface_rotation_check(X)
            entry["verification"].append(
                {"subject": str(X), "passed": chk.passed, "checks": [chk.to_json()], "notes": []}
            )
    elif X.is_straight and X.k:
        entry["verification_note"] = f"lattice checks skipped above n = {max_lattice_n}"
    entry["passed"] = all(v["passed"] for v in entry["verification"])
    return entry


def _report_table(entry: dict) -> list[str]:
    lines = [entry["variety"]]
    dims = entry["dimensions"]
    if dims:
        lines.append(
            f"  usdim {dims['usdim']}  lsdim {dims['lsdim']}  frac_cy {dims['frac_cy']}  hl {dims['hochschild_level']}"
        )
        lines.append(
            f"  geometric possible {dims['geometric_possible']}  serre-invariant possible {dims['serre_invariant_possible']}"
        )
        td = dims["twist_dims"]
        lines.append(f"  twist dims source {td['source']}  target {td['target']}")
    else:
        lines.append(f"  {entry.get('dimensions_note', '')}")
    lat = entry["lattice"]
    lines.append("  lattice " + "  ".join(f"{k} {lat[k]}" for k in sorted(lat)))
    for v in entry["verification"]:
        for c in v["checks"]:
            mark = "pass" if c["passed"] else "FAIL"
            lines.append(f"  [{mark}] {v['subject']}: {c['name']}" + (f" ({c['detail']})" if c.get("detail") else ""))
    return lines


def _catalog_payload() -> dict:
    return {
        "schema": "artifact.catalog/1",
        "computed": False,
        "entries": [{"variety": v, "residual": r} for v, r in CATALOG],
    }


def run_report(args) -> int:
    if args.catalog:
        payload = _catalog_payload()
        if args.json:
            print(dump(payload))
        else:
            print("Known homogeneous examples with simple residual categories (static data, not computed):")
            for v, r in CATALOG:
                print(f"  {v}: {r}")
        return 0
    raw_entries = []
    if args.batch:
        with open(args.batch, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if line.strip():
                    try:
                        raw_entries.append(json.loads(line))
                    except json.JSONDecodeError as exc:
                        raise InputError(f"line {lineno}: {exc}") from exc
    else:
        if args.degrees is None or (args.pn is None) == (args.weights is None):
            raise InputError("give --degrees and exactly one of --pn or --weights")
        raw = {"degrees": _ints(args.degrees, "--degrees")}
        if args.pn is not None:
            raw["n"] = args.pn
        else:
            raw["weights"] = _ints(args.weights, "--weights")
        if args.split is not None:
            raw["split"] = args.split
        raw_entries.append(raw)
    parsed = [entry_from_dict(r) for r in raw_entries]
    entries = [cmd_report(X, split, args.max_lattice_n) for X, split in parsed]
    payload = {"schema": REPORT_SCHEMA, "entries": entries, "passed": all(e["passed"] for e in entries)}
    if args.json:
        print(dump(payload))
    else:
        for e in entries:
            print("\n".join(_report_table(e)))
    return 0 if payload["passed"] else 1


# ---------------------------------------------------------------------------
# verify


def _verify_rows(args) -> list[dict]:
    rows = []
    if args.hypersurfaces:
        for n in range(2, args.max_n + 1):
            for d in range(2, n + 1):
                chk = hypersurface_rotation_check(CompleteIntersection.in_pn(n, (d,)))
                rows.append({"subject": f"X({d}) in P^{n}", "passed": chk.passed, "checks": [chk.to_json()]})
    if args.quadric_divisors:
        for n in range(5, args.max_n + 1):
            for d in range(1, n - 1):
                try:
                    rep = verify_quadric_divisor_identity(n, d)
                except ExponentNotIntegral:
                    rows.append({"subject": f"(2,{d}) in P^{n}", "passed": True, "skipped": "exponents not integral"})
                    continue
                rows.append(rep.to_json())
    if args.refined:
        for n in range(5, args.max_n + 1, 2):
            rows.append(verify_refined_identity(n).to_json())
    if args.cis or not (args.hypersurfaces or args.quadric_divisors or args.refined):
        for X in fano_family(args.max_n, args.max_k):
            for Y in X.splits():
                rows.append(verify_identities(Y).to_json())
    return rows


def run_verify(args) -> int:
    if args.max_n < 1 or args.max_k < 1:
        raise InputError("--max-n and --max-k must be positive")
    rows = _verify_rows(args)
    failed = [r for r in rows if not r["passed"]]
    payload = {"schema": VERIFY_SCHEMA, "rows": rows, "total": len(rows), "failed": len(failed)}
    if args.json:
        print(dump(payload))
    else:
        for r in rows:
            names = [c["name"] for c in r.get("checks", ())]
            status = "skip" if "skipped" in r else ("pass" if r["passed"] else "FAIL")
            print(f"[{status}] {r['subject']}" + (f"  ({len(names)} checks)" if names else ""))
        print(f"{len(rows) - len(failed)}/{len(rows)} passed")
        if failed:
            first = next(c for c in failed[0]["checks"] if not c["passed"])
            print(f"first failure: {failed[0]['subject']} {first['name']}: {first['status']}", file=sys.stderr)
            if "witness" in first:
                print(
                    f"  witness {first['witness']} -> {first['lhs_image']} vs {first['rhs_image']}", file=sys.stderr
                )
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# words


def _verdict(v) -> dict:
    if isinstance(v, Equal):
        return {"verdict": "Equal", "normal_form": str(v.word)}
    if isinstance(v, EqualInAllModels):
        return {"verdict": "EqualInAllModels", "models_checked": v.models_checked, "models": list(v.models)}
    return {
        "verdict": "DistinguishedBy",
        "model": v.model,
        "status": v.status,
        "witness": list(v.witness) if v.witness is not None else None,
        "lhs_image": list(v.lhs_image) if v.lhs_image is not None else None,
        "rhs_image": list(v.rhs_image) if v.rhs_image is not None else None,
    }


def run_words(args) -> int:
    specs = args.model or list(STANDARD_SPECS)
    try:
        models = [model_from_spec(s) for s in specs]
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    words = [parse_word(e, args.source, args.target) for e in args.expr]
    out: dict = {"schema": WORDS_SCHEMA, "words": []}
    for w in words:
        item = {"input": w.text(), "type": [w.source, w.target], "normal_form": str(normalize(w))}
        if args.model:
            item["normal_form_in_context"] = {m.name: str(normalize(w, m.context)) for m in models}
        if args.emit_matrix:
            mats = {}
            for m in models:
                op = evaluate(w, m)
                mats[m.name] = {"matrix": [list(r) for r in op.effective], "shape": list(op.shape)}
            item["matrices"] = mats
        out["words"].append(item)
    code = 0
    if len(words) == 2:
        v = equal_words(words[0], words[1], models)
        out["equality"] = _verdict(v)
        code = 1 if isinstance(v, DistinguishedBy) else 0
    if args.json:
        print(dump(out))
    else:
        for item in out["words"]:
            print(f"{item['input']}  :  {item['type'][0]} -> {item['type'][1]}")
            print(f"  normal form: {item['normal_form']}")
            for name, nf in item.get("normal_form_in_context", {}).items():
                print(f"  in {name}: {nf}")
            for name, mat in item.get("matrices", {}).items():
                print(f"  matrix in {name}:")
                for row in mat["matrix"]:
                    print("    " + " ".join(f"{x:>6}" for x in row))
        if "equality" in out:
            eq = out["equality"]
            print("verdict: " + eq["verdict"])
            if eq["verdict"] == "DistinguishedBy":
                print(f"  model {eq['model']} ({eq['status']}): {eq['witness']} -> {eq['lhs_image']} vs {eq['rhs_image']}")
            elif eq["verdict"] == "EqualInAllModels":
                print(f"  models checked: {eq['models_checked']}")
    return code


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="artifact", description="Serre functors of residual categories, numerically.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("report", help="dimensions and lattice checks for one complete intersection or a batch")
    r.add_argument("--pn", type=int, help="ambient P^N")
    r.add_argument("--weights", help="weighted ambient space, e.g. 1,1,2")
    r.add_argument("--degrees", help="comma-separated degrees")
    r.add_argument("--split", type=int, help="index of the equation presenting X as a divisor")
    r.add_argument("--batch", help="JSON lines file, one entry per line")
    r.add_argument("--max-lattice-n", type=int, default=12, help="skip lattice checks above this ambient dimension")
    r.add_argument("--catalog", action="store_true", help="print the static table of homogeneous examples")
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=run_report)

    v = sub.add_parser("verify", help="run the identity battery over a family")
    v.add_argument("--max-n", type=int, default=6)
    v.add_argument("--max-k", type=int, default=2)
    v.add_argument("--cis", action="store_true", help="Fano complete intersections (default)")
    v.add_argument("--hypersurfaces", action="store_true", help="rotation period of hypersurfaces")
    v.add_argument("--quadric-divisors", action="store_true", help="divisors in quadrics with spinors")
    v.add_argument("--refined", action="store_true", help="refined residual of (2, n-2) intersections")
    v.add_argument("--json", action="store_true")
    v.set_defaults(func=run_verify)

    w = sub.add_parser("words", help="normalize functor words and compare them")
    w.add_argument("expr", nargs="+", help="one word, or two to compare")
    w.add_argument("--model", action="append", help="model spec such as P5:3,2/2 or Q5/3 (repeatable)")
    w.add_argument("--source", choices=["C", "D", "R_C", "R_D"])
    w.add_argument("--target", choices=["C", "D", "R_C", "R_D"])
    w.add_argument("--emit-matrix", action="store_true")
    w.add_argument("--json", action="store_true")
    w.set_defaults(func=run_words)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "expr", None) is not None and len(args.expr) > 2:
        print("error: give one or two words", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (InputError, WordError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LatticeInvariantError as exc:
        print(f"verification error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
