"""Command-line front end.

Exit codes: 0 success / check passed, 2 invalid input, 3 check evaluated
and failed, 4 state not normalized where normalization is required.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from .favard import NonFaithfulError, check_favard, extract_recursion, gram_schmidt_monic
from .ncseries import NCSeries, parse_rational
from .ncstates import (
    CumulantFunctional,
    NormalizationError,
    check_conditionally_positive,
    check_positive,
    exp_oplus,
    is_tracial,
    moments_from_cumulants,
    semicircular_system,
)
from .sheffer import MeixnerParams1D, RationalOrthogonalMatrix, free_product_meixner, meixner_check, rotate, sheffer_from_state

SCHEMA_VERSION = 1
DEFAULT_ORDER = 6
MAX_ORDER = 10
MAX_N = 4

EXIT_OK, EXIT_INVALID, EXIT_FAILED, EXIT_NOT_NORMALIZED = 0, 2, 3, 4


class SpecError(ValueError):
    pass


def max_order() -> int:
    env = os.environ.get("NCMEIXNER_MAX_ORDER")
    if env is None:
        return MAX_ORDER
    try:
        return int(env)
    except ValueError:
        raise SpecError("NCMEIXNER_MAX_ORDER must be an integer, got %r" % env) from None


def _rational(x, what):
    try:
        return parse_rational(x)
    except ValueError as exc:
        raise SpecError("%s: %s" % (what, exc)) from None


def _is_normalized(s: NCSeries) -> bool:
    if s.order < 2:
        return False
    n = s.n
    return all(s[(i,)] == 0 for i in range(1, n + 1)) and all(
        s[(i, j)] == int(i == j) for i in range(1, n + 1) for j in range(1, n + 1)
    )


def build_state(spec: dict, order: int | None = None, allow_nonfaithful: bool = False) -> CumulantFunctional:
    """Cumulant functional described by a state specification document."""
    if not isinstance(spec, dict):
        raise SpecError("specification must be a JSON object")
    try:
        n = int(spec["n"])
    except (KeyError, TypeError, ValueError):
        raise SpecError("specification needs an integer 'n'") from None
    if order is None:
        order = int(spec.get("order", DEFAULT_ORDER))
    if n < 1 or order < 1:
        raise SpecError("n and order must be positive")
    cap = max_order()
    if order > cap or n > MAX_N:
        raise SpecError(
            "resource limit: order <= %d and n <= %d (got order=%d, n=%d); "
            "set NCMEIXNER_MAX_ORDER to raise the order cap" % (cap, MAX_N, order, n)
        )
    allow = allow_nonfaithful or bool(spec.get("allow_nonfaithful", False))
    if "state" not in spec:
        raise SpecError("specification needs a 'state' object")
    return _build(spec["state"], n, order, allow)


def _build(state, n, order, allow) -> CumulantFunctional:
    if not isinstance(state, dict) or "type" not in state:
        raise SpecError("state must be an object with a 'type'")
    kind = state["type"]
    if kind == "cumulants":
        vals = {}
        for t in state.get("terms", []):
            w = tuple(int(i) for i in t["word"])
            if not w or len(w) > order or any(not 1 <= i <= n for i in w):
                raise SpecError("bad cumulant word %r" % (list(w),))
            vals[w] = _rational(t["coeff"], "coeff")
        s = NCSeries(n, order, vals)
        return CumulantFunctional(s, _is_normalized(s))
    if kind == "free_product":
        comps = state.get("components", [])
        if len(comps) != n:
            raise SpecError("free_product needs %d components, got %d" % (n, len(comps)))
        params = []
        for k, comp in enumerate(comps):
            b = _rational(comp.get("b", "0"), "component %d b" % k)
            c = _rational(comp.get("c", "0"), "component %d c" % k)
            try:
                params.append(MeixnerParams1D(b, c, faithful=not allow))
            except ValueError as exc:
                raise SpecError("component %d: %s" % (k, exc)) from None
        return free_product_meixner(params, order)
    if kind == "exp_oplus":
        means = [_rational(x, "mean") for x in state.get("means", [])]
        variances = [_rational(x, "variance") for x in state.get("variances", [])]
        if len(means) != n or len(variances) != n:
            raise SpecError("exp_oplus needs %d means and %d variances" % (n, n))
        if any(v < 0 for v in variances):
            raise SpecError("variances must be non-negative")
        if order < 2:
            raise SpecError("exp_oplus needs order >= 2")
        psi = moments_from_cumulants(semicircular_system(means, variances, order - 2))
        return exp_oplus([psi] * n)
    if kind == "rotate":
        inner = state.get("inner")
        if isinstance(inner, dict) and "state" in inner:
            inner = inner["state"]
        base = _build(inner, n, order, allow)
        rows = state.get("matrix")
        if not isinstance(rows, list) or len(rows) != n:
            raise SpecError("rotate needs an %dx%d matrix" % (n, n))
        try:
            mat = RationalOrthogonalMatrix([[_rational(x, "matrix entry") for x in row] for row in rows])
        except ValueError as exc:
            raise SpecError(str(exc)) from None
        if mat.n != n:
            raise SpecError("rotate needs an %dx%d matrix" % (n, n))
        return rotate(base, mat)
    raise SpecError("unknown state type %r" % kind)


# --- output ------------------------------------------------------------------


def _word_str(w):
    return " ".join(str(i) for i in w)


def _csv(rows, header):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(rows)
    return buf.getvalue()


def _render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2) + "\n"
    if "terms" in doc:
        return _csv([(_word_str(t["word"]), t["coeff"]) for t in doc["terms"]], ["word", "coeff"])
    if "polys" in doc:
        rows = [(_word_str(p["index"]), _word_str(t["word"]), t["coeff"]) for p in doc["polys"] for t in p["terms"]]
        return _csv(rows, ["index", "word", "coeff"])
    flat = [(k, json.dumps(v)) for k, v in doc.items() if not isinstance(v, (dict, list))]
    return _csv(flat, ["key", "value"])


def _emit(doc, args):
    out = dict(schema_version=SCHEMA_VERSION)
    out.update(doc)
    text = _render(out, args.format)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)


def _load(args) -> dict:
    try:
        if args.input in (None, "-"):
            return json.load(sys.stdin)
        with open(args.input) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError("cannot read specification: %s" % exc) from None


# --- commands ----------------------------------------------------------------


def cmd_moments(r: CumulantFunctional, args) -> tuple[dict, int]:
    return moments_from_cumulants(r).to_json(), EXIT_OK


def cmd_cumulants(r: CumulantFunctional, args) -> tuple[dict, int]:
    return r.to_json(), EXIT_OK


def cmd_sheffer(r: CumulantFunctional, args) -> tuple[dict, int]:
    degree = r.order - 1 if args.degree is None else args.degree
    if degree < 0 or degree > r.order - 1:
        raise SpecError("degree must be in 0..%d for order %d" % (r.order - 1, r.order))
    fam = sheffer_from_state(r, degree)
    return fam.to_json(), EXIT_OK


def cmd_check(r: CumulantFunctional, args) -> tuple[dict, int]:
    which = args.which
    strict = not args.allow_nonfaithful
    if which == "meixner":
        rep = meixner_check(r, strict=strict)
        doc = {"check": which, "passed": rep.is_free_meixner, "report": rep.to_json()}
        return doc, EXIT_OK if rep.is_free_meixner else EXIT_FAILED
    if which == "tracial":
        res = is_tracial(moments_from_cumulants(r))
        wit = None if res.ok else {"u": list(res.witness[0]), "v": list(res.witness[1])}
        return {"check": which, "passed": res.ok, "witness": wit}, EXIT_OK if res.ok else EXIT_FAILED
    if which == "positive":
        d = r.order // 2 if args.degree is None else args.degree
        _need(2 * d <= r.order, "positive check at degree %d needs order >= %d" % (d, 2 * d))
        rep = check_positive(moments_from_cumulants(r), d)
        passed = rep.is_faithful if strict else rep.is_positive
        return {"check": which, "degree": d, "passed": passed, "report": rep.to_json()}, _code(passed)
    if which == "infdiv":
        d = r.order // 2 if args.degree is None else args.degree
        _need(2 * d <= r.order, "infdiv check at degree %d needs order >= %d" % (d, 2 * d))
        rep = check_conditionally_positive(r, d)
        return {"check": which, "degree": d, "passed": rep.is_positive, "report": rep.to_json()}, _code(rep.is_positive)
    if which == "favard":
        d = (r.order + 1) // 2 if args.degree is None else args.degree
        _need(2 * d - 1 <= r.order, "favard check at degree %d needs order >= %d" % (d, 2 * d - 1))
        m = moments_from_cumulants(r)
        try:
            rec = extract_recursion(gram_schmidt_monic(m, d), m)
        except NonFaithfulError as exc:
            doc = {"check": which, "degree": d, "passed": False, "error": str(exc), "nonfaithful_degree": exc.degree}
            return doc, EXIT_FAILED
        rep = check_favard(rec, strict=strict)
        doc = {"check": which, "degree": d, "passed": bool(rep), "report": rep.to_json(), "recursion": rec.to_json()}
        return doc, _code(bool(rep))
    raise SpecError("unknown check %r" % which)


def _need(cond, msg):
    if not cond:
        raise SpecError(msg)


def _code(passed):
    return EXIT_OK if passed else EXIT_FAILED


COMMANDS = {"moments": cmd_moments, "cumulants": cmd_cumulants, "sheffer": cmd_sheffer, "check": cmd_check}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", "-i", default="-", help="state specification file, '-' for stdin")
    common.add_argument("--output", "-o", default="-", help="output file, '-' for stdout")
    common.add_argument("--order", type=int, default=None, help="truncation order (default: spec, else 6)")
    common.add_argument("--degree", type=int, default=None, help="polynomial / Gram degree")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--strict", dest="allow_nonfaithful", action="store_false", help="require faithfulness (default)")
    mode.add_argument("--allow-nonfaithful", dest="allow_nonfaithful", action="store_true")
    common.set_defaults(allow_nonfaithful=False)

    parser = argparse.ArgumentParser(prog="ncmeixner", description="Free Meixner states and free Sheffer polynomials.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("moments", parents=[common], help="all moments up to the order")
    sub.add_parser("cumulants", parents=[common], help="all free cumulants up to the order")
    sub.add_parser("sheffer", parents=[common], help="free Sheffer family of the state")
    chk = sub.add_parser("check", parents=[common], help="run a check; exit 0 pass, 3 fail")
    chk.add_argument("which", choices=("meixner", "favard", "tracial", "positive", "infdiv"))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        spec = _load(args)
        r = build_state(spec, args.order, args.allow_nonfaithful)
        doc, code = COMMANDS[args.command](r, args)
    except NormalizationError as exc:
        print("error: state is not normalized: %s" % exc, file=sys.stderr)
        return EXIT_NOT_NORMALIZED
    except (SpecError, KeyError, TypeError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INVALID
    _emit(doc, args)
    return code


if __name__ == "__main__":
    sys.exit(main())
