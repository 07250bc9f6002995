"""Command-line interface: ``annkit <command> ...``.

Exit codes: 0 success, 1 a check or reproduction failed, 2 invalid input or
violated precondition, 3 binary-merging enumeration cap exceeded.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

import numpy as np

from . import __version__
from .abstraction import LayerwisePartitioning, abstract_dnn
from .analysis import interval_forward, reduction_report
from .domains import DOMAIN_NAMES
from .errors import (
    AnnkitError,
    BinaryEnumerationLimitExceeded,
    DimensionMismatch,
    ValidationError,
    WitnessFailed,
)
from .model import Box
from .paper_examples import DEFAULT_TOL, ENTRY_IDS, run_paper_examples
from .serialize import (
    ModelFile,
    ann_from_json,
    ann_to_json,
    dumps,
    is_ann_doc,
    load_model,
    load_partitioning,
    model_from_json,
    model_to_json,
    read_json,
    witness_to_json,
    write_json,
)
from .soundness import END_TO_END_TOL, precondition_issues, witness_instantiation
from .transform import augment_input, lower_bound_activations, shift_dnn

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INVALID = 2
EXIT_CAP = 3

# options whose values may start with "-" (negative numbers, "lo,hi" pairs)
_VALUE_OPTIONS = ("--region", "--input", "--bound")


def _join_values(argv: List[str]) -> List[str]:
    out, i = [], 0
    while i < len(argv):
        if argv[i] in _VALUE_OPTIONS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def _floats(text: str, what: str) -> List[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ValidationError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not vals or not all(np.isfinite(vals)):
        raise ValidationError(f"{what}: expected finite numbers, got {text!r}")
    return vals


def parse_box(text: str) -> Box:
    """``"1,2"`` is a point; ``"0:1,-1:1"`` is a box with ``lo:hi`` per coordinate."""
    lo, hi = [], []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            a, b = part.split(":", 1)
        else:
            a = b = part
        try:
            lo.append(float(a))
            hi.append(float(b))
        except ValueError:
            raise ValidationError(f"bad coordinate {part!r} in {text!r}") from None
    return Box(lo, hi)


def parse_region(values: List[str], dim: int) -> Box:
    """One ``lo,hi`` per input, or a single one applied to every input."""
    pairs = [_floats(v, "--region") for v in values]
    if any(len(p) != 2 for p in pairs):
        raise ValidationError("--region takes lo,hi")
    if len(pairs) == 1:
        pairs = pairs * dim
    if len(pairs) != dim:
        raise DimensionMismatch(f"{len(pairs)} region intervals for {dim} inputs")
    return Box([p[0] for p in pairs], [p[1] for p in pairs])


def _full_input(model: ModelFile, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != model.user_in_dim:
        raise DimensionMismatch(f"input has length {x.shape[0]}, model expects {model.user_in_dim}")
    return augment_input(x) if model.carry_input else x


def _emit(doc, path: Optional[str]):
    if path:
        write_json(path, doc)
    else:
        sys.stdout.write(dumps(doc))


def _fmt(x: float) -> str:
    return f"{x:.10g}"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_abstract(args) -> int:
    model = load_model(args.model)
    lp = load_partitioning(args.partition)
    ann = abstract_dnn(model.dnn, lp, args.domain, unsound_ok=args.unsound_ok, cap=args.cap)
    doc = ann_to_json(ann)
    if not args.output:
        sys.stdout.write(dumps(doc))
        return EXIT_OK
    write_json(args.output, doc)
    rep = reduction_report(model.dnn, ann, lp)
    if args.json:
        sys.stdout.write(dumps(rep))
    else:
        print(f"wrote {args.output} ({args.domain})")
        print(f"{'layer':>5} {'before':>7} {'after':>6}")
        for row in rep["layers"]:
            print(f"{row['layer']:>5} {row['nodes_before']:>7} {row['nodes_after']:>6}")
        print(f"total nodes {rep['total_nodes_before']} -> {rep['total_nodes_after']}")
    return EXIT_OK


def _check_inputs(args, model: ModelFile) -> List[np.ndarray]:
    if args.inputs:
        doc = read_json(args.inputs)
        if not isinstance(doc, list) or not doc:
            raise ValidationError("inputs file must be a non-empty list of input vectors")
        rows = [[x] if not isinstance(x, list) else x for x in doc]
        try:
            return [np.array(r, dtype=np.float64) for r in rows]
        except (TypeError, ValueError):
            raise ValidationError("inputs must be numbers") from None
    rng = np.random.default_rng(args.seed)
    return list(rng.uniform(-args.scale, args.scale, size=(args.random, model.user_in_dim)))


def cmd_check(args) -> int:
    model = load_model(args.model)
    lp = load_partitioning(args.partition)
    net = model.dnn
    lp.check_sizes(net.sizes)
    issues = precondition_issues(net, lp)
    inputs = _check_inputs(args, model)
    full = [_full_input(model, x) for x in inputs]
    report = {
        "model": str(args.model),
        "domain": args.domain,
        "preconditions": issues,
        "forced": bool(args.force),
        "tol": args.tol,
        "results": [],
    }
    if issues and not args.force:
        report["passed"] = False
        if args.json:
            sys.stdout.write(dumps(report))
        else:
            print("preconditions violated (use --force to attempt witnesses anyway):")
            for msg in issues:
                print(f"  {msg}")
        return EXIT_INVALID
    ann = abstract_dnn(net, lp, args.domain, unsound_ok=args.unsound_ok, cap=args.cap)
    for x, v in zip(inputs, full):
        entry = {"input": x.tolist()}
        try:
            w = witness_instantiation(net, ann, lp, v, force=True, tol=args.tol)
            ok = w.check(ann, tol=args.tol)
            entry.update(verdict="PASS" if ok else "FAIL", witness=witness_to_json(w, ok))
        except WitnessFailed as exc:
            entry.update(verdict="FAIL", layer=exc.layer, reason=exc.reason)
        report["results"].append(entry)
    report["passed"] = all(r["verdict"] == "PASS" for r in report["results"])
    if args.output:
        write_json(args.output, report)
    if args.json:
        sys.stdout.write(dumps(report))
    else:
        for msg in issues:
            print(f"warning: {msg}")
        for r in report["results"]:
            x = ",".join(_fmt(t) for t in r["input"])
            if r["verdict"] == "PASS":
                print(f"PASS  input=({x})  error={r['witness']['error']:.3g}")
            else:
                print(f"FAIL  input=({x})  layer {r.get('layer', '?')}: {r.get('reason', 'witness check failed')}")
        n_pass = sum(r["verdict"] == "PASS" for r in report["results"])
        print(f"{n_pass}/{len(report['results'])} inputs reproduced")
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_shift(args) -> int:
    model = load_model(args.model)
    if model.carry_input:
        raise ValidationError("model already expects a constant input; shift the original instead")
    net = model.dnn
    region = parse_region(args.region, net.in_dim) if args.region else None
    if args.bound is not None:
        c = float(args.bound)
    else:
        c = lower_bound_activations(net, region)
    shifted, report = shift_dnn(net, c, region)
    doc = model_to_json(shifted, carry_input=True)
    rep = report.to_json()
    if args.output:
        write_json(args.output, doc)
        if args.json:
            sys.stdout.write(dumps(rep))
        else:
            print(f"wrote {args.output}")
            print(f"bound C = {_fmt(report.bound)}")
            print(f"sizes {list(report.original_sizes)} -> {list(report.new_sizes)}")
            print(f"carry weights {[_fmt(k) for k in report.carry_weights]}")
    else:
        sys.stdout.write(dumps(doc))
        sys.stderr.write(dumps(rep))
    return EXIT_OK


def cmd_bounds(args) -> int:
    doc = read_json(args.file)
    box = parse_box(args.input)
    if is_ann_doc(doc):
        ann = ann_from_json(doc)
    else:
        model = model_from_json(doc)
        if model.carry_input:
            box = Box(augment_input(box.lo), augment_input(box.hi))
        ann = abstract_dnn(model.dnn, LayerwisePartitioning.identity(model.dnn.sizes), "interval")
    out = interval_forward(ann, box)
    rep = {
        "lo": out.box.lo.tolist(),
        "hi": out.box.hi.tolist(),
        "notes": list(out.provenance),
    }
    if args.json:
        sys.stdout.write(dumps(rep))
    else:
        for i, (a, b) in enumerate(zip(out.box.lo, out.box.hi), start=1):
            print(f"y{i}  [{_fmt(a)}, {_fmt(b)}]")
        for note in out.provenance:
            print(f"note: {note}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    x = _floats(args.input, "--input")
    y = model.dnn(_full_input(model, x))
    if args.json:
        sys.stdout.write(dumps({"input": x, "output": y.tolist()}))
    else:
        print(" ".join(_fmt(t) for t in y))
    return EXIT_OK


def cmd_paper_examples(args) -> int:
    only = None
    if args.only:
        only = [o for item in args.only for o in item.split(",") if o]
    try:
        results = run_paper_examples(only, args.tol)
    except KeyError as exc:
        raise ValidationError(str(exc.args[0])) from None
    passed = all(r["passed"] for r in results)
    if args.json:
        sys.stdout.write(dumps({"passed": passed, "tol": args.tol, "entries": results}))
    else:
        width = max(len(r["id"]) for r in results)
        for r in results:
            status = "PASS" if r["passed"] else "FAIL"
            print(f"{status}  {r['id']:<{width}}  {r['description']}")
            if not r["passed"]:
                if "error" in r:
                    print(f"      error: {r['error']}")
                for c in r["checks"]:
                    if not c["ok"]:
                        print(f"      {c['check']}: got {c['got']}, want {c['want']}")
        print(f"{sum(r['passed'] for r in results)}/{len(results)} entries passed")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_suites(args) -> int:
    from .suites import SUITES, report_bytes, run_all

    if args.only:
        unknown = [o for o in args.only if o not in SUITES]
        if unknown:
            raise ValidationError(f"unknown suites {unknown}; available: {', '.join(SUITES)}")
        names = list(SUITES)
        reports = [SUITES[o](seed=args.seed + names.index(o)) for o in args.only]
        report = {"seed": args.seed, "passed": all(r["passed"] for r in reports), "suites": reports}
    else:
        report = run_all(args.seed)
    if args.output:
        with open(args.output, "wb") as fh:
            fh.write(report_bytes(report))
    if args.json:
        sys.stdout.write(report_bytes(report).decode())
    else:
        for r in report["suites"]:
            status = "PASS" if r["passed"] else "FAIL"
            print(f"{status}  {r['suite']:<28} trials={r['trials']:<6} failures={r['failures']}")
    return EXIT_OK if report["passed"] else EXIT_FAIL


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="annkit", description="Layer-wise abstraction of feed-forward networks.")
    p.add_argument("--version", action="version", version=f"annkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def domain_opts(sp):
        sp.add_argument("--domain", choices=DOMAIN_NAMES, default="interval")
        sp.add_argument("--unsound-ok", action="store_true", help="allow non-convex domains")
        sp.add_argument("--cap", type=int, default=None, help="binary merging cap (default 1e6 or $ANNKIT_CAP)")

    sp = sub.add_parser("abstract", help="abstract a network under a layer-wise partitioning")
    sp.add_argument("model")
    sp.add_argument("partition")
    domain_opts(sp)
    sp.add_argument("-o", "--output")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_abstract)

    sp = sub.add_parser("check", help="build witnesses that the abstraction reproduces the network")
    sp.add_argument("model")
    sp.add_argument("partition")
    domain_opts(sp)
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--inputs", help="JSON list of input vectors")
    src.add_argument("--random", type=int, metavar="K", help="K uniform random inputs")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--scale", type=float, default=1.0, help="random inputs are drawn from [-scale, scale]")
    sp.add_argument("--tol", type=float, default=END_TO_END_TOL)
    sp.add_argument("--force", action="store_true", help="run even when preconditions fail")
    sp.add_argument("-o", "--output", help="also write the JSON report here")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("shift", help="make hidden activations non-negative on a region")
    sp.add_argument("model")
    sp.add_argument("--region", action="append", metavar="LO,HI", help="per input, or once for all inputs")
    sp.add_argument("--bound", type=float, metavar="C", help="use this lower bound instead of computing one")
    sp.add_argument("-o", "--output")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_shift)

    sp = sub.add_parser("bounds", help="interval bounds on the outputs of a model or abstract network")
    sp.add_argument("file")
    sp.add_argument("--input", required=True, help="point x1,x2,... or box lo1:hi1,lo2:hi2,...")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("eval", help="evaluate a model")
    sp.add_argument("model")
    sp.add_argument("--input", required=True, help="x1,x2,...")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("paper-examples", help="run the golden example reproductions")
    sp.add_argument("--only", action="append", metavar="ID", help=f"one of: {', '.join(ENTRY_IDS)}")
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_paper_examples)

    sp = sub.add_parser("suites", help="run the seeded randomized property suites")
    sp.add_argument("--only", action="append", metavar="NAME")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("-o", "--output")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_suites)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(_join_values(argv))
    try:
        return args.func(args)
    except BinaryEnumerationLimitExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ValidationError, AnnkitError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
