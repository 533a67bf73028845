"""Command-line entry point: ``amr <verb> ...``.

Exit codes: 0 success or true, 1 property false or repair produced,
2 undefined or unrefinable, 3 repair failure, 64 usage error,
65 unreadable or malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .abstraction import PartitionError, abstract, default_partition
from .bench import run_bench, rows_to_csv
from .ctl import CtlSyntaxError, parse_ctl, to_pnf
from .formats import ModelParseError, parse_model, parse_partition, print_model, print_partition
from .mc3 import ThreeValued, check2, check3_result
from .metrics import PropositionMismatch, distance_kmts, distance_ks
from .models import Kmts, KripkeStructure, identity_kmts
from .refinement import refine_until_definite
from .repair import run_pipeline

EXIT_OK, EXIT_FALSE, EXIT_UNDEFINED, EXIT_REPAIR_FAILED = 0, 1, 2, 3
EXIT_USAGE, EXIT_DATA = 64, 65

_VERDICT_EXIT = {ThreeValued.T: EXIT_OK, ThreeValued.F: EXIT_FALSE, ThreeValued.U: EXIT_UNDEFINED}
_STATUS_EXIT = {"no-repair-needed": EXIT_OK, "repaired": EXIT_FALSE,
                "refinement-failed": EXIT_UNDEFINED, "repair-failed": EXIT_REPAIR_FAILED,
                "concretization-failed": EXIT_REPAIR_FAILED}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _read(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e.strerror}") from None


def _model(path: str):
    try:
        return parse_model(_read(path))
    except ModelParseError as e:
        raise DataError(f"{path}:{e}") from None


def _ks(path: str) -> KripkeStructure:
    m = _model(path)
    if not isinstance(m, KripkeStructure):
        raise UsageError(f"{path} is a KMTS; this verb needs a Kripke structure")
    return m


def _formula(text: str):
    try:
        return parse_ctl(text)
    except CtlSyntaxError as e:
        raise DataError(f"formula: {e}") from None


def _state(m, s):
    if s not in m.index:
        raise UsageError(f"unknown state {s}")
    return s


def cmd_check(args, out):
    m = _ks(args.model)
    phi = _formula(args.formula)
    ok = check2(m, _state(m, args.state), phi)
    print("true" if ok else "false", file=out)
    return EXIT_OK if ok else EXIT_FALSE


def cmd_check3(args, out):
    m = _model(args.model)
    if isinstance(m, KripkeStructure):
        m = identity_kmts(m)
    phi = to_pnf(_formula(args.formula))
    res = check3_result(m, _state(m, args.state), phi)
    print(res.verdict, file=out)
    if res.cause is not None:
        print(f"cause: {res.cause}", file=out)
    return _VERDICT_EXIT[res.verdict]


def cmd_abstract(args, out):
    m = _ks(args.model)
    if args.partition:
        try:
            p = parse_partition(_read(args.partition), m.states)
        except ModelParseError as e:
            raise DataError(f"{args.partition}:{e}") from None
    else:
        p = default_partition(m)
    try:
        mh = abstract(m, p)
    except PartitionError as e:
        raise DataError(str(e)) from None
    if args.show_partition:
        out.write(print_partition(p))
    out.write(print_model(mh))
    return EXIT_OK


def cmd_refine(args, out):
    m = _ks(args.model)
    phi = to_pnf(_formula(args.formula))
    s = _state(m, args.state)
    ref = refine_until_definite(m, default_partition(m), s, phi)
    for i, (p, verdict, cause) in enumerate(ref.history):
        print(f"# step {i}: {len(p)} blocks, verdict {verdict} at {p.alpha[s]}", file=out)
        if cause is not None:
            print(f"# cause: {cause}", file=out)
        out.write(print_partition(p))
    if ref.stuck is not None:
        print(f"# no further split possible: {ref.stuck}", file=out)
    return _VERDICT_EXIT[ref.verdict]


def cmd_repair(args, out):
    m = _ks(args.model)
    phi = _formula(args.formula)
    report = run_pipeline(m, _state(m, args.state), phi, baseline=args.baseline)
    if args.json == "-":
        # stdout carries only the JSON document
        out.write(report.to_json(timings=not args.no_timings))
        return _STATUS_EXIT[report.status]
    print(f"status: {report.status}", file=out)
    print(f"refinements: {report.refinements} ({report.initial_blocks} -> {report.final_blocks} blocks)",
          file=out)
    if report.trace:
        print("trace: " + ", ".join(str(op) for op in report.trace), file=out)
        print(f"d_hat: {report.d_hat}", file=out)
    if report.status == "repaired":
        print(f"repaired models: {len(report.repairs)}, d = {report.best_distance}", file=out)
        for i, r in enumerate(report.repairs):
            print(f"# model {i}, d = {r.d}", file=out)
            out.write(print_model(r.model))
    elif report.message:
        print(f"message: {report.message}", file=out)
    if args.json:
        try:
            with open(args.json, "w", encoding="utf-8") as fh:
                fh.write(report.to_json(timings=not args.no_timings))
        except OSError as e:
            raise DataError(f"cannot write {args.json}: {e.strerror}") from None
    return _STATUS_EXIT[report.status]


def cmd_distance(args, out):
    a, b = _model(args.first), _model(args.second)
    try:
        if isinstance(a, KripkeStructure) and isinstance(b, KripkeStructure):
            d = distance_ks(a, b)
        elif isinstance(a, Kmts) and isinstance(b, Kmts):
            d = distance_kmts(a, b)
        else:
            raise UsageError("both files must be Kripke structures or both KMTSs")
    except PropositionMismatch as e:
        raise DataError(str(e)) from None
    print(d, file=out)
    return EXIT_OK


def cmd_bench(args, out):
    if not 0 <= args.afs1_ext <= 3:
        raise UsageError("--afs1-ext must be between 0 and 3")
    rows = run_bench(args.afs1_ext, repeat=args.repeat)
    if args.json:
        out.write(json.dumps([r.as_dict() for r in rows], indent=2) + "\n")
    else:
        out.write(rows_to_csv(rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="amr", description="Repair Kripke structures that violate a CTL property, working on an abstraction.")
    p.add_argument("--version", action="version", version=f"amr {__version__}")
    sub = p.add_subparsers(dest="verb", metavar="VERB", parser_class=_Parser)

    def verb(name, fn, help_, model=True, formula=False):
        sp = sub.add_parser(name, help=help_)
        if model:
            sp.add_argument("model")
        if formula:
            sp.add_argument("state")
            sp.add_argument("formula")
        sp.set_defaults(fn=fn)
        return sp

    verb("check", cmd_check, "classical CTL check on a Kripke structure", formula=True)
    verb("check3", cmd_check3, "three-valued check on a KMTS", formula=True)
    sp = verb("abstract", cmd_abstract, "print the abstraction of a Kripke structure")
    sp.add_argument("--partition", help="partition file; default groups states by label")
    sp.add_argument("--show-partition", action="store_true")
    verb("refine", cmd_refine, "refine until the verdict is definite", formula=True)
    sp = verb("repair", cmd_repair, "run the full repair pipeline", formula=True)
    sp.add_argument("--json", metavar="OUT", help="write the JSON report to OUT; '-' prints only the report")
    sp.add_argument("--no-timings", action="store_true", help="leave timings out of the JSON report")
    sp.add_argument("--baseline", action="store_true", help="use the identity abstraction")
    sp = sub.add_parser("distance", help="distance between two models of the same kind")
    sp.add_argument("first")
    sp.add_argument("second")
    sp.set_defaults(fn=cmd_distance)
    sp = verb("bench", cmd_bench, "time AMR against the concrete baseline on AFS1", model=False)
    sp.add_argument("--afs1-ext", type=int, default=3, metavar="N", help="include extensions 1..N")
    sp.add_argument("--repeat", type=int, default=5)
    sp.add_argument("--json", action="store_true", help="JSON instead of CSV")
    return p


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if not getattr(args, "fn", None):
            raise UsageError("amr: a verb is required (check, check3, abstract, refine, repair, distance, bench)")
        return args.fn(args, out)
    except UsageError as e:
        print(e, file=err)
        return EXIT_USAGE
    except DataError as e:
        print(e, file=err)
        return EXIT_DATA
    except SystemExit as e:
        # --help and --version
        return e.code if isinstance(e.code, int) else EXIT_OK


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
