"""Command-line interface: `hott check` and `hott normalize`."""

from __future__ import annotations

import argparse
import json
import sys
import threading
from pathlib import Path

from .frontend.printer import show_term
from .kernel.diagnostics import Diagnostic
from .session import CheckSession


def _diag_json(d: Diagnostic, pr) -> str:
    obj = {
        "file": d.span.file,
        "start": d.span.start,
        "end": d.span.end,
        "code": d.code,
        "message": d.message,
        "expected": pr.show(d.expected) if d.expected is not None else None,
        "actual": pr.show(d.actual) if d.actual is not None else None,
    }
    return json.dumps(obj, sort_keys=True)


def _diag_human(d: Diagnostic, pr) -> str:
    out = str(d)
    if d.expected is not None:
        out += f"\n  expected: {pr.show(d.expected)}"
    if d.actual is not None:
        out += f"\n  actual:   {pr.show(d.actual)}"
    return out


def _session(args) -> CheckSession:
    return CheckSession(
        search_paths=[Path(p) for p in (args.include or [])],
        use_prelude_path=not args.no_prelude,
        include_open=getattr(args, "include_open", False),
        trace_elab=getattr(args, "trace_elab", False),
        timing=getattr(args, "timing", False),
    )


def cmd_check(args) -> int:
    sess = _session(args)
    code = sess.check_paths([Path(p) for p in args.paths])
    pr = sess.printer()
    if args.json:
        for d in sess.diagnostics:
            print(_diag_json(d, pr))
    else:
        for line in sess.out_lines:
            print(line)
        for d in sess.diagnostics:
            print(_diag_human(d, pr), file=sys.stderr)
    if args.axioms:
        audit = sess.axiom_audit(args.axioms)
        if audit is None:
            print(f"unknown constant '{args.axioms}'", file=sys.stderr)
            return 2
        print(f"axioms reachable from {args.axioms}:")
        for a in audit:
            print(f"  {a}")
    if args.print_normal:
        nf = sess.normal_form(args.print_normal)
        if nf is None:
            print(f"unknown constant '{args.print_normal}'", file=sys.stderr)
            return 2
        ty_s, body_s = nf
        print(f"{args.print_normal} : {ty_s}")
        print(f"{args.print_normal} = {body_s}"
              if body_s is not None else "postulate, no body")
    if code == 0 and not args.json:
        print("ok")
    return code


def cmd_normalize(args) -> int:
    sess = _session(args)
    code = sess.check_paths([Path(args.path)])
    pr = sess.printer()
    if code != 0:
        for d in sess.diagnostics:
            print(_diag_human(d, pr), file=sys.stderr)
        return code
    nf = sess.normal_form(args.constant)
    if nf is None:
        print(f"unknown constant '{args.constant}'", file=sys.stderr)
        return 2
    ty_s, body_s = nf
    print(f"{args.constant} : {ty_s}")
    print(f"{args.constant} = {body_s}"
          if body_s is not None else "postulate, no body")
    return 0


def build_argparser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hott",
        description="Type checker for a small homotopy type theory "
                    "with pushouts, truncation, univalence and a checked "
                    "real-projective-space corpus.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("-I", "--include", action="append", metavar="DIR",
                       help="add a module search path")
        p.add_argument("--no-prelude", action="store_true",
                       help="do not put the shipped corpus on the search "
                            "path; start from the empty environment")
        p.add_argument("--include-open", action="store_true",
                       help="also check files under open/ and alt/")
        p.add_argument("--trace-elab", action="store_true",
                       help="log implicit insertion and metavariable "
                            "solutions to stderr")
        p.add_argument("--timing", action="store_true",
                       help="print per-module wall times")

    pc = sub.add_parser("check", help="check files or directories")
    common(pc)
    pc.add_argument("paths", nargs="+")
    pc.add_argument("--json", action="store_true",
                    help="newline-delimited JSON diagnostics")
    pc.add_argument("--axioms", metavar="NAME",
                    help="print the axiom audit for a constant")
    pc.add_argument("--print-normal", metavar="NAME",
                    help="print the normal form of a constant")

    pn = sub.add_parser("normalize",
                        help="print the β-normal η-long form of a constant")
    common(pn)
    pn.add_argument("path")
    pn.add_argument("constant")
    return ap


def main(argv=None) -> int:
    args = build_argparser().parse_args(argv)
    out = {}

    def run():
        try:
            out["code"] = {"check": cmd_check,
                           "normalize": cmd_normalize}[args.cmd](args)
        except Diagnostic as d:
            print(str(d), file=sys.stderr)
            out["code"] = 2 if d.code in ("E-IO", "E-IMPORT") else 1
        except BrokenPipeError:
            out["code"] = 2

    # deep NbE recursion needs a large stack
    threading.stack_size(512 * 1024 * 1024)
    t = threading.Thread(target=run)
    t.start()
    t.join()
    return out.get("code", 2)


if __name__ == "__main__":
    sys.exit(main())
