"""Command-line front end with CI-friendly exit codes.

Exit codes: 0 data valid, 1 data invalid, 2 specification error,
3 I/O or grounder-bridge failure.
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys

from . import datalog, emit, engine
from .diagnostics import render_report
from .schema import SpecError, check_spec, load_spec, parse_spec

GROUNDER_ENV = "ASPCHECK_GROUNDER"

EXIT_VALID = 0
EXIT_INVALID = 1
EXIT_SPEC_ERROR = 2
EXIT_IO_ERROR = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aspcheck",
        description="Validate ASP facts and programs against YAML specifications.")
    sub = parser.add_subparsers(dest="command", required=True)

    validate = sub.add_parser("validate", help="validate data against a specification")
    validate.add_argument("paths", nargs="*",
                          help="specification (unless --spec is given) followed by"
                               " fact/program files; '-' reads from stdin")
    validate.add_argument("--spec", help="specification file")
    validate.add_argument("--mode", choices=("builtin", "bridge"), default="builtin")
    validate.add_argument("--grounder-cmd",
                          default=os.environ.get(GROUNDER_ENV),
                          help="external grounder command for bridge mode"
                               f" (default: ${GROUNDER_ENV})")
    validate.add_argument("--grounder-timeout", type=float, default=60.0)
    validate.add_argument("--all-errors", action="store_true",
                          help="collect every diagnostic instead of failing fast")
    validate.add_argument("--valid-only", action="store_true",
                          help="accepted for compatibility; validation never"
                               " searches for models")
    validate.add_argument("--format", choices=("text", "jsonl"), default="text")

    compile_ = sub.add_parser("compile", help="export constraint validators as .lp")
    compile_.add_argument("spec")
    compile_.add_argument("output", help="output path, '-' for stdout")

    check = sub.add_parser("check", help="check a specification without data")
    check.add_argument("spec")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "compile":
            return _cmd_compile(args)
        return _cmd_check(args)
    except SpecError as exc:
        for diagnostic in exc.diagnostics:
            print(diagnostic.render(), file=sys.stderr)
        return EXIT_SPEC_ERROR
    except (OSError, UnicodeDecodeError) as exc:
        print(f"aspcheck: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _cmd_validate(args) -> int:
    paths = list(args.paths)
    spec_path = args.spec
    if spec_path is None:
        if not paths:
            print("aspcheck: no specification given", file=sys.stderr)
            return EXIT_SPEC_ERROR
        spec_path = paths.pop(0)

    spec = load_spec(_read(spec_path))
    input_text = "\n".join(_read(p) for p in paths)

    options = engine.RunOptions(
        mode=args.mode,
        fail_fast=not args.all_errors,
        valid_only=args.valid_only,
        report_format=args.format,
    )

    facts = []
    if args.mode == "bridge":
        if not args.grounder_cmd:
            print("aspcheck: bridge mode needs --grounder-cmd or"
                  f" ${GROUNDER_ENV}", file=sys.stderr)
            return EXIT_IO_ERROR
        options.grounder = emit.GrounderBridgeConfig(
            command=tuple(shlex.split(args.grounder_cmd)),
            timeout=args.grounder_timeout)
        options.program_text = input_text
    else:
        # Pre-check the input on its own so data problems are reported as
        # data problems, with positions relative to the user's files.
        try:
            datalog.parse_program(input_text)
        except (datalog.ProgramSyntaxError, datalog.UnsafeRuleError,
                datalog.UnstratifiedError) as exc:
            print(f"invalid input: {exc}", file=sys.stderr)
            return EXIT_INVALID
        options.extra_rules_text = input_text

    report = engine.run(spec, facts, options)
    rendered = render_report(report, args.format)
    if rendered:
        print(rendered)

    if report.verdict == "valid":
        return EXIT_VALID
    if report.verdict == "invalid":
        return EXIT_INVALID
    if any(d.rule == "bridge-error" for d in report.diagnostics):
        return EXIT_IO_ERROR
    return EXIT_SPEC_ERROR


def _cmd_compile(args) -> int:
    spec = load_spec(_read(args.spec))
    text = emit.render_validator_program(spec)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(text)
    return EXIT_VALID


def _cmd_check(args) -> int:
    spec = parse_spec(_read(args.spec))
    diagnostics = check_spec(spec)
    for diagnostic in diagnostics:
        print(diagnostic.render())
    return EXIT_VALID if not diagnostics else EXIT_SPEC_ERROR


if __name__ == "__main__":
    sys.exit(main())
