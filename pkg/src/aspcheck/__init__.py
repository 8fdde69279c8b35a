"""aspcheck: fail-fast validation of ASP data against YAML specifications."""

from .diagnostics import Diagnostic, ValidationReport, render_report
from .engine import RunOptions, run, wrap32
from .schema import SpecError, ValidationSpec, check_spec, load_spec, parse_spec
from .terms import Fact, ParseError, compare, parse_facts, parse_term, render

__all__ = [
    "Diagnostic",
    "ValidationReport",
    "render_report",
    "RunOptions",
    "run",
    "wrap32",
    "SpecError",
    "ValidationSpec",
    "check_spec",
    "load_spec",
    "parse_spec",
    "Fact",
    "ParseError",
    "compare",
    "parse_facts",
    "parse_term",
    "render",
]

__version__ = "0.1.0"
