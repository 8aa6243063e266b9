"""Structured errors with spans, codes and a judgment stack."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

E_PARSE = "E-PARSE"
E_SCOPE = "E-SCOPE"
E_CONV = "E-CONV"
E_UNIV = "E-UNIV"
E_META = "E-META"
E_DUP = "E-DUP"
E_INFER = "E-INFER"
E_ARITY = "E-ARITY"
E_IO = "E-IO"
E_IMPORT = "E-IMPORT"


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    file: Optional[str] = None

    @staticmethod
    def none():
        return Span(0, 0, None)


@dataclass
class Diagnostic(Exception):
    code: str
    message: str
    span: Span = field(default_factory=Span.none)
    expected: Optional[object] = None  # Term, printed at emission
    actual: Optional[object] = None
    stack: tuple = ()
    severity: str = "error"

    def __str__(self):
        loc = ""
        if self.span.file:
            loc = f"{self.span.file}:{self.span.start}-{self.span.end}: "
        out = f"{loc}{self.code}: {self.message}"
        for fr in self.stack:
            out += f"\n  while {fr}"
        return out

    def with_span(self, span: Span) -> "Diagnostic":
        if self.span.file is None and span is not None:
            return Diagnostic(self.code, self.message, span, self.expected,
                              self.actual, self.stack, self.severity)
        return self
