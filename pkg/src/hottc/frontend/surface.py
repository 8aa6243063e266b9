"""Surface abstract syntax, full fidelity with source spans."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..kernel.diagnostics import Span


@dataclass(frozen=True)
class SVar:
    name: str  # possibly dotted (qualified)
    span: Span


@dataclass(frozen=True)
class SUni:
    level: int
    span: Span


@dataclass(frozen=True)
class SBinder:
    names: tuple  # one or more idents
    ty: Optional[object]  # None for bare lambda binders
    icit: bool
    span: Span


@dataclass(frozen=True)
class SPi:
    binders: tuple
    body: object
    span: Span


@dataclass(frozen=True)
class SSigma:
    binders: tuple
    body: object
    span: Span


@dataclass(frozen=True)
class SLam:
    binders: tuple
    body: object
    span: Span


@dataclass(frozen=True)
class SApp:
    fn: object
    arg: object
    icit: bool
    span: Span


@dataclass(frozen=True)
class SPair:
    fst: object
    snd: object
    span: Span


@dataclass(frozen=True)
class SProj:
    tm: object
    field: int  # 1 or 2
    span: Span


@dataclass(frozen=True)
class SEq:
    lhs: object
    rhs: object
    span: Span


@dataclass(frozen=True)
class SHole:
    span: Span


@dataclass(frozen=True)
class SNum:
    value: int
    span: Span


@dataclass(frozen=True)
class SLet:
    name: str
    ty: Optional[object]
    val: object
    body: object
    span: Span


@dataclass(frozen=True)
class SCase:
    ctor: str
    binders: tuple  # ident names
    body: object
    span: Span


@dataclass(frozen=True)
class SInd:
    scrut: object
    motive: Optional[object]
    cases: tuple
    span: Span


@dataclass(frozen=True)
class SAnn:
    tm: object
    ty: object
    span: Span


@dataclass(frozen=True)
class SDecl:
    kind: str  # "def" | "axiom"
    name: str
    binders: tuple
    ty: object
    body: Optional[object]
    span: Span
    anchor: str = ""
    doc: str = ""


@dataclass(frozen=True)
class SImport:
    path: str  # dotted
    span: Span


@dataclass(frozen=True)
class SModule:
    name: Optional[str]
    imports: tuple
    decls: tuple
    file: Optional[str] = None


def span_of(t) -> Span:
    return getattr(t, "span", Span.none())
