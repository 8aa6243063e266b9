"""Bidirectional typing: infer, check, declaration checking, axiom audit.

The kernel re-checks everything the elaborator produces; it knows nothing
about metavariables, implicit insertion or surface syntax.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from typing import Optional, Union

from . import primitives as P
from . import syntax as S
from .diagnostics import (
    Diagnostic, E_ARITY, E_CONV, E_DUP, E_INFER, E_SCOPE, E_UNIV, Span,
)
from .evaluate import (
    apply_closure, convertible, evaluate, prim_result_type, readback, subtype,
    vfst,
)
from .values import VId, VPi, VSigma, VUni, Value, vvar

TOP = 2  # sort of types that live in no universe (mention U1 itself)


@dataclass(frozen=True)
class EnvEntry:
    name: str
    ty_v: Value
    ty_term: "S.Term"
    def_v: Optional[Value]
    def_term: Optional["S.Term"]
    origin: str = ""
    deps: frozenset = frozenset()

    @property
    def is_postulate(self) -> bool:
        return self.def_v is None


class Environment:
    """Global declarations; functionally extended, safe to share."""

    __slots__ = ("entries",)

    def __init__(self, entries: Optional[dict] = None):
        self.entries = entries if entries is not None else {}

    def lookup(self, name: str) -> Optional[EnvEntry]:
        return self.entries.get(name)

    def extend(self, e: EnvEntry) -> "Environment":
        d = dict(self.entries)
        d[e.name] = e
        return Environment(d)

    def merge(self, other: "Environment") -> "Environment":
        d = dict(self.entries)
        d.update(other.entries)
        return Environment(d)

    def __contains__(self, name):
        return name in self.entries

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class Ctx:
    """Telescopic context: parallel tuples of display names, types, and
    the identity environment of neutral variables."""

    names: tuple = ()
    types: tuple = ()
    vars: tuple = ()

    @property
    def depth(self) -> int:
        return len(self.vars)

    def bind(self, name: str, ty_v: Value) -> "Ctx":
        return Ctx(self.names + (name,), self.types + (ty_v,),
                   self.vars + (vvar(self.depth, ty_v, name),))

    def bind_def(self, name: str, ty_v: Value, val: Value) -> "Ctx":
        """Let-style binding: the variable evaluates to `val`."""
        return Ctx(self.names + (name,), self.types + (ty_v,),
                   self.vars + (val,))

    def lookup(self, idx: int) -> Value:
        return self.types[-1 - idx]


_FRAMES: list = []


@contextmanager
def frame(msg: str):
    _FRAMES.append(msg)
    try:
        yield
    finally:
        _FRAMES.pop()


def _diag(code, msg, expected=None, actual=None):
    return Diagnostic(code, msg, Span.none(), expected, actual,
                      tuple(reversed(_FRAMES[-8:])))


def _show(env, depth, v: Value) -> "S.Term":
    try:
        return readback(depth, v)
    except Exception:  # diagnostics must never crash the checker
        return S.Const("<unprintable>")


def infer(env: Environment, ctx: Ctx, t: "S.Term") -> Value:
    """Principal type of t as a Value."""
    match t:
        case S.Var(idx):
            if idx >= ctx.depth:
                raise _diag(E_SCOPE, f"variable index {idx} out of scope")
            return ctx.lookup(idx)
        case S.Uni(0):
            return VUni(1)
        case S.Uni(1):
            raise _diag(E_UNIV, "U1 is a top sort and has no type")
        case S.Pi(_, _, _, _) | S.Sigma(_, _, _):
            s = type_sort(env, ctx, t)
            if s == TOP:
                raise _diag(E_UNIV,
                            "type mentions U1 and lives in no universe")
            return VUni(s)
        case S.IdT(ty, lhs, rhs):
            s = type_sort(env, ctx, ty)
            if s == TOP:
                raise _diag(E_UNIV, "identity over a too-large type")
            ty_v = evaluate(env, ctx.vars, ty)
            check(env, ctx, lhs, ty_v)
            check(env, ctx, rhs, ty_v)
            return VUni(s)
        case S.Lam(_, _, _):
            raise _diag(E_INFER, "cannot infer the type of a bare abstraction")
        case S.Pair(_, _):
            raise _diag(E_INFER, "cannot infer the type of a bare pair")
        case S.App(fn, arg, _):
            fn_ty = infer(env, ctx, fn)
            if not isinstance(fn_ty, VPi):
                raise _diag(E_CONV, "application of a non-function",
                            actual=_show(env, ctx.depth, fn_ty))
            check(env, ctx, arg, fn_ty.dom)
            return apply_closure(fn_ty.cod, evaluate(env, ctx.vars, arg))
        case S.Fst(p):
            pt = infer(env, ctx, p)
            if not isinstance(pt, VSigma):
                raise _diag(E_CONV, "first projection of a non-pair",
                            actual=_show(env, ctx.depth, pt))
            return pt.dom
        case S.Snd(p):
            pt = infer(env, ctx, p)
            if not isinstance(pt, VSigma):
                raise _diag(E_CONV, "second projection of a non-pair",
                            actual=_show(env, ctx.depth, pt))
            return apply_closure(pt.cod, vfst(evaluate(env, ctx.vars, p)))
        case S.Refl(a):
            a_ty = infer(env, ctx, a)
            av = evaluate(env, ctx.vars, a)
            return VId(a_ty, av, av)
        case S.Prim(name, args):
            entry = P.TABLE.get(name)
            if entry is None:
                raise _diag(E_SCOPE, f"unknown primitive '{name}'")
            if len(args) > entry.arity:
                raise _diag(E_ARITY, f"'{name}' applied to {len(args)} "
                            f"arguments, arity {entry.arity}")
            vals: tuple = ()
            for i, a in enumerate(args):
                slot_ty = evaluate(None, vals, entry.tele[i][1])
                check(env, ctx, a, slot_ty)
                vals = vals + (evaluate(env, ctx.vars, a),)
            return prim_result_type(name, vals)
        case S.Const(name):
            e = env.lookup(name)
            if e is None:
                raise _diag(E_SCOPE, f"unknown constant '{name}'")
            return e.ty_v
        case S.Ann(tm, ty):
            type_sort(env, ctx, ty)  # validates
            ty_v = evaluate(env, ctx.vars, ty)
            check(env, ctx, tm, ty_v)
            return ty_v
        case S.Meta(mid):
            raise _diag(E_INFER, f"metavariable ?{mid} reached the kernel")
    raise _diag(E_INFER, f"cannot infer {type(t).__name__}")


def type_sort(env: Environment, ctx: Ctx, t: "S.Term") -> int:
    """Sort of a syntactic type: 0, 1, or TOP (a valid type mentioning U1
    itself, living in no universe)."""
    match t:
        case S.Uni(0):
            return 1
        case S.Uni(1):
            return TOP
        case S.Pi(dom, cod, _, name) | S.Sigma(dom, cod, name):
            s1 = type_sort(env, ctx, dom)
            dom_v = evaluate(env, ctx.vars, dom)
            s2 = type_sort(env, ctx.bind(name, dom_v), cod)
            return max(s1, s2)
        case S.Ann(tm, _):
            return type_sort(env, ctx, tm)
        case _:
            ty = infer(env, ctx, t)
            if isinstance(ty, VUni):
                return ty.level
            raise _diag(E_CONV, "expected a type",
                        actual=_show(env, ctx.depth, ty))


def check(env: Environment, ctx: Ctx, t: "S.Term", expected: Value) -> "S.Term":
    match (t, expected):
        case (S.Lam(body, icit, name), VPi(dom, cod)):
            if icit != cod.icit:
                raise _diag(E_CONV, "implicitness mismatch on abstraction",
                            expected=_show(env, ctx.depth, expected))
            ctx2 = ctx.bind(name, dom)
            check(env, ctx2, body, apply_closure(cod, ctx2.vars[-1]))
            return t
        case (S.Lam(_, _, _), _):
            raise _diag(E_CONV, "abstraction checked against non-function type",
                        expected=_show(env, ctx.depth, expected))
        case (S.Pair(a, b), VSigma(dom, cod)):
            check(env, ctx, a, dom)
            check(env, ctx, b, apply_closure(cod, evaluate(env, ctx.vars, a)))
            return t
        case (S.Pair(_, _), _):
            raise _diag(E_CONV, "pair checked against non-pair type",
                        expected=_show(env, ctx.depth, expected))
        case (S.Refl(a), VId(ty, lhs, rhs)):
            check(env, ctx, a, ty)
            av = evaluate(env, ctx.vars, a)
            if not convertible(env, ctx.depth, lhs, rhs, ty):
                raise _diag(E_CONV, "refl at unequal endpoints",
                            expected=_show(env, ctx.depth, expected))
            if not convertible(env, ctx.depth, av, lhs, ty):
                raise _diag(E_CONV, "refl point differs from endpoints",
                            expected=_show(env, ctx.depth, expected))
            return t
        case _:
            got = infer(env, ctx, t)
            if not subtype(env, ctx.depth, got, expected):
                raise _diag(E_CONV, "type mismatch",
                            expected=_show(env, ctx.depth, expected),
                            actual=_show(env, ctx.depth, got))
            return t


@dataclass(frozen=True)
class Declaration:
    kind: str  # "def" | "axiom"
    name: str
    ty: "S.Term"
    body: Optional["S.Term"] = None
    origin: str = ""
    span: Span = Span.none()
    anchor: str = ""  # free-text provenance tag from the source comment


def check_declaration(env: Environment, d: Declaration) -> Environment:
    prev = env.lookup(d.name)
    if prev is not None:
        if prev.ty_term == d.ty and prev.def_term == d.body:
            return env  # idempotent re-check
        raise Diagnostic(E_DUP, f"duplicate name '{d.name}'", d.span)
    ctx = Ctx()
    with frame(f"checking {d.kind} {d.name}"):
        type_sort(env, ctx, d.ty)
        ty_v = evaluate(env, ctx.vars, d.ty)
        deps = frozenset(S.constants_of(d.ty))
        if d.kind == "axiom":
            if d.body is not None:
                raise Diagnostic(E_DUP, "axiom cannot have a body", d.span)
            entry = EnvEntry(d.name, ty_v, d.ty, None, None, d.origin, deps)
        else:
            if d.body is None:
                raise Diagnostic(E_INFER, f"def '{d.name}' has no body", d.span)
            with frame(f"checking the body of {d.name}"):
                check(env, ctx, d.body, ty_v)
            def_v = evaluate(env, ctx.vars, d.body)
            deps = deps | frozenset(S.constants_of(d.body))
            entry = EnvEntry(d.name, ty_v, d.ty, def_v, d.body, d.origin, deps)
    return env.extend(entry)


def axiom_audit(env: Environment, name: str) -> set:
    """Axioms (table axioms + user postulates) reachable from `name`."""
    seen: set = set()
    out: set = set()
    stack = [name]
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        pe = P.TABLE.get(n)
        if pe is not None:
            if pe.tag == P.AXIOM:
                out.add(n)
            continue
        e = env.lookup(n)
        if e is None:
            continue
        if e.is_postulate:
            out.add(n)
        stack.extend(e.deps)
    return out


def check_primitive_table() -> None:
    """Startup assertion: every telescope and result is a well-formed type."""
    env = Environment()
    for entry in P.TABLE.values():
        ctx = Ctx()
        with frame(f"checking primitive {entry.name}"):
            for nm, ty in entry.tele:
                type_sort(env, ctx, ty)
                ctx = ctx.bind(nm, evaluate(env, ctx.vars, ty))
            type_sort(env, ctx, entry.result)


def normalize_term(env: Environment, t: "S.Term",
                   ty: Optional["S.Term"] = None) -> "S.Term":
    ty_v = evaluate(env, (), ty) if ty is not None else None
    return readback(0, evaluate(env, (), t), ty_v)
