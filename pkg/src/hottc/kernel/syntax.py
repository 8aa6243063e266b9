"""Core term language.

Terms use nameless de Bruijn indices; binder names are kept as display
hints only and are ignored by structural equality, so conversion and
golden-file comparison never depend on source naming.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

Term = Union[
    "Var", "Uni", "Pi", "Lam", "App", "Sigma", "Pair", "Fst", "Snd",
    "IdT", "Refl", "Prim", "Const", "Ann", "Meta",
]


@dataclass(frozen=True)
class Var:
    idx: int  # de Bruijn index, 0 = innermost binder


@dataclass(frozen=True)
class Uni:
    level: int  # 0 = the univalent universe, 1 = the top sort


@dataclass(frozen=True)
class Pi:
    dom: "Term"
    cod: "Term"  # under one binder
    icit: bool = False  # implicit binder, elaboration-relevant only
    name: str = field(default="x", compare=False)


@dataclass(frozen=True)
class Lam:
    body: "Term"  # under one binder
    icit: bool = False
    name: str = field(default="x", compare=False)


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"
    icit: bool = field(default=False, compare=False)  # display hint


@dataclass(frozen=True)
class Sigma:
    dom: "Term"
    cod: "Term"  # under one binder
    name: str = field(default="x", compare=False)


@dataclass(frozen=True)
class Pair:
    fst: "Term"
    snd: "Term"


@dataclass(frozen=True)
class Fst:
    arg: "Term"


@dataclass(frozen=True)
class Snd:
    arg: "Term"


@dataclass(frozen=True)
class IdT:
    ty: "Term"
    lhs: "Term"
    rhs: "Term"


@dataclass(frozen=True)
class Refl:
    arg: "Term"


@dataclass(frozen=True)
class Prim:
    """Primitive constant applied to a spine; len(args) <= declared arity."""

    name: str
    args: tuple = ()


@dataclass(frozen=True)
class Const:
    """Reference to a globally named declaration."""

    name: str


@dataclass(frozen=True)
class Ann:
    term: "Term"
    ty: "Term"


@dataclass(frozen=True)
class Meta:
    """Elaboration-time metavariable; never reaches the kernel."""

    mid: int


def shift(t: Term, by: int, cutoff: int = 0) -> Term:
    """Shift free indices >= cutoff by `by`."""
    match t:
        case Var(idx):
            return Var(idx + by) if idx >= cutoff else t
        case Uni():
            return t
        case Pi(dom, cod, icit, name):
            return Pi(shift(dom, by, cutoff), shift(cod, by, cutoff + 1), icit, name)
        case Lam(body, icit, name):
            return Lam(shift(body, by, cutoff + 1), icit, name)
        case App(fn, arg, icit):
            return App(shift(fn, by, cutoff), shift(arg, by, cutoff), icit)
        case Sigma(dom, cod, name):
            return Sigma(shift(dom, by, cutoff), shift(cod, by, cutoff + 1), name)
        case Pair(a, b):
            return Pair(shift(a, by, cutoff), shift(b, by, cutoff))
        case Fst(a):
            return Fst(shift(a, by, cutoff))
        case Snd(a):
            return Snd(shift(a, by, cutoff))
        case IdT(ty, l, r):
            return IdT(shift(ty, by, cutoff), shift(l, by, cutoff), shift(r, by, cutoff))
        case Refl(a):
            return Refl(shift(a, by, cutoff))
        case Prim(name, args):
            return Prim(name, tuple(shift(a, by, cutoff) for a in args))
        case Const():
            return t
        case Ann(tm, ty):
            return Ann(shift(tm, by, cutoff), shift(ty, by, cutoff))
        case Meta():
            return t
    raise AssertionError(f"shift: unhandled {t!r}")


def max_free_index(t: Term, depth: int = 0) -> int:
    """Largest free index relative to `depth` binders, or -1 if closed."""
    match t:
        case Var(idx):
            return idx - depth if idx >= depth else -1
        case Uni() | Const() | Meta():
            return -1
        case Pi(dom, cod, _, _):
            return max(max_free_index(dom, depth), max_free_index(cod, depth + 1))
        case Lam(body, _, _):
            return max_free_index(body, depth + 1)
        case App(fn, arg, _):
            return max(max_free_index(fn, depth), max_free_index(arg, depth))
        case Sigma(dom, cod, _):
            return max(max_free_index(dom, depth), max_free_index(cod, depth + 1))
        case Pair(a, b):
            return max(max_free_index(a, depth), max_free_index(b, depth))
        case Fst(a) | Snd(a) | Refl(a):
            return max_free_index(a, depth)
        case IdT(ty, l, r):
            return max(max_free_index(ty, depth), max_free_index(l, depth),
                       max_free_index(r, depth))
        case Prim(_, args):
            return max((max_free_index(a, depth) for a in args), default=-1)
        case Ann(tm, ty):
            return max(max_free_index(tm, depth), max_free_index(ty, depth))
    raise AssertionError(f"max_free_index: unhandled {t!r}")


def well_scoped(t: Term, depth: int) -> bool:
    return max_free_index(t, depth) < 0


def subst_top(body: Term, val: Term) -> Term:
    """Substitute the innermost bound variable of `body` by `val`."""
    return _subst(body, 0, val)


def _subst(t: Term, k: int, val: Term) -> Term:
    match t:
        case Var(idx):
            if idx == k:
                return shift(val, k)
            return Var(idx - 1) if idx > k else t
        case Uni() | Const() | Meta():
            return t
        case Pi(dom, cod, icit, name):
            return Pi(_subst(dom, k, val), _subst(cod, k + 1, val), icit, name)
        case Lam(body_, icit, name):
            return Lam(_subst(body_, k + 1, val), icit, name)
        case App(fn, arg, icit):
            return App(_subst(fn, k, val), _subst(arg, k, val), icit)
        case Sigma(dom, cod, name):
            return Sigma(_subst(dom, k, val), _subst(cod, k + 1, val), name)
        case Pair(a, b):
            return Pair(_subst(a, k, val), _subst(b, k, val))
        case Fst(a):
            return Fst(_subst(a, k, val))
        case Snd(a):
            return Snd(_subst(a, k, val))
        case IdT(ty, l, r):
            return IdT(_subst(ty, k, val), _subst(l, k, val), _subst(r, k, val))
        case Refl(a):
            return Refl(_subst(a, k, val))
        case Prim(name, args):
            return Prim(name, tuple(_subst(a, k, val) for a in args))
        case Ann(tm, ty):
            return Ann(_subst(tm, k, val), _subst(ty, k, val))
    raise AssertionError(f"subst: unhandled {t!r}")


def constants_of(t: Term) -> set:
    """Names of Const and Prim references occurring in t."""
    out: set = set()
    stack = [t]
    while stack:
        s = stack.pop()
        match s:
            case Var() | Uni() | Meta():
                pass
            case Pi(dom, cod, _, _) | Sigma(dom, cod, _):
                stack += [dom, cod]
            case Lam(body, _, _):
                stack.append(body)
            case App(fn, arg, _):
                stack += [fn, arg]
            case Pair(a, b):
                stack += [a, b]
            case Fst(a) | Snd(a) | Refl(a):
                stack.append(a)
            case IdT(ty, l, r):
                stack += [ty, l, r]
            case Prim(name, args):
                out.add(name)
                stack += list(args)
            case Const(name):
                out.add(name)
            case Ann(tm, ty):
                stack += [tm, ty]
            case _:
                raise AssertionError(f"constants_of: unhandled {s!r}")
    return out


# ---------------------------------------------------------------------------
# Builder DSL: write closed terms with Python lambdas instead of raw indices.
# Binders are deferred (they hold Python functions); one bfix pass from the
# root resolves de Bruijn levels into indices, so the same raw subtree can be
# embedded at several depths.


@dataclass(frozen=True)
class _BVar:
    level: int


@dataclass(frozen=True)
class BPi:
    name: str
    dom: object
    cod_fn: object  # callable _BVar -> raw term
    icit: bool = False


@dataclass(frozen=True)
class BLam:
    name: str
    body_fn: object
    icit: bool = False


@dataclass(frozen=True)
class BSigma:
    name: str
    dom: object
    cod_fn: object


def barr(dom, cod):
    return BPi("_", dom, lambda _v: cod)


def bfix(t, depth: int = 0) -> Term:
    """Resolve a raw builder tree into a Term at the given binder depth."""
    match t:
        case _BVar(level):
            if level >= depth:
                raise AssertionError(f"builder var level {level} at {depth}")
            return Var(depth - 1 - level)
        case BPi(name, dom, cod_fn, icit):
            d = bfix(dom, depth)
            return Pi(d, bfix(cod_fn(_BVar(depth)), depth + 1), icit, name)
        case BLam(name, body_fn, icit):
            return Lam(bfix(body_fn(_BVar(depth)), depth + 1), icit, name)
        case BSigma(name, dom, cod_fn):
            d = bfix(dom, depth)
            return Sigma(d, bfix(cod_fn(_BVar(depth)), depth + 1), name)
        case Var() | Uni() | Const() | Meta():
            return t
        case Pi(dom, cod, icit, name):
            return Pi(bfix(dom, depth), bfix(cod, depth + 1), icit, name)
        case Lam(body, icit, name):
            return Lam(bfix(body, depth + 1), icit, name)
        case App(fn, arg, icit):
            return App(bfix(fn, depth), bfix(arg, depth), icit)
        case Sigma(dom, cod, name):
            return Sigma(bfix(dom, depth), bfix(cod, depth + 1), name)
        case Pair(a, b):
            return Pair(bfix(a, depth), bfix(b, depth))
        case Fst(a):
            return Fst(bfix(a, depth))
        case Snd(a):
            return Snd(bfix(a, depth))
        case IdT(ty, l, r):
            return IdT(bfix(ty, depth), bfix(l, depth), bfix(r, depth))
        case Refl(a):
            return Refl(bfix(a, depth))
        case Prim(name, args):
            return Prim(name, tuple(bfix(a, depth) for a in args))
        case Ann(tm, ty):
            return Ann(bfix(tm, depth), bfix(ty, depth))
    raise AssertionError(f"bfix: unhandled {t!r}")


def app(fn, *args):
    for a in args:
        fn = App(fn, a)
    return fn


def prim(name, *args):
    return Prim(name, tuple(args))


def arrow(dom, cod):
    """Non-dependent function type; cod must not mention the binder."""
    return Pi(dom, shift(cod, 1), False, "_")
