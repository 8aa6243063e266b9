"""Normalization by evaluation: evaluate, readback, conversion.

Evaluation unfolds defined constants eagerly (their values are computed
once per declaration and shared), applies the point β-rules from the
primitive table, and never rewrites path constructors or axioms; those
become neutral heads. Conversion is type-directed so η for Π, Σ and Unit
comes out uniformly; readback produces β-normal η-long terms.
"""

from __future__ import annotations

from typing import Callable, Optional

from . import primitives as P
from . import syntax as S
from .values import (
    Closure, HConst, HMeta, HPrim, HVar, SApp, SFst, SSnd, VId, VLam, VNe,
    VPair, VPi, VPrim, VRefl, VSigma, VUni, Value, vvar,
)


class KernelBug(Exception):
    """Internal invariant violation (never a user-level error)."""


_TRACE: Optional[Callable] = None


class tracing:
    """Context manager installing a reduction-event callback (tests only)."""

    def __init__(self, cb):
        self.cb = cb

    def __enter__(self):
        global _TRACE
        self._old, _TRACE = _TRACE, self.cb
        return self

    def __exit__(self, *exc):
        global _TRACE
        _TRACE = self._old
        return False


class _CloEnv:
    """What a closure captures: globals, local values, metavariable store."""

    __slots__ = ("env", "rho", "mstore")

    def __init__(self, env, rho, mstore):
        self.env = env
        self.rho = rho
        self.mstore = mstore


class _RuleApi:
    @staticmethod
    def apply(f, a):
        return apply_value(f, a)

    @staticmethod
    def prim(name, *args):
        return make_prim(name, tuple(args))


_API = _RuleApi()


def evaluate(env, rho: tuple, t: "S.Term", mstore=None) -> Value:
    match t:
        case S.Var(idx):
            try:
                return rho[-1 - idx]
            except IndexError:
                raise KernelBug(f"ill-scoped index {idx} in |rho|={len(rho)}")
        case S.Uni(level):
            return VUni(level)
        case S.Pi(dom, cod, icit, name):
            return VPi(evaluate(env, rho, dom, mstore),
                       Closure(_CloEnv(env, rho, mstore), cod, name, icit))
        case S.Lam(body, icit, name):
            return VLam(Closure(_CloEnv(env, rho, mstore), body, name, icit))
        case S.App(fn, arg, _):
            return apply_value(evaluate(env, rho, fn, mstore),
                               evaluate(env, rho, arg, mstore))
        case S.Sigma(dom, cod, name):
            return VSigma(evaluate(env, rho, dom, mstore),
                          Closure(_CloEnv(env, rho, mstore), cod, name))
        case S.Pair(a, b):
            return VPair(evaluate(env, rho, a, mstore),
                         evaluate(env, rho, b, mstore))
        case S.Fst(a):
            return vfst(evaluate(env, rho, a, mstore))
        case S.Snd(a):
            return vsnd(evaluate(env, rho, a, mstore))
        case S.IdT(ty, lhs, rhs):
            return VId(evaluate(env, rho, ty, mstore),
                       evaluate(env, rho, lhs, mstore),
                       evaluate(env, rho, rhs, mstore))
        case S.Refl(a):
            return VRefl(evaluate(env, rho, a, mstore))
        case S.Prim(name, args):
            return make_prim(name,
                             tuple(evaluate(env, rho, a, mstore) for a in args))
        case S.Const(name):
            if env is None:
                raise KernelBug(f"constant {name} with no environment")
            e = env.lookup(name)
            if e is None:
                raise KernelBug(f"unknown constant {name}")
            if e.def_v is not None:
                return e.def_v
            return VNe(HConst(name, e.ty_v))
        case S.Ann(tm, _):
            return evaluate(env, rho, tm, mstore)
        case S.Meta(mid):
            if mstore is not None:
                sol = mstore.solution(mid)
                if sol is not None:
                    return sol
                return VNe(HMeta(mid))
            raise KernelBug(f"metavariable ?{mid} reached the kernel")
    raise KernelBug(f"evaluate: unhandled {t!r}")


def apply_closure(clo: Closure, a: Value) -> Value:
    ce = clo.env
    return evaluate(ce.env, ce.rho + (a,), clo.body, ce.mstore)


def close(env, rho: tuple, body: "S.Term", name: str = "x",
          icit: bool = False, mstore=None) -> Closure:
    return Closure(_CloEnv(env, rho, mstore), body, name, icit)


def apply_value(f: Value, a: Value, icit: bool = False) -> Value:
    match f:
        case VLam(clo):
            return apply_closure(clo, a)
        case VPrim(name, args):
            return make_prim(name, args + (a,))
        case VNe(head, spine):
            return VNe(head, spine + (SApp(a, icit),))
    raise KernelBug(f"apply of non-function {type(f).__name__}")


def vfst(v: Value) -> Value:
    match v:
        case VPair(a, _):
            return a
        case VNe(head, spine):
            return VNe(head, spine + (SFst(),))
    raise KernelBug(f"fst of non-pair {type(v).__name__}")


def vsnd(v: Value) -> Value:
    match v:
        case VPair(_, b):
            return b
        case VNe(head, spine):
            return VNe(head, spine + (SSnd(),))
    raise KernelBug(f"snd of non-pair {type(v).__name__}")


def make_prim(name: str, args: tuple) -> Value:
    entry = P.TABLE.get(name)
    if entry is None:
        raise KernelBug(f"unknown primitive {name}")
    if len(args) > entry.arity:
        raise KernelBug(f"{name} oversaturated")
    if len(args) < entry.arity:
        return VPrim(name, args)
    if entry.tag in (P.FORMER, P.INTRO):
        return VPrim(name, args)
    if entry.tag == P.ELIM:
        scr = args[entry.scrut]
        key = None
        if isinstance(scr, VPrim):
            key = scr.name
        elif isinstance(scr, VRefl):
            key = "refl"
        if key is not None and key in entry.rules:
            if _TRACE is not None:
                _TRACE(("reduce", name, key))
            return entry.rules[key](args, _API)
    # stuck eliminator or axiom
    return VNe(HPrim(name), tuple(SApp(a) for a in args))


_EMPTY_RHO: tuple = ()
_PRIM_TYPE_CACHE: dict = {}


def prim_entry_type(name: str) -> Value:
    """Evaluated closed Pi-type of a primitive."""
    v = _PRIM_TYPE_CACHE.get(name)
    if v is None:
        v = evaluate(None, _EMPTY_RHO, P.TABLE[name].pi_type())
        _PRIM_TYPE_CACHE[name] = v
    return v


def tele_types(name: str, args: tuple):
    """Types of the first len(args) telescope slots, instantiated."""
    e = P.TABLE[name]
    out = []
    rho: tuple = ()
    for i, a in enumerate(args):
        out.append(evaluate(None, rho, e.tele[i][1]))
        rho = rho + (a,)
    return out


def prim_result_type(name: str, args: tuple) -> Value:
    e = P.TABLE[name]
    if len(args) == e.arity:
        return evaluate(None, args, e.result)
    t = e.result
    for nm, dom in reversed(e.tele[len(args):]):
        t = S.Pi(dom, t, False, nm)
    return evaluate(None, args, t)


# -- readback ------------------------------------------------------------------

def readback(depth: int, v: Value, ty: Optional[Value] = None) -> "S.Term":
    """β-normal, η-long quotation. Type-directed where a type is known;
    neutral heads carry types, so η-expansion applies inside spines too."""
    match ty:
        case VPi(dom, cod):
            x = vvar(depth, dom, cod.name)
            return S.Lam(readback(depth + 1, apply_value(v, x),
                                  apply_closure(cod, x)),
                         cod.icit, cod.name)
        case VSigma(dom, cod):
            a = vfst(v)
            return S.Pair(readback(depth, a, dom),
                          readback(depth, vsnd(v), apply_closure(cod, a)))
        case VPrim("Unit", ()):
            return S.Prim("star", ())
        case VId(t, l, _):
            if isinstance(v, VRefl):
                return S.Refl(readback(depth, l, t))
    return _readback_structural(depth, v)


def _readback_structural(depth: int, v: Value) -> "S.Term":
    match v:
        case VUni(l):
            return S.Uni(l)
        case VPi(dom, cod):
            x = vvar(depth, dom, cod.name)
            return S.Pi(readback(depth, dom),
                        readback(depth + 1, apply_closure(cod, x)),
                        cod.icit, cod.name)
        case VSigma(dom, cod):
            x = vvar(depth, dom, cod.name)
            return S.Sigma(readback(depth, dom),
                           readback(depth + 1, apply_closure(cod, x)),
                           cod.name)
        case VId(t, l, r):
            return S.IdT(readback(depth, t),
                         readback(depth, l, t), readback(depth, r, t))
        case VRefl(a):
            return S.Refl(readback(depth, a))
        case VLam(clo):
            x = vvar(depth, None, clo.name)
            return S.Lam(readback(depth + 1, apply_closure(clo, x)),
                         clo.icit, clo.name)
        case VPair(a, b):
            return S.Pair(readback(depth, a), readback(depth, b))
        case VPrim(name, args):
            tys = tele_types(name, args)
            return S.Prim(name, tuple(readback(depth, a, t)
                                      for a, t in zip(args, tys)))
        case VNe(head, spine):
            return _readback_neutral(depth, head, spine)
    raise KernelBug(f"readback: unhandled {type(v).__name__}")


def _readback_neutral(depth: int, head, spine) -> "S.Term":
    match head:
        case HVar(lvl, hty, _):
            if lvl >= depth:
                raise KernelBug(f"readback: level {lvl} at depth {depth}")
            term: S.Term = S.Var(depth - 1 - lvl)
            ty = hty
        case HConst(name, hty):
            term = S.Const(name)
            ty = hty
        case HPrim(name):
            term = S.Prim(name, ())
            ty = prim_entry_type(name)
        case HMeta(mid):
            raise KernelBug(f"readback of unsolved metavariable ?{mid}")
        case _:
            raise KernelBug("readback: bad neutral head")
    prefix = VNe(head)
    for sp in spine:
        match sp:
            case SApp(a, icit):
                if isinstance(ty, VPi):
                    arg_tm = readback(depth, a, ty.dom)
                    ty = apply_closure(ty.cod, a)
                else:
                    arg_tm = readback(depth, a)
                    ty = None
                if isinstance(term, S.Prim) and \
                        len(term.args) < P.TABLE[term.name].arity:
                    term = S.Prim(term.name, term.args + (arg_tm,))
                else:
                    term = S.App(term, arg_tm, icit)
            case SFst():
                term = S.Fst(term)
                ty = ty.dom if isinstance(ty, VSigma) else None
            case SSnd():
                term = S.Snd(term)
                ty = (apply_closure(ty.cod, vfst(prefix))
                      if isinstance(ty, VSigma) else None)
            case _:
                raise KernelBug("readback: bad spine entry")
        prefix = VNe(prefix.head, prefix.spine + (sp,))
    return term


# -- conversion ----------------------------------------------------------------

def convertible(env, depth: int, v1: Value, v2: Value,
                ty: Optional[Value] = None) -> bool:
    """Decide definitional equality, type-directed (η for Π, Σ, Unit)."""
    return _conv(depth, v1, v2, ty, {})


def _conv(depth, v1, v2, ty, cache) -> bool:
    if v1 is v2:
        return True
    key = (id(v1), id(v2), depth, id(ty))
    hit = cache.get(key)
    if hit is not None:
        return hit[0]
    res = _conv_work(depth, v1, v2, ty, cache)
    cache[key] = (res, v1, v2, ty)
    return res


def _conv_work(depth, v1, v2, ty, cache) -> bool:
    match ty:
        case VPi(dom, cod):
            x = vvar(depth, dom, cod.name)
            return _conv(depth + 1, apply_value(v1, x), apply_value(v2, x),
                         apply_closure(cod, x), cache)
        case VSigma(dom, cod):
            a1, a2 = vfst(v1), vfst(v2)
            if not _conv(depth, a1, a2, dom, cache):
                return False
            return _conv(depth, vsnd(v1), vsnd(v2),
                         apply_closure(cod, a1), cache)
        case VPrim("Unit", ()):
            return True
        case VId(_, _, _):
            if isinstance(v1, VRefl) and isinstance(v2, VRefl):
                return True
    match (v1, v2):
        case (VUni(l1), VUni(l2)):
            return l1 == l2
        case (VPi(d1, c1), VPi(d2, c2)):
            if c1.icit != c2.icit or not _conv(depth, d1, d2, None, cache):
                return False
            x = vvar(depth, d1, c1.name)
            return _conv(depth + 1, apply_closure(c1, x),
                         apply_closure(c2, x), None, cache)
        case (VSigma(d1, c1), VSigma(d2, c2)):
            if not _conv(depth, d1, d2, None, cache):
                return False
            x = vvar(depth, d1, c1.name)
            return _conv(depth + 1, apply_closure(c1, x),
                         apply_closure(c2, x), None, cache)
        case (VId(t1, l1, r1), VId(t2, l2, r2)):
            return (_conv(depth, t1, t2, None, cache)
                    and _conv(depth, l1, l2, t1, cache)
                    and _conv(depth, r1, r2, t1, cache))
        case (VRefl(a1), VRefl(a2)):
            return _conv(depth, a1, a2, None, cache)
        case (VPrim(n1, a1), VPrim(n2, a2)):
            if n1 != n2 or len(a1) != len(a2):
                return False
            tys = tele_types(n1, a1)
            return all(_conv(depth, x, y, t, cache)
                       for x, y, t in zip(a1, a2, tys))
        case (VNe(h1, s1), VNe(h2, s2)):
            return _conv_neutral(depth, h1, s1, h2, s2, cache)
        case (VLam(_), _) | (_, VLam(_)):
            x = vvar(depth)
            return _conv(depth + 1, apply_value(v1, x), apply_value(v2, x),
                         None, cache)
        case (VPair(_, _), _) | (_, VPair(_, _)):
            return (_conv(depth, vfst(v1), vfst(v2), None, cache)
                    and _conv(depth, vsnd(v1), vsnd(v2), None, cache))
    return False


def _head_eq(h1, h2) -> bool:
    match (h1, h2):
        case (HVar(l1, _, _), HVar(l2, _, _)):
            return l1 == l2
        case (HConst(n1, _), HConst(n2, _)):
            return n1 == n2
        case (HPrim(n1), HPrim(n2)):
            return n1 == n2
        case (HMeta(m1), HMeta(m2)):
            return m1 == m2
    return False


def _head_type(h) -> Optional[Value]:
    match h:
        case HVar(_, ty, _):
            return ty
        case HConst(_, ty):
            return ty
        case HPrim(name):
            return prim_entry_type(name)
    return None


def _conv_neutral(depth, h1, s1, h2, s2, cache) -> bool:
    if not _head_eq(h1, h2) or len(s1) != len(s2):
        return False
    ty = _head_type(h1)
    prefix = VNe(h1)
    for e1, e2 in zip(s1, s2):
        match (e1, e2):
            case (SApp(a1, _), SApp(a2, _)):
                dom = ty.dom if isinstance(ty, VPi) else None
                if not _conv(depth, a1, a2, dom, cache):
                    return False
                ty = apply_closure(ty.cod, a1) if isinstance(ty, VPi) else None
            case (SFst(), SFst()):
                ty = ty.dom if isinstance(ty, VSigma) else None
            case (SSnd(), SSnd()):
                ty = (apply_closure(ty.cod, vfst(prefix))
                      if isinstance(ty, VSigma) else None)
            case _:
                return False
        prefix = VNe(prefix.head, prefix.spine + (e1,))
    return True


def neutral_result_type(v: VNe) -> Optional[Value]:
    """Type of a neutral value, pushed through its spine; None if unknown."""
    ty = _head_type(v.head)
    prefix = VNe(v.head)
    for sp in v.spine:
        if ty is None:
            return None
        match sp:
            case SApp(a, _):
                ty = apply_closure(ty.cod, a) if isinstance(ty, VPi) else None
            case SFst():
                ty = ty.dom if isinstance(ty, VSigma) else None
            case SSnd():
                ty = (apply_closure(ty.cod, vfst(prefix))
                      if isinstance(ty, VSigma) else None)
        prefix = VNe(prefix.head, prefix.spine + (sp,))
    return ty


def subtype(env, depth: int, v1: Value, v2: Value) -> bool:
    """Cumulative inclusion: U0 ≤ U1, covariantly through Π/Σ codomains."""
    match (v1, v2):
        case (VUni(l1), VUni(l2)):
            return l1 <= l2
        case (VPi(d1, c1), VPi(d2, c2)):
            if c1.icit != c2.icit or not _conv(depth, d1, d2, None, {}):
                return False
            x = vvar(depth, d1, c1.name)
            return subtype(env, depth + 1, apply_closure(c1, x),
                           apply_closure(c2, x))
        case (VSigma(d1, c1), VSigma(d2, c2)):
            if not subtype(env, depth, d1, d2):
                return False
            x = vvar(depth, d1, c1.name)
            return subtype(env, depth + 1, apply_closure(c1, x),
                           apply_closure(c2, x))
    return _conv(depth, v1, v2, None, {})
