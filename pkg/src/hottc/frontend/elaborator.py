"""Elaboration of surface syntax to kernel terms.

Name resolution, implicit insertion, metavariable creation and
pattern-fragment unification. The output is metavariable-free and is
re-checked by the kernel afterwards; the elaborator is not trusted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from ..kernel import primitives as P
from ..kernel import syntax as S
from ..kernel.diagnostics import (
    Diagnostic, E_CONV, E_INFER, E_META, E_SCOPE, E_UNIV, Span,
)
from ..kernel.evaluate import (
    apply_closure, apply_value, evaluate, prim_entry_type, vfst, vsnd,
)
from ..kernel.rules import Ctx, Declaration, Environment, TOP
from ..kernel.values import (
    Closure, HConst, HMeta, HPrim, HVar, SApp, SFst, SSnd, VId, VLam, VNe,
    VPair, VPi, VPrim, VRefl, VSigma, VUni, Value, vvar,
)
from . import surface as X


class UnifyError(Exception):
    pass


@dataclass
class MetaEntry:
    mid: int
    ty: Optional[Value]
    span: Span
    ctx_names: tuple
    solution: Optional[Value] = None
    note: str = ""
    closed_ty: Optional[object] = None  # Π-closed Term, for zonk annotations


class MetaStore:
    def __init__(self):
        self.entries: list = []

    def fresh(self, ty, span, ctx_names, note="", closed_ty=None) -> int:
        m = MetaEntry(len(self.entries), ty, span, ctx_names, None, note,
                      closed_ty)
        self.entries.append(m)
        return m.mid

    def solution(self, mid: int) -> Optional[Value]:
        return self.entries[mid].solution

    def solve(self, mid: int, v: Value):
        self.entries[mid].solution = v

    def unsolved(self):
        return [e for e in self.entries if e.solution is None]


class Elaborator:
    def __init__(self, env: Environment, resolve: Callable,
                 trace: Optional[Callable] = None, origin: str = ""):
        self.env = env
        self.resolve = resolve  # bare name -> ("const", qname)|("prim", name)|None
        self.trace = trace
        self.origin = origin
        self.ms = MetaStore()

    # -- helpers ----------------------------------------------------------------

    def eval(self, ctx: Ctx, t: "S.Term") -> Value:
        return evaluate(self.env, ctx.vars, t, self.ms)

    def force(self, v: Value) -> Value:
        while isinstance(v, VNe) and isinstance(v.head, HMeta):
            sol = self.ms.solution(v.head.mid)
            if sol is None:
                return v
            for sp in v.spine:
                match sp:
                    case SApp(a, icit):
                        sol = apply_value(sol, a, icit)
                    case SFst():
                        sol = vfst(sol)
                    case SSnd():
                        sol = vsnd(sol)
            v = sol
        return v

    def fresh_meta(self, ctx: Ctx, ty: Optional[Value], span: Span,
                   note: str = "") -> "S.Term":
        # closed Π-type over the context telescope, used by zonk to re-insert
        # solutions behind an inferable annotation
        ct = self.equote(ctx.depth, ty) if ty is not None else S.Uni(1)
        for i in reversed(range(ctx.depth)):
            ct = S.Pi(self.equote(i, ctx.types[i]), ct, False, ctx.names[i])
        mid = self.ms.fresh(ty, span, ctx.names, note, ct)
        if self.trace:
            self.trace(f"meta ?{mid} created ({note or 'hole'})")
        t: S.Term = S.Meta(mid)
        for lvl in range(ctx.depth):
            t = S.App(t, S.Var(ctx.depth - 1 - lvl))
        return t

    def _diag(self, code, msg, span, expected=None, actual=None):
        return Diagnostic(code, msg, span, expected, actual)

    # -- quotation (meta-aware, untyped) ----------------------------------------

    def equote(self, depth: int, v: Value) -> "S.Term":
        v = self.force(v)
        match v:
            case VUni(l):
                return S.Uni(l)
            case VPi(dom, cod):
                x = vvar(depth, dom, cod.name)
                return S.Pi(self.equote(depth, dom),
                            self.equote(depth + 1, apply_closure(cod, x)),
                            cod.icit, cod.name)
            case VSigma(dom, cod):
                x = vvar(depth, dom, cod.name)
                return S.Sigma(self.equote(depth, dom),
                               self.equote(depth + 1, apply_closure(cod, x)),
                               cod.name)
            case VLam(clo):
                x = vvar(depth, None, clo.name)
                return S.Lam(self.equote(depth + 1, apply_closure(clo, x)),
                             clo.icit, clo.name)
            case VPair(a, b):
                return S.Pair(self.equote(depth, a), self.equote(depth, b))
            case VId(t, l, r):
                return S.IdT(self.equote(depth, t), self.equote(depth, l),
                             self.equote(depth, r))
            case VRefl(a):
                return S.Refl(self.equote(depth, a))
            case VPrim(name, args):
                return S.Prim(name, tuple(self.equote(depth, a) for a in args))
            case VNe(head, spine):
                match head:
                    case HVar(lvl, _, _):
                        t: S.Term = S.Var(depth - 1 - lvl)
                    case HConst(name, _):
                        t = S.Const(name)
                    case HPrim(name):
                        t = S.Prim(name, ())
                    case HMeta(mid):
                        t = S.Meta(mid)
                for sp in spine:
                    match sp:
                        case SApp(a, icit):
                            a_t = self.equote(depth, a)
                            if isinstance(t, S.Prim) and \
                                    len(t.args) < P.TABLE[t.name].arity:
                                t = S.Prim(t.name, t.args + (a_t,))
                            else:
                                t = S.App(t, a_t, icit)
                        case SFst():
                            t = S.Fst(t)
                        case SSnd():
                            t = S.Snd(t)
                return t
        raise self._diag(E_INFER, f"equote: unhandled {type(v).__name__}",
                         Span.none())

    # -- unification -------------------------------------------------------------

    def unify(self, depth: int, v1: Value, v2: Value):
        v1, v2 = self.force(v1), self.force(v2)
        if v1 is v2:
            return
        f1 = isinstance(v1, VNe) and isinstance(v1.head, HMeta)
        f2 = isinstance(v2, VNe) and isinstance(v2.head, HMeta)
        if f1 and f2 and v1.head.mid == v2.head.mid:
            if len(v1.spine) == len(v2.spine):
                self._unify_spines(depth, v1.spine, v2.spine)
                return
            raise UnifyError("meta spine length mismatch")
        if f1:
            try:
                self._solve(depth, v1, v2)
                return
            except UnifyError:
                if not f2:
                    raise
        if f2:
            self._solve(depth, v2, v1)
            return
        if self._unit_valued(v1) and self._unit_valued(v2):
            return  # Unit-η
        self._unify_rigid(depth, v1, v2)

    def _unit_valued(self, v: Value) -> bool:
        from ..kernel.evaluate import neutral_result_type
        if isinstance(v, VPrim) and v.name == "star":
            return True
        if isinstance(v, VNe) and not isinstance(v.head, HMeta):
            ty = neutral_result_type(v)
            if ty is not None:
                ty = self.force(ty)
            return isinstance(ty, VPrim) and ty.name == "Unit"
        return False

    def _unify_spines(self, depth, s1, s2):
        for e1, e2 in zip(s1, s2):
            match (e1, e2):
                case (SApp(a1, _), SApp(a2, _)):
                    self.unify(depth, a1, a2)
                case (SFst(), SFst()) | (SSnd(), SSnd()):
                    pass
                case _:
                    raise UnifyError("spine shape mismatch")

    def _unify_rigid(self, depth, v1, v2):
        match (v1, v2):
            case (VUni(l1), VUni(l2)):
                if l1 != l2:
                    raise UnifyError("universe mismatch")
            case (VPi(d1, c1), VPi(d2, c2)):
                if c1.icit != c2.icit:
                    raise UnifyError("implicitness mismatch")
                self.unify(depth, d1, d2)
                x = vvar(depth, d1, c1.name)
                self.unify(depth + 1, apply_closure(c1, x),
                           apply_closure(c2, x))
            case (VSigma(d1, c1), VSigma(d2, c2)):
                self.unify(depth, d1, d2)
                x = vvar(depth, d1, c1.name)
                self.unify(depth + 1, apply_closure(c1, x),
                           apply_closure(c2, x))
            case (VId(t1, l1, r1), VId(t2, l2, r2)):
                self.unify(depth, t1, t2)
                self.unify(depth, l1, l2)
                self.unify(depth, r1, r2)
            case (VRefl(a1), VRefl(a2)):
                self.unify(depth, a1, a2)
            case (VPrim(n1, a1), VPrim(n2, a2)):
                if n1 != n2 or len(a1) != len(a2):
                    raise UnifyError(f"{n1} vs {n2}")
                for x, y in zip(a1, a2):
                    self.unify(depth, x, y)
            case (VLam(_), _) | (_, VLam(_)):
                x = vvar(depth)
                self.unify(depth + 1, apply_value(v1, x), apply_value(v2, x))
            case (VPair(_, _), _) | (_, VPair(_, _)):
                self.unify(depth, vfst(v1), vfst(v2))
                self.unify(depth, vsnd(v1), vsnd(v2))
            case (VNe(h1, s1), VNe(h2, s2)):
                ok = False
                match (h1, h2):
                    case (HVar(l1, _, _), HVar(l2, _, _)):
                        ok = l1 == l2
                    case (HConst(n1, _), HConst(n2, _)):
                        ok = n1 == n2
                    case (HPrim(n1), HPrim(n2)):
                        ok = n1 == n2
                if not ok or len(s1) != len(s2):
                    raise UnifyError("neutral mismatch")
                self._unify_spines(depth, s1, s2)
            case _:
                raise UnifyError(
                    f"{type(v1).__name__} vs {type(v2).__name__}")

    def _solve(self, depth: int, flex: VNe, rhs: Value):
        mid = flex.head.mid
        # pattern condition: spine is applications of distinct bound variables
        lvls = []
        for sp in flex.spine:
            if not (isinstance(sp, SApp) and isinstance(sp.arg, VNe)
                    and isinstance(sp.arg.head, HVar)
                    and not sp.arg.spine):
                raise UnifyError("non-pattern spine")
            lvl = sp.arg.head.lvl
            if lvl in lvls:
                raise UnifyError("non-linear spine")
            lvls.append(lvl)
        ren = {lvl: i for i, lvl in enumerate(lvls)}
        body = self._pattern_quote(rhs, ren, depth, len(lvls), mid)
        for i in reversed(range(len(lvls))):
            body = S.Lam(body, False, f"x{i}")
        sol = evaluate(self.env, (), body, self.ms)
        self.ms.solve(mid, sol)
        if self.trace:
            self.trace(f"meta ?{mid} solved")

    def _pattern_quote(self, v: Value, ren: dict, src: int, dst: int,
                       mid: int) -> "S.Term":
        v = self.force(v)
        match v:
            case VUni(l):
                return S.Uni(l)
            case VPi(dom, cod):
                d = self._pattern_quote(dom, ren, src, dst, mid)
                x = vvar(src, dom, cod.name)
                c = self._pattern_quote(apply_closure(cod, x),
                                        {**ren, src: dst}, src + 1, dst + 1,
                                        mid)
                return S.Pi(d, c, cod.icit, cod.name)
            case VSigma(dom, cod):
                d = self._pattern_quote(dom, ren, src, dst, mid)
                x = vvar(src, dom, cod.name)
                c = self._pattern_quote(apply_closure(cod, x),
                                        {**ren, src: dst}, src + 1, dst + 1,
                                        mid)
                return S.Sigma(d, c, cod.name)
            case VLam(clo):
                x = vvar(src, None, clo.name)
                b = self._pattern_quote(apply_closure(clo, x),
                                        {**ren, src: dst}, src + 1, dst + 1,
                                        mid)
                return S.Lam(b, clo.icit, clo.name)
            case VPair(a, b):
                return S.Pair(self._pattern_quote(a, ren, src, dst, mid),
                              self._pattern_quote(b, ren, src, dst, mid))
            case VId(t, l, r):
                return S.IdT(self._pattern_quote(t, ren, src, dst, mid),
                             self._pattern_quote(l, ren, src, dst, mid),
                             self._pattern_quote(r, ren, src, dst, mid))
            case VRefl(a):
                return S.Refl(self._pattern_quote(a, ren, src, dst, mid))
            case VPrim(name, args):
                return S.Prim(name, tuple(
                    self._pattern_quote(a, ren, src, dst, mid) for a in args))
            case VNe(head, spine):
                match head:
                    case HVar(lvl, _, _):
                        if lvl not in ren:
                            raise UnifyError("solution escapes its scope")
                        t: S.Term = S.Var(dst - 1 - ren[lvl])
                    case HConst(name, _):
                        t = S.Const(name)
                    case HPrim(name):
                        t = S.Prim(name, ())
                    case HMeta(m2):
                        if m2 == mid:
                            raise UnifyError("occurs check failed")
                        t = S.Meta(m2)
                for sp in spine:
                    match sp:
                        case SApp(a, icit):
                            at = self._pattern_quote(a, ren, src, dst, mid)
                            if isinstance(t, S.Prim) and \
                                    len(t.args) < P.TABLE[t.name].arity:
                                t = S.Prim(t.name, t.args + (at,))
                            else:
                                t = S.App(t, at, icit)
                        case SFst():
                            t = S.Fst(t)
                        case SSnd():
                            t = S.Snd(t)
                return t
        raise UnifyError(f"cannot quote {type(v).__name__}")

    def usubtype(self, depth: int, got: Value, want: Value) -> bool:
        got, want = self.force(got), self.force(want)
        # a flexible type below U1 stays unconstrained (it may land in either
        # universe); the kernel re-check is the final authority
        if isinstance(want, VUni) and want.level == 1 and \
                isinstance(got, VNe) and isinstance(got.head, HMeta):
            return True
        match (got, want):
            case (VUni(l1), VUni(l2)):
                return l1 <= l2
            case (VPi(d1, c1), VPi(d2, c2)):
                if c1.icit != c2.icit:
                    return False
                try:
                    self.unify(depth, d1, d2)
                except UnifyError:
                    return False
                x = vvar(depth, d1, c1.name)
                return self.usubtype(depth + 1, apply_closure(c1, x),
                                     apply_closure(c2, x))
            case (VSigma(d1, c1), VSigma(d2, c2)):
                if not self.usubtype(depth, d1, d2):
                    return False
                x = vvar(depth, d1, c1.name)
                return self.usubtype(depth + 1, apply_closure(c1, x),
                                     apply_closure(c2, x))
        try:
            self.unify(depth, got, want)
            return True
        except UnifyError:
            return False

    # -- names --------------------------------------------------------------------

    def _lookup(self, ctx: Ctx, name: str, span: Span):
        """Resolve a name: local binders, then globals, then primitives."""
        if "." not in name:
            for i in range(ctx.depth):
                if ctx.names[-1 - i] == name:
                    return S.Var(i), ctx.types[-1 - i]
        r = self.resolve(name)
        if r is None:
            raise self._diag(E_SCOPE, f"unresolved name '{name}'", span)
        kind, target = r
        if kind == "const":
            return S.Const(target), self.env.lookup(target).ty_v
        return S.Prim(target, ()), prim_entry_type(target)

    # -- main elaboration ----------------------------------------------------------

    def infer(self, ctx: Ctx, s) -> tuple:
        match s:
            case X.SVar(name, span):
                if name == "Id":
                    raise self._diag(E_INFER, "Id expects three arguments",
                                     span)
                if name == "refl":
                    raise self._diag(
                        E_INFER, "refl needs a checking type or an argument",
                        span)
                return self._lookup(ctx, name, span)
            case X.SUni(0, _):
                return S.Uni(0), VUni(1)
            case X.SUni(1, span):
                raise self._diag(E_UNIV, "U1 has no type", span)
            case X.SPi(_, _, span) | X.SSigma(_, _, span):
                t, sort = self.elab_type(ctx, s)
                if sort == TOP:
                    raise self._diag(E_UNIV,
                                     "type lives in no universe", span)
                return t, VUni(sort)
            case X.SEq(lhs, rhs, span):
                lt, lty = self.infer(ctx, lhs)
                lty = self.force(lty)
                a_term = self.equote(ctx.depth, lty)
                rt = self.check(ctx, rhs, lty)
                sort = self._sort_of_value(ctx, lty, span)
                return S.IdT(a_term, lt, rt), VUni(sort)
            case X.SNum(n, _):
                t: S.Term = S.Prim("zero", ())
                for _ in range(n):
                    t = S.Prim("succ", (t,))
                return t, VPrim("Nat", ())
            case X.SHole(span):
                ty_m = self.fresh_meta(ctx, None, span, "type of hole")
                ty_v = self.eval(ctx, ty_m)
                tm = self.fresh_meta(ctx, ty_v, span, "hole")
                return tm, ty_v
            case X.SProj(tm, fld, span):
                t, ty = self.infer(ctx, tm)
                ty = self.force(ty)
                if not isinstance(ty, VSigma):
                    raise self._diag(E_CONV, "projection from a non-pair",
                                     span, actual=self.equote(ctx.depth, ty))
                if fld == 1:
                    return S.Fst(t), ty.dom
                return S.Snd(t), apply_closure(ty.cod, vfst(self.eval(ctx, t)))
            case X.SApp(_, _, _, _):
                return self.infer_app(ctx, s)
            case X.SLam(binders, body, span):
                if any(b.ty is None for b in binders):
                    raise self._diag(
                        E_INFER, "cannot infer an unannotated abstraction",
                        span)
                return self._infer_annotated_lam(ctx, binders, body)
            case X.SLet(_, _, _, _, _):
                return self._elab_let(ctx, s, None)
            case X.SAnn(tm, ty, _):
                ty_t, _ = self.elab_type(ctx, ty)
                ty_v = self.eval(ctx, ty_t)
                t = self.check(ctx, tm, ty_v)
                return S.Ann(t, ty_t), ty_v
            case X.SInd(_, _, _, span):
                return self._elab_ind(ctx, s, None)
            case X.SPair(_, _, span):
                raise self._diag(E_INFER, "cannot infer the type of a pair",
                                 span)
        raise self._diag(E_INFER, f"cannot infer {type(s).__name__}",
                         X.span_of(s))

    def _sort_of_value(self, ctx: Ctx, ty_v: Value, span) -> int:
        """Universe level of a type value (for Id formation)."""
        ty_v = self.force(ty_v)
        match ty_v:
            case VUni(0):
                return 1
            case VUni(1):
                raise self._diag(E_UNIV, "identity over a too-large type",
                                 span)
            case VPi(dom, cod) | VSigma(dom, cod):
                s1 = self._sort_of_value(ctx, dom, span)
                x = vvar(ctx.depth, dom)
                s2 = self._sort_of_value(ctx.bind(cod.name, dom),
                                         apply_closure(cod, x), span)
                return max(s1, s2)
            case VId(t, _, _):
                return self._sort_of_value(ctx, t, span)
            case VPrim(name, args):
                rt = self.force(
                    evaluate(None, args, P.TABLE[name].result)
                    if len(args) == P.TABLE[name].arity else VUni(0))
                if isinstance(rt, VUni):
                    return rt.level
                return 0
            case VNe(HVar(_, hty, _), _) | VNe(HConst(_, hty), _):
                hty2 = self.force(hty) if hty is not None else None
                # neutral type: its universe is its head-computed sort
                return self._sort_from_neutral(ctx, ty_v, span)
        return self._sort_from_neutral(ctx, ty_v, span)

    def _sort_from_neutral(self, ctx: Ctx, ty_v: Value, span) -> int:
        # infer the type of the quoted type and read off the universe
        from ..kernel import rules as R
        t = self.equote(ctx.depth, ty_v)
        try:
            sort = R.type_sort(self.env, ctx, t)
        except Diagnostic:
            return 0
        if sort == TOP:
            raise self._diag(E_UNIV, "identity over a too-large type", span)
        return sort

    def _infer_annotated_lam(self, ctx: Ctx, binders, body):
        if not binders:
            t, ty = self.infer(ctx, body)
            return t, ty
        b = binders[0]
        ty_t, _ = self.elab_type(ctx, b.ty)
        names = list(b.names)
        ctxs = [ctx]
        doms = []
        for nm in names:
            ty_v = self.eval(ctxs[-1], ty_t if not doms else
                             S.shift(ty_t, len(doms)))
            doms.append(ty_v)
            ctxs.append(ctxs[-1].bind(nm, ty_v))
        inner_t, inner_ty = self._infer_annotated_lam(ctxs[-1], binders[1:],
                                                      body)
        t, ty_term = inner_t, self.equote(ctxs[-1].depth, inner_ty)
        for i in reversed(range(len(names))):
            t = S.Lam(t, b.icit, names[i])
            ty_term = S.Pi(S.shift(ty_t, i), ty_term, b.icit, names[i])
        return t, self.eval(ctx, ty_term)

    def infer_app(self, ctx: Ctx, s) -> tuple:
        # flatten the application spine
        head = s
        rev_args = []
        while isinstance(head, X.SApp):
            rev_args.append((head.arg, head.icit, head.span))
            head = head.fn
        args = list(reversed(rev_args))
        if isinstance(head, X.SVar) and head.name == "Id":
            if len(args) != 3 or any(ic for _, ic, _ in args):
                raise self._diag(E_INFER, "Id expects three explicit "
                                 "arguments", head.span)
            if isinstance(args[0][0], X.SHole):
                # infer the type from the left endpoint, as with `=`
                l, a_v = self.infer(ctx, args[1][0])
                a_v = self.force(a_v)
                a_t = self.equote(ctx.depth, a_v)
                r = self.check(ctx, args[2][0], a_v)
                sort = self._sort_of_value(ctx, a_v, head.span)
                return S.IdT(a_t, l, r), VUni(sort)
            a_t, sort = self.elab_type(ctx, args[0][0])
            if sort == TOP:
                raise self._diag(E_UNIV, "identity over a too-large type",
                                 head.span)
            a_v = self.eval(ctx, a_t)
            l = self.check(ctx, args[1][0], a_v)
            r = self.check(ctx, args[2][0], a_v)
            return S.IdT(a_t, l, r), VUni(sort)
        if isinstance(head, X.SVar) and head.name == "refl":
            if len(args) != 1 or args[0][1]:
                raise self._diag(E_INFER, "refl takes one explicit argument",
                                 head.span)
            t, ty = self.infer(ctx, args[0][0])
            v = self.eval(ctx, t)
            return S.Refl(t), VId(ty, v, v)
        fn_t, fn_ty = self.infer(ctx, head)
        for (arg, icit, span) in args:
            fn_ty = self.force(fn_ty)
            if not icit:
                fn_t, fn_ty = self._insert_implicits(ctx, fn_t, fn_ty, span)
                fn_ty = self.force(fn_ty)
            if not isinstance(fn_ty, VPi):
                raise self._diag(E_CONV, "application of a non-function", span,
                                 actual=self.equote(ctx.depth, fn_ty))
            if fn_ty.icit != icit:
                raise self._diag(E_CONV, "implicit/explicit argument "
                                 "mismatch", span)
            a_t = self.check(ctx, arg, fn_ty.dom)
            fn_t = self._apply_term(fn_t, a_t, icit)
            fn_ty = apply_closure(fn_ty.cod, self.eval(ctx, a_t))
        return fn_t, fn_ty

    def _apply_term(self, fn_t, a_t, icit):
        if isinstance(fn_t, S.Prim) and len(fn_t.args) < P.TABLE[fn_t.name].arity:
            return S.Prim(fn_t.name, fn_t.args + (a_t,))
        return S.App(fn_t, a_t, icit)

    def _insert_implicits(self, ctx: Ctx, t, ty, span):
        ty = self.force(ty)
        while isinstance(ty, VPi) and ty.icit:
            m = self.fresh_meta(ctx, ty.dom, span, "implicit argument")
            if self.trace:
                self.trace(f"inserted implicit for {ty.cod.name}")
            t = self._apply_term(t, m, True)
            ty = self.force(apply_closure(ty.cod, self.eval(ctx, m)))
        return t, ty

    # -- checking ---------------------------------------------------------------

    def check(self, ctx: Ctx, s, expected: Value) -> "S.Term":
        expected = self.force(expected)
        span = X.span_of(s)
        # auto-insert implicit lambdas
        if isinstance(expected, VPi) and expected.icit and \
                not self._starts_implicit(s):
            ctx2 = ctx.bind(expected.cod.name, expected.dom)
            inner = self.check(ctx2, s, apply_closure(expected.cod,
                                                      ctx2.vars[-1]))
            return S.Lam(inner, True, expected.cod.name)
        match (s, expected):
            case (X.SLam(binders, body, _), _):
                return self._check_lam(ctx, s, binders, body, expected)
            case (X.SPair(a, b, _), VSigma(dom, cod)):
                a_t = self.check(ctx, a, dom)
                b_t = self.check(ctx, b,
                                 apply_closure(cod, self.eval(ctx, a_t)))
                return S.Pair(a_t, b_t)
            case (X.SVar("refl", _), VId(ty, l, r)):
                try:
                    self.unify(ctx.depth, l, r)
                except UnifyError:
                    raise self._diag(
                        E_CONV, "refl at unequal endpoints", span,
                        expected=self.equote(ctx.depth, expected))
                return S.Refl(self.equote(ctx.depth, l))
            case (X.SHole(_), _):
                return self.fresh_meta(ctx, expected, span, "hole")
            case (X.SLet(_, _, _, _, _), _):
                t, _ = self._elab_let(ctx, s, expected)
                return t
            case (X.SInd(_, _, _, _), _):
                t, _ = self._elab_ind(ctx, s, expected)
                return t
            case _:
                t, ty = self.infer(ctx, s)
                t, ty = self._insert_implicits(ctx, t, ty, span)
                if not self.usubtype(ctx.depth, ty, expected):
                    raise self._diag(
                        E_CONV, "type mismatch", span,
                        expected=self.equote(ctx.depth, expected),
                        actual=self.equote(ctx.depth, ty))
                return t

    def _starts_implicit(self, s) -> bool:
        return (isinstance(s, X.SLam) and s.binders and s.binders[0].icit) \
            or isinstance(s, X.SHole)

    def _check_lam(self, ctx: Ctx, s, binders, body, expected) -> "S.Term":
        if not binders:
            return self.check(ctx, body, expected)
        expected = self.force(expected)
        b = binders[0]
        name = b.names[0]
        rest_names = b.names[1:]
        rest = ((X.SBinder(rest_names, b.ty, b.icit, b.span),)
                if rest_names else ()) + tuple(binders[1:])
        inner = X.SLam(rest, body, s.span) if rest else body
        if not isinstance(expected, VPi):
            raise self._diag(E_CONV,
                             "abstraction checked against a non-function type",
                             s.span,
                             expected=self.equote(ctx.depth, expected))
        if expected.icit and not b.icit:
            ctx2 = ctx.bind(expected.cod.name, expected.dom)
            t = self.check(ctx2, s, apply_closure(expected.cod,
                                                  ctx2.vars[-1]))
            return S.Lam(t, True, expected.cod.name)
        if b.icit and not expected.icit:
            raise self._diag(E_CONV, "unexpected implicit abstraction",
                             s.span)
        if b.ty is not None:
            ty_t, _ = self.elab_type(ctx, b.ty)
            try:
                self.unify(ctx.depth, self.eval(ctx, ty_t), expected.dom)
            except UnifyError:
                raise self._diag(
                    E_CONV, f"binder annotation for '{name}' disagrees",
                    b.span, expected=self.equote(ctx.depth, expected.dom))
        ctx2 = ctx.bind(name, expected.dom)
        t = self.check(ctx2, inner,
                       apply_closure(expected.cod, ctx2.vars[-1]))
        return S.Lam(t, b.icit, name)

    def _elab_let(self, ctx: Ctx, s, expected) -> tuple:
        ty_v = None
        if s.ty is not None:
            ty_t, _ = self.elab_type(ctx, s.ty)
            ty_v = self.eval(ctx, ty_t)
            val_t = self.check(ctx, s.val, ty_v)
        else:
            val_t, ty_v = self.infer(ctx, s.val)
        val_v = self.eval(ctx, val_t)
        ctx2 = ctx.bind_def(s.name, ty_v, val_v)
        if expected is None:
            body_t, body_ty = self.infer(ctx2, s.body)
            return S.subst_top(body_t, val_t), body_ty
        body_t = self.check(ctx2, s.body, expected)
        return S.subst_top(body_t, val_t), expected

    # -- ind sugar ----------------------------------------------------------------

    _IND = {
        "Nat": ("ind_nat", {"zero": 0, "succ": 2}, ["zero", "succ"]),
        "Pushout": ("ind_pushout", {"inl": 1, "inr": 1, "glue": 1},
                    ["inl", "inr", "glue"]),
        "Empty": ("ind_empty", {}, []),
    }

    def _elab_ind(self, ctx: Ctx, s, expected) -> tuple:
        z_t, z_ty = self.infer(ctx, s.scrut)
        z_ty = self.force(z_ty)
        if not (isinstance(z_ty, VPrim) and z_ty.name in self._IND):
            raise self._diag(
                E_CONV, "ind: scrutinee is not of Nat, Pushout or Empty type "
                "(use the eliminator constants directly)", s.span,
                actual=self.equote(ctx.depth, z_ty))
        elim, case_arity, order = self._IND[z_ty.name]
        entry = P.TABLE[elim]
        fam_args = list(z_ty.args)  # former parameters (e.g. span pieces)
        n_params = len(fam_args)
        # motive
        vals = tuple(fam_args)
        motive_ty = evaluate(None, vals, entry.tele[n_params][1])
        if s.motive is not None:
            p_t = self.check(ctx, s.motive, motive_ty)
        else:
            p_t = self.fresh_meta(ctx, motive_ty, s.span, "ind motive")
        vals = vals + (self.eval(ctx, p_t),)
        # cases
        by_name = {}
        for c in s.cases:
            if c.ctor in by_name:
                raise self._diag(E_CONV, f"duplicate case '{c.ctor}'", c.span)
            if c.ctor not in case_arity:
                raise self._diag(E_CONV, f"unknown case '{c.ctor}'", c.span)
            by_name[c.ctor] = c
        missing = [n for n in order if n not in by_name]
        if missing:
            raise self._diag(E_CONV, f"missing case '{missing[0]}'", s.span)
        arg_terms = [self.equote(ctx.depth, a) for a in fam_args] + [p_t]
        for i, ctor in enumerate(order):
            c = by_name[ctor]
            slot_ty = evaluate(None, vals, entry.tele[n_params + 1 + i][1])
            want = case_arity[ctor]
            if len(c.binders) != want:
                raise self._diag(E_CONV, f"case '{ctor}' takes {want} "
                                 f"binder(s)", c.span)
            if want == 0:
                case_t = self.check(ctx, c.body, slot_ty)
            else:
                sb = tuple(X.SBinder((n,), None, False, c.span)
                           for n in c.binders)
                case_t = self.check(ctx, X.SLam(sb, c.body, c.span), slot_ty)
            arg_terms.append(case_t)
            vals = vals + (self.eval(ctx, case_t),)
        arg_terms.append(z_t)
        vals = vals + (self.eval(ctx, z_t),)
        res_ty = evaluate(None, vals, entry.result)
        term = S.Prim(elim, tuple(arg_terms))
        if expected is not None:
            if not self.usubtype(ctx.depth, res_ty, expected):
                raise self._diag(E_CONV, "ind result type mismatch", s.span,
                                 expected=self.equote(ctx.depth, expected),
                                 actual=self.equote(ctx.depth, res_ty))
        return term, res_ty

    # -- types ---------------------------------------------------------------------

    def elab_type(self, ctx: Ctx, s) -> tuple:
        """Elaborate a surface term used as a type; returns (Term, sort)."""
        match s:
            case X.SUni(0, _):
                return S.Uni(0), 1
            case X.SUni(1, _):
                return S.Uni(1), TOP
            case X.SPi(binders, body, _):
                return self._elab_tele(ctx, binders, body, S.Pi)
            case X.SSigma(binders, body, _):
                return self._elab_tele(ctx, binders, body, S.Sigma)
            case X.SLet(_, _, _, _, _):
                t, ty = self._elab_let(ctx, s, None)
                return t, self._sort_of_type_value(ctx, ty, X.span_of(s))
            case _:
                t, ty = self.infer(ctx, s)
                return t, self._sort_of_type_value(ctx, ty, X.span_of(s))

    def _sort_of_type_value(self, ctx, ty, span) -> int:
        ty = self.force(ty)
        if isinstance(ty, VUni):
            return ty.level
        if isinstance(ty, VNe) and isinstance(ty.head, HMeta):
            try:
                self.unify(ctx.depth, ty, VUni(0))
                return 0
            except UnifyError:
                pass
            try:
                self.unify(ctx.depth, ty, VUni(1))
                return 1
            except UnifyError:
                pass
        raise self._diag(E_CONV, "expected a type", span,
                         actual=self.equote(ctx.depth, ty))

    def _elab_tele(self, ctx: Ctx, binders, body, mk) -> tuple:
        if not binders:
            return self.elab_type(ctx, body)
        b = binders[0]
        if b.ty is None:
            raise self._diag(E_INFER, "binder needs a type annotation",
                             b.span)
        dom_t, s1 = self.elab_type(ctx, b.ty)
        name = b.names[0]
        rest_names = b.names[1:]
        rest = ((X.SBinder(rest_names, b.ty, b.icit, b.span),)
                if rest_names else ()) + tuple(binders[1:])
        ctx2 = ctx.bind(name, self.eval(ctx, dom_t))
        if rest:
            cod_t, s2 = self._elab_tele(ctx2, rest, body,
                                        mk)
        else:
            cod_t, s2 = self.elab_type(ctx2, body)
        if mk is S.Pi:
            t = S.Pi(dom_t, cod_t, b.icit, name)
        else:
            if b.icit:
                raise self._diag(E_CONV, "Σ cannot have implicit components",
                                 b.span)
            t = S.Sigma(dom_t, cod_t, name)
        sort = TOP if (s1 == TOP or s2 == TOP) else max(s1, s2)
        return t, sort

    # -- declarations ----------------------------------------------------------------

    def elab_decl(self, d: "X.SDecl", qname: str) -> Declaration:
        try:
            return self._elab_decl(d, qname)
        except Diagnostic as diag:
            if not any(qname in fr for fr in diag.stack):
                diag.stack = diag.stack + (f"elaborating {qname}",)
            raise

    def _elab_decl(self, d: "X.SDecl", qname: str) -> Declaration:
        self.ms = MetaStore()
        ctx = Ctx()
        sty = X.SPi(d.binders, d.ty, d.span) if d.binders else d.ty
        ty_t, _sort = self.elab_type(ctx, sty)
        body_t = None
        if d.kind == "def":
            if d.body is None:
                raise self._diag(E_INFER, f"def '{d.name}' needs a body",
                                 d.span)
            ty_v = self.eval(ctx, ty_t)
            sbody = d.body
            if d.binders:
                lam_binders = tuple(
                    X.SBinder((n,), None, b.icit, b.span)
                    for b in d.binders for n in b.names)
                sbody = X.SLam(lam_binders, d.body, d.span)
            body_t = self.check(ctx, sbody, ty_v)
        elif d.body is not None:
            raise self._diag(E_CONV, "axiom cannot have a body", d.span)
        self._report_unsolved(d)
        ty_z = self.zonk(ty_t)
        body_z = self.zonk(body_t) if body_t is not None else None
        return Declaration(d.kind, qname, ty_z, body_z, self.origin, d.span,
                           d.anchor)

    def _report_unsolved(self, d):
        us = self.ms.unsolved()
        if not us:
            return
        e = us[0]
        ctx_desc = ", ".join(n for n in e.ctx_names) or "(empty)"
        ty_desc = ""
        if e.ty is not None:
            try:
                ty_desc = f"; expected type could not be determined from use"
            except Exception:
                pass
        raise Diagnostic(
            E_META,
            f"unsolved metavariable ?{e.mid} ({e.note}) in context "
            f"[{ctx_desc}]{ty_desc} while elaborating '{d.name}'",
            e.span)

    def _zonk_meta(self, mid: int) -> "S.Term":
        sol = self.ms.solution(mid)
        e = self.ms.entries[mid]
        if sol is None:
            raise Diagnostic(E_META, f"unsolved metavariable ?{mid}", e.span)
        body = self.zonk(self.equote(0, sol))
        ct = self.zonk(e.closed_ty) if e.closed_ty is not None else S.Uni(1)
        if isinstance(body, S.Ann):
            return body
        return S.Ann(body, ct)

    def zonk(self, t: "S.Term", depth: int = 0) -> "S.Term":
        match t:
            case S.Meta(mid):
                return self._zonk_meta(mid)
            case S.Var(_) | S.Uni(_) | S.Const(_):
                return t
            case S.Pi(dom, cod, icit, name):
                return S.Pi(self.zonk(dom, depth), self.zonk(cod, depth + 1),
                            icit, name)
            case S.Lam(body, icit, name):
                return S.Lam(self.zonk(body, depth + 1), icit, name)
            case S.App(fn, arg, icit):
                return S.App(self.zonk(fn, depth), self.zonk(arg, depth),
                             icit)
            case S.Sigma(dom, cod, name):
                return S.Sigma(self.zonk(dom, depth),
                               self.zonk(cod, depth + 1), name)
            case S.Pair(a, b):
                return S.Pair(self.zonk(a, depth), self.zonk(b, depth))
            case S.Fst(a):
                return S.Fst(self.zonk(a, depth))
            case S.Snd(a):
                return S.Snd(self.zonk(a, depth))
            case S.IdT(ty, l, r):
                return S.IdT(self.zonk(ty, depth), self.zonk(l, depth),
                             self.zonk(r, depth))
            case S.Refl(a):
                return S.Refl(self.zonk(a, depth))
            case S.Prim(name, args):
                za = tuple(self.zonk(a, depth) for a in args)
                arity = P.TABLE[name].arity
                if len(za) < arity:
                    # partial application becomes an η-expansion
                    k = arity - len(za)
                    za = tuple(S.shift(a, k) for a in za)
                    extra = tuple(S.Var(k - 1 - i) for i in range(k))
                    body: S.Term = S.Prim(name, za + extra)
                    for i in range(k):
                        nm = P.TABLE[name].tele[arity - 1 - i][0]
                        body = S.Lam(body, False, nm)
                    return body
                return S.Prim(name, za)
            case S.Ann(tm, ty):
                return S.Ann(self.zonk(tm, depth), self.zonk(ty, depth))
        raise Diagnostic(E_META, f"zonk: unhandled {type(t).__name__}",
                         Span.none())
