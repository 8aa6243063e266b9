"""The fixed table of primitive constants.

Formation/introduction/elimination for the base types and HITs, plus the
postulated axioms. Telescopes are closed terms; the exact shapes are
normative and documented in docs/primitives.md. The inlined helper shapes
(isContr, fiber, isEquiv, happly, idtoequiv, transport, apd) must stay in
sync with the prelude definitions of the same names; the corpus contains
alignment checks that fail type-checking if they drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .syntax import (
    App, BLam, BPi, BSigma, Fst, IdT, Pair, Pi, Prim, Refl, Snd, Term, Uni,
    _BVar, barr, bfix, prim,
)

FORMER = "canonical-former"
INTRO = "canonical-intro"
ELIM = "eliminator-with-point-beta"
AXIOM = "axiom-no-reduction"


@dataclass(frozen=True)
class PrimitiveEntry:
    name: str
    tele: tuple  # ((name, Term), ...) each type under the previous binders
    result: Term  # under all telescope binders
    tag: str
    # constructor name -> handler(args, api) for eliminators; api provides
    # .apply(fn_value, arg_value) and .prim(name, *arg_values)
    rules: dict = field(default_factory=dict)
    scrut: Optional[int] = None  # telescope index of the scrutinee

    @property
    def arity(self) -> int:
        return len(self.tele)

    def pi_type(self) -> Term:
        t = self.result
        for name, dom in reversed(self.tele):
            t = Pi(dom, t, False, name)
        return t


U0 = Uni(0)
U1 = Uni(1)


# -- shared raw type shapes (mirrored by the prelude) -------------------------

def t_iscontr(X):
    return BSigma("c", X, lambda c: BPi("x", X, lambda x: IdT(X, c, x)))


def t_fiber(X, Y, f_app, y):
    # fiber f y := Σ (x : X), Id Y y (f x)   [paths point -> image]
    return BSigma("x", X, lambda x: IdT(Y, y, f_app(x)))


def t_isequiv(X, Y, f_app):
    """isEquiv via contractible fibers; f_app builds the application so the
    closed axiom types never contain uninferable β-redexes."""
    return BPi("y", Y, lambda y: t_iscontr(t_fiber(X, Y, f_app, y)))


def t_equiv(X, Y):
    return BSigma("f", barr(X, Y),
                  lambda f: t_isequiv(X, Y, lambda x: App(f, x)))


def t_transport(A, P_fn, x, y, p, u):
    # J A x (λ z _, P z) u y p
    motive = BLam("z", lambda z: BLam("q", lambda _q: P_fn(z)))
    return prim("J", A, x, motive, u, y, p)


def t_id_equiv(A):
    # ⟨λ a. a, λ y. ⟨⟨y, refl y⟩, λ w. J ...⟩⟩ : Equiv A A

    def contraction(y):
        fib = BSigma("x", A, lambda x: IdT(A, y, x))
        center = Pair(y, Refl(y))
        motive = BLam("x", lambda x: BLam(
            "q", lambda q: IdT(fib, center, Pair(x, q))))
        return BLam("w", lambda w: prim(
            "J", A, y, motive, Refl(center), Fst(w), Snd(w)))

    id_fun = BLam("a", lambda a: a)
    is_equiv = BLam("y", lambda y: Pair(Pair(y, Refl(y)), contraction(y)))
    return Pair(id_fun, is_equiv)


def t_idtoequiv_app(A, Bty, p):
    # J U0 A (λ B' _, Equiv A B') (id_equiv A) B p
    motive = BLam("B'", lambda b2: BLam("q", lambda _q: t_equiv(A, b2)))
    return prim("J", U0, A, motive, t_id_equiv(A), Bty, p)


def t_happly_app(A, Bfam, f, g, p):
    # J (Π x, B x) f (λ g' _, Π x, Id (B x) (f x) (g' x)) (λ x. refl) g p
    pit = BPi("x", A, lambda x: App(Bfam, x))
    motive = BLam("g'", lambda g2: BLam("q", lambda _q: BPi(
        "x", A, lambda x: IdT(App(Bfam, x), App(f, x), App(g2, x)))))
    base = BLam("x", lambda x: Refl(App(f, x)))
    return prim("J", pit, f, motive, base, g, p)


# -- reduction handlers -------------------------------------------------------

def _rule_ind_nat_zero(args, api):
    return args[1]


def _rule_ind_nat_succ(args, api):
    P, z, s, n = args
    m = n.args[0]
    return api.apply(api.apply(s, m), api.prim("ind_nat", P, z, s, m))


def _rule_ind_pushout_inl(args, api):
    return api.apply(args[6], args[9].args[5])


def _rule_ind_pushout_inr(args, api):
    return api.apply(args[7], args[9].args[5])


def _rule_ind_trunc_tin(args, api):
    return api.apply(args[3], args[4].args[1])


def _rule_j_refl(args, api):
    return args[3]


# -- the table ----------------------------------------------------------------

def _build_table() -> dict:
    es = []

    def entry(name, specs, result_fn, tag, rules=None, scrut=None):
        vs, tele = [], []
        for i, (nm, ty_fn) in enumerate(specs):
            tele.append((nm, bfix(ty_fn(*vs), i)))
            vs.append(_BVar(i))
        res = bfix(result_fn(*vs), len(specs))
        es.append(PrimitiveEntry(name, tuple(tele), res, tag,
                                 rules or {}, scrut))

    # base types -------------------------------------------------------------
    entry("Empty", [], lambda: U0, FORMER)
    entry("ind_empty",
          [("P", lambda: Pi(prim("Empty"), U1, False, "e")),
           ("e", lambda P: prim("Empty"))],
          lambda P, e: App(P, e), ELIM, {}, scrut=1)

    entry("Unit", [], lambda: U0, FORMER)
    entry("star", [], lambda: prim("Unit"), INTRO)

    entry("Nat", [], lambda: U0, FORMER)
    entry("zero", [], lambda: prim("Nat"), INTRO)
    entry("succ", [("n", lambda: prim("Nat"))], lambda n: prim("Nat"), INTRO)
    entry("ind_nat",
          [("P", lambda: Pi(prim("Nat"), U1, False, "n")),
           ("z", lambda P: App(P, prim("zero"))),
           ("s", lambda P, z: BPi("n", prim("Nat"), lambda n: BPi(
               "ih", App(P, n), lambda _ih: App(P, prim("succ", n))))),
           ("n", lambda P, z, s: prim("Nat"))],
          lambda P, z, s, n: App(P, n), ELIM,
          {"zero": _rule_ind_nat_zero, "succ": _rule_ind_nat_succ}, scrut=3)

    # pushouts ----------------------------------------------------------------
    span = [
        ("A", lambda: U0),
        ("B", lambda A: U0),
        ("C", lambda A, Bt: U0),
        ("f", lambda A, Bt, C: barr(C, A)),
        ("g", lambda A, Bt, C, f: barr(C, Bt)),
    ]

    def PO(A, Bt, C, f, g):
        return prim("Pushout", A, Bt, C, f, g)

    def inl_(A, Bt, C, f, g, a):
        return prim("inl", A, Bt, C, f, g, a)

    def inr_(A, Bt, C, f, g, b):
        return prim("inr", A, Bt, C, f, g, b)

    entry("Pushout", span, lambda *v: U0, FORMER)
    entry("inl", span + [("a", lambda A, Bt, C, f, g: A)],
          lambda A, Bt, C, f, g, a: PO(A, Bt, C, f, g), INTRO)
    entry("inr", span + [("b", lambda A, Bt, C, f, g: Bt)],
          lambda A, Bt, C, f, g, b: PO(A, Bt, C, f, g), INTRO)
    entry("glue", span + [("c", lambda A, Bt, C, f, g: C)],
          lambda A, Bt, C, f, g, c: IdT(
              PO(A, Bt, C, f, g),
              inl_(A, Bt, C, f, g, App(f, c)),
              inr_(A, Bt, C, f, g, App(g, c))),
          INTRO)

    po_elim = span + [
        ("P", lambda A, Bt, C, f, g: BPi(
            "z", PO(A, Bt, C, f, g), lambda _z: U1)),
        ("pa", lambda A, Bt, C, f, g, P: BPi(
            "a", A, lambda a: App(P, inl_(A, Bt, C, f, g, a)))),
        ("pb", lambda A, Bt, C, f, g, P, pa: BPi(
            "b", Bt, lambda b: App(P, inr_(A, Bt, C, f, g, b)))),
        ("pc", lambda A, Bt, C, f, g, P, pa, pb: BPi(
            "c", C, lambda c: IdT(
                App(P, inr_(A, Bt, C, f, g, App(g, c))),
                t_transport(PO(A, Bt, C, f, g), lambda z: App(P, z),
                            inl_(A, Bt, C, f, g, App(f, c)),
                            inr_(A, Bt, C, f, g, App(g, c)),
                            prim("glue", A, Bt, C, f, g, c),
                            App(pa, App(f, c))),
                App(pb, App(g, c))))),
    ]
    entry("ind_pushout",
          po_elim + [("z", lambda A, Bt, C, f, g, P, pa, pb, pc:
                      PO(A, Bt, C, f, g))],
          lambda A, Bt, C, f, g, P, pa, pb, pc, z: App(P, z), ELIM,
          {"inl": _rule_ind_pushout_inl, "inr": _rule_ind_pushout_inr},
          scrut=9)

    def beta_result(A, Bt, C, f, g, P, pa, pb, pc, c):
        po = PO(A, Bt, C, f, g)
        fl = inl_(A, Bt, C, f, g, App(f, c))
        fr = inr_(A, Bt, C, f, g, App(g, c))
        gl = prim("glue", A, Bt, C, f, g, c)
        h = Prim("ind_pushout", (A, Bt, C, f, g, P, pa, pb, pc))
        pc_c_ty = IdT(
            App(P, fr),
            t_transport(po, lambda z: App(P, z), fl, fr, gl,
                        App(pa, App(f, c))),
            App(pb, App(g, c)))
        # apd h (glue c)
        apd_motive = BLam("z", lambda z: BLam("q", lambda q: IdT(
            App(P, z),
            t_transport(po, lambda z2: App(P, z2), fl, z, q, App(h, fl)),
            App(h, z))))
        apd_term = prim("J", po, fl, apd_motive, Refl(App(h, fl)), fr, gl)
        return IdT(pc_c_ty, apd_term, App(pc, c))

    entry("pushout_glue_beta",
          po_elim + [("c", lambda A, Bt, C, f, g, P, pa, pb, pc: C)],
          beta_result, AXIOM)

    # propositional truncation -------------------------------------------------
    entry("Trunc", [("A", lambda: U1)], lambda A: U1, FORMER)
    entry("tin", [("A", lambda: U1), ("a", lambda A: A)],
          lambda A, a: prim("Trunc", A), INTRO)
    entry("squash",
          [("A", lambda: U1),
           ("x", lambda A: prim("Trunc", A)),
           ("y", lambda A, x: prim("Trunc", A))],
          lambda A, x, y: IdT(prim("Trunc", A), x, y), AXIOM)
    entry("ind_trunc",
          [("A", lambda: U1),
           ("P", lambda A: BPi("z", prim("Trunc", A), lambda _z: U1)),
           ("prp", lambda A, P: BPi(
               "z", prim("Trunc", A), lambda z: BPi(
                   "u", App(P, z), lambda u: BPi(
                       "v", App(P, z), lambda v: IdT(App(P, z), u, v))))),
           ("h", lambda A, P, prp: BPi(
               "a", A, lambda a: App(P, prim("tin", A, a)))),
           ("z", lambda A, P, prp, h: prim("Trunc", A))],
          lambda A, P, prp, h, z: App(P, z), ELIM,
          {"tin": _rule_ind_trunc_tin}, scrut=4)

    # identity eliminator ------------------------------------------------------
    entry("J",
          [("A", lambda: U1),
           ("a", lambda A: A),
           ("P", lambda A, a: BPi(
               "x", A, lambda x: BPi("q", IdT(A, a, x), lambda _q: U1))),
           ("d", lambda A, a, P: App(App(P, a), Refl(a))),
           ("b", lambda A, a, P, d: A),
           ("p", lambda A, a, P, d, b: IdT(A, a, b))],
          lambda A, a, P, d, b, p: App(App(P, b), p), ELIM,
          {"refl": _rule_j_refl}, scrut=5)

    # axioms -------------------------------------------------------------------
    entry("ua", [("A", lambda: U0), ("B", lambda A: U0)],
          lambda A, Bty: t_isequiv(
              IdT(U0, A, Bty), t_equiv(A, Bty),
              lambda p: t_idtoequiv_app(A, Bty, p)),
          AXIOM)

    entry("funext",
          [("A", lambda: U1),
           ("B", lambda A: BPi("x", A, lambda _x: U1)),
           ("f", lambda A, Bf: BPi("x", A, lambda x: App(Bf, x))),
           ("g", lambda A, Bf, f: BPi("x", A, lambda x: App(Bf, x)))],
          lambda A, Bf, f, g: t_isequiv(
              IdT(BPi("x", A, lambda x: App(Bf, x)), f, g),
              BPi("x", A, lambda x: IdT(App(Bf, x), App(f, x), App(g, x))),
              lambda p: t_happly_app(A, Bf, f, g, p)),
          AXIOM)

    return {e.name: e for e in es}


TABLE: dict = _build_table()


def primitive_table():
    """The fixed, closed table (spec surface)."""
    return list(TABLE.values())


def axioms() -> set:
    return {e.name for e in TABLE.values() if e.tag == AXIOM}
