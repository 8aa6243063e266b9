"""Printing kernel terms back to surface syntax.

Output re-parses and re-elaborates to a convertible term; binder display
names come from hints and are freshened against everything in scope.
"""

from __future__ import annotations

from ..kernel import primitives as P
from ..kernel import syntax as S

_RESERVED = {
    "def", "axiom", "import", "module", "ind", "with", "return", "let", "in",
    "U", "U1", "Id", "refl",
} | set(P.TABLE.keys())

_ATOM, _PROJ, _APP, _JOIN, _TIMES, _EQ, _ARROW, _TOP = 8, 7, 6, 5, 4, 3, 2, 0


def _fresh(name: str, used: set) -> str:
    base = name if name and name != "_" else "x"
    if base == "_":
        base = "x"
    cand = base
    while cand in used or cand in _RESERVED:
        cand += "'"
    return cand


def _numeral(t: "S.Term"):
    n = 0
    while isinstance(t, S.Prim) and t.name == "succ" and len(t.args) == 1:
        n += 1
        t = t.args[0]
    if isinstance(t, S.Prim) and t.name == "zero" and not t.args:
        return n
    return None


def _uses_var0(t: "S.Term") -> bool:
    return S.max_free_index(t, 1) < 0 and _mentions(t, 0)


def _mentions(t: "S.Term", k: int) -> bool:
    match t:
        case S.Var(i):
            return i == k
        case S.Uni() | S.Const() | S.Meta():
            return False
        case S.Pi(d, c, _, _) | S.Sigma(d, c, _):
            return _mentions(d, k) or _mentions(c, k + 1)
        case S.Lam(b, _, _):
            return _mentions(b, k + 1)
        case S.App(f, a, _):
            return _mentions(f, k) or _mentions(a, k)
        case S.Pair(a, b):
            return _mentions(a, k) or _mentions(b, k)
        case S.Fst(a) | S.Snd(a) | S.Refl(a):
            return _mentions(a, k)
        case S.IdT(t0, l, r):
            return _mentions(t0, k) or _mentions(l, k) or _mentions(r, k)
        case S.Prim(_, args):
            return any(_mentions(a, k) for a in args)
        case S.Ann(a, b):
            return _mentions(a, k) or _mentions(b, k)
    return False


class Printer:
    def __init__(self, shorten=None):
        # shorten: callable qualified-name -> display name (session-aware)
        self.shorten = shorten or (lambda n: n)

    def show(self, t: "S.Term", names: tuple = (), prec: int = _TOP) -> str:
        match t:
            case S.Var(idx):
                if idx < len(names):
                    return names[-1 - idx]
                return f"x@{idx}"
            case S.Uni(l):
                return "U" if l == 0 else "U1"
            case S.Const(name):
                return self.shorten(name)
            case S.Meta(mid):
                return f"?{mid}"
            case S.Pi(dom, cod, icit, name):
                if not icit and not _mentions(cod, 0):
                    s = (f"{self.show(dom, names, _EQ)} → "
                         f"{self.show(cod, names + ('_',), _ARROW)}")
                    return self._paren(s, prec > _ARROW)
                nm = _fresh(name, set(names))
                br = "{%s : %s}" if icit else "(%s : %s)"
                binder = br % (nm, self.show(dom, names, _TOP))
                s = f"Π {binder}, {self.show(cod, names + (nm,), _TOP)}"
                return self._paren(s, prec > _TOP)
            case S.Sigma(dom, cod, name):
                if not _mentions(cod, 0):
                    s = (f"{self.show(dom, names, _JOIN)} × "
                         f"{self.show(cod, names + ('_',), _TIMES)}")
                    return self._paren(s, prec > _TIMES)
                nm = _fresh(name, set(names))
                s = (f"Σ ({nm} : {self.show(dom, names, _TOP)}), "
                     f"{self.show(cod, names + (nm,), _TOP)}")
                return self._paren(s, prec > _TOP)
            case S.Lam(_, _, _):
                parts = []
                cur = t
                nms = names
                while isinstance(cur, S.Lam):
                    nm = _fresh(cur.name, set(nms))
                    parts.append("{%s}" % nm if cur.icit else nm)
                    nms = nms + (nm,)
                    cur = cur.body
                s = f"λ {' '.join(parts)}, {self.show(cur, nms, _TOP)}"
                return self._paren(s, prec > _TOP)
            case S.App(fn, arg, icit):
                f = self.show(fn, names, _APP)
                if icit:
                    return self._paren(f + " {" + self.show(arg, names, _TOP)
                                       + "}", prec > _APP)
                return self._paren(f"{f} {self.show(arg, names, _PROJ)}",
                                   prec > _APP)
            case S.Pair(a, b):
                return (f"⟨{self.show(a, names, _TOP)}, "
                        f"{self.show(b, names, _TOP)}⟩")
            case S.Fst(a):
                return f"{self.show(a, names, _PROJ)}.1"
            case S.Snd(a):
                return f"{self.show(a, names, _PROJ)}.2"
            case S.IdT(ty, l, r):
                s = (f"Id {self.show(ty, names, _PROJ)} "
                     f"{self.show(l, names, _PROJ)} "
                     f"{self.show(r, names, _PROJ)}")
                return self._paren(s, prec > _APP)
            case S.Refl(a):
                return self._paren(f"refl {self.show(a, names, _PROJ)}",
                                   prec > _APP)
            case S.Ann(tm, ty):
                return (f"({self.show(tm, names, _TOP)} : "
                        f"{self.show(ty, names, _TOP)})")
            case S.Prim(name, args):
                n = _numeral(t)
                if n is not None:
                    return str(n)
                sugar = self._ind_sugar(t, names)
                if sugar is not None:
                    return self._paren(sugar, prec > _TOP)
                if not args:
                    return name
                parts = [name] + [self.show(a, names, _PROJ) for a in args]
                return self._paren(" ".join(parts), prec > _APP)
        raise AssertionError(f"print: unhandled {t!r}")

    def _paren(self, s: str, need: bool) -> str:
        return f"({s})" if need else s

    def _ind_sugar(self, t: "S.Prim", names):
        spec = {
            "ind_nat": (("zero", 0, 1), ("succ", 2, 2)),
            "ind_pushout": (("inl", 1, 6), ("inr", 1, 7), ("glue", 1, 8)),
            "ind_empty": (),
        }.get(t.name)
        if spec is None or len(t.args) != P.TABLE[t.name].arity:
            return None
        n_params = {"ind_nat": 0, "ind_pushout": 5, "ind_empty": 0}[t.name]
        motive = t.args[n_params]
        scrut = t.args[-1]
        cases = []
        for (ctor, nbind, idx) in spec:
            arm = t.args[idx]
            binders, body, nms = [], arm, names
            for _ in range(nbind):
                if not isinstance(body, S.Lam):
                    return None
                nm = _fresh(body.name, set(nms))
                binders.append(nm)
                nms = nms + (nm,)
                body = body.body
            body_s = self.show(body, nms, _ARROW)
            head = " ".join([ctor] + binders)
            cases.append(f"| {head} => {body_s}")
        return (f"ind {self.show(scrut, names, _PROJ)} return "
                f"{self.show(motive, names, _PROJ)} with "
                + " ".join(cases)).rstrip()


def show_term(t: "S.Term", names: tuple = (), shorten=None) -> str:
    return Printer(shorten).show(t, names)
