"""Lexer and recursive-descent parser for .hott sources.

The grammar is LL and documented in docs/grammar.md. Comments are `--` to
end of line and nestable `{- -}`; a comment line `-- paper: X` directly
above a declaration is attached to it as its anchor tag.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..kernel.diagnostics import Diagnostic, E_PARSE, Span
from .surface import (
    SAnn, SApp, SBinder, SCase, SDecl, SEq, SHole, SImport, SInd, SLam, SLet,
    SModule, SNum, SPair, SPi, SProj, SSigma, SUni, SVar,
)

KEYWORDS = {
    "def", "axiom", "import", "module", "ind", "with", "return", "let", "in",
    "U", "U1",
}

SYMBOLS = [
    ":=", "->", "=>", "(", ")", "{", "}", "⟨", "⟩", ",", ":", "=", "→", "×",
    "∗", "*", "Π", "Σ", "λ", "\\", "|", "_",
]


@dataclass(frozen=True)
class Token:
    kind: str  # ident, qname, number, keyword, symbol, proj, eof
    text: str
    start: int
    end: int

    def span(self, file=None):
        return Span(self.start, self.end, file)


class Lexer:
    def __init__(self, src: str, file: Optional[str] = None):
        self.src = src
        self.file = file
        self.pos = 0
        self.tokens: list = []
        self.comments: list = []  # (line_end_pos, text) for anchor attachment

    def error(self, msg, start, end):
        raise Diagnostic(E_PARSE, msg, Span(start, end, self.file))

    def lex(self):
        src, n = self.src, len(self.src)
        i = 0
        while i < n:
            c = src[i]
            if c in " \t\r\n":
                i += 1
                continue
            if src.startswith("--", i):
                j = src.find("\n", i)
                j = n if j < 0 else j
                self.comments.append((i, j, src[i + 2:j].strip()))
                i = j
                continue
            if src.startswith("{-", i):
                depth, j = 1, i + 2
                while j < n and depth:
                    if src.startswith("{-", j):
                        depth += 1
                        j += 2
                    elif src.startswith("-}", j):
                        depth -= 1
                        j += 2
                    else:
                        j += 1
                if depth:
                    self.error("unterminated block comment", i, n)
                self.comments.append((i, j, src[i + 2:j - 2].strip()))
                i = j
                continue
            if c == "." and i + 1 < n and src[i + 1] in "12" and \
                    (i + 2 >= n or not src[i + 2].isdigit()):
                self.tokens.append(Token("proj", src[i:i + 2], i, i + 2))
                i += 2
                continue
            if c.isdigit():
                j = i
                while j < n and src[j].isdigit():
                    j += 1
                self.tokens.append(Token("number", src[i:j], i, j))
                i = j
                continue
            if c in "ΠΣλ":
                self.tokens.append(Token("symbol", c, i, i + 1))
                i += 1
                continue
            if c.isalpha() or c == "_":
                j = i
                while j < n and (src[j].isalnum() or src[j] in "_'"):
                    j += 1
                # qualified name: ident(.ident)*
                while j < n and src[j] == "." and j + 1 < n and \
                        (src[j + 1].isalpha() or src[j + 1] == "_"):
                    j += 1
                    while j < n and (src[j].isalnum() or src[j] in "_'"):
                        j += 1
                word = src[i:j]
                if word == "_":
                    self.tokens.append(Token("symbol", "_", i, j))
                elif word in KEYWORDS:
                    self.tokens.append(Token("keyword", word, i, j))
                elif "." in word:
                    self.tokens.append(Token("qname", word, i, j))
                else:
                    self.tokens.append(Token("ident", word, i, j))
                i = j
                continue
            matched = False
            for sym in SYMBOLS:
                if src.startswith(sym, i):
                    self.tokens.append(Token("symbol", sym, i, i + len(sym)))
                    i += len(sym)
                    matched = True
                    break
            if not matched:
                self.error(f"unexpected character {c!r}", i, i + 1)
        self.tokens.append(Token("eof", "", n, n))
        return self.tokens


class Parser:
    def __init__(self, src: str, file: Optional[str] = None):
        self.file = file
        lx = Lexer(src, file)
        self.toks = lx.lex()
        self.comments = lx.comments
        self.k = 0

    # -- token plumbing -------------------------------------------------------

    def peek(self, ahead=0) -> Token:
        return self.toks[min(self.k + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.k]
        if t.kind != "eof":
            self.k += 1
        return t

    def at_symbol(self, *texts) -> bool:
        t = self.peek()
        return t.kind == "symbol" and t.text in texts

    def at_keyword(self, *texts) -> bool:
        t = self.peek()
        return t.kind == "keyword" and t.text in texts

    def eat_symbol(self, text) -> Token:
        t = self.peek()
        if t.kind == "symbol" and t.text == text:
            return self.next()
        self.error(f"expected '{text}'", t)

    def eat_keyword(self, text) -> Token:
        t = self.peek()
        if t.kind == "keyword" and t.text == text:
            return self.next()
        self.error(f"expected '{text}'", t)

    def eat_ident(self) -> Token:
        t = self.peek()
        if t.kind == "ident" or (t.kind == "symbol" and t.text == "_"):
            return self.next()
        self.error("expected an identifier", t)

    def error(self, msg, tok: Token):
        got = tok.text or "end of input"
        raise Diagnostic(E_PARSE, f"{msg}, got '{got}'", tok.span(self.file))

    def span_from(self, start_tok: Token) -> Span:
        end = self.toks[self.k - 1].end if self.k > 0 else start_tok.end
        return Span(start_tok.start, end, self.file)

    # -- module structure ------------------------------------------------------

    def parse_module(self) -> SModule:
        name = None
        imports = []
        decls = []
        if self.at_keyword("module"):
            self.next()
            name = self.eat_ident().text
        while self.at_keyword("import"):
            t = self.next()
            p = self.peek()
            if p.kind in ("ident", "qname"):
                self.next()
                imports.append(SImport(p.text, p.span(self.file)))
            else:
                self.error("expected a module path", p)
        while not self.peek().kind == "eof":
            decls.append(self.parse_decl())
        return SModule(name, tuple(imports), tuple(decls), self.file)

    def _anchor_for(self, pos: int) -> tuple:
        """Comment text directly above `pos`: (anchor, doc)."""
        anchor, docs = "", []
        for (s, e, text) in self.comments:
            if e <= pos and not self.toks_between(e, pos):
                docs.append(text)
                if text.startswith("paper:"):
                    anchor = text[len("paper:"):].strip()
        return anchor, "\n".join(docs[-4:])

    def toks_between(self, a, b) -> bool:
        return any(t.start >= a and t.end <= b for t in self.toks
                   if t.kind != "eof")

    def parse_decl(self) -> SDecl:
        t = self.peek()
        if not self.at_keyword("def", "axiom"):
            self.error("expected 'def' or 'axiom'", t)
        kw = self.next()
        name = self.eat_ident().text
        binders = self.parse_binders(allow_none=False)
        self.eat_symbol(":")
        ty = self.parse_term()
        body = None
        if self.at_symbol(":="):
            self.next()
            body = self.parse_term()
        anchor, doc = self._anchor_for(kw.start)
        return SDecl(kw.text, name, tuple(binders), ty, body,
                     self.span_from(kw), anchor, doc)

    # -- binders ----------------------------------------------------------------

    def parse_binders(self, allow_none: bool) -> list:
        out = []
        while True:
            t = self.peek()
            if self.at_symbol("("):
                if not self._binder_ahead():
                    break
                self.next()
                names = [self.eat_ident().text]
                while self.peek().kind == "ident" or self.at_symbol("_"):
                    names.append(self.eat_ident().text)
                self.eat_symbol(":")
                ty = self.parse_term()
                self.eat_symbol(")")
                out.append(SBinder(tuple(names), ty, False,
                                   self.span_from(t)))
            elif self.at_symbol("{"):
                self.next()
                names = [self.eat_ident().text]
                while self.peek().kind == "ident" or self.at_symbol("_"):
                    names.append(self.eat_ident().text)
                ty = None
                if self.at_symbol(":"):
                    self.next()
                    ty = self.parse_term()
                self.eat_symbol("}")
                out.append(SBinder(tuple(names), ty, True, self.span_from(t)))
            elif allow_none and (t.kind == "ident" or self.at_symbol("_")):
                self.next()
                out.append(SBinder((t.text,), None, False, t.span(self.file)))
            else:
                break
        return out

    def _binder_ahead(self) -> bool:
        """After '(', does a binder `idents :` follow? (vs a parenthesized
        term)."""
        i = self.k + 1
        saw = False
        while i < len(self.toks):
            t = self.toks[i]
            if t.kind == "ident" or (t.kind == "symbol" and t.text == "_"):
                saw = True
                i += 1
                continue
            return saw and t.kind == "symbol" and t.text == ":"
        return False

    # -- terms -------------------------------------------------------------------

    def parse_term(self):
        t = self.peek()
        if self.at_symbol("λ", "\\"):
            self.next()
            binders = self.parse_binders(allow_none=True)
            if not binders:
                self.error("expected a binder after λ", self.peek())
            self.eat_symbol(",")
            body = self.parse_term()
            return SLam(tuple(binders), body, self.span_from(t))
        if self.at_symbol("Π"):
            self.next()
            binders = self.parse_binders(allow_none=False)
            if not binders:
                self.error("expected a (x : A) binder after Π", self.peek())
            self.eat_symbol(",")
            body = self.parse_term()
            return SPi(tuple(binders), body, self.span_from(t))
        if self.at_symbol("Σ"):
            self.next()
            binders = self.parse_binders(allow_none=False)
            if not binders:
                self.error("expected a (x : A) binder after Σ", self.peek())
            self.eat_symbol(",")
            body = self.parse_term()
            return SSigma(tuple(binders), body, self.span_from(t))
        if self.at_keyword("let"):
            self.next()
            name = self.eat_ident().text
            ty = None
            if self.at_symbol(":"):
                self.next()
                ty = self.parse_term()
            self.eat_symbol(":=")
            val = self.parse_term()
            self.eat_keyword("in")
            body = self.parse_term()
            return SLet(name, ty, val, body, self.span_from(t))
        return self.parse_arrow()

    def parse_arrow(self):
        t = self.peek()
        lhs = self.parse_eq()
        if self.at_symbol("→", "->"):
            self.next()
            rhs = self.parse_term()  # right-assoc; λ/Π allowed after arrow
            return SPi((SBinder(("_",), lhs, False, span_of_(lhs)),), rhs,
                       self.span_from(t))
        return lhs

    def parse_eq(self):
        t = self.peek()
        lhs = self.parse_times()
        if self.at_symbol("="):
            self.next()
            rhs = self.parse_times()
            return SEq(lhs, rhs, self.span_from(t))
        return lhs

    def parse_times(self):
        t = self.peek()
        lhs = self.parse_join()
        if self.at_symbol("×"):
            self.next()
            rhs = self.parse_times()
            return SSigma((SBinder(("_",), lhs, False, span_of_(lhs)),), rhs,
                          self.span_from(t))
        return lhs

    def parse_join(self):
        t = self.peek()
        lhs = self.parse_app()
        if self.at_symbol("∗", "*"):
            self.next()
            rhs = self.parse_join()
            sp = self.span_from(t)
            return SApp(SApp(SVar("Join", sp), lhs, False, sp), rhs, False, sp)
        return lhs

    def parse_app(self):
        t = self.peek()
        fn = self.parse_proj()
        while True:
            if self.at_symbol("{"):
                self.next()
                arg = self.parse_term()
                self.eat_symbol("}")
                fn = SApp(fn, arg, True, self.span_from(t))
            elif self._atom_ahead():
                arg = self.parse_proj()
                fn = SApp(fn, arg, False, self.span_from(t))
            else:
                return fn

    def _atom_ahead(self) -> bool:
        t = self.peek()
        if t.kind in ("ident", "qname", "number"):
            return True
        if t.kind == "keyword" and t.text in ("U", "U1", "ind", "let"):
            return t.text in ("U", "U1")
        if t.kind == "symbol" and t.text in ("(", "⟨", "_"):
            return True
        return False

    def parse_proj(self):
        t = self.peek()
        tm = self.parse_atom()
        while self.peek().kind == "proj":
            p = self.next()
            tm = SProj(tm, int(p.text[1]), self.span_from(t))
        return tm

    def parse_atom(self):
        t = self.peek()
        sp = t.span(self.file)
        if t.kind in ("ident", "qname"):
            self.next()
            return SVar(t.text, sp)
        if t.kind == "number":
            self.next()
            return SNum(int(t.text), sp)
        if self.at_keyword("U"):
            self.next()
            return SUni(0, sp)
        if self.at_keyword("U1"):
            self.next()
            return SUni(1, sp)
        if self.at_symbol("_"):
            self.next()
            return SHole(sp)
        if self.at_keyword("ind"):
            return self.parse_ind()
        if self.at_symbol("("):
            self.next()
            tm = self.parse_term()
            if self.at_symbol(":"):
                self.next()
                ty = self.parse_term()
                self.eat_symbol(")")
                return SAnn(tm, ty, self.span_from(t))
            self.eat_symbol(")")
            return tm
        if self.at_symbol("⟨"):
            self.next()
            items = [self.parse_term()]
            while self.at_symbol(","):
                self.next()
                items.append(self.parse_term())
            self.eat_symbol("⟩")
            if len(items) < 2:
                self.error("a pair needs at least two components", self.peek())
            tm = items[-1]
            for it in reversed(items[:-1]):
                tm = SPair(it, tm, self.span_from(t))
            return tm
        self.error("expected a term", t)

    def parse_ind(self):
        t = self.eat_keyword("ind")
        scrut = self.parse_app()
        motive = None
        if self.at_keyword("return"):
            self.next()
            motive = self.parse_term()
        self.eat_keyword("with")
        cases = []
        while self.at_symbol("|"):
            bar = self.next()
            ctor = self.eat_ident().text
            binders = []
            while self.peek().kind == "ident" or self.at_symbol("_"):
                binders.append(self.eat_ident().text)
            self.eat_symbol("=>")
            body = self.parse_term()
            cases.append(SCase(ctor, tuple(binders), body,
                               self.span_from(bar)))
        return SInd(scrut, motive, tuple(cases), self.span_from(t))


def span_of_(t) -> Span:
    return getattr(t, "span", Span.none())


def parse(source: str, file: Optional[str] = None) -> SModule:
    """Parse a .hott source text into a surface module."""
    return Parser(source, file).parse_module()
