"""Batch checking session: import resolution, module cache, diagnostics."""

from __future__ import annotations

import hashlib
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .frontend import parser
from .frontend.elaborator import Elaborator
from .frontend.printer import Printer
from .kernel import primitives as P
from .kernel import rules
from .kernel.diagnostics import Diagnostic, E_IMPORT, E_IO, Span
from .kernel.rules import Environment


def builtin_corpus_root() -> Path:
    return Path(__file__).resolve().parent / "corpus"


@dataclass
class ModuleRecord:
    ns: str
    path: Path
    content_hash: str
    full_hash: str  # includes transitive imports
    imports: tuple
    decl_names: tuple
    ok: bool
    elapsed: float = 0.0


@dataclass
class CheckSession:
    search_paths: list = field(default_factory=list)
    use_prelude_path: bool = True
    include_open: bool = False
    trace_elab: bool = False
    timing: bool = False
    env: Environment = field(default_factory=Environment)
    modules: dict = field(default_factory=dict)  # resolved path -> record
    diagnostics: list = field(default_factory=list)
    out_lines: list = field(default_factory=list)
    _stack: list = field(default_factory=list)
    _elab_count: int = 0
    _recheck_count: int = 0

    def __post_init__(self):
        rules.check_primitive_table()
        paths = list(self.search_paths)
        env_path = os.environ.get("HOTT_PATH", "")
        for p in env_path.split(":"):
            if p:
                paths.append(Path(p))
        if self.use_prelude_path:
            paths.append(builtin_corpus_root())
        self.search_paths = [Path(p) for p in paths]

    # -- import resolution ------------------------------------------------------

    def resolve_import(self, dotted: str, rel_to: Optional[Path]) -> Path:
        rel = Path(*dotted.split(".")).with_suffix(".hott")
        roots = list(self.search_paths)
        if rel_to is not None:
            roots.insert(0, rel_to.parent)
            # allow sibling access within a corpus tree (e.g. projective/x
            # importing prelude/y)
            roots.insert(1, rel_to.parent.parent)
        for root in roots:
            cand = Path(root) / rel
            if cand.is_file():
                return cand.resolve()
        raise Diagnostic(E_IMPORT, f"cannot resolve import '{dotted}'")

    # -- checking -----------------------------------------------------------------

    def check_module(self, path: Path) -> ModuleRecord:
        path = Path(path).resolve()
        try:
            src = path.read_text(encoding="utf-8")
        except OSError as ex:
            raise Diagnostic(E_IO, f"cannot read {path}: {ex}")
        h = hashlib.sha256(src.encode()).hexdigest()
        rec = self.modules.get(path)
        if rec is not None and rec.content_hash == h:
            # verify transitive imports unchanged
            if self._full_hash(path, src, rec.imports) == rec.full_hash:
                return rec
        if path in self._stack:
            raise Diagnostic(E_IMPORT, f"import cycle through {path.name}")
        self._stack.append(path)
        t0 = time.monotonic()
        try:
            mod = parser.parse(src, str(path))
            ns = mod.name or path.stem
            imports = []
            for imp in mod.imports:
                target = self.resolve_import(imp.path, path)
                sub = self.check_module(target)
                if not sub.ok:
                    raise Diagnostic(E_IMPORT,
                                     f"import '{imp.path}' has errors",
                                     imp.span)
                imports.append(str(target))
            decl_names = []
            resolver = self._make_resolver(ns, tuple(imports))
            for sd in mod.decls:
                elab = Elaborator(self.env, resolver,
                                  self._tracer() if self.trace_elab else None,
                                  origin=ns)
                qname = f"{ns}.{sd.name}"
                decl = elab.elab_decl(sd, qname)
                self._elab_count += 1
                # the kernel is the sole authority: full re-check
                try:
                    self.env = rules.check_declaration(self.env, decl)
                except Diagnostic as d:
                    raise d.with_span(sd.span)
                self._recheck_count += 1
                decl_names.append(qname)
            rec = ModuleRecord(ns, path, h,
                               self._full_hash(path, src, tuple(imports)),
                               tuple(imports), tuple(decl_names), True,
                               time.monotonic() - t0)
            self.modules[path] = rec
            return rec
        finally:
            self._stack.pop()

    def _full_hash(self, path, src, imports) -> str:
        hh = hashlib.sha256(src.encode())
        for imp in imports:
            sub = self.modules.get(Path(imp))
            if sub is not None:
                hh.update(sub.full_hash.encode())
            else:
                hh.update(b"?")
        return hh.hexdigest()

    def _tracer(self):
        import sys

        def tr(msg):
            print(f"[elab] {msg}", file=sys.stderr)

        return tr

    def _make_resolver(self, ns: str, import_paths: tuple):
        # visibility: own module, then transitively imported modules
        visible = [ns]
        seen = set()
        work = list(import_paths)
        while work:
            p = Path(work.pop(0))
            if p in seen:
                continue
            seen.add(p)
            rec = self.modules.get(p)
            if rec is None:
                continue
            visible.append(rec.ns)
            work.extend(rec.imports)

        def resolve(name: str):
            if "." in name:
                if self.env.lookup(name) is not None:
                    return ("const", name)
                return None
            hits = []
            for v in visible:
                q = f"{v}.{name}"
                if self.env.lookup(q) is not None and q not in hits:
                    hits.append(q)
            if len(hits) == 1:
                return ("const", hits[0])
            if len(hits) > 1:
                # innermost (own module) wins; otherwise ambiguous
                own = f"{ns}.{name}"
                if own == hits[0]:
                    return ("const", own)
                return None
            if name in P.TABLE:
                return ("prim", name)
            return None

        return resolve

    # -- public driving ------------------------------------------------------------

    def collect_files(self, target: Path) -> list:
        target = Path(target)
        if target.is_file():
            return [target]
        out = []
        for p in sorted(target.rglob("*.hott")):
            parts = set(p.parts)
            if not self.include_open and ("open" in parts or "alt" in parts):
                continue
            out.append(p)
        return out

    def check_paths(self, targets) -> int:
        """Check all targets; returns the exit code (0/1/2)."""
        files = []
        for t in targets:
            t = Path(t)
            if not t.exists():
                self.diagnostics.append(
                    Diagnostic(E_IO, f"no such file or directory: {t}"))
                return 2
            files.extend(self.collect_files(t))
        code = 0
        for f in files:
            try:
                rec = self.check_module(f)
                line = f"checked {rec.ns} ({len(rec.decl_names)} declarations)"
                if self.timing:
                    line += f" [{rec.elapsed:.3f}s]"
                self.out_lines.append(line)
            except Diagnostic as d:
                if d.span.file is None:
                    d = Diagnostic(d.code, d.message,
                                   Span(0, 0, str(f)), d.expected, d.actual,
                                   d.stack)
                self.diagnostics.append(d)
                self.modules[Path(f).resolve()] = ModuleRecord(
                    Path(f).stem, Path(f).resolve(), "", "", (), (), False)
                code = 1 if d.code not in ("E-IO",) else 2
        self.diagnostics.sort(key=lambda d: (d.span.file or "",
                                             d.span.start, d.span.end,
                                             d.code))
        return code

    def resolve_constant(self, name: str) -> Optional[str]:
        if self.env.lookup(name) is not None:
            return name
        hits = [k for k in self.env.entries if k.endswith("." + name)]
        if len(hits) == 1:
            return hits[0]
        return None

    def printer(self) -> Printer:
        def shorten(qname: str) -> str:
            bare = qname.split(".")[-1]
            hits = [k for k in self.env.entries if k.endswith("." + bare)]
            if len(hits) == 1 and bare not in P.TABLE:
                return bare
            return qname

        return Printer(shorten)

    def axiom_audit(self, name: str) -> Optional[list]:
        q = self.resolve_constant(name)
        if q is None:
            return None
        return sorted(rules.axiom_audit(self.env, q))

    def normal_form(self, name: str) -> Optional[tuple]:
        """(type string, body normal form string or None for postulates)."""
        q = self.resolve_constant(name)
        if q is None:
            return None
        e = self.env.lookup(q)
        pr = self.printer()
        ty_nf = rules.normalize_term(self.env, e.ty_term)
        ty_s = pr.show(ty_nf)
        if e.def_term is None:
            return (ty_s, None)
        body_nf = rules.normalize_term(self.env, e.def_term, e.ty_term)
        return (ty_s, pr.show(body_nf))
