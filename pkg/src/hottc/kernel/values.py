"""Semantic values for normalization by evaluation.

Neutral heads carry their types so readback can stay type-directed and
produce η-long forms without an ambient context.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from . import syntax as S

Value = Union[
    "VUni", "VPi", "VLam", "VSigma", "VPair", "VId", "VRefl",
    "VPrim", "VNe",
]


@dataclass(frozen=True)
class Closure:
    env: tuple  # values for the enclosing binders
    body: "S.Term"
    name: str = field(default="x", compare=False)
    icit: bool = False


@dataclass(frozen=True)
class VUni:
    level: int


@dataclass(frozen=True)
class VPi:
    dom: "Value"
    cod: Closure

    @property
    def icit(self):
        return self.cod.icit


@dataclass(frozen=True)
class VLam:
    closure: Closure


@dataclass(frozen=True)
class VSigma:
    dom: "Value"
    cod: Closure


@dataclass(frozen=True)
class VPair:
    fst: "Value"
    snd: "Value"


@dataclass(frozen=True)
class VId:
    ty: "Value"
    lhs: "Value"
    rhs: "Value"


@dataclass(frozen=True)
class VRefl:
    arg: "Value"


@dataclass(frozen=True)
class VPrim:
    """Canonical (former/intro) primitive value, possibly undersaturated."""

    name: str
    args: tuple = ()


# -- neutral machinery -------------------------------------------------------


@dataclass(frozen=True)
class HVar:
    lvl: int  # de Bruijn level
    ty: Optional["Value"] = field(default=None, compare=False)
    name: str = field(default="x", compare=False)


@dataclass(frozen=True)
class HConst:
    """Postulated constant (axiom declaration) without a definition."""

    name: str
    ty: Optional["Value"] = field(default=None, compare=False)


@dataclass(frozen=True)
class HPrim:
    """Stuck eliminator or axiom-tagged primitive."""

    name: str


@dataclass(frozen=True)
class HMeta:
    mid: int


@dataclass(frozen=True)
class SApp:
    arg: "Value"
    icit: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class SFst:
    pass


@dataclass(frozen=True)
class SSnd:
    pass


@dataclass(frozen=True)
class VNe:
    head: Union[HVar, HConst, HPrim, HMeta]
    spine: tuple = ()


def vvar(lvl: int, ty: Optional[Value] = None, name: str = "x") -> VNe:
    return VNe(HVar(lvl, ty, name))
