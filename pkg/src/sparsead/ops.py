"""Elementary operator table.

Every node of a tape applies one operator ``phi(u, w)`` to the values of its
two operands ``u = v[a]`` and ``w = v[b]``.  Unary operators store ``a == b``
and depend on exactly one argument slot: most use the left slot, the three
operators whose constant sits on the left (``c - x``, ``c / x``, ``c ** x``)
use the right slot.  ``CONST`` has no operand at all and stores ``a == b == 0``.

Values, first partials, second partials and the symbolic first partials used
when recording a gradient tape all live here, next to the linearity flags, so
the sparsity algorithms and the numerical sweeps read one source of truth.
"""
from __future__ import annotations

import enum
import math
from typing import NamedTuple


class OpKind(enum.IntEnum):
    ADD = 0
    SUB = 1
    MUL = 2
    DIV = 3
    POW = 4
    NEG = 5
    SIN = 6
    COS = 7
    EXP = 8
    LOG = 9
    SQRT = 10
    ADDCONST = 11
    SUBCONSTL = 12
    SUBCONSTR = 13
    MULCONST = 14
    DIVCONSTL = 15
    DIVCONSTR = 16
    POWCONSTEXP = 17
    POWCONSTBASE = 18
    COPY = 19
    CONST = 20

    @property
    def tag(self) -> str:
        return self.name.lower()

    @classmethod
    def from_tag(cls, tag: str) -> "OpKind":
        try:
            return cls[tag.upper()]
        except KeyError:
            raise ValueError(f"unknown op tag {tag!r}") from None

    @property
    def arity(self) -> int:
        return ARITY[self]

    @property
    def has_const(self) -> bool:
        return self in CONST_KINDS

    @property
    def linearity(self) -> "Linearity":
        return LINEARITY[self]


class Linearity(NamedTuple):
    """Which second partials of an operator may be nonzero somewhere."""

    left: bool
    right: bool
    joint: bool


_BINARY = {OpKind.ADD, OpKind.SUB, OpKind.MUL, OpKind.DIV, OpKind.POW}

CONST_KINDS = frozenset({
    OpKind.ADDCONST, OpKind.SUBCONSTL, OpKind.SUBCONSTR, OpKind.MULCONST,
    OpKind.DIVCONSTL, OpKind.DIVCONSTR, OpKind.POWCONSTEXP,
    OpKind.POWCONSTBASE, OpKind.CONST,
})

# unary operators that read the right argument slot
RIGHT_SLOT = frozenset({OpKind.SUBCONSTL, OpKind.DIVCONSTL, OpKind.POWCONSTBASE})

ARITY = [2 if k in _BINARY else (0 if k is OpKind.CONST else 1) for k in OpKind]

_F, _T = False, True
LINEARITY = [None] * len(OpKind)
for _k in (OpKind.ADD, OpKind.SUB, OpKind.NEG, OpKind.COPY, OpKind.ADDCONST,
           OpKind.SUBCONSTL, OpKind.SUBCONSTR, OpKind.MULCONST,
           OpKind.DIVCONSTR, OpKind.CONST):
    LINEARITY[_k] = Linearity(_F, _F, _F)
LINEARITY[OpKind.MUL] = Linearity(_F, _F, _T)
LINEARITY[OpKind.DIV] = Linearity(_F, _T, _T)
LINEARITY[OpKind.DIVCONSTL] = Linearity(_F, _T, _F)
LINEARITY[OpKind.POW] = Linearity(_T, _T, _T)
LINEARITY[OpKind.POWCONSTEXP] = Linearity(_T, _F, _F)
LINEARITY[OpKind.POWCONSTBASE] = Linearity(_F, _T, _F)
for _k in (OpKind.SIN, OpKind.COS, OpKind.EXP, OpKind.LOG, OpKind.SQRT):
    LINEARITY[_k] = Linearity(_T, _F, _F)
del _k


class DomainError(ValueError):
    """An operator was evaluated outside its domain."""

    def __init__(self, node: int, kind: OpKind, detail: str = ""):
        self.node = node
        self.kind = kind
        msg = f"node {node} ({kind.tag}): argument outside domain"
        super().__init__(msg + (f": {detail}" if detail else ""))


class NonDifferentiableError(ValueError):
    """A partial derivative does not exist (or is infinite) at a node."""

    def __init__(self, node: int, kind: OpKind, detail: str = ""):
        self.node = node
        self.kind = kind
        msg = f"node {node} ({kind.tag}): not differentiable at this point"
        super().__init__(msg + (f": {detail}" if detail else ""))


# math.pow raises on negative base with fractional exponent instead of
# silently going complex like the ** operator does
_pow = math.pow
_sin, _cos, _exp, _log, _sqrt = math.sin, math.cos, math.exp, math.log, math.sqrt


VALUE = [None] * len(OpKind)
VALUE[OpKind.ADD] = lambda u, w, c: u + w
VALUE[OpKind.SUB] = lambda u, w, c: u - w
VALUE[OpKind.MUL] = lambda u, w, c: u * w
VALUE[OpKind.DIV] = lambda u, w, c: u / w
VALUE[OpKind.POW] = lambda u, w, c: _pow(u, w)
VALUE[OpKind.NEG] = lambda u, w, c: -u
VALUE[OpKind.SIN] = lambda u, w, c: _sin(u)
VALUE[OpKind.COS] = lambda u, w, c: _cos(u)
VALUE[OpKind.EXP] = lambda u, w, c: _exp(u)
VALUE[OpKind.LOG] = lambda u, w, c: _log(u)
VALUE[OpKind.SQRT] = lambda u, w, c: _sqrt(u)
VALUE[OpKind.ADDCONST] = lambda u, w, c: u + c
VALUE[OpKind.SUBCONSTL] = lambda u, w, c: c - w
VALUE[OpKind.SUBCONSTR] = lambda u, w, c: u - c
VALUE[OpKind.MULCONST] = lambda u, w, c: c * u
VALUE[OpKind.DIVCONSTL] = lambda u, w, c: c / w
VALUE[OpKind.DIVCONSTR] = lambda u, w, c: u / c
VALUE[OpKind.POWCONSTEXP] = lambda u, w, c: _pow(u, c)
VALUE[OpKind.POWCONSTBASE] = lambda u, w, c: _pow(c, w)
VALUE[OpKind.COPY] = lambda u, w, c: u
VALUE[OpKind.CONST] = lambda u, w, c: c


# First partials (d1, d2).  ``y`` is the node's own value, reused where cheap.
def _p1_pow(u, w, c, y):
    return w * _pow(u, w - 1.0), y * _log(u)


def _p1_powconstexp(u, w, c, y):
    return (c * _pow(u, c - 1.0) if c != 0.0 else 0.0), 0.0


FIRST = [None] * len(OpKind)
FIRST[OpKind.ADD] = lambda u, w, c, y: (1.0, 1.0)
FIRST[OpKind.SUB] = lambda u, w, c, y: (1.0, -1.0)
FIRST[OpKind.MUL] = lambda u, w, c, y: (w, u)
FIRST[OpKind.DIV] = lambda u, w, c, y: (1.0 / w, -y / w)
FIRST[OpKind.POW] = _p1_pow
FIRST[OpKind.NEG] = lambda u, w, c, y: (-1.0, 0.0)
FIRST[OpKind.SIN] = lambda u, w, c, y: (_cos(u), 0.0)
FIRST[OpKind.COS] = lambda u, w, c, y: (-_sin(u), 0.0)
FIRST[OpKind.EXP] = lambda u, w, c, y: (y, 0.0)
FIRST[OpKind.LOG] = lambda u, w, c, y: (1.0 / u, 0.0)
FIRST[OpKind.SQRT] = lambda u, w, c, y: (0.5 / y, 0.0)
FIRST[OpKind.ADDCONST] = lambda u, w, c, y: (1.0, 0.0)
FIRST[OpKind.SUBCONSTL] = lambda u, w, c, y: (0.0, -1.0)
FIRST[OpKind.SUBCONSTR] = lambda u, w, c, y: (1.0, 0.0)
FIRST[OpKind.MULCONST] = lambda u, w, c, y: (c, 0.0)
FIRST[OpKind.DIVCONSTL] = lambda u, w, c, y: (0.0, -y / w)
FIRST[OpKind.DIVCONSTR] = lambda u, w, c, y: (1.0 / c, 0.0)
FIRST[OpKind.POWCONSTEXP] = _p1_powconstexp
FIRST[OpKind.POWCONSTBASE] = lambda u, w, c, y: (0.0, y * _log(c))
FIRST[OpKind.COPY] = lambda u, w, c, y: (1.0, 0.0)
FIRST[OpKind.CONST] = lambda u, w, c, y: (0.0, 0.0)


# Second partials (d1, d2, d11, d12, d22).
def _p2_div(u, w, c, y):
    r = 1.0 / w
    return r, -y * r, 0.0, -r * r, 2.0 * y * r * r


def _p2_pow(u, w, c, y):
    lu = _log(u)
    um1 = _pow(u, w - 1.0)
    return (w * um1, y * lu, w * (w - 1.0) * _pow(u, w - 2.0),
            um1 * (1.0 + w * lu), y * lu * lu)


def _p2_powconstexp(u, w, c, y):
    d1 = c * _pow(u, c - 1.0) if c != 0.0 else 0.0
    d11 = c * (c - 1.0) * _pow(u, c - 2.0) if c not in (0.0, 1.0) else 0.0
    return d1, 0.0, d11, 0.0, 0.0


def _p2_sqrt(u, w, c, y):
    d = 0.5 / y
    return d, 0.0, -0.5 * d / u, 0.0, 0.0


def _p2_log(u, w, c, y):
    r = 1.0 / u
    return r, 0.0, -r * r, 0.0, 0.0


def _p2_divconstl(u, w, c, y):
    r = 1.0 / w
    return 0.0, -y * r, 0.0, 0.0, 2.0 * y * r * r


def _p2_powconstbase(u, w, c, y):
    lc = _log(c)
    return 0.0, y * lc, 0.0, 0.0, y * lc * lc


def _p2_linear(first):
    def f(u, w, c, y):
        d1, d2 = first(u, w, c, y)
        return d1, d2, 0.0, 0.0, 0.0
    return f


SECOND = [None] * len(OpKind)
for _k in OpKind:
    if not any(LINEARITY[_k]):
        SECOND[_k] = _p2_linear(FIRST[_k])
SECOND[OpKind.MUL] = lambda u, w, c, y: (w, u, 0.0, 1.0, 0.0)
SECOND[OpKind.DIV] = _p2_div
SECOND[OpKind.POW] = _p2_pow
SECOND[OpKind.SIN] = lambda u, w, c, y: (_cos(u), 0.0, -y, 0.0, 0.0)
SECOND[OpKind.COS] = lambda u, w, c, y: (-_sin(u), 0.0, -y, 0.0, 0.0)
SECOND[OpKind.EXP] = lambda u, w, c, y: (y, 0.0, y, 0.0, 0.0)
SECOND[OpKind.LOG] = _p2_log
SECOND[OpKind.SQRT] = _p2_sqrt
SECOND[OpKind.DIVCONSTL] = _p2_divconstl
SECOND[OpKind.POWCONSTEXP] = _p2_powconstexp
SECOND[OpKind.POWCONSTBASE] = _p2_powconstbase
del _k

# Arithmetic failures that signal a domain or differentiability problem.
MATH_ERRORS = (ZeroDivisionError, ValueError, OverflowError)


def value(kind: OpKind, u: float, w: float, c: float = 0.0) -> float:
    return VALUE[kind](u, w, c)


def first_partials(kind: OpKind, u: float, w: float, c: float = 0.0):
    y = VALUE[kind](u, w, c)
    return FIRST[kind](u, w, c, y)


def second_partials(kind: OpKind, u: float, w: float, c: float = 0.0):
    y = VALUE[kind](u, w, c)
    return SECOND[kind](u, w, c, y)


def symbolic_partials(kind: OpKind, u, w, c, y, lib):
    """Partials of one node expressed over recorded handles.

    ``u``, ``w`` and ``y`` are handles (or plain floats) for the operands and
    the node value; ``lib`` supplies ``sin``, ``cos``, ``log`` that accept
    either.  Returns ``(d1, d2)`` where ``None`` marks a structurally zero
    partial.
    """
    K = OpKind
    if kind is K.ADD:
        return 1.0, 1.0
    if kind is K.SUB:
        return 1.0, -1.0
    if kind is K.MUL:
        return w, u
    if kind is K.DIV:
        return 1.0 / w, -y / w
    if kind is K.POW:
        return w * u ** (w - 1.0), y * lib.log(u)
    if kind is K.NEG:
        return -1.0, None
    if kind is K.SIN:
        return lib.cos(u), None
    if kind is K.COS:
        return -lib.sin(u), None
    if kind is K.EXP:
        return y, None
    if kind is K.LOG:
        return 1.0 / u, None
    if kind is K.SQRT:
        return 0.5 / y, None
    if kind in (K.ADDCONST, K.SUBCONSTR, K.COPY):
        return 1.0, None
    if kind is K.SUBCONSTL:
        return None, -1.0
    if kind is K.MULCONST:
        return c, None
    if kind is K.DIVCONSTL:
        return None, -y / w
    if kind is K.DIVCONSTR:
        return 1.0 / c, None
    if kind is K.POWCONSTEXP:
        if c == 0.0:
            return 0.0 * u, None
        return c * u ** (c - 1.0), None
    if kind is K.POWCONSTBASE:
        return None, y * math.log(c)
    if kind is K.CONST:
        return None, None
    raise ValueError(f"no partials for {kind!r}")
