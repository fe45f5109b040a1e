"""Computational graph (tape) recording, evaluation and serialization.

Nodes are numbered ``1..ell``.  Nodes ``1..n`` are the independent variables,
every node ``k > n`` applies one :class:`~sparsead.ops.OpKind` to operand
nodes ``a[k]`` and ``b[k]`` (both ``< k``), and the last ``m`` nodes are the
dependent variables.  Per-node arrays are padded so they can be indexed by
node number directly; slot 0 is a permanent zero that operand-free nodes
(``CONST``) point at.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .ops import CONST_KINDS, MATH_ERRORS, VALUE, DomainError, OpKind


class GraphError(ValueError):
    """Invalid graph structure."""


class GraphFormatError(GraphError):
    """Malformed serialized graph text."""

    def __init__(self, lineno: int, msg: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}")


class RecordingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Graph:
    """Immutable tape.

    ``kind``, ``a``, ``b`` and ``const`` have length ``ell + 1``; entries for
    slot 0 and the independents are placeholders (``None``/0/0.0).
    """

    n: int
    m: int
    kind: tuple
    a: tuple
    b: tuple
    const: tuple
    trusted: bool = field(default=False, compare=False, repr=False)

    def __post_init__(self):
        n, m, ell = self.n, self.m, len(self.kind) - 1
        if not (len(self.a) == len(self.b) == len(self.const) == ell + 1):
            raise GraphError("per-node arrays differ in length")
        if n < 1:
            raise GraphError("need at least one independent variable")
        if not 1 <= m <= ell - n:
            raise GraphError(f"need 1 <= m <= ell - n, got m={m}, ell={ell}, n={n}")
        if self.trusted:
            return
        for k in range(n + 1, ell + 1):
            _check_node(k, self.kind[k], self.a[k], self.b[k])

    @classmethod
    def from_ops(cls, n: int, m: int, ops: Iterable[tuple]) -> "Graph":
        """Build from ``(kind, a, b[, const])`` records for nodes ``n+1..ell``."""
        kind, a, b, const = [None] * (n + 1), [0] * (n + 1), [0] * (n + 1), [0.0] * (n + 1)
        for op in ops:
            kind.append(OpKind(op[0]))
            a.append(int(op[1]))
            b.append(int(op[2]))
            const.append(float(op[3]) if len(op) > 3 else 0.0)
        return cls(n, m, tuple(kind), tuple(a), tuple(b), tuple(const))

    @property
    def ell(self) -> int:
        return len(self.kind) - 1

    @property
    def dependents(self) -> range:
        return range(self.ell - self.m + 1, self.ell + 1)

    def ops(self):
        """Yield ``(k, kind, a, b, const)`` for every operation node."""
        for k in range(self.n + 1, self.ell + 1):
            yield k, self.kind[k], self.a[k], self.b[k], self.const[k]

    def count(self, kind: OpKind) -> int:
        return sum(1 for kk in self.kind[self.n + 1:] if kk is kind)

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m}, ell={self.ell})"


def _check_node(k, kind, a, b, err=GraphError):
    if not isinstance(kind, OpKind):
        raise err(f"node {k}: bad op kind {kind!r}")
    if kind is OpKind.CONST:
        if a != 0 or b != 0:
            raise err(f"node {k}: const node must have operands 0 0")
        return
    if not (1 <= a < k and 1 <= b < k):
        raise err(f"node {k}: operands ({a}, {b}) must lie in 1..{k - 1}")
    if kind.arity == 1 and a != b:
        raise err(f"node {k}: unary op {kind.tag} needs a == b")


# ---------------------------------------------------------------------------
# Recording

class Var:
    """Handle to a node being recorded; arithmetic on it appends nodes."""

    __slots__ = ("rec", "index")
    __array_priority__ = 1000

    def __init__(self, rec: "Recorder", index: int):
        self.rec = rec
        self.index = index

    def __repr__(self):
        return f"Var({self.index})"

    def _bin(self, other, kind, const_kind, reflected=False):
        if isinstance(other, Var):
            self.rec._own(other)
            if reflected:
                return self.rec._emit(kind, other.index, self.index)
            return self.rec._emit(kind, self.index, other.index)
        if isinstance(other, numbers.Real):
            return self.rec._emit(const_kind, self.index, self.index, float(other))
        return NotImplemented

    def __add__(self, o):
        return self._bin(o, OpKind.ADD, OpKind.ADDCONST)

    __radd__ = __add__

    def __sub__(self, o):
        return self._bin(o, OpKind.SUB, OpKind.SUBCONSTR)

    def __rsub__(self, o):
        return self._bin(o, OpKind.SUB, OpKind.SUBCONSTL, reflected=True)

    def __mul__(self, o):
        return self._bin(o, OpKind.MUL, OpKind.MULCONST)

    __rmul__ = __mul__

    def __truediv__(self, o):
        return self._bin(o, OpKind.DIV, OpKind.DIVCONSTR)

    def __rtruediv__(self, o):
        return self._bin(o, OpKind.DIV, OpKind.DIVCONSTL, reflected=True)

    def __pow__(self, o):
        return self._bin(o, OpKind.POW, OpKind.POWCONSTEXP)

    def __rpow__(self, o):
        if isinstance(o, numbers.Real) and not o > 0:
            raise RecordingError(f"constant base {o} of c ** x must be positive")
        return self._bin(o, OpKind.POW, OpKind.POWCONSTBASE, reflected=True)

    def __neg__(self):
        return self.rec._emit(OpKind.NEG, self.index, self.index)

    def __pos__(self):
        return self


def _unary(kind: OpKind, fn: Callable[[float], float]):
    def f(x):
        if isinstance(x, Var):
            return x.rec._emit(kind, x.index, x.index)
        return fn(x)
    f.__name__ = kind.tag
    f.__doc__ = f"{kind.tag}(x): records a node for a Var, else evaluates."
    return f


sin = _unary(OpKind.SIN, math.sin)
cos = _unary(OpKind.COS, math.cos)
exp = _unary(OpKind.EXP, math.exp)
log = _unary(OpKind.LOG, math.log)
sqrt = _unary(OpKind.SQRT, math.sqrt)


class Recorder:
    """Operator-overloading tape recorder.

    >>> rec = Recorder(2)
    >>> x1, x2 = rec.independents
    >>> g = rec.finish([x1 * x2])
    >>> g.ell
    4
    """

    def __init__(self, n: int):
        if n < 1:
            raise RecordingError("need at least one independent variable")
        self.n = n
        self._kind = [None] * (n + 1)
        self._a = [0] * (n + 1)
        self._b = [0] * (n + 1)
        self._const = [0.0] * (n + 1)
        self.independents = [Var(self, j) for j in range(1, n + 1)]
        self._done = False

    def _own(self, var: Var):
        if var.rec is not self:
            raise RecordingError(f"{var!r} belongs to a different recorder")

    def _emit(self, kind: OpKind, a: int, b: int, const: float = 0.0) -> Var:
        if self._done:
            raise RecordingError("recorder already finished")
        if kind.arity == 1:
            b = a
        self._kind.append(kind)
        self._a.append(a)
        self._b.append(b)
        self._const.append(const)
        return Var(self, len(self._kind) - 1)

    def constant(self, c: float) -> Var:
        """Record a node holding the constant ``c``."""
        return self._emit(OpKind.CONST, 0, 0, float(c))

    def finish(self, outputs) -> Graph:
        """Append one COPY node per output so dependents fill the tail."""
        if isinstance(outputs, (Var, numbers.Real)):
            outputs = [outputs]
        outputs = list(outputs)
        if not outputs:
            raise RecordingError("program designated no dependent variables")
        idx = []
        for y in outputs:
            if isinstance(y, Var):
                self._own(y)
                idx.append(y.index)
            elif isinstance(y, numbers.Real):
                idx.append(self.constant(y).index)
            else:
                raise RecordingError(f"output {y!r} is neither a Var nor a number")
        for i in idx:
            self._emit(OpKind.COPY, i, i)
        self._done = True
        # operands come from live handles, so node order is legal by construction
        return Graph(self.n, len(idx), tuple(self._kind), tuple(self._a),
                     tuple(self._b), tuple(self._const), trusted=True)


def record(program: Callable[[list], object], n: int) -> Graph:
    """Record ``program`` applied to ``n`` independent variables.

    ``program`` receives a list of :class:`Var` handles and returns one output
    or a sequence of outputs (handles or plain numbers).
    """
    rec = Recorder(n)
    return rec.finish(program(list(rec.independents)))


# ---------------------------------------------------------------------------
# Evaluation

def forward_values(g: Graph, x) -> list:
    """Zero-order sweep; returns padded node values ``v[0..ell]``."""
    n = g.n
    if len(x) != n:
        raise ValueError(f"expected {n} independent values, got {len(x)}")
    v = [0.0] * (g.ell + 1)
    for j in range(n):
        xj = float(x[j])
        if not math.isfinite(xj):
            raise ValueError(f"independent {j + 1} is not finite")
        v[j + 1] = xj
    kinds, a, b, const = g.kind, g.a, g.b, g.const
    k = n
    try:
        for k in range(n + 1, g.ell + 1):
            v[k] = VALUE[kinds[k]](v[a[k]], v[b[k]], const[k])
    except MATH_ERRORS as e:
        raise DomainError(k, kinds[k], str(e)) from None
    return v


def eval_zero(g: Graph, x) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the tape at ``x``.

    Returns ``(y, v)``: the ``m`` dependent values and all node values, the
    latter padded so ``v[k]`` is node ``k`` (``v[0]`` is unused).
    """
    v = forward_values(g, x)
    return np.array(v[g.ell - g.m + 1:]), np.array(v)


# ---------------------------------------------------------------------------
# Dead-node elimination

def live_nodes(g: Graph) -> list[bool]:
    live = [False] * (g.ell + 1)
    for k in range(1, g.n + 1):
        live[k] = True
    for k in g.dependents:
        live[k] = True
    a, b = g.a, g.b
    for k in range(g.ell, g.n, -1):
        if live[k]:
            live[a[k]] = True
            live[b[k]] = True
    return live


def prune(g: Graph) -> Graph:
    """Drop nodes that no dependent depends on; keep relative order."""
    live = live_nodes(g)
    new = [0] * (g.ell + 1)
    ops = []
    nxt = g.n
    for k in range(1, g.n + 1):
        new[k] = k
    for k, kind, a, b, c in g.ops():
        if live[k]:
            nxt += 1
            new[k] = nxt
            ops.append((kind, new[a], new[b], c))
    if nxt == g.ell:
        return g
    return Graph.from_ops(g.n, g.m, ops)


# ---------------------------------------------------------------------------
# Text format

def serialize(g: Graph) -> str:
    lines = [f"graph {g.n} {g.m} {g.ell}"]
    for k, kind, a, b, c in g.ops():
        if kind in CONST_KINDS:
            lines.append(f"node {k} {kind.tag} {a} {b} {c!r}")
        else:
            lines.append(f"node {k} {kind.tag} {a} {b}")
    return "\n".join(lines) + "\n"


def deserialize(text: str) -> Graph:
    lines = text.splitlines()
    if not lines:
        raise GraphFormatError(1, "empty input")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "graph":
        raise GraphFormatError(1, "expected 'graph <n> <m> <ell>'")
    try:
        n, m, ell = (int(t) for t in head[1:])
    except ValueError:
        raise GraphFormatError(1, "header counts must be integers") from None
    if len(lines) != 1 + ell - n:
        raise GraphFormatError(len(lines), f"expected {ell - n} node lines, found {len(lines) - 1}")
    ops = []
    for lineno, line in enumerate(lines[1:], start=2):
        k = n + lineno - 1
        tok = line.split()
        if len(tok) not in (5, 6) or tok[0] != "node":
            raise GraphFormatError(lineno, "expected 'node <k> <tag> <a> <b> [<const>]'")
        try:
            kind = OpKind.from_tag(tok[2])
        except ValueError as e:
            raise GraphFormatError(lineno, str(e)) from None
        try:
            kk, a, b = int(tok[1]), int(tok[3]), int(tok[4])
        except ValueError:
            raise GraphFormatError(lineno, "node index and operands must be integers") from None
        if kk != k:
            raise GraphFormatError(lineno, f"expected node {k}, found {kk}")
        if (len(tok) == 6) != (kind in CONST_KINDS):
            raise GraphFormatError(lineno, f"op {kind.tag} {'needs' if kind in CONST_KINDS else 'takes no'} constant")
        c = 0.0
        if len(tok) == 6:
            try:
                c = float(tok[5])
            except ValueError:
                raise GraphFormatError(lineno, f"bad constant {tok[5]!r}") from None
        try:
            _check_node(k, kind, a, b)
        except GraphError as e:
            raise GraphFormatError(lineno, str(e)) from None
        ops.append((kind, a, b, c))
    try:
        return Graph.from_ops(n, m, ops)
    except GraphError as e:
        raise GraphFormatError(1, str(e)) from None


def example_graph(copy_tail: bool = True) -> Graph:
    """The two-output program ``y = (x1 + x2, x3 * (x1 + x2))``.

    With ``copy_tail=False`` the outputs are the ADD and MUL nodes themselves
    (``ell = 5``) instead of trailing COPY nodes (``ell = 7``).
    """
    if copy_tail:
        def f(x):
            v4 = x[0] + x[1]
            return [v4, x[2] * v4]
        return record(f, 3)
    return Graph.from_ops(3, 2, [(OpKind.ADD, 1, 2), (OpKind.MUL, 3, 4)])

