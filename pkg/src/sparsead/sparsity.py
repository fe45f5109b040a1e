"""Whole-graph sparsity propagation for Jacobians and Hessians.

Index sets are propagated as Python integers used as bitsets (bit ``j`` set
means index ``j`` is a member), which makes every union a single ``|``.
Results are handed back as :class:`Pattern` objects holding sorted, 1-based
index tuples.

The reverse Jacobian sweep runs over every operation node ``k = ell..n+1``,
dependents included.  Dependents may feed other nodes (and a COPY dependent
always has an operand), so starting the sweep below the dependents would
never move their index sets onto the nodes they read.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np

from .graph import Graph
from .ops import LINEARITY


def members(bits: int) -> list[int]:
    """Sorted members of a bitset."""
    out = []
    while bits:
        low = bits & -bits
        out.append(low.bit_length() - 1)
        bits ^= low
    return out


def to_bits(indices: Iterable[int]) -> int:
    bits = 0
    for j in indices:
        bits |= 1 << j
    return bits


def index_set(indices: Optional[Iterable[int]], upper: int, name: str = "index") -> tuple:
    """Validate a 1-based index selection; ``None`` selects ``1..upper``."""
    if indices is None:
        return tuple(range(1, upper + 1))
    out = sorted(set(int(i) for i in indices))
    if out and (out[0] < 1 or out[-1] > upper):
        raise ValueError(f"{name} set {out} not contained in 1..{upper}")
    return tuple(out)


@dataclass(frozen=True)
class Pattern:
    """Row-oriented boolean sparsity pattern.

    ``rows[i - 1]`` holds the ascending column indices of row ``i``; both row
    and column indices are 1-based.
    """

    nrows: int
    ncols: int
    rows: tuple

    def __post_init__(self):
        if len(self.rows) != self.nrows:
            raise ValueError(f"expected {self.nrows} rows, got {len(self.rows)}")
        for i, r in enumerate(self.rows, start=1):
            if any(r[t] >= r[t + 1] for t in range(len(r) - 1)):
                raise ValueError(f"row {i} is not strictly increasing")
            if r and (r[0] < 1 or r[-1] > self.ncols):
                raise ValueError(f"row {i} has a column outside 1..{self.ncols}")

    @classmethod
    def from_sets(cls, nrows: int, ncols: int, sets: Iterable[Iterable[int]]) -> "Pattern":
        return cls(nrows, ncols, tuple(tuple(sorted(s)) for s in sets))

    @classmethod
    def from_bits(cls, nrows: int, ncols: int, bits: Iterable[int]) -> "Pattern":
        return cls(nrows, ncols, tuple(tuple(members(x)) for x in bits))

    @classmethod
    def from_entries(cls, nrows: int, ncols: int, entries: Iterable[tuple]) -> "Pattern":
        sets = [set() for _ in range(nrows)]
        for i, j in entries:
            sets[i - 1].add(j)
        return cls.from_sets(nrows, ncols, sets)

    @classmethod
    def from_dense(cls, mask) -> "Pattern":
        mask = np.asarray(mask, dtype=bool)
        return cls(mask.shape[0], mask.shape[1],
                   tuple(tuple(int(j) + 1 for j in np.flatnonzero(r)) for r in mask))

    def row(self, i: int) -> tuple:
        return self.rows[i - 1]

    def nnz(self) -> int:
        return sum(len(r) for r in self.rows)

    def entries(self) -> Iterator[tuple]:
        """``(i, j)`` pairs in row-major, ascending-column order."""
        for i, r in enumerate(self.rows, start=1):
            for j in r:
                yield i, j

    def columns(self) -> list[list[int]]:
        """Row indices of each column (``columns()[j - 1]``)."""
        cols = [[] for _ in range(self.ncols)]
        for i, j in self.entries():
            cols[j - 1].append(i)
        return cols

    def transpose(self) -> "Pattern":
        return Pattern(self.ncols, self.nrows, tuple(tuple(c) for c in self.columns()))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols), dtype=bool)
        for i, j in self.entries():
            out[i - 1, j - 1] = True
        return out

    def is_symmetric(self) -> bool:
        return self.nrows == self.ncols and self == self.transpose()

    def upper(self) -> "Pattern":
        """Entries on or above the diagonal."""
        return Pattern(self.nrows, self.ncols,
                       tuple(tuple(j for j in r if j >= i) for i, r in enumerate(self.rows, start=1)))

    def restrict_rows(self, rows: Iterable[int]) -> "Pattern":
        keep = set(rows)
        return Pattern(self.nrows, self.ncols,
                       tuple(r if i in keep else () for i, r in enumerate(self.rows, start=1)))

    def to_text(self) -> str:
        return "".join(f"row {i}:" + "".join(f" {j}" for j in r) + "\n"
                       for i, r in enumerate(self.rows, start=1))

    @classmethod
    def from_text(cls, text: str, ncols: int) -> "Pattern":
        rows = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            head, _, tail = line.partition(":")
            if head.split() != ["row", str(lineno)]:
                raise ValueError(f"line {lineno}: expected 'row {lineno}:'")
            rows.append(tuple(int(t) for t in tail.split()))
        return cls(len(rows), ncols, tuple(rows))


@dataclass(frozen=True)
class ActivitySeq:
    """Forward marks ``c`` and reverse flags ``d``, indexed by node (slot 0 unused).

    ``c[k] == m + 1`` when node ``k`` depends on no selected independent,
    ``0`` otherwise.  ``d[k]`` is true when some selected dependent depends
    on node ``k``.
    """

    c: tuple
    d: tuple
    m: int


# ---------------------------------------------------------------------------
# Jacobian sparsity

def forward_sets(g: Graph, J=None) -> list[int]:
    """Bitsets ``X[k]`` of selected independents each node depends on."""
    J = index_set(J, g.n, "J")
    X = [0] * (g.ell + 1)
    for j in J:
        X[j] = 1 << j
    a, b = g.a, g.b
    for k in range(g.n + 1, g.ell + 1):
        ak, bk = a[k], b[k]
        X[k] = X[ak] if ak == bk else X[ak] | X[bk]
    return X


def reverse_sets(g: Graph, I=None) -> list[int]:
    """Bitsets ``Y[k]`` of selected dependents that depend on node ``k``."""
    I = index_set(I, g.m, "I")
    ell, m = g.ell, g.m
    Y = [0] * (ell + 1)
    for i in I:
        Y[ell - m + i] = 1 << i
    a, b = g.a, g.b
    for k in range(ell, g.n, -1):
        y = Y[k]
        if y:
            ak, bk = a[k], b[k]
            Y[ak] |= y
            if bk != ak:
                Y[bk] |= y
    return Y


def forward_jacobian_sparsity(g: Graph, J=None) -> Pattern:
    """Pattern of ``f'(x)`` restricted to the columns in ``J``."""
    X = forward_sets(g, J)
    return Pattern.from_bits(g.m, g.n, X[g.ell - g.m + 1:])


def reverse_jacobian_sparsity(g: Graph, I=None) -> Pattern:
    """Pattern of ``f'(x)`` restricted to the rows in ``I``."""
    Y = reverse_sets(g, I)
    rows = [[] for _ in range(g.m)]
    for j in range(1, g.n + 1):
        for i in members(Y[j]):
            rows[i - 1].append(j)
    return Pattern(g.m, g.n, tuple(tuple(r) for r in rows))


def init_activity(g: Graph, J=None, I=None) -> ActivitySeq:
    """O(ell) activity flags without materialising any index sets."""
    J = index_set(J, g.n, "J")
    I = index_set(I, g.m, "I")
    ell, m, n = g.ell, g.m, g.n
    a, b = g.a, g.b

    fwd = [False] * (ell + 1)
    for j in J:
        fwd[j] = True
    for k in range(n + 1, ell + 1):
        fwd[k] = fwd[a[k]] or fwd[b[k]]
    ignore = m + 1
    c = tuple(0 if f else ignore for f in fwd)

    d = [False] * (ell + 1)
    for i in I:
        d[ell - m + i] = True
    for k in range(ell, n, -1):
        if d[k]:
            d[a[k]] = True
            d[b[k]] = True
    d[0] = False
    return ActivitySeq(c, tuple(d), m)


# ---------------------------------------------------------------------------
# Hessian sparsity of g(x) = sum_i w_i f_i(x)

def _reverse_active(g: Graph, I) -> list[bool]:
    d = init_activity(g, None, I).d
    return d


def forward_hessian_sparsity(g: Graph, J=None, w_support=None) -> Pattern:
    """Forward propagation of nonlinear interaction sets ``N_j``.

    When an operator is jointly nonlinear as well as left (right)
    nonlinear, the two unions for the left (right) operand collapse into one
    union with ``X[a] | X[b]``.
    """
    n = g.n
    X = forward_sets(g, J)
    d = _reverse_active(g, w_support)
    N = [0] * (n + 1)
    kinds, a, b = g.kind, g.a, g.b
    for k in range(n + 1, g.ell + 1):
        if not d[k]:
            continue
        left, right, joint = LINEARITY[kinds[k]]
        if not (left or right or joint):
            continue
        xa, xb = X[a[k]], X[b[k]]
        if left:
            add = xa | xb if joint else xa
            for j in members(xa):
                N[j] |= add
        elif joint:
            for j in members(xa):
                N[j] |= xb
        if right:
            add = xa | xb if joint else xb
            for j in members(xb):
                N[j] |= add
        elif joint:
            for j in members(xb):
                N[j] |= xa
    return Pattern.from_bits(n, n, N[1:])


def reverse_hessian_sparsity(g: Graph, J=None, w_support=None) -> Pattern:
    """Reverse propagation of the sets ``M_k``; rows restricted to ``J``."""
    n = g.n
    Jset = index_set(J, n, "J")
    X = forward_sets(g, Jset)
    d = _reverse_active(g, w_support)
    M = [0] * (g.ell + 1)
    kinds, a, b = g.kind, g.a, g.b
    for k in range(g.ell, n, -1):
        if not d[k]:
            continue
        ak, bk = a[k], b[k]
        add_a = add_b = M[k]
        left, right, joint = LINEARITY[kinds[k]]
        if left:
            add_a |= X[ak]
            add_b |= X[ak]
        if right:
            add_a |= X[bk]
            add_b |= X[bk]
        if joint:
            add_a |= X[bk]
            add_b |= X[ak]
        M[ak] |= add_a
        M[bk] |= add_b
    keep = set(Jset)
    return Pattern.from_bits(n, n, [M[j] if j in keep else 0 for j in range(1, n + 1)])
