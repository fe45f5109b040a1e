"""Graph coloring for compressed Jacobian and Hessian evaluation.

Columns (rows) that share no row (column) can be seeded together and read
back from one forward (reverse) sweep.  For symmetric Hessians a star
coloring lets every entry be read directly from ``H @ S``, either at
``(i, color[j])`` or at ``(j, color[i])``.

Colors are 0-based; ``color[j - 1]`` belongs to column ``j``.  Columns with
no pattern entries get ``-1`` and are left out of every seed.
All greedy passes visit vertices in natural index order and take the
smallest feasible color, so results are deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sparsity import Pattern


class ColoringError(RuntimeError):
    pass


@dataclass(frozen=True)
class ColoringResult:
    color: tuple
    num_colors: int
    mode: str  # "column", "row" or "symmetric"


@dataclass(frozen=True)
class SeedMatrix:
    """0/1 seed plus, for each pattern entry, the compressed cell holding it.

    ``seed`` is ``(ncols, num_colors)`` for column and symmetric mode and
    ``(nrows, num_colors)`` for row mode.  ``cells[t]`` is the
    ``(row, col)`` position (0-based) in the compressed matrix of the t-th
    pattern entry in row-major order.  The compressed matrix is ``A @ seed``
    in column and symmetric mode and ``seed.T @ A`` in row mode.
    """

    seed: np.ndarray
    cells: tuple
    mode: str


@dataclass(frozen=True)
class SparseMatrixValues:
    """Pattern plus values aligned with its row-major entry order."""

    pattern: Pattern
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) != self.pattern.nnz():
            raise ValueError(f"{len(self.values)} values for {self.pattern.nnz()} entries")

    def triplets(self):
        return [(i, j, float(x)) for (i, j), x in zip(self.pattern.entries(), self.values)]

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.pattern.nrows, self.pattern.ncols))
        for (i, j), x in zip(self.pattern.entries(), self.values):
            out[i - 1, j - 1] = x
        return out


def _greedy(adjacency, nonempty) -> list[int]:
    color = [-1] * len(adjacency)
    for v, nbrs in enumerate(adjacency):
        if not nonempty[v]:
            continue
        used = {color[u] for u in nbrs}
        c = 0
        while c in used:
            c += 1
        color[v] = c
    return color


def _column_conflicts(p: Pattern) -> list[set]:
    """Columns sharing at least one row with each column (0-based)."""
    conflict = [set() for _ in range(p.ncols)]
    for r in p.rows:
        for j in r:
            conflict[j - 1].update(t - 1 for t in r)
    for j in range(p.ncols):
        conflict[j].discard(j)
    return conflict


def _result(color, mode):
    return ColoringResult(tuple(color), max(color, default=-1) + 1, mode)


def color_columns(p: Pattern) -> ColoringResult:
    """Greedy distance-2 coloring of the column intersection graph."""
    nonempty = [bool(c) for c in p.columns()]
    return _result(_greedy(_column_conflicts(p), nonempty), "column")


def color_rows(p: Pattern) -> ColoringResult:
    res = color_columns(p.transpose())
    return ColoringResult(res.color, res.num_colors, "row")


def _neighbors(p: Pattern) -> list[list[int]]:
    return [[j - 1 for j in r if j != i] for i, r in enumerate(p.rows, start=1)]


def color_symmetric(p: Pattern) -> ColoringResult:
    """Greedy star coloring of the adjacency graph of a symmetric pattern.

    Vertex ``v`` avoids the colors of its neighbors and any color that would
    complete a two-colored path on four vertices with ``v`` as an end
    (``v-w-x-y``) or as an inner vertex (``u-v-w-x``).  Every such path is
    checked when its last vertex gets colored, so the final coloring is a
    star coloring.
    """
    if not p.is_symmetric():
        raise ValueError("color_symmetric needs a symmetric pattern")
    nbr = _neighbors(p)
    color = [-1] * p.nrows
    for v in range(p.nrows):
        if not p.rows[v]:
            continue
        forbidden = set()
        tally: dict = {}
        for w in nbr[v]:
            cw = color[w]
            if cw == -1:
                continue
            forbidden.add(cw)
            tally[cw] = tally.get(cw, 0) + 1
            for x in nbr[w]:
                cx = color[x]
                if x == v or cx == -1:
                    continue
                # v-w-x-y with color(y) == color(w)
                if any(y != w and color[y] == cw for y in nbr[x]):
                    forbidden.add(cx)
        for w in nbr[v]:
            # u-v-w-x with color(u) == color(w), u != w
            if color[w] != -1 and tally[color[w]] >= 2:
                forbidden.update(color[x] for x in nbr[w] if x != v and color[x] != -1)
        c = 0
        while c in forbidden:
            c += 1
        color[v] = c
    return _result(color, "symmetric")


# ---------------------------------------------------------------------------
# Independent validity checks (brute force over the definitions)

def is_valid_distance2(p: Pattern, cr: ColoringResult) -> bool:
    """Two columns that share a row never share a color (transposed for rows)."""
    q = p.transpose() if cr.mode == "row" else p
    for r in q.rows:
        seen = set()
        for j in r:
            c = cr.color[j - 1]
            if c < 0 or c in seen:
                return False
            seen.add(c)
    return True


def is_valid_star(p: Pattern, cr: ColoringResult) -> bool:
    """Proper coloring with no two-colored path on four vertices."""
    dense = p.to_dense()
    n = p.nrows
    col = cr.color
    for i in range(n):
        if dense[i].any() and col[i] < 0:
            return False
    edges = [(i, j) for i in range(n) for j in range(n) if i != j and dense[i, j]]
    adj = [[j for j in range(n) if j != i and dense[i, j]] for i in range(n)]
    for i, j in edges:
        if col[i] == col[j]:
            return False
    for v2, v3 in edges:
        for v1 in adj[v2]:
            if v1 == v3 or col[v1] != col[v3]:
                continue
            for v4 in adj[v3]:
                if v4 in (v1, v2):
                    continue
                if col[v4] == col[v2]:
                    return False
    return True


def min_distance2_colors(p: Pattern) -> int:
    """Exact minimum number of colors for a column coloring (small inputs)."""
    conflict = _column_conflicts(p)
    active = [j for j, c in enumerate(p.columns()) if c]
    if not active:
        return 0
    col: dict = {}

    def place(t, k):
        if t == len(active):
            return True
        v = active[t]
        used = {col[u] for u in conflict[v] if u in col}
        # symmetry breaking: never open more than one new color at a time
        top = max(col.values(), default=-1)
        for c in range(min(k, top + 2)):
            if c not in used:
                col[v] = c
                if place(t + 1, k):
                    return True
                del col[v]
        return False

    for k in range(1, len(active) + 1):
        if place(0, k):
            return k
    return len(active)


# ---------------------------------------------------------------------------
# Seeds and recovery

def build_seed(cr: ColoringResult, p: Pattern) -> SeedMatrix:
    """Seed matrix and direct-recovery cells for every entry of ``p``."""
    k = cr.num_colors
    mode = cr.mode
    size = p.nrows if mode == "row" else p.ncols
    seed = np.zeros((size, k))
    for t, c in enumerate(cr.color):
        if c >= 0:
            seed[t, c] = 1.0

    # contributors[(row, col)] counts pattern entries summed into that cell
    contributors: dict = {}

    def cell(i, j):
        if mode == "row":
            return cr.color[i - 1], j - 1
        return i - 1, cr.color[j - 1]

    for i, j in p.entries():
        key = cell(i, j)
        contributors[key] = contributors.get(key, 0) + 1

    cells = []
    for i, j in p.entries():
        c = cell(i, j)
        if cr.color[(i if mode == "row" else j) - 1] >= 0 and contributors[c] == 1:
            cells.append(c)
            continue
        if mode == "symmetric":
            alt = (j - 1, cr.color[i - 1])
            if cr.color[i - 1] >= 0 and contributors.get(alt) == 1:
                cells.append(alt)
                continue
        raise ColoringError(f"entry ({i}, {j}) cannot be recovered from the compressed matrix")
    return SeedMatrix(seed, tuple(cells), mode)


def recover(p: Pattern, compressed, seed: SeedMatrix, symmetric: bool = False) -> SparseMatrixValues:
    """Read every pattern entry from its compressed cell (no arithmetic)."""
    if symmetric != (seed.mode == "symmetric"):
        raise ValueError(f"seed built in {seed.mode} mode, symmetric={symmetric}")
    comp = np.asarray(compressed, dtype=float)
    if comp.ndim == 1:
        comp = comp[:, None]
    if len(seed.cells) != p.nnz():
        raise ValueError("seed does not belong to this pattern")
    vals = np.array([comp[r, c] for r, c in seed.cells], dtype=float)
    return SparseMatrixValues(p, vals)
