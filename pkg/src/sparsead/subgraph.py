"""Per-dependent reverse subgraph traversals.

Both traversals are non-recursive depth-first searches from one dependent
node toward the independents.  They share a single mark vector across all
dependents: the dependent's own index ``i`` is the mark, so nothing has to be
cleared between searches and the cost of a search is proportional to the
size of its subgraph, not of the whole graph.

Mark encoding (one signed integer per node):

* ``0``      untouched
* ``m + 1``  ignore (the node depends on no selected independent)
* ``+i``     visited while searching for dependent ``i``
* ``-i``     done: placed in subgraph ``i``

A :class:`MarkVector` is owned by one caller at a time.  Processing
dependents in parallel needs one mark vector per worker, each built from the
same :class:`~sparsead.sparsity.ActivitySeq`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .graph import Graph
from .sparsity import ActivitySeq, Pattern, index_set


class MarkVector:
    """Mutable per-node marks plus the set of dependents already searched."""

    def __init__(self, marks, m: int):
        self.marks = list(marks)
        self.m = m
        self.used: set[int] = set()

    @classmethod
    def from_activity(cls, act: ActivitySeq) -> "MarkVector":
        return cls(act.c, act.m)

    def __len__(self):
        return len(self.marks) - 1

    def _claim(self, g: Graph, i: int):
        if len(self.marks) != g.ell + 1:
            raise ValueError(f"mark vector covers {len(self.marks) - 1} nodes, graph has {g.ell}")
        if not 1 <= i <= g.m:
            raise ValueError(f"dependent index {i} outside 1..{g.m}")
        if i in self.used:
            raise ValueError(f"dependent {i} was already searched with this mark vector")
        self.used.add(i)


@dataclass
class SubgraphWork:
    """Tallies accumulated while traversing subgraphs."""

    ell: int = 0
    subgraph_nodes: int = 0   # sum of |G_i|
    stack_visits: int = 0     # pops (sparsity) or top-of-stack examinations (sorted)
    max_stack: int = 0
    subgraphs: int = 0
    top_counts: dict = field(default_factory=dict, repr=False)


def subgraph_work(work: SubgraphWork) -> tuple[int, int]:
    """``(sum_i |G_i|, ell)``: the two terms of the traversal cost."""
    return work.subgraph_nodes, work.ell


@dataclass(frozen=True)
class SortedSubgraph:
    """Nodes that dependent ``i`` depends on, in dependency order.

    The dependent node itself is the last entry.  Independents appear where
    they were first reached, not necessarily at the front.
    """

    i: int
    nodes: tuple

    def __len__(self):
        return len(self.nodes)

    def __str__(self):
        return f"G {self.i}:" + "".join(f" {k}" for k in self.nodes)


def subgraph_sparsity(g: Graph, I, marks: MarkVector, work: SubgraphWork | None = None) -> Pattern:
    """Jacobian rows ``S_i`` for ``i`` in ``I`` by depth-first search.

    ``marks`` must come from :func:`~sparsead.sparsity.init_activity` with the
    column selection of interest; it is updated in place.
    """
    I = index_set(I, g.m, "I")
    n, ell, m = g.n, g.ell, g.m
    a, b = g.a, g.b
    c = marks.marks
    ignore = m + 1
    rows = [()] * m
    if work is not None:
        work.ell = ell
    for i in I:
        marks._claim(g, i)
        done = i
        S = []
        K = [ell - m + i]
        pops = 0
        depth = 1
        while K:
            k = K.pop()
            pops += 1
            for nu in (a[k], b[k]):
                cn = c[nu]
                if cn != done and cn != ignore:
                    c[nu] = done
                    if nu <= n:
                        S.append(nu)
                    else:
                        K.append(nu)
            if len(K) > depth:
                depth = len(K)
        rows[i - 1] = tuple(sorted(S))
        if work is not None:
            work.stack_visits += pops
            work.subgraph_nodes += pops + len(S)
            work.subgraphs += 1
            work.max_stack = max(work.max_stack, depth)
    return Pattern(m, g.n, tuple(rows))


def sorted_subgraph(g: Graph, i: int, marks: MarkVector,
                    work: SubgraphWork | None = None) -> SortedSubgraph:
    """Dependency-sorted subgraph ``G_i`` of dependent ``i``.

    A node moves from the stack to ``G_i`` once all of its operands are done.
    Operands are pushed larger index first: the larger may depend on the
    smaller, so the smaller is searched (and finished) first.
    """
    marks._claim(g, i)
    n, ell, m = g.n, g.ell, g.m
    a, b = g.a, g.b
    c = marks.marks
    visited, done, ignore = i, -i, m + 1
    G = []
    K = [ell - m + i]
    c[K[0]] = visited
    tops = 0
    depth = 1
    counts = work.top_counts if work is not None else None
    while K:
        k = K[-1]
        tops += 1
        if counts is not None:
            counts[k] = counts.get(k, 0) + 1
        ak, bk = a[k], b[k]
        ca, cb = c[ak], c[bk]
        if (ca == done or ca == ignore) and (cb == done or cb == ignore):
            K.pop()
            G.append(k)
            c[k] = done
            continue
        hi, lo = (ak, bk) if ak >= bk else (bk, ak)
        for nu in ((hi, lo) if hi != lo else (hi,)):
            cn = c[nu]
            if cn != visited and cn != done and cn != ignore:
                if nu <= n:
                    G.append(nu)
                    c[nu] = done
                else:
                    K.append(nu)
                    c[nu] = visited
        if len(K) > depth:
            depth = len(K)
    if work is not None:
        work.ell = ell
        work.subgraph_nodes += len(G)
        work.stack_visits += tops
        work.subgraphs += 1
        work.max_stack = max(work.max_stack, depth)
    return SortedSubgraph(i, tuple(G))


def sorted_subgraphs(g: Graph, I, marks: MarkVector, work: SubgraphWork | None = None):
    """Yield ``G_i`` for each ``i`` in ``I``, one at a time."""
    for i in index_set(I, g.m, "I"):
        yield sorted_subgraph(g, i, marks, work)
