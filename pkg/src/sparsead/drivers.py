"""Sparse Jacobians and Hessians, end to end.

Three methods share one interface:

``forward_compressed``
    column pattern, distance-2 column coloring, one forward sweep per color
    (or a single sweep carrying every color when ``onepass`` is set).
``reverse_compressed``
    same with rows and reverse sweeps.
``subgraph``
    one reverse sweep per dependent restricted to its sorted subgraph; no
    coloring and no compression.

Hessians are returned as their upper triangle.  The compressed methods use a
star coloring of the Hessian pattern and Hessian-vector products; the
subgraph method records a tape for the weighted gradient and takes its
subgraph Jacobian.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import coloring
from .coloring import ColoringResult, SeedMatrix, SparseMatrixValues
from .graph import Graph, forward_values, prune
from .sparsity import (Pattern, forward_hessian_sparsity, forward_jacobian_sparsity,
                       index_set, init_activity, reverse_hessian_sparsity,
                       reverse_jacobian_sparsity)
from .subgraph import MarkVector, SubgraphWork, sorted_subgraph
from .sweeps import (first_partials, forward_sweep, record_gradient_graph,
                     reverse_subgraph, reverse_sweep, second_order_sweep,
                     second_partials)

METHODS = ("forward_compressed", "reverse_compressed", "subgraph")
COLORINGS = ("greedy", "none")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MethodConfig:
    """Method choice plus the option flags that go with it.

    ``coloring`` defaults to ``greedy`` for the compressed methods and
    ``none`` for subgraph.  ``none`` with a compressed method gives every
    column (row) its own color, i.e. one full sweep per index.
    """

    method: str = "subgraph"
    onepass: bool = False
    optimize: bool = False
    setup_cached: bool = False
    coloring: str | None = None

    def __post_init__(self):
        method = self.method.replace("-", "_")
        object.__setattr__(self, "method", method)
        if method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        col = self.coloring
        if col is None:
            col = "none" if method == "subgraph" else "greedy"
            object.__setattr__(self, "coloring", col)
        if col not in COLORINGS:
            raise ConfigError(f"unknown coloring {col!r}; expected one of {COLORINGS}")
        if method == "subgraph":
            if self.onepass:
                raise ConfigError("onepass must be false when the method is subgraph")
            if col != "none":
                raise ConfigError("coloring must be none when the method is subgraph")

    @property
    def reverse(self) -> bool:
        return self.method != "forward_compressed"


@dataclass
class Work:
    """Counters for one evaluation (``visits``) and for setup."""

    visits: int = 0            # node updates in derivative sweeps
    passes: int = 0            # derivative sweeps performed
    colors: int = 0
    coloring_calls: int = 0
    subgraph: SubgraphWork = field(default_factory=SubgraphWork)


def _identity_coloring(p: Pattern, mode: str) -> ColoringResult:
    counts = [len(c) for c in p.columns()] if mode != "row" else [len(r) for r in p.rows]
    color, nxt = [], 0
    for cnt in counts:
        if cnt:
            color.append(nxt)
            nxt += 1
        else:
            color.append(-1)
    return ColoringResult(tuple(color), nxt, mode)


def _restrict_columns(p: Pattern, J) -> Pattern:
    keep = set(J)
    return Pattern(p.nrows, p.ncols, tuple(tuple(j for j in r if j in keep) for r in p.rows))


def _check_x(g: Graph, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (g.n,):
        raise ValueError(f"x must have shape ({g.n},), got {x.shape}")
    return x


def _direction_rows(seed_cols: np.ndarray):
    """Per-index rows of a seed block: floats for one column, arrays otherwise."""
    if seed_cols.shape[1] == 1:
        return [float(t) for t in seed_cols[:, 0]], 0.0
    return [seed_cols[t].copy() for t in range(seed_cols.shape[0])], np.zeros(seed_cols.shape[1])


def _blocks(k: int, onepass: bool):
    if k == 0:
        return []
    if onepass:
        return [slice(0, k)]
    return [slice(c, c + 1) for c in range(k)]


def _as_matrix(rows, r):
    if r == 1 and not isinstance(rows[0], np.ndarray):
        return np.array(rows, dtype=float)[:, None]
    return np.vstack(rows)


# ---------------------------------------------------------------------------
# Jacobian

class SparseJacobian:
    """Setup for one graph and method; :meth:`jacobian` may be called repeatedly."""

    def __init__(self, g: Graph, cfg: MethodConfig, J=None, I=None):
        self.cfg = cfg
        self.graph = prune(g) if cfg.optimize else g
        g = self.graph
        self.J = index_set(J, g.n, "J")
        self.I = index_set(I, g.m, "I")
        self.setup_work = Work()
        self.work = Work()
        if cfg.method == "subgraph":
            act = init_activity(g, self.J, self.I)
            marks = MarkVector.from_activity(act)
            self.subgraphs = [sorted_subgraph(g, i, marks, self.setup_work.subgraph)
                              for i in self.I]
            rows = [()] * g.m
            for Gi in self.subgraphs:
                rows[Gi.i - 1] = tuple(sorted(k for k in Gi.nodes if k <= g.n))
            self.pattern = Pattern(g.m, g.n, tuple(rows))
            return
        if cfg.method == "forward_compressed":
            p = forward_jacobian_sparsity(g, self.J).restrict_rows(self.I)
            mode = "column"
        else:
            p = _restrict_columns(reverse_jacobian_sparsity(g, self.I), self.J)
            mode = "row"
        self.pattern = p
        if cfg.coloring == "greedy":
            self.setup_work.coloring_calls += 1
            cr = coloring.color_columns(p) if mode == "column" else coloring.color_rows(p)
        else:
            cr = _identity_coloring(p, mode)
        self.coloring_result = cr
        self.seed: SeedMatrix = coloring.build_seed(cr, p)
        self.setup_work.colors = cr.num_colors

    def jacobian(self, x) -> SparseMatrixValues:
        g = self.graph
        x = _check_x(g, x)
        work = Work()
        v = forward_values(g, x)
        if self.cfg.method == "subgraph":
            vals = []
            ws = [0.0] * (g.ell + 1)
            for Gi in self.subgraphs:
                _, row = reverse_subgraph(g, v, Gi.i, Gi, ws)
                vals.append(row)
                work.visits += len(Gi)
                work.passes += 1
            self.work = work
            values = np.concatenate(vals) if vals else np.zeros(0)
            return SparseMatrixValues(self.pattern, values)

        D1, D2 = first_partials(g, v)
        seed = self.seed.seed
        k = seed.shape[1]
        forward = self.cfg.method == "forward_compressed"
        comp = np.zeros((g.m, k) if forward else (k, g.n))
        for blk in _blocks(k, self.cfg.onepass):
            rows, zero = _direction_rows(seed[:, blk])
            r = blk.stop - blk.start
            if forward:
                vd = forward_sweep(g, D1, D2, rows, zero)
                comp[:, blk] = _as_matrix(vd[g.ell - g.m + 1:], r)
            else:
                vbar = reverse_sweep(g, D1, D2, rows, zero)
                comp[blk, :] = _as_matrix(vbar[1:g.n + 1], r).T
            work.visits += r * (g.ell - g.n)
            work.passes += 1
        work.colors = k
        self.work = work
        return coloring.recover(self.pattern, comp, self.seed)


def _subgraph_jacobian_streaming(g: Graph, x, J, I, work: Work) -> SparseMatrixValues:
    """Subgraph Jacobian without keeping any ``G_i`` after its sweep."""
    J = index_set(J, g.n, "J")
    I = index_set(I, g.m, "I")
    v = forward_values(g, x)
    marks = MarkVector.from_activity(init_activity(g, J, I))
    rows = [()] * g.m
    vals = []
    ws = [0.0] * (g.ell + 1)
    for i in I:
        Gi = sorted_subgraph(g, i, marks, work.subgraph)
        cols, row = reverse_subgraph(g, v, i, Gi, ws)
        rows[i - 1] = cols
        vals.append(row)
        work.visits += len(Gi)
        work.passes += 1
    values = np.concatenate(vals) if vals else np.zeros(0)
    return SparseMatrixValues(Pattern(g.m, g.n, tuple(rows)), values)


def sparse_jacobian(g: Graph, x, cfg: MethodConfig, J=None, I=None,
                    work: Work | None = None) -> SparseMatrixValues:
    """Sparse ``f'(x)`` on rows ``I`` and columns ``J`` (default: all).

    With ``cfg.setup_cached`` the setup for ``(g, cfg)`` is kept and reused
    by later calls on the same graph object.
    """
    if cfg.setup_cached:
        prep = _cached(g, cfg)
        out = prep._jacobian(J, I).jacobian(x)
        if work is not None:
            _merge(work, prep._jacobian(J, I).work)
        return out
    if cfg.method == "subgraph":
        G = prune(g) if cfg.optimize else g
        w = work if work is not None else Work()
        return _subgraph_jacobian_streaming(G, _check_x(G, x), J, I, w)
    sj = SparseJacobian(g, cfg, J, I)
    out = sj.jacobian(x)
    if work is not None:
        _merge(work, sj.setup_work)
        _merge(work, sj.work)
    return out


def _merge(dst: Work, src: Work):
    dst.visits += src.visits
    dst.passes += src.passes
    dst.colors = max(dst.colors, src.colors)
    dst.coloring_calls += src.coloring_calls
    s, t = dst.subgraph, src.subgraph
    s.ell = max(s.ell, t.ell)
    s.subgraph_nodes += t.subgraph_nodes
    s.stack_visits += t.stack_visits
    s.subgraphs += t.subgraphs
    s.max_stack = max(s.max_stack, t.max_stack)


# ---------------------------------------------------------------------------
# Hessian

def _upper(full: SparseMatrixValues) -> SparseMatrixValues:
    keep = [j >= i for i, j in full.pattern.entries()]
    return SparseMatrixValues(full.pattern.upper(), np.asarray(full.values)[keep])


class SparseHessian:
    """Setup for the Hessian of ``sum_i w_i f_i`` with ``w`` fixed."""

    def __init__(self, g: Graph, w, cfg: MethodConfig, J=None):
        self.cfg = cfg
        w = np.asarray(w, dtype=float)
        if w.shape != (g.m,):
            raise ValueError(f"w must have shape ({g.m},), got {w.shape}")
        self.w = w
        self.J = index_set(J, g.n, "J")
        self.setup_work = Work()
        self.work = Work()
        if cfg.method == "subgraph":
            h = record_gradient_graph(g, w)
            self.gradient_graph = h
            self.inner = SparseJacobian(h, cfg, J=self.J, I=self.J)
            _merge(self.setup_work, self.inner.setup_work)
            self.full_pattern = self.inner.pattern
            self.pattern = self.full_pattern.upper()
            return
        self.graph = prune(g) if cfg.optimize else g
        g = self.graph
        support = [i for i in range(1, g.m + 1) if w[i - 1] != 0.0]
        sparsity = forward_hessian_sparsity if cfg.method == "forward_compressed" else reverse_hessian_sparsity
        p = sparsity(g, self.J, support)
        self.full_pattern = p
        self.pattern = p.upper()
        if cfg.coloring == "greedy":
            self.setup_work.coloring_calls += 1
            cr = coloring.color_symmetric(p)
        else:
            cr = _identity_coloring(p, "symmetric")
        self.coloring_result = cr
        self.seed = coloring.build_seed(cr, p)
        self.setup_work.colors = cr.num_colors

    def hessian(self, x) -> SparseMatrixValues:
        if self.cfg.method == "subgraph":
            full = self.inner.jacobian(x)
            self.work = self.inner.work
            return _upper(full)
        g = self.graph
        x = _check_x(g, x)
        work = Work()
        P = second_partials(g, forward_values(g, x))
        seed = self.seed.seed
        k = seed.shape[1]
        comp = np.zeros((g.n, k))
        for blk in _blocks(k, self.cfg.onepass):
            rows, zero = _direction_rows(seed[:, blk])
            r = blk.stop - blk.start
            vbd = second_order_sweep(g, P, self.w, rows, zero)
            comp[:, blk] = _as_matrix(vbd[1:g.n + 1], r)
            work.visits += 2 * r * (g.ell - g.n)
            work.passes += 1
        work.colors = k
        self.work = work
        full = coloring.recover(self.full_pattern, comp, self.seed, symmetric=True)
        return _upper(full)


def sparse_hessian(g: Graph, x, w, cfg: MethodConfig, J=None,
                   work: Work | None = None) -> SparseMatrixValues:
    """Upper triangle of the Hessian of ``sum_i w_i f_i`` at ``x``."""
    if cfg.setup_cached:
        sh = _cached(g, cfg)._hessian(w, J)
        out = sh.hessian(x)
        if work is not None:
            _merge(work, sh.work)
        return out
    sh = SparseHessian(g, w, cfg, J)
    out = sh.hessian(x)
    if work is not None:
        _merge(work, sh.setup_work)
        _merge(work, sh.work)
    return out


# ---------------------------------------------------------------------------
# Setup caching

class Prepared:
    """Setup artifacts for one graph, built on first use and then reused."""

    def __init__(self, g: Graph, cfg: MethodConfig):
        self.g = g
        self.cfg = cfg
        self._jac: dict = {}
        self._hes: dict = {}

    def _jacobian(self, J=None, I=None) -> SparseJacobian:
        key = (None if J is None else index_set(J, self.g.n, "J"),
               None if I is None else index_set(I, self.g.m, "I"))
        sj = self._jac.get(key)
        if sj is None:
            sj = self._jac[key] = SparseJacobian(self.g, self.cfg, J, I)
        return sj

    def _hessian(self, w, J=None) -> SparseHessian:
        w = np.asarray(w, dtype=float)
        key = (w.tobytes(), None if J is None else index_set(J, self.g.n, "J"))
        sh = self._hes.get(key)
        if sh is None:
            sh = self._hes[key] = SparseHessian(self.g, w, self.cfg, J)
        return sh

    def jacobian(self, x, J=None, I=None) -> SparseMatrixValues:
        return self._jacobian(J, I).jacobian(x)

    def hessian(self, x, w, J=None) -> SparseMatrixValues:
        return self._hessian(w, J).hessian(x)

    @property
    def work(self) -> Work:
        """Counters of the most recent Jacobian evaluation."""
        sj = self._jac.get((None, None))
        return sj.work if sj is not None else Work()


def with_setup_cached(g: Graph, cfg: MethodConfig) -> Prepared:
    return Prepared(g, cfg)


def _cached(g: Graph, cfg: MethodConfig) -> Prepared:
    # kept on the tape itself so the setup lives exactly as long as the graph
    store = g.__dict__.setdefault("_prepared", {})
    prep = store.get(cfg)
    if prep is None:
        prep = store[cfg] = Prepared(g, cfg)
    return prep
