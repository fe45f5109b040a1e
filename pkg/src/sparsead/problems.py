"""Built-in test functions with known derivative structure.

``matvec`` and ``chain`` are the two complexity examples: a dense linear map
whose tape has ``n**2`` multiply-adds, and the identity plus one dense
column, produced by a chain of sines that every dependent runs through.
``grid`` (a Hessian problem) and ``banded`` (a Jacobian problem) give sparse
structure with closed-form patterns.

A :class:`ProblemSpec` is cheap to build; the tape is recorded by
:meth:`ProblemSpec.graph`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import graph as G
from .graph import Graph, Recorder
from .ops import OpKind
from .sparsity import Pattern


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    n: int
    m: int
    builder: Callable[[], Graph]
    reference_pattern: Callable[[], Pattern]
    seed: int | None = None
    hessian: bool = False    # True: evaluate the Hessian of sum_i w_i f_i
    size: int = 0

    def graph(self) -> Graph:
        return self.builder()

    def weights(self) -> np.ndarray:
        return np.ones(self.m)

    def point(self, seed: int = 0) -> np.ndarray:
        """Deterministic evaluation point in ``[-0.5, 0.5]**n``."""
        return np.random.default_rng(seed).uniform(-0.5, 0.5, self.n)


def _dense(m, n):
    return Pattern(m, n, tuple(tuple(range(1, n + 1)) for _ in range(m)))


def matvec_matrix(n: int, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-1.0, 1.0, (n, n))


def matvec(n: int, seed: int = 0, A=None) -> ProblemSpec:
    """``f(x) = A x`` with a fixed random dense ``A`` (or the given square ``A``)."""
    if A is not None:
        A = np.array(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        n = A.shape[0]
    if n < 1:
        raise ValueError("matvec needs n >= 1")
    M = matvec_matrix(n, seed) if A is None else A

    def build():
        A = M
        rec = Recorder(n)
        x = rec.independents
        out = []
        for i in range(n):
            t = float(A[i, 0]) * x[0]
            for j in range(1, n):
                t = t + float(A[i, j]) * x[j]
            out.append(t)
        return rec.finish(out)

    return ProblemSpec("matvec", n, n, build, lambda: _dense(n, n), seed=seed, size=n)


def chain(n: int) -> ProblemSpec:
    """``y_k = s + x_k`` where ``s`` is ``sin`` applied ``n`` times to ``x_n``."""
    if n < 1:
        raise ValueError("chain needs n >= 1")

    def build():
        rec = Recorder(n)
        x = rec.independents
        s = x[-1]
        for _ in range(n):
            s = G.sin(s)
        return rec.finish([s + xk for xk in x])

    def ref():
        return Pattern(n, n, tuple(tuple(sorted({k, n})) for k in range(1, n + 1)))

    return ProblemSpec("chain", n, n, build, ref, size=n)


def _grid_edges(p: int):
    idx = lambda r, c: r * p + c + 1  # noqa: E731
    edges = []
    for r in range(p):
        for c in range(p):
            if c + 1 < p:
                edges.append((idx(r, c), idx(r, c + 1)))
            if r + 1 < p:
                edges.append((idx(r, c), idx(r + 1, c)))
    return edges


def grid_energy(p: int) -> ProblemSpec:
    """Scalar ``sum_edges (x_a - x_b)**2 + sum_i exp(x_i)`` on a ``p`` x ``p`` grid."""
    if p < 1:
        raise ValueError("grid needs p >= 1")
    n = p * p
    edges = _grid_edges(p)

    def build():
        rec = Recorder(n)
        x = rec.independents
        total = None
        for a, b in edges:
            d = x[a - 1] - x[b - 1]
            term = d * d
            total = term if total is None else total + term
        for xi in x:
            total = G.exp(xi) if total is None else total + G.exp(xi)
        return rec.finish([total])

    def ref():
        sets = [{j} for j in range(1, n + 1)]
        for a, b in edges:
            sets[a - 1].add(b)
            sets[b - 1].add(a)
        return Pattern.from_sets(n, n, sets)

    return ProblemSpec("grid", n, 1, build, ref, hessian=True, size=p)


def banded_residual(n: int, bandwidth: int = 1) -> ProblemSpec:
    """``f_i = (3 - 2 x_i) x_i + 1 - sum of the other x_j with |j - i| <= bandwidth``."""
    if n < 1 or bandwidth < 0:
        raise ValueError("banded needs n >= 1 and bandwidth >= 0")

    def build():
        rec = Recorder(n)
        x = rec.independents
        out = []
        for i in range(n):
            t = (3.0 - 2.0 * x[i]) * x[i] + 1.0
            for j in range(max(0, i - bandwidth), min(n, i + bandwidth + 1)):
                if j != i:
                    t = t - x[j]
            out.append(t)
        return rec.finish(out)

    def ref():
        return Pattern(n, n, tuple(tuple(range(max(1, i - bandwidth), min(n, i + bandwidth) + 1))
                                   for i in range(1, n + 1)))

    return ProblemSpec("banded", n, n, build, ref, size=n)


PROBLEMS = {
    "matvec": lambda size: matvec(size, 0),
    "chain": chain,
    "grid": grid_energy,
    "banded": lambda size: banded_residual(size, 1),
}


def get_problem(name: str, size: int) -> ProblemSpec:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; expected one of {sorted(PROBLEMS)}") from None
    return factory(size)


# ---------------------------------------------------------------------------
# Random tapes for property tests

_BOUND = 4.0
_UNARY = (OpKind.NEG, OpKind.SIN, OpKind.COS, OpKind.EXP, OpKind.LOG, OpKind.SQRT,
          OpKind.ADDCONST, OpKind.SUBCONSTL, OpKind.SUBCONSTR, OpKind.MULCONST,
          OpKind.DIVCONSTL, OpKind.DIVCONSTR, OpKind.POWCONSTEXP, OpKind.POWCONSTBASE,
          OpKind.COPY)
_BINARY = (OpKind.ADD, OpKind.SUB, OpKind.MUL, OpKind.DIV, OpKind.POW)


def _hull(vals):
    return min(vals), max(vals)


def _interval(kind, lo_a, hi_a, lo_b, hi_b, c):
    """Enclosure of the node value, or None when the operation is unsafe.

    Unsafe means a domain boundary within 0.25 of the operand range, or a
    result that could leave ``[-4, 4]``.
    """
    K = OpKind
    corners_a, corners_b = (lo_a, hi_a), (lo_b, hi_b)
    if kind is K.ADD:
        out = (lo_a + lo_b, hi_a + hi_b)
    elif kind is K.SUB:
        out = (lo_a - hi_b, hi_a - lo_b)
    elif kind is K.MUL:
        out = _hull([u * w for u in corners_a for w in corners_b])
    elif kind is K.DIV:
        if not (lo_b > 0.5 or hi_b < -0.5):
            return None
        out = _hull([u / w for u in corners_a for w in corners_b])
    elif kind is K.POW:
        if lo_a < 0.25:
            return None
        out = _hull([u ** w for u in corners_a for w in corners_b])
    elif kind is K.NEG:
        out = (-hi_a, -lo_a)
    elif kind in (K.SIN, K.COS):
        out = (-1.0, 1.0)
    elif kind is K.EXP:
        if hi_a > 1.3:
            return None
        out = (np.exp(lo_a), np.exp(hi_a))
    elif kind is K.LOG:
        if lo_a < 0.25:
            return None
        out = (np.log(lo_a), np.log(hi_a))
    elif kind is K.SQRT:
        if lo_a < 0.25:
            return None
        out = (np.sqrt(lo_a), np.sqrt(hi_a))
    elif kind is K.ADDCONST:
        out = (lo_a + c, hi_a + c)
    elif kind is K.SUBCONSTL:
        out = (c - hi_b, c - lo_b)
    elif kind is K.SUBCONSTR:
        out = (lo_a - c, hi_a - c)
    elif kind is K.MULCONST:
        out = _hull([c * lo_a, c * hi_a])
    elif kind is K.DIVCONSTL:
        if not (lo_b > 0.5 or hi_b < -0.5):
            return None
        out = _hull([c / lo_b, c / hi_b])
    elif kind is K.DIVCONSTR:
        out = _hull([lo_a / c, hi_a / c])
    elif kind is K.POWCONSTEXP:
        if lo_a < 0.25:
            return None
        out = _hull([lo_a ** c, hi_a ** c])
    elif kind is K.POWCONSTBASE:
        out = _hull([c ** lo_b, c ** hi_b])
    elif kind is K.COPY:
        out = (lo_a, hi_a)
    else:
        raise ValueError(kind)
    if out[0] < -_BOUND or out[1] > _BOUND:
        return None
    return out


def _constant_for(kind, rng):
    K = OpKind
    if kind is K.POWCONSTEXP:
        return float(rng.choice([2.0, 3.0, 0.5, -1.0, 1.5]))
    if kind is K.POWCONSTBASE:
        return float(rng.uniform(0.5, 2.0))
    if kind is K.DIVCONSTR:
        return float(rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0))
    return float(rng.uniform(-1.0, 1.0))


def random_graph(seed: int, max_n: int = 20, max_m: int = 20, max_ell: int = 120) -> Graph:
    """Random valid tape on which every node is finite and smooth for ``x`` in ``[-1, 1]**n``.

    Value enclosures are tracked per node, and an operation is only emitted
    when its operands keep a margin from every domain boundary.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.integers(1, max_m + 1))
    budget = max_ell - n - m
    if budget < 1:
        m = max(1, max_ell - n - 1)
        budget = max_ell - n - m
    n_ops = int(rng.integers(1, budget + 1))
    rec = Recorder(n)
    handles = list(rec.independents)
    box = [(-1.0, 1.0)] * n
    emitted = 0
    tries = 0
    while emitted < n_ops and tries < 50 * max_ell:
        tries += 1
        # favour recent nodes so chains get deep
        pick = lambda: max(0, len(handles) - int(rng.geometric(0.15)))  # noqa: E731
        roll = rng.random()
        if roll < 0.03:
            c = float(rng.uniform(-1, 1))
            handles.append(rec.constant(c))
            box.append((c, c))
            emitted += 1
            continue
        if roll < 0.45:
            kind = _BINARY[int(rng.integers(len(_BINARY)))]
            ia, ib = pick(), int(rng.integers(len(handles)))
            if rng.random() < 0.5:
                ia, ib = ib, ia
        else:
            kind = _UNARY[int(rng.integers(len(_UNARY)))]
            ia = ib = pick()
        c = _constant_for(kind, rng) if kind.has_const else 0.0
        enc = _interval(kind, *box[ia], *box[ib], c)
        if enc is None:
            continue
        u, w = handles[ia], handles[ib]
        h = rec._emit(kind, u.index, w.index, c)
        handles.append(h)
        box.append(enc)
        emitted += 1
    picks = [handles[int(rng.integers(n, len(handles)))] if len(handles) > n and rng.random() < 0.85
             else handles[int(rng.integers(len(handles)))] for _ in range(m)]
    return rec.finish(picks)
