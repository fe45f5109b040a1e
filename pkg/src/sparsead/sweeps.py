"""Numerical derivative sweeps over a tape.

Direction bundles are handled without separate code paths: a single
direction is carried as plain floats, ``r > 1`` directions as numpy rows of
length ``r``.  Every per-node update only uses ``+`` and ``*``, which both
representations support.
"""
from __future__ import annotations

import numpy as np

from . import graph as _graph
from .graph import Graph, Recorder, forward_values
from .ops import (FIRST, MATH_ERRORS, SECOND, VALUE, NonDifferentiableError,
                  OpKind, symbolic_partials)
from .subgraph import SortedSubgraph


def first_partials(g: Graph, v) -> tuple[list, list]:
    """Per-node ``(d1, d2)`` lists at node values ``v`` (padded)."""
    ell = g.ell
    D1 = [0.0] * (ell + 1)
    D2 = [0.0] * (ell + 1)
    kinds, a, b, const = g.kind, g.a, g.b, g.const
    k = g.n
    try:
        for k in range(g.n + 1, ell + 1):
            D1[k], D2[k] = FIRST[kinds[k]](v[a[k]], v[b[k]], const[k], v[k])
    except MATH_ERRORS as e:
        raise NonDifferentiableError(k, kinds[k], str(e)) from None
    return D1, D2


def second_partials(g: Graph, v) -> list:
    """Per-node ``(d1, d2, d11, d12, d22)`` tuples (entries 0..n are None)."""
    P = [None] * (g.ell + 1)
    kinds, a, b, const = g.kind, g.a, g.b, g.const
    k = g.n
    try:
        for k in range(g.n + 1, g.ell + 1):
            P[k] = SECOND[kinds[k]](v[a[k]], v[b[k]], const[k], v[k])
    except MATH_ERRORS as e:
        raise NonDifferentiableError(k, kinds[k], str(e)) from None
    return P


def _rows(mat, count: int, what: str):
    """Split an ``(count,)`` or ``(count, r)`` array into per-index rows."""
    arr = np.asarray(mat, dtype=float)
    if arr.shape[0] != count or arr.ndim not in (1, 2):
        raise ValueError(f"{what} must have shape ({count},) or ({count}, r), got {arr.shape}")
    if arr.ndim == 1:
        return [float(t) for t in arr], 0.0, 1
    r = arr.shape[1]
    return [arr[t].copy() for t in range(count)], np.zeros(r), r


def _stack(rows, r):
    if r == 1 and not isinstance(rows[0], np.ndarray):
        return np.array(rows, dtype=float)
    return np.vstack(rows)


def forward_sweep(g: Graph, D1, D2, xdot_rows, zero):
    vd = [zero] * (g.ell + 1)
    vd[1:g.n + 1] = xdot_rows
    a, b = g.a, g.b
    for k in range(g.n + 1, g.ell + 1):
        ak, bk = a[k], b[k]
        if ak == bk:
            vd[k] = (D1[k] + D2[k]) * vd[ak]
        else:
            vd[k] = D1[k] * vd[ak] + D2[k] * vd[bk]
    return vd


def reverse_sweep(g: Graph, D1, D2, w_rows, zero):
    ell, m = g.ell, g.m
    vbar = [zero] * (ell + 1)
    for i in range(m):
        vbar[ell - m + 1 + i] = w_rows[i]
    a, b = g.a, g.b
    for k in range(ell, g.n, -1):
        vb = vbar[k]
        ak, bk = a[k], b[k]
        if ak == bk:
            vbar[ak] = vbar[ak] + (D1[k] + D2[k]) * vb
        else:
            vbar[ak] = vbar[ak] + D1[k] * vb
            vbar[bk] = vbar[bk] + D2[k] * vb
    return vbar


def forward_one(g: Graph, x, Xdot) -> np.ndarray:
    """``f'(x) @ Xdot`` for ``Xdot`` of shape ``(n,)`` or ``(n, r)``."""
    rows, zero, r = _rows(Xdot, g.n, "Xdot")
    v = forward_values(g, x)
    D1, D2 = first_partials(g, v)
    vd = forward_sweep(g, D1, D2, rows, zero)
    return _stack(vd[g.ell - g.m + 1:], r)


def reverse_one(g: Graph, v, w) -> np.ndarray:
    """Weighted gradient ``sum_i w_i f_i'(x)`` from precomputed node values.

    ``v`` is the padded value vector returned by
    :func:`~sparsead.graph.eval_zero`; ``w`` may also be ``(m, r)`` to get
    ``r`` weighted gradients (result ``(n, r)``).
    """
    v = list(v)
    if len(v) != g.ell + 1:
        raise ValueError(f"expected {g.ell + 1} padded node values, got {len(v)}")
    rows, zero, r = _rows(w, g.m, "w")
    D1, D2 = first_partials(g, v)
    vbar = reverse_sweep(g, D1, D2, rows, zero)
    return _stack(vbar[1:g.n + 1], r)


def gradient(g: Graph, x, w) -> np.ndarray:
    return reverse_one(g, forward_values(g, x), w)


def reverse_subgraph(g: Graph, v, i: int, Gi: SortedSubgraph, workspace=None):
    """Row ``i`` of the Jacobian, sweeping only the nodes of ``G_i``.

    Returns ``(columns, values)`` with ascending column indices.
    ``workspace`` is an optional zeroed list of length ``ell + 1``; it is
    left zeroed on return so it can be reused row after row.
    """
    ell, n = g.ell, g.n
    dep = ell - g.m + i
    if Gi.i != i or not Gi.nodes or Gi.nodes[-1] != dep:
        raise ValueError(f"subgraph {Gi.i} does not end at dependent {i} (node {dep})")
    vbar = workspace if workspace is not None else [0.0] * (ell + 1)
    if len(vbar) != ell + 1:
        raise ValueError("workspace length does not match graph")
    kinds, a, b, const = g.kind, g.a, g.b, g.const
    nodes = Gi.nodes
    vbar[dep] = 1.0
    k = dep
    try:
        for k in reversed(nodes):
            if k <= n:
                continue
            vb = vbar[k]
            ak, bk = a[k], b[k]
            d1, d2 = FIRST[kinds[k]](v[ak], v[bk], const[k], v[k])
            if ak == bk:
                vbar[ak] += (d1 + d2) * vb
            else:
                vbar[ak] += d1 * vb
                vbar[bk] += d2 * vb
    except MATH_ERRORS as e:
        raise NonDifferentiableError(k, kinds[k], str(e)) from None
    cols = sorted(k for k in nodes if k <= n)
    vals = np.array([vbar[j] for j in cols])
    # operands outside G_i (ignored nodes) may have received adjoints too
    for k in nodes:
        vbar[k] = 0.0
        vbar[a[k]] = 0.0
        vbar[b[k]] = 0.0
    return tuple(cols), vals


def second_order_sweep(g: Graph, P, w, u_rows, zero):
    """Tangent sweep along ``u`` then the differentiated reverse sweep.

    ``P`` holds the per-node second partials; returns the padded list of
    adjoint derivatives (entries ``1..n`` are ``g''(x) @ u``).
    """
    n, ell, m = g.n, g.ell, g.m
    a, b = g.a, g.b
    vd = [zero] * (ell + 1)
    vd[1:n + 1] = u_rows
    for k in range(n + 1, ell + 1):
        p = P[k]
        vd[k] = p[0] * vd[a[k]] + p[1] * vd[b[k]]

    vbar = [0.0] * (ell + 1)
    vbd = [zero] * (ell + 1)
    for i in range(m):
        vbar[ell - m + 1 + i] = float(w[i])
    for k in range(ell, n, -1):
        vb = vbar[k]
        vbdk = vbd[k]
        ak, bk = a[k], b[k]
        d1, d2, d11, d12, d22 = P[k]
        vbar[ak] += d1 * vb
        vbar[bk] += d2 * vb
        vbd[ak] = vbd[ak] + d1 * vbdk + vb * (d11 * vd[ak] + d12 * vd[bk])
        vbd[bk] = vbd[bk] + d2 * vbdk + vb * (d12 * vd[ak] + d22 * vd[bk])
    return vbd


def hess_vec(g: Graph, x, w, u) -> np.ndarray:
    """``g''(x) @ u`` for ``g = sum_i w_i f_i``; ``u`` may be ``(n, r)``."""
    w = np.asarray(w, dtype=float)
    if w.shape != (g.m,):
        raise ValueError(f"w must have shape ({g.m},), got {w.shape}")
    rows, zero, r = _rows(u, g.n, "u")
    P = second_partials(g, forward_values(g, x))
    vbd = second_order_sweep(g, P, w, rows, zero)
    return _stack(vbd[1:g.n + 1], r)


# ---------------------------------------------------------------------------
# Gradient tape

def _replay(kind: OpKind, u, w, c):
    if not isinstance(u, _graph.Var) and not isinstance(w, _graph.Var):
        return VALUE[kind](u, w, c)
    K = OpKind
    if kind is K.ADD:
        return u + w
    if kind is K.SUB:
        return u - w
    if kind is K.MUL:
        return u * w
    if kind is K.DIV:
        return u / w
    if kind is K.POW:
        return u ** w
    if kind is K.NEG:
        return -u
    if kind is K.SIN:
        return _graph.sin(u)
    if kind is K.COS:
        return _graph.cos(u)
    if kind is K.EXP:
        return _graph.exp(u)
    if kind is K.LOG:
        return _graph.log(u)
    if kind is K.SQRT:
        return _graph.sqrt(u)
    if kind is K.ADDCONST:
        return u + c
    if kind is K.SUBCONSTL:
        return c - w
    if kind is K.SUBCONSTR:
        return u - c
    if kind is K.MULCONST:
        return c * u
    if kind is K.DIVCONSTL:
        return c / w
    if kind is K.DIVCONSTR:
        return u / c
    if kind is K.POWCONSTEXP:
        return u ** c
    if kind is K.POWCONSTBASE:
        return c ** w
    if kind is K.COPY:
        return u
    raise ValueError(f"cannot replay {kind!r}")


def _scale(d, vb):
    if isinstance(d, float) and isinstance(vb, float):
        return d * vb
    if isinstance(d, float):
        d, vb = vb, d
    # d is a handle here
    if isinstance(vb, float):
        if vb == 1.0:
            return d
        if vb == -1.0:
            return -d
    return d * vb


def _accumulate(acc, term):
    return term if acc is None else acc + term


def record_gradient_graph(g: Graph, w) -> Graph:
    """Tape for ``h(x) = sum_i w_i f_i'(x)`` with ``w`` baked in.

    The forward nodes are replayed into a new recorder and the reverse sweep
    is carried out on handles.  Adjoints of nodes no weighted dependent
    depends on stay structurally zero and emit nothing; components of ``h``
    that are identically constant become CONST nodes.
    """
    n, ell, m = g.n, g.ell, g.m
    w = [float(t) for t in w]
    if len(w) != m:
        raise ValueError(f"w must have length {m}")
    rec = Recorder(n)
    h = [0.0] * (ell + 1)
    h[1:n + 1] = rec.independents
    kinds, a, b, const = g.kind, g.a, g.b, g.const
    for k in range(n + 1, ell + 1):
        kind = kinds[k]
        h[k] = const[k] if kind is OpKind.CONST else _replay(kind, h[a[k]], h[b[k]], const[k])

    vbar = [None] * (ell + 1)
    for i in range(m):
        if w[i] != 0.0:
            vbar[ell - m + 1 + i] = w[i]
    for k in range(ell, n, -1):
        vb = vbar[k]
        if vb is None:
            continue
        ak, bk = a[k], b[k]
        d1, d2 = symbolic_partials(kinds[k], h[ak], h[bk], const[k], h[k], _graph)
        if d1 is not None:
            vbar[ak] = _accumulate(vbar[ak], _scale(d1, vb))
        if d2 is not None:
            vbar[bk] = _accumulate(vbar[bk], _scale(d2, vb))
    return rec.finish([vbar[j] if vbar[j] is not None else 0.0 for j in range(1, n + 1)])
