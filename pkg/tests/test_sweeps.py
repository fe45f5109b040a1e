import math

import numpy as np
import pytest

import sparsead.graph as G
from sparsead.graph import eval_zero, example_graph, forward_values, record
from sparsead.ops import NonDifferentiableError
from sparsead.problems import matvec
from sparsead.sparsity import forward_jacobian_sparsity, init_activity, reverse_hessian_sparsity
from sparsead.subgraph import MarkVector, SortedSubgraph, sorted_subgraph
from sparsead.sweeps import (forward_one, gradient, hess_vec, record_gradient_graph, reverse_one,
                             reverse_subgraph)

from conftest import random_point
from oracles import fd_jacobian, fd_of_gradient, rel_err

X1 = [1.0, 2.0, 3.0]


def dense_jacobian(g, x):
    return forward_one(g, x, np.eye(g.n))


def test_forward_example_one():
    g = example_graph()
    assert forward_one(g, X1, [1.0, 0.0, 0.0]).tolist() == [1.0, 3.0]
    assert dense_jacobian(g, X1).tolist() == [[1.0, 1.0, 0.0], [3.0, 3.0, 3.0]]


def test_reverse_example_one():
    g = example_graph()
    _, v = eval_zero(g, X1)
    assert reverse_one(g, v, [0.0, 1.0]).tolist() == [3.0, 3.0, 3.0]
    assert reverse_one(g, v, [1.0, 0.0]).tolist() == [1.0, 1.0, 0.0]
    with pytest.raises(ValueError):
        reverse_one(g, v[:-1], [1.0, 0.0])


def test_reverse_subgraph_examples():
    g = example_graph()
    v = forward_values(g, X1)
    marks = MarkVector.from_activity(init_activity(g))
    G1 = sorted_subgraph(g, 1, marks)
    G2 = sorted_subgraph(g, 2, marks)
    cols, vals = reverse_subgraph(g, v, 2, G2)
    assert cols == (1, 2, 3) and vals.tolist() == [3.0, 3.0, 3.0]
    with pytest.raises(ValueError):
        reverse_subgraph(g, v, 1, G2)
    with pytest.raises(ValueError):
        reverse_subgraph(g, v, 1, SortedSubgraph(1, (1, 2)))
    cols, vals = reverse_subgraph(g, v, 1, G1)
    assert cols == (1, 2) and vals.tolist() == [1.0, 1.0]

    h = matvec(2, A=[[1.0, 2.0], [3.0, 4.0]]).graph()
    v = forward_values(h, [0.3, -0.7])
    Gi = sorted_subgraph(h, 1, MarkVector.from_activity(init_activity(h)))
    cols, vals = reverse_subgraph(h, v, 1, Gi)
    assert cols == (1, 2) and vals.tolist() == [1.0, 2.0]


def test_forward_matches_fd(corpus):
    for s, g in enumerate(corpus):
        x = random_point(g, s)
        assert rel_err(dense_jacobian(g, x), fd_jacobian(g, x)) <= 1e-6


def test_single_and_bundled_directions_agree(corpus):
    rng = np.random.default_rng(7)
    for s, g in enumerate(corpus[:100]):
        x = random_point(g, s)
        U = rng.standard_normal((g.n, 3))
        bundle = forward_one(g, x, U)
        for t in range(3):
            assert rel_err(bundle[:, t], forward_one(g, x, U[:, t])) <= 1e-15
        W = rng.standard_normal((g.m, 2))
        _, v = eval_zero(g, x)
        rb = reverse_one(g, v, W)
        for t in range(2):
            assert rel_err(rb[:, t], reverse_one(g, v, W[:, t])) <= 1e-15


def test_reverse_matches_weighted_forward(corpus):
    rng = np.random.default_rng(8)
    for s, g in enumerate(corpus):
        x = random_point(g, s)
        w = rng.standard_normal(g.m)
        assert rel_err(gradient(g, x, w), w @ dense_jacobian(g, x)) <= 1e-12


def test_linearity_and_adjoint_identity(corpus):
    rng = np.random.default_rng(9)
    for s, g in enumerate(corpus):
        x = random_point(g, s)
        u, u2 = rng.standard_normal(g.n), rng.standard_normal(g.n)
        w = rng.standard_normal(g.m)
        a, b = 0.7, -1.3
        lhs = forward_one(g, x, a * u + b * u2)
        rhs = a * forward_one(g, x, u) + b * forward_one(g, x, u2)
        assert rel_err(lhs, rhs) <= 1e-13
        assert rel_err(w @ forward_one(g, x, u), gradient(g, x, w) @ u) <= 1e-13


def test_subgraph_rows_match_reverse(corpus):
    for s, g in enumerate(corpus):
        x = random_point(g, s)
        v = forward_values(g, x)
        marks = MarkVector.from_activity(init_activity(g))
        ws = [0.0] * (g.ell + 1)
        for i in range(1, g.m + 1):
            Gi = sorted_subgraph(g, i, marks)
            cols, vals = reverse_subgraph(g, v, i, Gi, ws)
            assert not any(ws)
            e = np.zeros(g.m)
            e[i - 1] = 1.0
            full = reverse_one(g, v, e)
            assert rel_err(vals, full[[j - 1 for j in cols]]) <= 1e-12
            rest = np.delete(full, [j - 1 for j in cols])
            assert not rest.any()


def test_hess_vec_examples():
    g = example_graph()
    assert hess_vec(g, X1, [0.0, 1.0], [1.0, 0.0, 0.0]).tolist() == [0.0, 0.0, 1.0]
    h = record(lambda x: G.sin(x[0]), 1)
    assert hess_vec(h, [0.5], [1.0], [1.0]).tolist() == [-math.sin(0.5)]


def test_hess_vec_matches_fd_of_gradient(corpus):
    rng = np.random.default_rng(10)
    for s, g in enumerate(corpus):
        x = random_point(g, s)
        w = rng.standard_normal(g.m)
        H = hess_vec(g, x, w, np.eye(g.n))
        ref = fd_of_gradient(lambda z: gradient(g, z, w), x)
        assert rel_err(H, ref) <= 1e-5
        u, u2 = rng.standard_normal(g.n), rng.standard_normal(g.n)
        assert rel_err(hess_vec(g, x, w, u) @ u2, hess_vec(g, x, w, u2) @ u) <= 1e-12


def test_non_differentiable_point_names_node():
    g = record(lambda x: G.sqrt(x[0]) + x[1], 2)
    with pytest.raises(NonDifferentiableError) as ei:
        gradient(g, [0.0, 1.0], [1.0])
    assert ei.value.node == 3
    with pytest.raises(NonDifferentiableError):
        hess_vec(g, [0.0, 1.0], [1.0], [1.0, 0.0])


def test_gradient_graph_example_one():
    h = record_gradient_graph(example_graph(), [0.0, 1.0])
    assert (h.n, h.m) == (3, 3)
    y, _ = eval_zero(h, X1)
    assert y.tolist() == [3.0, 3.0, 3.0]
    y, _ = eval_zero(h, [0.5, -1.0, 2.0])
    assert y.tolist() == [2.0, 2.0, -0.5]


def test_gradient_graph_of_linear_function_is_constant():
    g = record(lambda x: [3.0 * x[0] - x[1], x[1] + 2.0], 2)
    h = record_gradient_graph(g, [1.0, 2.0])
    assert forward_jacobian_sparsity(h).nnz() == 0
    for x in ([0.0, 0.0], [5.0, -3.0]):
        assert eval_zero(h, x)[0].tolist() == [3.0, 1.0]


def test_gradient_graph_matches_reverse(corpus):
    rng = np.random.default_rng(11)
    for s, g in enumerate(corpus):
        w = rng.standard_normal(g.m) * (rng.random(g.m) < 0.8)
        h = record_gradient_graph(g, w)
        x = random_point(g, s)
        assert rel_err(eval_zero(h, x)[0], gradient(g, x, w)) <= 1e-14
        support = [i for i in range(1, g.m + 1) if w[i - 1] != 0.0]
        assert forward_jacobian_sparsity(h) == reverse_hessian_sparsity(g, None, support)
