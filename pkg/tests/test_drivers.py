import gc
import weakref

import numpy as np
import pytest

import sparsead.coloring as coloring
from sparsead.drivers import (ConfigError, MethodConfig, SparseHessian, SparseJacobian, Work,
                              _cached, sparse_hessian, sparse_jacobian, with_setup_cached)
from sparsead.graph import example_graph, record
from sparsead.problems import banded_residual, chain, grid_energy, matvec, matvec_matrix

from conftest import random_point
from oracles import fd_hessian, fd_jacobian, pattern_set, reach_pattern, rel_err

JAC_CONFIGS = [
    MethodConfig("forward_compressed"),
    MethodConfig("forward_compressed", onepass=True),
    MethodConfig("reverse_compressed"),
    MethodConfig("reverse_compressed", onepass=True, coloring="none"),
    MethodConfig("subgraph"),
    MethodConfig("subgraph", optimize=True),
]
HES_CONFIGS = [
    MethodConfig("forward_compressed"),
    MethodConfig("reverse_compressed", onepass=True),
    MethodConfig("subgraph"),
]


def _values_on(ref, out):
    return np.array([ref[i - 1, j - 1] for i, j in out.pattern.entries()])


def test_config_rules():
    with pytest.raises(ConfigError):
        MethodConfig("subgraph", onepass=True)
    with pytest.raises(ConfigError):
        MethodConfig("subgraph", coloring="greedy")
    with pytest.raises(ConfigError):
        MethodConfig("sideways")
    with pytest.raises(ConfigError):
        MethodConfig("forward_compressed", coloring="dsatur")
    assert MethodConfig("forward-compressed").method == "forward_compressed"
    assert MethodConfig("forward_compressed").coloring == "greedy"
    assert MethodConfig("subgraph").reverse and not MethodConfig("forward_compressed").reverse


@pytest.mark.parametrize("cfg", JAC_CONFIGS)
def test_example_one(cfg):
    out = sparse_jacobian(example_graph(), [1.0, 2.0, 3.0], cfg)
    assert out.pattern.rows == ((1, 2), (1, 2, 3))
    assert out.values.tolist() == [1.0, 1.0, 3.0, 3.0, 3.0]


@pytest.mark.parametrize("cfg", JAC_CONFIGS)
def test_matvec_recovers_matrix(cfg):
    prob = matvec(8, seed=3)
    out = sparse_jacobian(prob.graph(), prob.point(), cfg)
    assert out.pattern.nnz() == 64
    assert rel_err(out.to_dense(), matvec_matrix(8, 3)) <= 1e-15


def test_chain_two_forward_passes():
    prob = chain(16)
    work = Work()
    out = sparse_jacobian(prob.graph(), prob.point(), MethodConfig("forward_compressed"), work=work)
    assert work.colors == 2 and work.passes == 2
    assert out.pattern == prob.reference_pattern()


def test_problem_values_against_fd():
    for prob in (matvec(8), chain(16), banded_residual(20, 1)):
        g = prob.graph()
        x = prob.point()
        out = sparse_jacobian(g, x, MethodConfig("subgraph"))
        assert out.pattern == prob.reference_pattern()
        assert rel_err(out.to_dense(), fd_jacobian(g, x)) <= 1e-6


def test_tri_method_agreement(corpus):
    for s, g in enumerate(corpus):
        x = random_point(g, s)
        outs = [sparse_jacobian(g, x, cfg) for cfg in JAC_CONFIGS]
        ref = outs[-2]
        assert pattern_set(ref.pattern) == reach_pattern(g)
        for out in outs:
            assert out.pattern == ref.pattern
            assert rel_err(out.values, ref.values) <= 1e-12


def test_restricted_selection(corpus):
    rng = np.random.default_rng(14)
    for s, g in enumerate(corpus[:80]):
        x = random_point(g, s)
        J = [j for j in range(1, g.n + 1) if rng.random() < 0.5]
        I = [i for i in range(1, g.m + 1) if rng.random() < 0.5]
        full = sparse_jacobian(g, x, MethodConfig("subgraph")).to_dense()
        for cfg in JAC_CONFIGS:
            out = sparse_jacobian(g, x, cfg, J=J, I=I)
            assert pattern_set(out.pattern) == reach_pattern(g, J, I)
            assert rel_err(out.values, _values_on(full, out)) <= 1e-12


def test_subgraph_makes_no_coloring_calls(monkeypatch):
    def boom(*a, **k):
        raise AssertionError("coloring called")
    for name in ("color_columns", "color_rows", "color_symmetric", "build_seed"):
        monkeypatch.setattr(coloring, name, boom)
    prob = chain(8)
    work = Work()
    sparse_jacobian(prob.graph(), prob.point(), MethodConfig("subgraph"), work=work)
    assert work.coloring_calls == 0
    sj = SparseJacobian(prob.graph(), MethodConfig("subgraph"))
    sj.jacobian(prob.point())
    g = grid_energy(3)
    sparse_hessian(g.graph(), g.point(), g.weights(), MethodConfig("subgraph"))
    with pytest.raises(AssertionError):
        sparse_jacobian(prob.graph(), prob.point(), MethodConfig("forward_compressed"))


def test_subgraph_work_bound(corpus):
    for s, g in enumerate(corpus):
        work = Work()
        sparse_jacobian(g, random_point(g, s), MethodConfig("subgraph"), work=work)
        sw = work.subgraph
        assert sw.stack_visits <= 2 * sw.subgraph_nodes + g.ell
        assert work.visits == sw.subgraph_nodes


def test_hessian_examples():
    g = example_graph()
    for cfg in HES_CONFIGS:
        out = sparse_hessian(g, [1.0, 2.0, 3.0], [0.0, 1.0], cfg)
        assert out.triplets() == [(1, 3, 1.0), (2, 3, 1.0)]
    prob = grid_energy(3)
    for cfg in HES_CONFIGS:
        out = sparse_hessian(prob.graph(), prob.point(), prob.weights(), cfg)
        assert out.pattern.nnz() == 21
        assert out.pattern == prob.reference_pattern().upper()


def test_grid_hessian_against_fd():
    prob = grid_energy(3)
    g = prob.graph()
    x = prob.point()
    H = fd_hessian(g, x, prob.weights())
    out = sparse_hessian(g, x, prob.weights(), MethodConfig("subgraph"))
    assert rel_err(out.values, _values_on(H, out)) <= 1e-5


def test_bi_method_hessian_agreement(corpus):
    rng = np.random.default_rng(15)
    for s, g in enumerate(corpus):
        x = random_point(g, s)
        w = rng.standard_normal(g.m) * (rng.random(g.m) < 0.8)
        outs = [sparse_hessian(g, x, w, cfg) for cfg in HES_CONFIGS]
        for out in outs[1:]:
            assert out.pattern == outs[0].pattern
            assert rel_err(out.values, outs[0].values) <= 1e-11
        sh = SparseHessian(g, w, MethodConfig("subgraph"))
        assert sh.full_pattern.is_symmetric()


def test_hessian_against_fd_on_small_corpus(corpus):
    rng = np.random.default_rng(16)
    for s, g in enumerate(corpus[:40]):
        x = random_point(g, s, -0.8, 0.8)
        w = rng.standard_normal(g.m)
        H = fd_hessian(g, x, w)
        for cfg in HES_CONFIGS:
            out = sparse_hessian(g, x, w, cfg)
            assert rel_err(out.values, _values_on(H, out)) <= 1e-5


def test_setup_cached_matches_uncached(corpus):
    rng = np.random.default_rng(17)
    for s, g in enumerate(corpus[:60]):
        w = rng.standard_normal(g.m)
        for cfg in (MethodConfig("forward_compressed"), MethodConfig("subgraph")):
            prep = with_setup_cached(g, cfg)
            for t in range(2):
                x = random_point(g, 100 * s + t)
                a = prep.jacobian(x)
                b = sparse_jacobian(g, x, cfg)
                assert a.pattern == b.pattern and np.array_equal(a.values, b.values)
                a = prep.hessian(x, w)
                b = sparse_hessian(g, x, w, cfg)
                assert a.pattern == b.pattern and np.array_equal(a.values, b.values)


def test_setup_cached_flag_reuses_setup():
    prob = matvec(6)
    g = prob.graph()
    cfg = MethodConfig("forward_compressed", setup_cached=True)
    a = sparse_jacobian(g, prob.point(0), cfg)
    b = sparse_jacobian(g, prob.point(1), cfg)
    assert len(_cached(g, cfg)._jac) == 1
    assert np.array_equal(a.values, b.values)  # linear map


def test_prune_gives_identical_values():
    def f(x):
        dead = x[0] * x[1]  # noqa: F841
        return [x[0] * x[2], x[1] + x[2]]
    g = record(f, 3)
    x = [0.3, -0.2, 0.9]
    for method in ("forward_compressed", "reverse_compressed", "subgraph"):
        a = sparse_jacobian(g, x, MethodConfig(method))
        b = sparse_jacobian(g, x, MethodConfig(method, optimize=True))
        assert a.pattern == b.pattern and np.array_equal(a.values, b.values)
        a = sparse_hessian(g, x, [1.0, 1.0], MethodConfig(method))
        b = sparse_hessian(g, x, [1.0, 1.0], MethodConfig(method, optimize=True))
        assert a.pattern == b.pattern and np.array_equal(a.values, b.values)


def test_fd_jacobian_on_corpus(corpus):
    for s, g in enumerate(corpus[:80]):
        x = random_point(g, s)
        out = sparse_jacobian(g, x, MethodConfig("reverse_compressed"))
        ref = fd_jacobian(g, x)
        assert rel_err(out.values, _values_on(ref, out)) <= 1e-6


def test_bad_inputs():
    g = example_graph()
    with pytest.raises(ValueError):
        sparse_jacobian(g, [1.0, 2.0], MethodConfig("forward_compressed"))
    with pytest.raises(ValueError):
        sparse_hessian(g, [1.0, 2.0, 3.0], [1.0], MethodConfig("subgraph"))


def test_setup_cache_does_not_keep_graph_alive():
    prob = chain(6)
    g = prob.graph()
    sparse_jacobian(g, prob.point(), MethodConfig("subgraph", setup_cached=True))
    ref = weakref.ref(g)
    del g
    gc.collect()
    assert ref() is None
