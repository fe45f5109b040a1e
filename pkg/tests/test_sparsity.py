import numpy as np
import pytest

import sparsead.graph as G
from sparsead.graph import example_graph, record
from sparsead.sparsity import (Pattern, forward_hessian_sparsity, forward_jacobian_sparsity,
                               forward_sets, index_set, init_activity, members,
                               reverse_hessian_sparsity, reverse_jacobian_sparsity,
                               reverse_sets, to_bits)

from oracles import pattern_set, reach_pattern


def test_forward_example_one():
    g = example_graph()
    assert forward_jacobian_sparsity(g).rows == ((1, 2), (1, 2, 3))
    assert forward_jacobian_sparsity(g, J=[3]).rows == ((), (3,))


def test_reverse_example_one():
    g = example_graph()
    Y = reverse_sets(g, [1, 2])
    assert [members(Y[j]) for j in (1, 2, 3)] == [[1, 2], [1, 2], [2]]
    Y = reverse_sets(g, [1])
    assert [members(Y[j]) for j in (1, 2, 3)] == [[1], [1], []]
    assert reverse_jacobian_sparsity(g).rows == ((1, 2), (1, 2, 3))


def test_reverse_on_pre_copy_form():
    # dependents that are ordinary operation nodes still push their sets down
    g = example_graph(copy_tail=False)
    assert reverse_jacobian_sparsity(g).rows == ((1, 2), (1, 2, 3))


def test_range_errors():
    g = example_graph()
    with pytest.raises(ValueError):
        forward_jacobian_sparsity(g, J=[4])
    with pytest.raises(ValueError):
        reverse_jacobian_sparsity(g, I=[0])
    with pytest.raises(ValueError):
        init_activity(g, I=[3])
    with pytest.raises(ValueError):
        forward_hessian_sparsity(g, w_support=[5])


def test_init_activity_example_one():
    g = example_graph()
    act = init_activity(g, [1, 2, 3], [1, 2])
    assert all(c == 0 for c in act.c[1:])
    assert all(act.d[1:])
    act = init_activity(g, [3], [1])
    m1 = g.m + 1
    assert act.c[4] == m1            # x1 + x2 carries no selected column
    assert act.c[3] == 0 and act.c[5] == 0
    assert act.d[5] is False         # the product only feeds y2
    assert act.d[4] and act.d[6] and not act.d[7]
    act = init_activity(g, [], None)
    assert all(c == m1 for c in act.c[1:])


def test_activity_matches_set_emptiness(corpus):
    rng = np.random.default_rng(3)
    for g in corpus[:80]:
        J = [j for j in range(1, g.n + 1) if rng.random() < 0.5]
        I = [i for i in range(1, g.m + 1) if rng.random() < 0.5]
        X, Y = forward_sets(g, J), reverse_sets(g, I)
        act = init_activity(g, J, I)
        for k in range(1, g.ell + 1):
            assert (act.c[k] == g.m + 1) == (X[k] == 0)
            assert act.d[k] == (Y[k] != 0)


def test_jacobian_patterns_match_reachability(corpus):
    for g in corpus:
        ref = reach_pattern(g)
        fwd = forward_jacobian_sparsity(g)
        rev = reverse_jacobian_sparsity(g)
        assert pattern_set(fwd) == ref
        assert pattern_set(rev) == ref
        assert fwd.transpose().transpose() == rev


def test_restricted_selections_match_oracle(corpus):
    rng = np.random.default_rng(4)
    for g in corpus[:100]:
        J = [j for j in range(1, g.n + 1) if rng.random() < 0.4]
        I = [i for i in range(1, g.m + 1) if rng.random() < 0.4]
        assert pattern_set(forward_jacobian_sparsity(g, J)) == reach_pattern(g, J=J)
        assert pattern_set(reverse_jacobian_sparsity(g, I)) == reach_pattern(g, I=I)
        full = forward_jacobian_sparsity(g)
        assert reverse_jacobian_sparsity(g, I) == full.restrict_rows(I)


def test_set_sizes_bounded(corpus):
    for g in corpus[:50]:
        J = list(range(1, g.n + 1, 2))
        assert all(bin(x).count("1") <= len(J) for x in forward_sets(g, J))
        I = list(range(1, g.m + 1, 3))
        assert all(bin(y).count("1") <= len(I) for y in reverse_sets(g, I))


@pytest.mark.parametrize("sparsity", [forward_hessian_sparsity, reverse_hessian_sparsity])
def test_hessian_examples(sparsity):
    g = example_graph()
    assert pattern_set(sparsity(g, None, [2])) == {(1, 3), (2, 3), (3, 1), (3, 2)}
    assert sparsity(g, None, [1]).nnz() == 0
    h = record(lambda x: G.sin(x[0]) + x[1], 2)
    assert pattern_set(sparsity(h)) == {(1, 1)}


@pytest.mark.parametrize("sparsity", [forward_hessian_sparsity, reverse_hessian_sparsity])
def test_hessian_operator_rules(sparsity):
    cases = [
        (lambda x: x[0] / x[1], {(1, 2), (2, 1), (2, 2)}),
        (lambda x: 2.0 / x[1] + x[0], {(2, 2)}),
        (lambda x: x[0] ** x[1], {(1, 1), (1, 2), (2, 1), (2, 2)}),
        (lambda x: 2.0 ** x[0] * 1.0 + x[1] / 3.0, {(1, 1)}),
        (lambda x: (x[0] + x[1]) ** 2.0, {(1, 1), (1, 2), (2, 1), (2, 2)}),
        (lambda x: 3.0 * x[0] - x[1] + 1.0, set()),
    ]
    for prog, expected in cases:
        g = record(prog, 2)
        assert pattern_set(sparsity(g)) == expected


def test_hessian_methods_agree_and_are_symmetric(corpus):
    rng = np.random.default_rng(5)
    for g in corpus:
        support = [i for i in range(1, g.m + 1) if rng.random() < 0.7]
        f = forward_hessian_sparsity(g, None, support)
        r = reverse_hessian_sparsity(g, None, support)
        assert f == r
        assert f.is_symmetric()


def test_hessian_restricted_to_J(corpus):
    for g in corpus[:60]:
        J = list(range(1, g.n + 1, 2))
        full = pattern_set(forward_hessian_sparsity(g))
        want = {(j, p) for j, p in full if j in J and p in J}
        assert pattern_set(forward_hessian_sparsity(g, J)) == want
        assert pattern_set(reverse_hessian_sparsity(g, J)) == want


def test_pattern_helpers():
    p = Pattern.from_entries(3, 4, [(1, 2), (3, 4), (1, 1), (3, 1)])
    assert p.rows == ((1, 2), (), (1, 4))
    assert p.nnz() == 4
    assert list(p.entries()) == [(1, 1), (1, 2), (3, 1), (3, 4)]
    assert p.transpose().rows == ((1, 3), (1,), (), (3,))
    assert Pattern.from_dense(p.to_dense()) == p
    assert p.to_text() == "row 1: 1 2\nrow 2:\nrow 3: 1 4\n"
    assert Pattern.from_text(p.to_text(), 4) == p
    s = Pattern.from_sets(3, 3, [{1, 2}, {1}, {3}])
    assert s.is_symmetric() and not p.is_symmetric()
    assert s.upper().rows == ((1, 2), (), (3,))
    with pytest.raises(ValueError):
        Pattern(1, 2, ((2, 1),))
    with pytest.raises(ValueError):
        Pattern(1, 2, ((3,),))
    with pytest.raises(ValueError):
        Pattern.from_text("row 2: 1\n", 2)


def test_bitset_helpers():
    assert members(to_bits([5, 1, 3])) == [1, 3, 5]
    assert members(0) == []
    assert index_set(None, 3) == (1, 2, 3)
    assert index_set([3, 1, 3], 3) == (1, 3)
