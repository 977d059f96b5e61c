import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spindecay.errors import InvalidInputError, InvalidQueryError, RegimeError, SizeError
from spindecay.estimator import DepthBudget, sandwich
from spindecay.fixtures import (
    complete_binary_tree,
    complete_graph,
    cycle_graph,
    path_graph,
    random_connected,
    random_tree,
)
from spindecay.graph import Graph, Spin, SpinParams
from spindecay.oracle import (
    decay_profile,
    exact_partition,
    exact_ratio,
    exact_tree_R,
    node_trace,
    saw_reach,
    ssm_distance,
    ssm_probe,
)
from spindecay.sawtree import root
from spindecay.thresholds import big_gamma, ceil_log, choose_M, sup_alpha

HC = SpinParams(0, 2)


def test_edgeless_five():
    assert exact_partition(Graph.from_edges(5, []), HC).Z == pytest.approx(32, abs=1e-12)


def test_single_edge():
    # weights of (b,b),(b,g),(g,b),(g,g) are 0, 1, 1, 2
    assert exact_partition(complete_graph(2), HC).Z == pytest.approx(4, abs=1e-12)


def test_triangle_independent_sets():
    assert exact_partition(complete_graph(3), SpinParams(0, 1)).Z == pytest.approx(4, abs=1e-12)


def test_triangle_and_path_values():
    k3 = exact_partition(complete_graph(3), HC)
    assert k3.Z == pytest.approx(14, abs=1e-12)
    assert k3.marginals[0] == pytest.approx(1 / 7, abs=1e-15)
    p3 = exact_partition(path_graph(3), HC)
    assert p3.Z == pytest.approx(10, abs=1e-12)
    assert p3.marginals[1] == pytest.approx(0.1, abs=1e-15)
    assert exact_ratio(path_graph(3), 1, HC).value == pytest.approx(1 / 9, rel=1e-14)


def test_pinned_marginals_and_zero_weight():
    res = exact_partition(path_graph(3), HC, {0: Spin.BLUE})
    assert res.marginals[0] == 1.0 and res.marginals[1] == 0.0
    dead = exact_partition(path_graph(2), HC, {0: Spin.BLUE, 1: Spin.BLUE})
    assert dead.log_Z == -math.inf and math.isnan(dead.log_ratio(0))
    with pytest.raises(InvalidQueryError):
        dead.ratio(0)


def test_size_guard():
    with pytest.raises(SizeError):
        exact_partition(path_graph(27), HC)


def test_large_enumeration_chunks():
    # 20 free vertices spans several chunks; a path has a transfer-matrix answer
    g = path_graph(20)
    v = (1.0, 1.0)  # counts ending blue / green
    for _ in range(19):
        v = (v[1], v[0] + 2 * v[1])  # beta = 0: blue must follow green
    assert exact_partition(g, HC).Z == pytest.approx(sum(v), rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 2), st.floats(0.1, 3))
def test_blue_and_green_partition_the_sum(seed, beta, gamma):
    rng = random.Random(seed)
    n = rng.randint(1, 10)
    g = random_connected(n, rng.randint(0, n), rng, max_degree=n)
    params = SpinParams(beta, gamma)
    res = exact_partition(g, params)
    for v in range(n):
        total = math.log(math.exp(res.log_Z_blue[v] - res.log_Z) +
                         math.exp(res.log_Z_green[v] - res.log_Z))
        assert abs(total) < 1e-12
    # pinning v either way splits Z as well
    v = rng.randrange(n)
    zb = exact_partition(g, params, {v: Spin.BLUE}).Z
    zg = exact_partition(g, params, {v: Spin.GREEN}).Z
    assert zb + zg == pytest.approx(res.Z, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([(0, 2), (0.3, 1.5), (1.5, 0.3), (0, 1)]))
def test_weitz_tree_equals_exact(seed, bg):
    rng = random.Random(seed)
    n = rng.randint(2, 8)
    g = random_connected(n, rng.randint(0, 2 * n), rng, max_degree=n)
    params = SpinParams(*bg)
    pins = {}
    if n > 2 and rng.random() < 0.6:
        pins = {rng.randrange(n): Spin.GREEN}
    exact = exact_partition(g, params, pins)
    for v in range(n):
        if v in pins:
            continue
        r = exact_tree_R(root(g, v, pins), g, pins, params)
        assert r.tag == exact.ratio(v).tag
        if r.tag == "finite":
            assert r.value == pytest.approx(exact.ratio(v).value, abs=1e-9)


def test_tree_budget_guard():
    with pytest.raises(SizeError):
        exact_tree_R(root(complete_graph(7), 0, {}), complete_graph(7), {}, HC, node_budget=100)


def test_saw_reach():
    assert saw_reach(path_graph(3), 1, {}, 2) == 0
    # root of P4 end: 0 -> 1 -> 2 -> 3, one child each so each step costs ceil(log2 2) = 1
    assert saw_reach(path_graph(4), 0, {}, 2) == 2


# ---------------------------------------------------------------- ssm


def test_ssm_identical_pins():
    g = path_graph(5)
    s = {4: Spin.BLUE}
    assert ssm_probe(g, 0, s, dict(s), HC) == 0.0


def test_ssm_far_flip_smaller_than_near():
    g = path_graph(5)
    far = ssm_probe(g, 0, {4: Spin.BLUE}, {4: Spin.GREEN}, HC)
    near = ssm_probe(g, 0, {1: Spin.BLUE}, {1: Spin.GREEN}, HC)
    assert 0 < far < near
    assert ssm_distance(g, 0, {4: Spin.BLUE}, {4: Spin.GREEN}) == 4


def test_ssm_contract():
    g = path_graph(5)
    with pytest.raises(InvalidInputError):
        ssm_probe(g, 0, {4: Spin.BLUE}, {3: Spin.GREEN}, HC)
    with pytest.raises(InvalidQueryError):
        ssm_probe(g, 4, {4: Spin.BLUE}, {4: Spin.GREEN}, HC)
    with pytest.raises(SizeError):
        ssm_probe(path_graph(21), 0, {20: Spin.BLUE}, {20: Spin.GREEN}, HC)


@pytest.mark.parametrize("family, n", [(path_graph, 14), (cycle_graph, 16)])
@pytest.mark.parametrize("params", [SpinParams(0, 2), SpinParams(0.2, 2.5), SpinParams(2, 0)])
def test_ssm_decays_at_stride_two(family, n, params):
    g = family(n)
    vals = {}
    for u in range(1, n):
        k = ssm_distance(g, 0, {u: Spin.BLUE}, {u: Spin.GREEN})
        diff = ssm_probe(g, 0, {u: Spin.BLUE}, {u: Spin.GREEN}, params)
        vals[k] = max(vals.get(k, 0.0), diff)
    for k in vals:
        if k + 2 in vals:
            assert vals[k + 2] <= vals[k]


# ---------------------------------------------------------------- decay


def test_decay_on_binary_tree():
    g = complete_binary_tree(10)
    alpha = sup_alpha(0, 2.0)
    tr = decay_profile(g, 0, {}, HC, None, range(0, 13))
    assert tr.slope <= math.log(alpha) + 0.05
    for d, b in zip(tr.delta, tr.bound):
        assert d <= b
    assert all(b <= a for a, b in zip(tr.delta, tr.delta[1:]))


def test_decay_requires_guaranteed_orientation():
    with pytest.raises(RegimeError):
        decay_profile(path_graph(3), 0, {}, SpinParams(0, 1.0), 4, range(3))
    with pytest.raises(RegimeError):
        decay_profile(path_graph(3), 0, {}, SpinParams(2, 0), 4, range(3))


def test_node_trace_root_matches_sandwich():
    rng = random.Random(4)
    D = big_gamma(0.2).D
    for _ in range(10):
        g = random_connected(rng.randint(4, 12), rng.randint(0, 8), rng)
        p = SpinParams(0.2, 2.5)
        for M, L in ((2, 2), (3, 4), (12, 3)):
            recs = node_trace(g, 0, {}, p, M, L, D)
            iv = sandwich(g, 0, {}, DepthBudget(L, M), p)
            assert recs[0].path == (0,)
            assert recs[0].lo == pytest.approx(iv.lo.value, rel=1e-13)
            assert recs[0].hi == pytest.approx(iv.hi.value, rel=1e-13)


def _contraction_violations(beta, gamma, trees, Ls):
    D = big_gamma(beta).D
    alpha = sup_alpha(beta, gamma, D)
    M = choose_M(beta, gamma, alpha, D)
    p = SpinParams(beta, gamma)
    bad = checked = 0
    for t in trees:
        for L in Ls:
            for r in node_trace(t, 0, {}, p, M, L, D):
                c = ceil_log(M, r.k + 1)
                checked += 1
                bad += not r.eps <= M * alpha ** (c - 1) * (1 + 1e-12)
                if r.in_ball and r.d_free:
                    bad += not r.eps <= alpha ** c * r.child_eps_max * (1 + 1e-12)
    return bad, checked


def test_per_node_contraction_beta0_random_trees():
    rng = random.Random(21)
    trees = [random_tree(rng.randint(10, 60), rng) for _ in range(10)]
    bad, checked = _contraction_violations(0.0, 2.0, trees, (1, 3, 5))
    assert checked > 500 and bad == 0


def test_per_node_contraction_general_beta():
    # quadrature-based phi; the same inequalities are expected to hold
    rng = random.Random(22)
    trees = [random_tree(rng.randint(10, 40), rng) for _ in range(5)]
    bad, checked = _contraction_violations(0.2, 2.5, trees, (2, 4))
    assert checked > 100 and bad == 0
