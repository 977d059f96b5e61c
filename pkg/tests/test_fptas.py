import math
import random

import pytest

from spindecay.errors import DegenerateError, InvalidInputError, RegimeError
from spindecay.fixtures import complete_graph, path_graph, random_connected
from spindecay.fptas import (
    EstimateRequest,
    choose_budget,
    default_threads,
    estimate_partition,
    marginal,
)
from spindecay.graph import Graph, Spin, SpinParams
from spindecay.oracle import exact_partition

HC = SpinParams(0, 2)


def test_choose_budget_arithmetic():
    assert choose_budget(16, 0.05, 0.5, 4) == math.ceil(math.log(10240) / math.log(2)) + 1 == 15
    assert choose_budget(1, 0.99, 0.5, 2) >= 1


def test_choose_budget_halving_epsilon():
    a = 0.3
    steps = [choose_budget(10, e, a, 5) for e in (0.1, 0.05, 0.025, 0.0125)]
    inc = math.log(2) / math.log(1 / a)
    for x, y in zip(steps, steps[1:]):
        assert abs((y - x) - inc) <= 1


def test_choose_budget_validation():
    with pytest.raises(InvalidInputError):
        choose_budget(0, 0.1, 0.5, 2)
    with pytest.raises(InvalidInputError):
        choose_budget(3, 0.1, 1.0, 2)


def test_edgeless_three():
    est = estimate_partition(EstimateRequest(Graph.from_edges(3, []), HC, 0.05))
    assert est.Z == pytest.approx(8.0, rel=1e-15)


def test_path_and_triangle():
    p3 = estimate_partition(EstimateRequest(path_graph(3), HC, 0.05))
    assert 9.5 <= p3.Z <= 10.5
    k3 = estimate_partition(EstimateRequest(complete_graph(3), HC, 0.05))
    assert 13.3 <= k3.Z <= 14.7
    assert k3.certified and k3.regime.regime == "guaranteed"


def test_intervals_bracket_the_telescoping_marginals():
    rng = random.Random(3)
    g = random_connected(9, 6, rng)
    est = estimate_partition(EstimateRequest(g, HC, 0.05, L=2))
    for i, iv in enumerate(est.intervals):
        pins = {j: Spin.GREEN for j in range(i)}
        p = exact_partition(g, HC, pins).marginals[i]
        assert iv.p_lo - 1e-14 <= p <= iv.p_hi + 1e-14


def test_accuracy_on_random_graphs():
    rng = random.Random(17)
    for _ in range(15):
        n = rng.randint(5, 14)
        g = random_connected(n, rng.randint(0, 2 * n), rng)
        for params in (HC, SpinParams(0.2, 2.5)):
            est = estimate_partition(EstimateRequest(g, params, 0.05))
            ex = exact_partition(g, params)
            assert abs(math.expm1(est.logZ - ex.log_Z)) <= 0.05


def test_swap_normalization():
    g = random_connected(8, 5, random.Random(9))
    a = estimate_partition(EstimateRequest(g, SpinParams(0, 2), 0.05))
    b = estimate_partition(EstimateRequest(g, SpinParams(2, 0), 0.05))
    assert b.regime.swap_applied
    assert a.logZ == b.logZ


def test_determinism_and_threads():
    g = random_connected(12, 10, random.Random(2))
    a = estimate_partition(EstimateRequest(g, HC, 0.05))
    b = estimate_partition(EstimateRequest(g, HC, 0.05))
    c = estimate_partition(EstimateRequest(g, HC, 0.05, threads=3))
    assert a.logZ == b.logZ == c.logZ
    assert [iv.p_lo for iv in a.intervals] == [iv.p_lo for iv in c.intervals]


def test_component_factorization_is_exact():
    rng = random.Random(5)
    g1 = random_connected(7, 4, rng)
    g2 = random_connected(6, 5, rng)
    u = g1.disjoint_union(g2)
    z1 = estimate_partition(EstimateRequest(g1, HC, 0.05, L=4, M=18)).logZ
    z2 = estimate_partition(EstimateRequest(g2, HC, 0.05, L=4, M=18)).logZ
    zu = estimate_partition(EstimateRequest(u, HC, 0.05, L=4, M=18)).logZ
    assert zu == z1 + z2


def test_regime_refusal_and_force():
    g = path_graph(3)
    with pytest.raises(RegimeError) as info:
        estimate_partition(EstimateRequest(g, SpinParams(0, 1.0), 0.05))
    assert "1.1101715" in str(info.value)
    with pytest.raises(RegimeError):
        estimate_partition(EstimateRequest(g, SpinParams(0, 1.0), 0.05, force=True, L=4))
    est = estimate_partition(EstimateRequest(g, SpinParams(0, 1.0), 0.05, force=True, L=6, M=3))
    assert not est.certified and est.regime.regime == "unguaranteed"
    # path of three with the hard-core weights at fugacity 1: 5 independent sets
    assert est.Z == pytest.approx(5.0, rel=1e-12)


def test_override_voids_certification():
    est = estimate_partition(EstimateRequest(path_graph(3), HC, 0.05, L=6))
    assert not est.certified and est.L == 6


def test_degenerate_refused():
    with pytest.raises(DegenerateError):
        estimate_partition(EstimateRequest(path_graph(3), SpinParams(0.5, 2.0), 0.05))


def test_request_validation():
    with pytest.raises(InvalidInputError):
        EstimateRequest(path_graph(3), HC, 1.0)
    with pytest.raises(InvalidInputError):
        EstimateRequest(path_graph(3), HC, 0.1, threads=0)


def test_marginal_examples():
    lo, hi = marginal(path_graph(3), HC, 1)
    assert lo <= 0.1 + 1e-15 and hi >= 0.1 - 1e-15
    lo, hi = marginal(complete_graph(3), HC, 0)
    assert lo <= 1 / 7 + 1e-15 and hi >= 1 / 7 - 1e-15
    g = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2)])
    lo, hi = marginal(g, SpinParams(0.25, 3.0), 0, {1: Spin.GREEN, 2: Spin.GREEN, 3: Spin.BLUE})
    assert lo == hi


def test_marginal_in_swapped_orientation():
    g = complete_graph(3)
    lo, hi = marginal(g, SpinParams(2, 0), 0, {1: Spin.BLUE})
    exact = exact_partition(g, SpinParams(2, 0), {1: Spin.BLUE}).marginals[0]
    assert lo <= exact + 1e-15 and hi >= exact - 1e-15
    assert exact == pytest.approx(10 / 12)


def test_default_threads(monkeypatch):
    monkeypatch.setenv("SPIN_DECAY_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.setenv("SPIN_DECAY_THREADS", "many")
    with pytest.raises(InvalidInputError):
        default_threads()
