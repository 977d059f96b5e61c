"""Acceptance harness.

Nine numbered checks, each returning a CheckResult with a one-line verdict.
``quick=True`` shrinks the random suites for interactive use; the full sizes
are the ones the acceptance tests run.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from . import thresholds as th
from .estimator import DepthBudget, sandwich
from .fixtures import complete_binary_tree, random_connected, random_tree
from .fptas import EstimateRequest, estimate_partition
from .graph import Graph, Spin, SpinParams
from .oracle import (
    decay_profile,
    exact_partition,
    exact_tree_R,
    node_trace,
    saw_reach,
)
from .sawtree import root

SEED = 20240601
REL = 1e-12  # relative slack for float comparisons of bounds


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number} {self.title}: {self.detail} ({self.seconds:.2f} s)"


@dataclass
class WorkLog:
    """Per-call estimator work, collected for the work-bound check."""

    records: List[Tuple[str, int, int, int, int]] = field(default_factory=list)

    def add(self, label: str, visited: int, n: int, M: int, L: int):
        self.records.append((label, visited, n, M, L))


def _timed(number: int, title: str, fn: Callable[[], Tuple[bool, str]],
           limit: Optional[float] = None) -> CheckResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    dt = time.perf_counter() - t0
    if limit is not None and dt >= limit:
        ok = False
        detail += f"; runtime {dt:.1f} s exceeds {limit:g} s"
    return CheckResult(number, title, ok, detail, dt)


def _le(a: float, b: float, tol: float = 1e-10) -> bool:
    """a <= b on log scale with an absolute slack (inf-safe)."""
    return a == b or a <= b + tol


def _working_constants(beta: float, gamma: float) -> Tuple[float, int, float]:
    D = th.big_gamma(beta).D
    alpha = th.sup_alpha(beta, gamma, D)
    return alpha, th.choose_M(beta, gamma, alpha, D), D


def _random_pins(g: Graph, rng: random.Random, k: int, params: SpinParams) -> Dict[int, Spin]:
    """Random pins on k vertices, redrawn until the pinning has positive weight."""
    while True:
        vs = rng.sample(range(g.n), min(k, g.n - 1))
        pins = {v: rng.choice((Spin.BLUE, Spin.GREEN)) for v in vs}
        if exact_partition(g, params, pins).log_Z > -math.inf:
            return pins


# ---------------------------------------------------------------------------


def check_threshold_numbers(quick: bool = False) -> CheckResult:
    def run():
        th.big_gamma.cache_clear()
        closed = 10 * 11 ** (-11 / 12)
        integer = th.big_gamma_integer_beta0()
        cont = th.big_gamma(0.0)
        e1 = abs(integer.value - closed)
        e2 = abs(cont.Gamma - 1.1101715)
        ok = e1 <= 1e-9 and integer.d == 11 and e2 <= 1e-6
        return ok, (f"Gamma*(0)={integer.value:.10f} (d={integer.d}, err {e1:.1e}), "
                    f"Gamma(0)={cont.Gamma:.9f} (err vs 1.1101715 {e2:.1e})")

    return _timed(1, "threshold numbers", run, limit=5.0)


def check_critical_coincidence(quick: bool = False) -> CheckResult:
    def run():
        worst = 0.0
        for beta in (0.0, 0.1, 0.3, 0.5):
            c = th.big_gamma(beta)
            worst = max(worst, abs(th.alpha_sym(beta, c.Gamma, c.D, c.D, c.X) - 1))
        g_int = th.big_gamma_integer_beta0().value
        x = g_int / 10
        # integer-arity beta=0 form, written out independently of alpha_sym
        a_hat = 11 * x ** (6 / 11) / (x + g_int) ** (1 + 5 * 11 / 11)
        e_int = abs(a_hat - 1)
        ok = worst <= 1e-6 and e_int <= 1e-6
        return ok, f"max |alpha(D,X)-1| = {worst:.1e}; |alpha_hat(11)-1| = {e_int:.1e}"

    return _timed(2, "critical coincidence", run, limit=10.0)


def check_identities(quick: bool = False) -> CheckResult:
    def run():
        worst, bad = 0.0, []
        for i in range(10):
            beta = i / 10
            rep = th.check_fixed_point_identities(beta)
            worst = max(worst, rep["identity2_residual"])
            if not rep["identity1_holds"] or rep["identity2_residual"] > 1e-6:
                bad.append(beta)
        ok = not bad
        return ok, f"beta 0.0..0.9: worst residual {worst:.1e}" + (f"; failing {bad}" if bad else "")

    return _timed(3, "fixed-point identities", run)


WEITZ_PARAMS = [(0.0, 2.0), (0.2, 3.0), (0.5, 1.5), (0.0, 1.0), (1.5, 0.3)]


def check_weitz(quick: bool = False, seed: int = SEED) -> CheckResult:
    def run():
        rng = random.Random(seed + 4)
        graphs = 12 if quick else 60
        worst, compared, scenarios = 0.0, 0, 0
        for i in range(graphs):
            n = rng.randint(3, 8)
            g = random_connected(n, rng.randint(1, n), rng, max_degree=n - 1)
            params = SpinParams(*WEITZ_PARAMS[i % len(WEITZ_PARAMS)])
            pinsets = [{}] + [_random_pins(g, rng, rng.randint(1, 2), params) for _ in range(2)]
            for pins in pinsets:
                scenarios += 1
                exact = exact_partition(g, params, pins)
                for v in range(n):
                    if v in pins:
                        continue
                    r_tree = exact_tree_R(root(g, v, pins), g, pins, params)
                    r_exact = exact.ratio(v)
                    if r_tree.tag != r_exact.tag:
                        worst = math.inf
                    elif r_tree.tag == "finite":
                        worst = max(worst, abs(r_tree.value - r_exact.value))
                    compared += 1
        return worst <= 1e-9, (f"{graphs} graphs, {scenarios} pin scenarios, {compared} vertices; "
                               f"max |R_saw - R_exact| = {worst:.1e}")

    return _timed(4, "Weitz equivalence", run, limit=60.0)


def check_sandwich(quick: bool = False, seed: int = SEED, work: Optional[WorkLog] = None) -> CheckResult:
    def run():
        rng = random.Random(seed + 5)
        graphs = 20 if quick else 100
        setups = []
        for beta, gamma in ((0.0, 2.0), (0.2, 2.5)):
            alpha, M, _ = _working_constants(beta, gamma)
            setups.append((SpinParams(beta, gamma), M))
        failures = []
        exact_hits = 0
        for i in range(graphs):
            n = rng.randint(3, 14)
            g = random_connected(n, rng.randint(0, n), rng)
            params, M = setups[i % 2]
            if i % 4 >= 2:
                M = 2  # exercise multi-level charging for high-arity nodes
            pins = _random_pins(g, rng, rng.randint(0, 2), params) if i % 3 else {}
            exact = exact_partition(g, params, pins)
            for v in range(n):
                if v in pins:
                    continue
                target = exact.log_ratio(v)
                reach = saw_reach(g, v, pins, M)
                prev = None
                for L in range(9):
                    iv = sandwich(g, v, pins, DepthBudget(L, M), params)
                    if work is not None:
                        work.add(f"sandwich g{i} v{v} L{L}", iv.nodes_visited, n, M, L)
                    lo, hi = iv.lo.log_value, iv.hi.log_value
                    tag = f"graph {i} v{v} L={L}"
                    if not (_le(lo, target) and _le(target, hi)):
                        failures.append(f"{tag}: {lo} <= {target} <= {hi} fails")
                    if prev is not None and not (_le(prev[0], lo) and _le(hi, prev[1])):
                        failures.append(f"{tag}: not nested in L-1")
                    if reach <= L:
                        exact_hits += 1
                        if not (lo == hi == target or
                                (abs(lo - hi) <= 1e-12 and abs(lo - target) <= 1e-9)):
                            failures.append(f"{tag}: tree fits in ball but bounds differ")
                    prev = (lo, hi)
        ok = not failures
        detail = f"{graphs} graphs, L 0..8, {exact_hits} exact-fit cases"
        if failures:
            detail += f"; {len(failures)} failures, first: {failures[0]}"
        return ok, detail

    return _timed(5, "sandwich and nesting", run)


def _decay_instance(g: Graph, params: SpinParams, M: int, alpha: float, Ls, label: str,
                    work: Optional[WorkLog]):
    tr = decay_profile(g, 0, {}, params, M, Ls, alpha)
    bad = [L for L, d, b in zip(tr.L, tr.delta, tr.bound) if not d <= b * (1 + REL)]
    if any(b < a - 1e-15 for a, b in zip(tr.delta[1:], tr.delta)):
        bad.append("nonmonotone")
    if work is not None:
        for L, nv in zip(tr.L, tr.nodes_visited):
            work.add(f"{label} L{L}", nv, g.n, M, L)
    return tr, bad


def check_decay(quick: bool = False, seed: int = SEED, work: Optional[WorkLog] = None) -> CheckResult:
    def run():
        params = SpinParams(0.0, 2.0)
        alpha, M, _ = _working_constants(0.0, 2.0)
        limit = math.log(alpha) + 0.05
        failures, slopes, vacuous = [], [], 0
        tree = complete_binary_tree(12)
        tr, bad = _decay_instance(tree, params, M, alpha, range(0, 15), "binary-12", work)
        if bad:
            failures.append(f"binary tree: bound fails at {bad}")
        if not tr.slope <= limit:
            failures.append(f"binary tree: slope {tr.slope:.3f} > {limit:.3f}")
        slopes.append(tr.slope)
        rng = random.Random(seed + 6)
        graphs = 8 if quick else 40
        for i in range(graphs):
            n = rng.randint(6, 14)
            g = random_connected(n, rng.randint(0, n), rng)
            tr, bad = _decay_instance(g, params, M, alpha, range(0, 13), f"graph {i}", work)
            if bad:
                failures.append(f"graph {i}: bound fails at {bad}")
            if math.isnan(tr.slope):
                vacuous += 1
            elif not tr.slope <= limit:
                failures.append(f"graph {i}: slope {tr.slope:.3f} > {limit:.3f}")
            else:
                slopes.append(tr.slope)
        graph_worst = max(slopes[1:], default=math.nan)
        detail = (f"alpha={alpha:.4f}, M={M}, ln(alpha)+0.05={limit:.3f}; binary-tree slope "
                  f"{slopes[0]:.3f}; {graphs} graphs, worst slope {graph_worst:.3f}, "
                  f"{vacuous} with fewer than two points above 1e-12")
        if failures:
            detail += f"; {len(failures)} failures, first: {failures[0]}"
        return not failures, detail

    return _timed(6, "decay bound", run)


def check_fptas(quick: bool = False, seed: int = SEED, work: Optional[WorkLog] = None) -> CheckResult:
    def run():
        rng = random.Random(seed + 7)
        params = SpinParams(0.0, 2.0)
        graphs = 20 if quick else 100
        worst, failures = 0.0, []
        for i in range(graphs):
            n = rng.randint(8, 18)
            g = random_connected(n, rng.randint(0, 2 * n), rng, max_degree=6)
            est = estimate_partition(EstimateRequest(g, params, 0.05))
            exact = exact_partition(g, params)
            err = abs(math.expm1(est.logZ - exact.log_Z))
            worst = max(worst, err)
            if err > 0.05:
                failures.append(f"graph {i}: rel err {err:.3g}")
            if work is not None:
                for iv in est.intervals:
                    work.add(f"fptas g{i} v{iv.vertex}", iv.nodes_visited, n, est.M, est.L)
        detail = f"{graphs} graphs n<=18, eps=0.05: worst relative error {worst:.2e}"
        if failures:
            detail += f"; {len(failures)} failures, first: {failures[0]}"
        return not failures, detail

    return _timed(7, "end-to-end FPTAS", run, limit=600.0)


def _contraction_tree_suite(rng: random.Random, count: int) -> List[Graph]:
    trees = [random_tree(rng.randint(15, 80), rng) for _ in range(count - 2)]
    # two trees with hubs above the base M so the arity charge spans two levels
    trees.append(Graph.from_edges(41, [(0, v) for v in range(1, 41)]))
    hub = [(0, v) for v in range(1, 25)] + [(v, v + 24) for v in range(1, 25)]
    trees.append(Graph.from_edges(49, hub))
    return trees


def check_contraction(quick: bool = False, seed: int = SEED) -> CheckResult:
    def run():
        params = SpinParams(0.0, 2.0)
        alpha, M, D = _working_constants(0.0, 2.0)
        rng = random.Random(seed + 8)
        trees = _contraction_tree_suite(rng, 8 if quick else 24)
        basis_n = step_n = 0
        failures = []
        for ti, t in enumerate(trees):
            for L in (1, 2, 3, 4, 6):
                for r in node_trace(t, 0, {}, params, M, L, D):
                    c = th.ceil_log(M, r.k + 1)
                    basis_n += 1
                    if not r.eps <= M * alpha ** (c - 1) * (1 + REL):
                        failures.append(f"tree {ti} L={L} node {r.path}: basis")
                    if r.in_ball and r.d_free:
                        step_n += 1
                        if not r.eps <= alpha ** c * r.child_eps_max * (1 + REL):
                            failures.append(f"tree {ti} L={L} node {r.path}: step")
        detail = (f"{len(trees)} trees, M={M}, alpha={alpha:.4f}: {basis_n} basis and "
                  f"{step_n} step checks")
        if failures:
            detail += f"; {len(failures)} failures, first: {failures[0]}"
        return not failures, detail

    return _timed(8, "per-node contraction", run)


def check_work_bound(quick: bool = False, seed: int = SEED, work: Optional[WorkLog] = None) -> CheckResult:
    def run():
        log = work
        if log is None or not log.records:
            log = WorkLog()
            rng = random.Random(seed + 9)
            alpha, M, _ = _working_constants(0.0, 2.0)
            params = SpinParams(0.0, 2.0)
            for i in range(10 if quick else 40):
                n = rng.randint(3, 14)
                g = random_connected(n, rng.randint(0, n), rng)
                for L in range(6):
                    for m in (2, M):
                        iv = sandwich(g, 0, {}, DepthBudget(L, m), params)
                        log.add(f"g{i} L{L} M{m}", iv.nodes_visited, n, m, L)
        bad = [r for r in log.records if r[1] > r[2] * r[3] ** r[4]]
        ok = not bad
        detail = f"{len(log.records)} estimator calls"
        if bad:
            detail += f"; {len(bad)} exceed n*M^L, first: {bad[0]}"
        return ok, detail

    return _timed(9, "work bound", run)


def run_all(quick: bool = False, only: Optional[List[int]] = None,
            seed: int = SEED) -> List[CheckResult]:
    work = WorkLog()
    table = [
        (1, lambda: check_threshold_numbers(quick)),
        (2, lambda: check_critical_coincidence(quick)),
        (3, lambda: check_identities(quick)),
        (4, lambda: check_weitz(quick, seed)),
        (5, lambda: check_sandwich(quick, seed, work)),
        (6, lambda: check_decay(quick, seed, work)),
        (7, lambda: check_fptas(quick, seed, work)),
        (8, lambda: check_contraction(quick, seed)),
        (9, lambda: check_work_bound(quick, seed, work)),
    ]
    return [fn() for num, fn in table if only is None or num in only]
