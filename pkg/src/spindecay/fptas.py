"""Deterministic approximation of the partition function.

The partition function is recovered from the probability of the all-green
configuration: pinning v_1..v_{i-1} green in ascending id order,

    ln Z = |E| ln(gamma) - sum_i ln(1 - p_i),

where p_i is the probability that v_i is blue under those pins.  Each p_i is
bracketed by the truncated SAW-tree recursion and replaced by the midpoint of
its bracket.  Components are handled independently and their logs added.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .errors import InvalidInputError, RegimeError
from .estimator import DepthBudget, marginal_bounds, sandwich
from .graph import (
    Graph,
    PinSet,
    RegimeReport,
    Spin,
    SpinParams,
    check_pins,
    classify_regime,
    require_nondegenerate,
    swap_colors,
)
from .thresholds import big_gamma, choose_M, sup_alpha

# slack constant in the depth budget; see choose_budget
BUDGET_SLACK = 8.0


def choose_budget(n: int, epsilon: float, alpha: float, M: int,
                  slack: float = BUDGET_SLACK) -> int:
    """Depth L with 2 M alpha^(L-1) <= epsilon/(4n).

    The root bracket on R has width at most 2 M alpha^(L-1), hence so does the
    bracket on p; the midpoint is then within epsilon/(8n) of p_i.  Because
    1 - p_i > 1/2 the relative error on each factor is at most epsilon/(4n),
    and n such factors give relative error below epsilon on Z.
    """
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    if not 0 < alpha < 1:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0 < epsilon:
        raise InvalidInputError(f"epsilon must be positive, got {epsilon}")
    return max(0, math.ceil(math.log(slack * M * n / epsilon) / math.log(1 / alpha)) + 1)


@dataclass
class EstimateRequest:
    graph: Graph
    params: SpinParams
    epsilon: float = 0.05
    L: Optional[int] = None
    M: Optional[int] = None
    alpha: Optional[float] = None
    force: bool = False
    threads: int = 1

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise InvalidInputError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.threads < 1:
            raise InvalidInputError(f"threads must be >= 1, got {self.threads}")

    @property
    def overridden(self) -> bool:
        return self.L is not None or self.M is not None or self.alpha is not None


@dataclass
class VertexInterval:
    vertex: int
    p_lo: float  # bracket on P(vertex blue | earlier vertices green)
    p_hi: float
    nodes_visited: int

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.p_lo + self.p_hi)


@dataclass
class PartitionEstimate:
    logZ: float
    Z: Optional[float]  # None when exp(logZ) overflows
    L: int
    M: int
    alpha: Optional[float]
    regime: RegimeReport
    certified: bool
    working_params: SpinParams  # after swap normalization
    intervals: List[VertexInterval] = field(default_factory=list)

    @property
    def max_nodes_visited(self) -> int:
        return max((iv.nodes_visited for iv in self.intervals), default=0)


@dataclass(frozen=True)
class Plan:
    """Resolved working orientation and truncation parameters."""

    params: SpinParams
    regime: RegimeReport
    L: int
    M: int
    alpha: Optional[float]
    certified: bool


def plan(params: SpinParams, n: int, epsilon: float, L: Optional[int] = None,
         M: Optional[int] = None, alpha: Optional[float] = None, force: bool = False) -> Plan:
    """Swap-normalize and fill in (alpha, M, L) from the threshold numerics."""
    require_nondegenerate(params)
    report = classify_regime(params)
    work, _ = swap_colors(params, {}) if report.swap_applied else (params, {})
    overridden = L is not None or M is not None or alpha is not None
    if report.guaranteed:
        D = big_gamma(work.beta).D
        if alpha is None and (L is None or M is None):
            alpha = sup_alpha(work.beta, work.gamma, D)
        if M is None:
            M = choose_M(work.beta, work.gamma, alpha, D)
    else:
        thr = report.threshold_used
        if not force:
            raise RegimeError(
                f"beta={params.beta}, gamma={params.gamma} is outside the guaranteed regime "
                f"(needs gamma > Gamma(beta) = {thr:.7f} with beta < 1 and beta*gamma < 1, "
                f"or the mirrored condition); use force with explicit M and L or alpha"
            )
        if M is None or (L is None and alpha is None):
            raise RegimeError("a forced run outside the guaranteed regime needs M and one of L, alpha")
        if work.gamma <= 0:
            raise RegimeError("forced run needs a positive diagonal entry")
    if M < 2:
        raise InvalidInputError(f"M must be >= 2, got {M}")
    if L is None:
        L = choose_budget(n, epsilon, alpha, M)
    return Plan(work, report, L, M, alpha, report.guaranteed and not overridden)


def _vertex_job(args) -> VertexInterval:
    g, v, pins, L, M, params, label = args
    iv = sandwich(g, v, pins, DepthBudget(L, M), params)
    lo, hi = iv.p_lo, iv.p_hi
    if lo > hi:  # only possible in forced runs with beta*gamma > 1
        lo, hi = hi, lo
    return VertexInterval(label, lo, hi, iv.nodes_visited)


def _jobs(g: Graph, p: Plan):
    for comp in g.components():
        sub = g.induced(comp)
        pins: Dict[int, Spin] = {}
        for i, v in enumerate(comp):
            yield (sub, i, dict(pins), p.L, p.M, p.params, v)
            pins[i] = Spin.GREEN


def estimate_partition(req: EstimateRequest) -> PartitionEstimate:
    g = req.graph
    p = plan(req.params, max(g.n, 1), req.epsilon, req.L, req.M, req.alpha, req.force)
    jobs = list(_jobs(g, p))
    if req.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=req.threads) as pool:
            results = list(pool.map(_vertex_job, jobs, chunksize=1))
    else:
        results = [_vertex_job(a) for a in jobs]

    log_gamma = math.log(p.params.gamma)
    log_z = 0.0
    pos = 0
    for comp in g.components():
        sub_m = g.induced(comp).m
        chunk = results[pos:pos + len(comp)]
        pos += len(comp)
        log_z += sub_m * log_gamma - math.fsum(math.log1p(-iv.midpoint) for iv in chunk)
    try:
        z = math.exp(log_z)
    except OverflowError:
        z = None
    if z is not None and math.isinf(z):
        z = None
    return PartitionEstimate(log_z, z, p.L, p.M, p.alpha, p.regime, p.certified,
                             p.params, results)


def marginal(graph: Graph, params: SpinParams, v: int, pins: Optional[PinSet] = None,
             epsilon: float = 0.05, L: Optional[int] = None, M: Optional[int] = None,
             alpha: Optional[float] = None, force: bool = False) -> Tuple[float, float]:
    """Bracket on P(v blue | pins), in the caller's color convention."""
    pins = check_pins(graph, pins or {})
    p = plan(params, max(graph.n, 1), epsilon, L, M, alpha, force)
    if p.regime.swap_applied:
        _, pins = swap_colors(params, pins)
    lo, hi = marginal_bounds(graph, v, pins, DepthBudget(p.L, p.M), p.params)
    if lo > hi:
        lo, hi = hi, lo
    if p.regime.swap_applied:
        lo, hi = 1.0 - hi, 1.0 - lo
    return lo, hi


def default_threads() -> int:
    raw = os.environ.get("SPIN_DECAY_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidInputError(f"SPIN_DECAY_THREADS must be an integer, got {raw!r}") from None
