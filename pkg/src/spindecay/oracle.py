"""Ground truth at desk scale.

Exact partition functions and marginals by exhaustive enumeration, the
untruncated SAW-tree recursion, strong-spatial-mixing probes, and the
per-node decay trace used to check the amortized contraction inequalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import InvalidInputError, InvalidQueryError, RegimeError, SizeError
from .estimator import DepthBudget, ExtRatio, log_edge_factor, sandwich
from .graph import Graph, PinSet, Spin, SpinParams, check_pins, classify_regime
from .sawtree import WalkNode, expand, root
from .thresholds import big_gamma, ceil_log, phi, sup_alpha

MAX_ENUM_N = 26
CHUNK_BITS = 18


def _log_sum(terms: Sequence[float]) -> float:
    terms = [t for t in terms if t != -math.inf]
    if not terms:
        return -math.inf
    top = max(terms)
    return top + math.log(math.fsum(math.exp(t - top) for t in terms))


@dataclass
class ExactResult:
    Z: float
    log_Z: float
    marginals: List[float]  # P(v blue); pinned vertices report 0 or 1
    log_Z_blue: List[float]  # ln of the partition sum restricted to v blue
    log_Z_green: List[float]

    def log_ratio(self, v: int) -> float:
        """ln R_v = ln Z(v blue) - ln Z(v green); nan when the pins have weight zero."""
        if self.log_Z == -math.inf:
            return math.nan
        if self.log_Z_green[v] == -math.inf:
            return math.inf
        return self.log_Z_blue[v] - self.log_Z_green[v]

    def ratio(self, v: int) -> ExtRatio:
        lr = self.log_ratio(v)
        if math.isnan(lr):
            raise InvalidQueryError("pinning has zero weight; conditional ratio undefined")
        return ExtRatio.from_log(lr)


def exact_partition(g: Graph, params: SpinParams, pins: Optional[PinSet] = None) -> ExactResult:
    """Sum over every configuration of the free vertices.

    Configurations are tallied by (#blue-blue edges, #green-green edges) in
    exact integer arithmetic; the weighted sum is formed in log domain with
    compensated summation.
    """
    pins = check_pins(g, pins or {})
    if g.n > MAX_ENUM_N:
        raise SizeError(f"exact enumeration limited to n <= {MAX_ENUM_N}, got {g.n}")
    free = [v for v in range(g.n) if v not in pins]
    slot = {v: i for i, v in enumerate(free)}
    k = len(free)
    m = g.m
    bb0 = gg0 = 0
    ff_edges, fp_blue, fp_green = [], [], []
    for u, v in g.edges():
        if u in slot and v in slot:
            ff_edges.append((slot[u], slot[v]))
        elif u in slot or v in slot:
            f, p = (u, v) if u in slot else (v, u)
            (fp_blue if pins[p] == Spin.BLUE else fp_green).append(slot[f])
        elif pins[u] == pins[v]:
            if pins[u] == Spin.BLUE:
                bb0 += 1
            else:
                gg0 += 1

    width = m + 1
    hist = np.zeros(width * width, dtype=np.int64)
    hist_blue = np.zeros((k, width * width), dtype=np.int64)
    total = 1 << k
    chunk = 1 << min(k, CHUNK_BITS)
    for start in range(0, total, chunk):
        cfg = np.arange(start, start + chunk, dtype=np.int64)
        bits = [((cfg >> i) & 1).astype(np.int16) for i in range(k)]  # 1 = green
        bb = np.full(chunk, bb0, dtype=np.int16)
        gg = np.full(chunk, gg0, dtype=np.int16)
        for a, b in ff_edges:
            gg += bits[a] & bits[b]
            bb += (1 - bits[a]) & (1 - bits[b])
        for a in fp_blue:
            bb += 1 - bits[a]
        for a in fp_green:
            gg += bits[a]
        key = bb.astype(np.int64) * width + gg
        hist += np.bincount(key, minlength=width * width)
        for i in range(k):
            hist_blue[i] += np.bincount(key[bits[i] == 0], minlength=width * width)

    lb = math.log(params.beta) if params.beta > 0 else -math.inf
    lg = math.log(params.gamma) if params.gamma > 0 else -math.inf

    def log_weighted(h) -> float:
        terms = []
        for idx in np.nonzero(h)[0]:
            b, gcount = divmod(int(idx), width)
            t = math.log(int(h[idx]))
            if b:
                t += b * lb
            if gcount:
                t += gcount * lg
            terms.append(t)
        return _log_sum(terms)

    log_z = log_weighted(hist)
    log_blue, log_green, marg = [], [], []
    for v in range(g.n):
        if v in slot:
            hb = hist_blue[slot[v]]
            lbv, lgv = log_weighted(hb), log_weighted(hist - hb)
        elif pins[v] == Spin.BLUE:
            lbv, lgv = log_z, -math.inf
        else:
            lbv, lgv = -math.inf, log_z
        log_blue.append(lbv)
        log_green.append(lgv)
        marg.append(math.exp(lbv - log_z) if log_z != -math.inf else math.nan)
    return ExactResult(math.exp(log_z), log_z, marg, log_blue, log_green)


def exact_ratio(g: Graph, v: int, params: SpinParams, pins: Optional[PinSet] = None) -> ExtRatio:
    """Exact R = P(v blue)/P(v green) under the pins."""
    return exact_partition(g, params, pins).ratio(v)


def exact_tree_R(node: WalkNode, g: Graph, pins: PinSet, params: SpinParams,
                 node_budget: int = 2_000_000) -> ExtRatio:
    """Untruncated tree recursion over the full SAW tree below ``node``."""
    if not node.free:
        return ExtRatio.infinite() if node.status == "pinned-blue" else ExtRatio.zero()
    beta, gamma = params.beta, params.gamma
    log_beta = math.log(beta) if beta > 0 else -math.inf
    log_ig = -math.log(gamma)
    visited = 0

    def frame(n: WalkNode):
        nonlocal visited
        visited += 1
        if visited > node_budget:
            raise SizeError(f"SAW tree exceeds node budget {node_budget}")
        cs = expand(n, g, pins)
        acc = cs.d_green * log_ig + (cs.d_blue * log_beta if cs.d_blue else 0.0)
        return [cs.free_children, 0, acc]

    stack = [frame(node)]
    while True:
        fr = stack[-1]
        if fr[1] < len(fr[0]):
            child = fr[0][fr[1]]
            fr[1] += 1
            stack.append(frame(child))
            continue
        stack.pop()
        if not stack:
            return ExtRatio.from_log(fr[2])
        stack[-1][2] += log_edge_factor(fr[2], beta, gamma)


def saw_reach(g: Graph, v: int, pins: PinSet, M: int, node_budget: int = 2_000_000) -> int:
    """Largest M-based depth of a free SAW node that has free children.

    The whole tree lies in the closed ball of radius L exactly when this is at
    most L (free leaves and pinned leaves only need their parent in the ball).
    Returns -1 when the root has no free children.
    """
    pins = check_pins(g, pins)
    best = -1
    stack = [(root(g, v, pins), 0)]
    seen = 0
    while stack:
        node, depth = stack.pop()
        seen += 1
        if seen > node_budget:
            raise SizeError(f"SAW tree exceeds node budget {node_budget}")
        cs = expand(node, g, pins)
        if not cs.free_children:
            continue
        best = max(best, depth)
        step = ceil_log(M, cs.total + 1)
        stack.extend((c, depth + step) for c in cs.free_children)
    return best


def ssm_distance(g: Graph, v: int, sigma: PinSet, tau: PinSet) -> float:
    delta = _disagreement(sigma, tau)
    dist = g.distances_from(v)
    return min((dist[u] for u in delta), default=math.inf)


def _disagreement(sigma: PinSet, tau: PinSet) -> List[int]:
    if set(sigma) != set(tau):
        raise InvalidInputError("sigma and tau must be defined on the same vertex set")
    return sorted(u for u in sigma if Spin(sigma[u]) != Spin(tau[u]))


def ssm_probe(g: Graph, v: int, sigma: PinSet, tau: PinSet, params: SpinParams) -> float:
    """|p_v^sigma - p_v^tau| for two pinnings of the same vertex set."""
    if g.n > 20:
        raise SizeError(f"ssm probe limited to n <= 20, got {g.n}")
    delta = _disagreement(sigma, tau)
    if v in sigma:
        raise InvalidQueryError(f"probe vertex {v} is pinned")
    if not delta:
        return 0.0
    p_s = exact_partition(g, params, sigma).marginals[v]
    p_t = exact_partition(g, params, tau).marginals[v]
    return abs(p_s - p_t)


# ---------------------------------------------------------------------------
# decay measurement


@dataclass
class NodeRecord:
    path: tuple
    depth: int  # M-based depth
    in_ball: bool
    d_blue: int
    d_green: int
    d_free: int
    lo: float
    hi: float
    eps: float
    child_eps_max: float  # -inf when there are no free children

    @property
    def k(self) -> int:
        return self.d_blue + self.d_green + self.d_free


@dataclass
class DecayTrace:
    L: List[int]
    lo: List[float]
    hi: List[float]
    delta: List[float]
    nodes_visited: List[int]
    bound: List[float]  # 2 M alpha^(L-1)
    slope: float
    alpha: float
    M: int
    D: float
    nodes: List[NodeRecord] = field(default_factory=list)
    node_L: Optional[int] = None

    def as_dict(self) -> dict:
        return {
            "L": self.L, "lo": self.lo, "hi": self.hi, "delta": self.delta,
            "nodes_visited": self.nodes_visited, "bound": self.bound,
            "slope": self.slope, "alpha": self.alpha, "M": self.M, "D": self.D,
        }


def node_trace(g: Graph, v: int, pins: PinSet, params: SpinParams, M: int, L: int,
               D: float, node_budget: int = 500_000) -> List[NodeRecord]:
    """Both bounds at every free node of the M-based closed ball, with phi-gaps.

    Lower bound at a node comes from the children's upper bounds and vice
    versa; children outside the closed ball get the trivial bounds [0, inf].
    """
    pins = check_pins(g, pins)
    beta, gamma = params.beta, params.gamma
    log_beta = math.log(beta) if beta > 0 else -math.inf
    log_ig = -math.log(gamma)
    records: List[NodeRecord] = []

    def to_phi(log_r):
        return phi(math.exp(log_r), beta, D) if log_r != math.inf else math.inf

    # stack frames: node, depth, children, index, acc_lo, acc_hi, child eps
    start = root(g, v, pins)

    def open_frame(node, depth):
        if len(records) + 1 > node_budget:
            raise SizeError("node trace exceeds budget")
        cs = expand(node, g, pins)
        fixed = cs.d_green * log_ig + (cs.d_blue * log_beta if cs.d_blue else 0.0)
        return {"node": node, "depth": depth, "cs": cs, "i": 0, "lo": fixed,
                "hi": fixed, "ceps": -math.inf,
                "child_depth": depth + ceil_log(M, cs.total + 1)}

    stack = [open_frame(start, 0)]
    while True:
        fr = stack[-1]
        cs = fr["cs"]
        in_ball = fr["depth"] <= L
        if fr["i"] < len(cs.free_children):
            child = cs.free_children[fr["i"]]
            fr["i"] += 1
            if in_ball:
                stack.append(open_frame(child, fr["child_depth"]))
                continue
            # child outside the closed ball
            fr["lo"] += log_edge_factor(math.inf, beta, gamma)
            fr["hi"] += log_edge_factor(-math.inf, beta, gamma)
            fr["ceps"] = math.inf
            continue
        stack.pop()
        lo, hi = fr["lo"], fr["hi"]
        eps = to_phi(hi) - to_phi(lo) if hi != lo else 0.0
        records.append(NodeRecord(
            fr["node"].path, fr["depth"], in_ball, cs.d_blue, cs.d_green,
            len(cs.free_children), math.exp(lo), math.exp(hi), eps, fr["ceps"],
        ))
        if not stack:
            records.reverse()
            return records
        parent = stack[-1]
        parent["lo"] += log_edge_factor(hi, beta, gamma)
        parent["hi"] += log_edge_factor(lo, beta, gamma)
        parent["ceps"] = max(parent["ceps"], eps)


def _fit_slope(Ls, deltas) -> float:
    pts = [(L, math.log(d)) for L, d in zip(Ls, deltas) if 1e-12 < d < math.inf]
    if len(pts) < 2:
        return math.nan
    xs, ys = zip(*pts)
    return float(np.polyfit(xs, ys, 1)[0])


def decay_profile(g: Graph, v: int, pins: PinSet, params: SpinParams, M: Optional[int],
                  L_range: Sequence[int], alpha: Optional[float] = None,
                  node_L: Optional[int] = None) -> DecayTrace:
    """Root gap delta(L) = hi - lo over a range of budgets, plus a per-node trace."""
    report = classify_regime(params)
    if report.regime != "guaranteed":
        raise RegimeError(
            f"decay profile needs the guaranteed regime in this orientation, got {report.regime}"
        )
    D = big_gamma(params.beta).D
    if alpha is None:
        alpha = sup_alpha(params.beta, params.gamma, D)
    if M is None:
        from .thresholds import choose_M
        M = choose_M(params.beta, params.gamma, alpha, D)
    Ls, lo, hi, delta, visited, bound = [], [], [], [], [], []
    for L in L_range:
        iv = sandwich(g, v, pins, DepthBudget(L, M), params)
        Ls.append(L)
        lo.append(iv.lo.value)
        hi.append(iv.hi.value)
        delta.append(iv.width)
        visited.append(iv.nodes_visited)
        bound.append(2 * M * alpha ** (L - 1))
    trace = DecayTrace(Ls, lo, hi, delta, visited, bound, _fit_slope(Ls, delta), alpha, M, D)
    if node_L is not None:
        trace.nodes = node_trace(g, v, pins, params, M, node_L, D)
        trace.node_L = node_L
    return trace
