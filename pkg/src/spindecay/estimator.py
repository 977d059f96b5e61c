"""Two-sided truncated evaluation of the odds ratio R over the M-based closed ball.

The recursion R = prod_i (beta R_i + 1)/(R_i + gamma) is decreasing in every
R_i when beta*gamma < 1, so substituting trivial bounds 0 / infinity outside
the ball and alternating the bound direction level by level yields a lower
and an upper bound on the exact ratio.

Products are accumulated as sums of logarithms; zero and infinity are the
floats -inf and +inf internally and `ExtRatio` at the module boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .errors import InvalidInputError
from .graph import Graph, PinSet, SpinParams, check_pins
from .sawtree import PINNED_BLUE, PINNED_GREEN, WalkNode, root, scan_neighbors
from .thresholds import ceil_log

INF = math.inf


@dataclass(frozen=True, order=False)
class ExtRatio:
    """A ratio in [0, +inf] stored by its natural logarithm."""

    tag: str  # zero | finite | infinite
    log_value: float = 0.0

    @classmethod
    def zero(cls) -> "ExtRatio":
        return cls("zero", -INF)

    @classmethod
    def infinite(cls) -> "ExtRatio":
        return cls("infinite", INF)

    @classmethod
    def from_log(cls, log_value: float) -> "ExtRatio":
        if log_value == -INF:
            return cls.zero()
        if log_value == INF:
            return cls.infinite()
        return cls("finite", float(log_value))

    @classmethod
    def from_value(cls, value: float) -> "ExtRatio":
        if value < 0:
            raise InvalidInputError(f"ratio must be nonnegative, got {value}")
        if value == 0:
            return cls.zero()
        return cls.from_log(math.log(value))

    @property
    def value(self) -> float:
        return math.exp(self.log_value)

    @property
    def probability(self) -> float:
        """R / (1 + R)."""
        if self.tag == "zero":
            return 0.0
        if self.tag == "infinite":
            return 1.0
        return 1.0 / (1.0 + math.exp(-self.log_value))

    def __le__(self, other: "ExtRatio") -> bool:
        return self.log_value <= other.log_value

    def __lt__(self, other: "ExtRatio") -> bool:
        return self.log_value < other.log_value


@dataclass(frozen=True)
class DepthBudget:
    L: int
    M: int

    def __post_init__(self):
        if self.M < 2:
            raise InvalidInputError(f"M must be >= 2, got {self.M}")
        if self.L < 0:
            raise InvalidInputError(f"L must be >= 0, got {self.L}")


@dataclass(frozen=True)
class BoundInterval:
    lo: ExtRatio
    hi: ExtRatio
    nodes_visited: int

    @property
    def p_lo(self) -> float:
        return self.lo.probability

    @property
    def p_hi(self) -> float:
        return self.hi.probability

    @property
    def width(self) -> float:
        """hi - lo on the ratio scale (inf when hi is infinite)."""
        if self.hi.tag == "infinite":
            return INF
        return self.hi.value - self.lo.value


def log_edge_factor(log_r: float, beta: float, gamma: float) -> float:
    """ln((beta r + 1)/(r + gamma)) for r = exp(log_r) in [0, inf]."""
    if log_r == -INF:
        return -math.log(gamma)
    if log_r == INF:
        return math.log(beta) if beta > 0 else -INF
    if log_r > 0:
        t = math.exp(-log_r)
        num = beta + t
        return (math.log(num) if num > 0 else -INF) - math.log1p(gamma * t)
    r = math.exp(log_r)
    return math.log1p(beta * r) - math.log(r + gamma)


def edge_factor(r: ExtRatio, params: SpinParams) -> ExtRatio:
    if params.gamma <= 0:
        raise InvalidInputError("edge factor needs gamma > 0")
    return ExtRatio.from_log(log_edge_factor(r.log_value, params.beta, params.gamma))


class _Counter:
    __slots__ = ("n",)

    def __init__(self):
        self.n = 0


def _bound_log(g: Graph, path0, pins: PinSet, L: int, d_parent: int, lb: bool,
               M: int, beta: float, gamma: float, counter: _Counter) -> float:
    """Truncated bound recursion on an explicit stack; returns ln of the bound."""
    log_beta = math.log(beta) if beta > 0 else -INF
    log_ig = -math.log(gamma)
    pos = [-1] * g.n
    path: List[int] = list(path0)
    for i, v in enumerate(path):
        pos[v] = i

    def open_node(L, d_parent, lb):
        # returns a float for leaves of the computation, or a new frame
        if L < 0:
            return -INF if lb else INF
        counter.n += 1
        free, nb, ng = scan_neighbors(g, pins, path, pos)
        Lc = L - ceil_log(M, d_parent + 1)
        acc = ng * log_ig
        if nb:
            acc += nb * log_beta
        if Lc >= 0:
            counter.n += nb + ng
        if acc == -INF or not free:
            return acc
        if Lc < 0:
            # children lie outside the closed ball: child bound is 0 when the
            # child computes a lower bound (factor 1/gamma), inf otherwise (beta)
            return acc + len(free) * (log_beta if lb else log_ig)
        return [Lc, nb + ng + len(free), not lb, free, 0, acc]

    top = open_node(L, d_parent, lb)
    if not isinstance(top, list):
        return top
    stack = [top]
    while True:
        fr = stack[-1]
        free = fr[3]
        if fr[4] < len(free) and fr[5] != -INF:
            u = free[fr[4]]
            fr[4] += 1
            pos[u] = len(path)
            path.append(u)
            res = open_node(fr[0], fr[1], fr[2])
            if isinstance(res, list):
                stack.append(res)
                continue
            pos[path.pop()] = -1
            fr[5] += log_edge_factor(res, beta, gamma)
            continue
        stack.pop()
        val = fr[5]
        if not stack:
            return val
        pos[path.pop()] = -1
        stack[-1][5] += log_edge_factor(val, beta, gamma)


def bound_r(g: Graph, node: WalkNode, pins: PinSet, L: int, d_parent: int, lb: bool,
            M: int, params: SpinParams, counter: Optional[_Counter] = None) -> ExtRatio:
    """Lower (lb=True) or upper bound on R for the SAW subtree at ``node``."""
    if M < 2:
        raise InvalidInputError(f"M must be >= 2, got {M}")
    if params.gamma <= 0:
        raise InvalidInputError("bounds need gamma > 0")
    if node.status == PINNED_BLUE:
        return ExtRatio.infinite()
    if node.status == PINNED_GREEN:
        return ExtRatio.zero()
    counter = counter if counter is not None else _Counter()
    val = _bound_log(g, node.path, pins, L, d_parent, lb, M,
                     params.beta, params.gamma, counter)
    return ExtRatio.from_log(val)


def sandwich(g: Graph, v: int, pins: PinSet, budget: DepthBudget,
             params: SpinParams) -> BoundInterval:
    pins = check_pins(g, pins)
    node = root(g, v, pins)
    c_lo, c_hi = _Counter(), _Counter()
    lo = bound_r(g, node, pins, budget.L, 0, True, budget.M, params, c_lo)
    hi = bound_r(g, node, pins, budget.L, 0, False, budget.M, params, c_hi)
    return BoundInterval(lo, hi, max(c_lo.n, c_hi.n))


def marginal_bounds(g: Graph, v: int, pins: PinSet, budget: DepthBudget,
                    params: SpinParams) -> Tuple[float, float]:
    """Certified bracket (p_lo, p_hi) on the probability that v is blue."""
    iv = sandwich(g, v, pins, budget, params)
    return iv.p_lo, iv.p_hi
