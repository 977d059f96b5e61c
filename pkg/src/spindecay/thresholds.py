"""Uniqueness-threshold and amortized-decay numerics.

Everything here is a pure function of (beta, gamma, d, x).  Root finding is
plain bisection on functions whose monotonicity is known analytically, so no
bracket can be lost near the critical point.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Dict, NamedTuple, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from .errors import InvalidInputError, NumericFailure, RegimeError
from .graph import THRESHOLD_MARGIN

FIXED_POINT_TOL = 1e-12
D_MAX_DEFAULT = 200.0
M_SEARCH_LIMIT = 2 ** 20


def _bisect(fn, lo: float, hi: float, max_iter: int = 400) -> float:
    """Root of a function that is positive at lo and negative at hi."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if fn(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _log_ratio(beta: float, gamma: float, x: float) -> float:
    # ln((beta x + 1) / (x + gamma))
    return math.log1p(beta * x) - math.log(x + gamma)


@dataclass(frozen=True)
class FixedPoint:
    beta: float
    gamma: float
    d: float
    x: float
    residual: float


def _log_fixed_point(beta: float, gamma: float, d: float) -> float:
    # bisection on t = ln x; x lies in [f(1), f(0)] = [((1+b)/(1+g))^d, g^-d]
    t_lo = d * _log_ratio(beta, gamma, 1.0)
    t_hi = min(-d * math.log(gamma), 0.0)

    def excess(t):
        return d * _log_ratio(beta, gamma, math.exp(t)) - t

    return _bisect(excess, t_lo, t_hi)


def _check_fp_domain(beta, gamma, d):
    if not (beta >= 0 and gamma >= 1 and beta * gamma < 1 and d >= 1):
        raise InvalidInputError(
            f"fixed point needs beta>=0, gamma>=1, beta*gamma<1, d>=1; got {beta}, {gamma}, {d}"
        )


def fixed_point_x(beta: float, gamma: float, d: float) -> FixedPoint:
    """Positive solution of x = ((beta x + 1)/(x + gamma))^d on (0, 1)."""
    _check_fp_domain(beta, gamma, d)
    x = math.exp(_log_fixed_point(beta, gamma, d))
    residual = abs(math.exp(d * _log_ratio(beta, gamma, x)) - x)
    if residual > FIXED_POINT_TOL or not 0 < x < 1:
        raise NumericFailure(f"fixed point not representable or not converged (x={x!r})")
    return FixedPoint(beta, gamma, d, x, residual)


def _lhs_at(beta: float, gamma: float, d: float, x: float) -> float:
    return d * (1 - beta * gamma) * x / ((beta * x + 1) * (x + gamma))


def uniqueness_lhs(beta: float, gamma: float, d: float) -> float:
    """|f'(x)| at the fixed point of the symmetric d-ary recursion."""
    _check_fp_domain(beta, gamma, d)
    t = _log_fixed_point(beta, gamma, d)
    x = math.exp(t)
    return math.exp(
        math.log(d) + math.log1p(-beta * gamma) + t - math.log1p(beta * x) - math.log(x + gamma)
    )


def _gamma_cap(beta: float, d: float) -> float:
    if beta > 0:
        # for tiny beta, 1/beta - 1e-9 rounds back to 1/beta; keep beta*gamma < 1
        return min(1.0 / beta - 1e-9, (1.0 - 1e-15) / beta)
    return max(2.0, d ** (1.0 / (d + 1)) + 0.1)


def solve_gamma_of_d(beta: float, d: float) -> Optional[float]:
    """Solution of uniqueness_lhs(beta, gamma, d) = 1 over gamma > 1, or None."""
    if not 0 <= beta < 1:
        raise InvalidInputError(f"beta must lie in [0, 1), got {beta}")
    if d < 1:
        raise InvalidInputError(f"d must be >= 1, got {d}")
    if uniqueness_lhs(beta, 1.0, d) <= 1:
        return None
    cap = _gamma_cap(beta, d)
    if uniqueness_lhs(beta, cap, d) > 1:
        raise NumericFailure(f"no sign change of the uniqueness condition below gamma={cap}")
    return _bisect(lambda g: uniqueness_lhs(beta, g, d) - 1, 1.0, cap)


def gamma_of_d(beta: float, d: float) -> float:
    """Critical gamma for arity d; 1.0 by convention when no crossing exists."""
    g = solve_gamma_of_d(beta, d)
    return 1.0 if g is None else g


def gamma_of_d_beta0_closed(d: float) -> float:
    """(d-1) d^(-d/(d+1)), floored at the convention value 1."""
    return max(1.0, (d - 1) * d ** (-d / (d + 1)))


def _stationarity_sign(beta: float, d: float, gamma: float) -> float:
    """Sign of d(gamma(d))/dd on the critical curve (positive while increasing).

    Implicit differentiation of lhs(gamma, d) = 1: the sign equals the sign of
    the partial derivative of lhs in d at fixed gamma, with x = x(gamma, d).
    """
    x = fixed_point_x(beta, gamma, d).x
    dlogq = beta / (beta * x + 1) - 1 / (x + gamma)
    x_d = x * _log_ratio(beta, gamma, x) / (1 - d * x * dlogq)
    dlogh = 1 / x - beta / (beta * x + 1) - 1 / (x + gamma)
    return 1 + d * dlogh * x_d


class CriticalPoint(NamedTuple):
    Gamma: float
    D: float
    X: float
    stationarity: float  # |gamma(D+h) + gamma(D-h) - 2 gamma(D)| at h = 1e-3


@functools.lru_cache(maxsize=256)
def big_gamma(beta: float) -> CriticalPoint:
    """Gamma(beta) = sup_d gamma(d), the maximizing arity D, and X = x(Gamma, D)."""
    if not 0 <= beta < 1:
        raise InvalidInputError(f"beta must lie in [0, 1), got {beta}")
    d_hi = 1e3
    while True:
        ds = np.geomspace(1.0, d_hi, 160)
        gs = np.array([gamma_of_d(beta, d) for d in ds])
        i = int(np.argmax(gs))
        if i < len(ds) - 1:
            break
        d_hi *= 10
        if d_hi > 1e9:
            raise NumericFailure("maximizing arity not found below 1e9")
    lo, hi = ds[max(i - 1, 0)], ds[i + 1]

    def sign(d):
        g = solve_gamma_of_d(beta, d)
        return 1.0 if g is None else _stationarity_sign(beta, d, g)

    if sign(lo) > 0 and sign(hi) < 0:
        D = _bisect(sign, lo, hi, max_iter=200)
    else:
        # bracket straddles the convention region; fall back to bounded minimization
        res = optimize.minimize_scalar(
            lambda d: -gamma_of_d(beta, d), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-10},
        )
        D = float(res.x)
    Gamma = gamma_of_d(beta, D)
    X = fixed_point_x(beta, Gamma, D).x
    h = 1e-3
    stat = abs(gamma_of_d(beta, D + h) + gamma_of_d(beta, D - h) - 2 * Gamma)
    return CriticalPoint(Gamma, float(D), X, stat)


class IntegerThreshold(NamedTuple):
    value: float
    d: int


def big_gamma_integer_beta0(d_max: int = 200) -> IntegerThreshold:
    """max over integer d of (d-1) d^(-d/(d+1)); the beta = 0 integer threshold."""
    best = IntegerThreshold(-math.inf, 0)
    for d in range(1, d_max + 1):
        val = (d - 1) * d ** (-d / (d + 1))
        if val > best.value:
            best = IntegerThreshold(val, d)
    return best


# ---------------------------------------------------------------------------
# potential and amortized decay


def potential(R, beta: float, D: float):
    """Phi(R) = R^((D+1)/(2D)) (beta R + 1)."""
    R = np.asarray(R, dtype=float)
    out = np.power(R, (D + 1) / (2 * D)) * (beta * R + 1)
    return float(out) if out.ndim == 0 else out


def phi(R: float, beta: float, D: float) -> float:
    """Antiderivative of 1/Phi with phi(0) = 0.

    Closed form for beta = 0; otherwise adaptive quadrature with the
    algebraic endpoint singularity handled by the weight function.
    """
    if R < 0:
        raise InvalidInputError("phi is defined for R >= 0")
    if math.isinf(R):
        return math.inf
    a = (D + 1) / (2 * D)
    if beta == 0:
        return R ** (1 - a) / (1 - a)
    if R == 0:
        return 0.0
    val, _ = integrate.quad(
        lambda t: 1.0 / (beta * t + 1.0), 0.0, R, weight="alg", wvar=(-a, 0.0),
        epsabs=1e-10, epsrel=1e-12, limit=200,
    )
    return val


def alpha_sym(beta: float, gamma: float, D: float, d, x):
    """Symmetric amortized decay alpha(d, x); vectorized over d and x."""
    d = np.asarray(d, dtype=float)
    x = np.asarray(x, dtype=float)
    a = (D + 1) / (2 * D)
    c = (D - 1) / (2 * D)
    logq = np.log1p(beta * x) - np.log(x + gamma)
    with np.errstate(divide="ignore"):
        log_val = (
            np.log(d) + math.log(1 - beta * gamma) + a * np.log(x)
            + d * c * np.log1p(beta * x) - (1 + d * c) * np.log(x + gamma)
            - np.log1p(beta * np.exp(d * logq))
        )
    out = np.exp(log_val)
    return float(out) if out.ndim == 0 else out


def alpha_vec(beta: float, gamma: float, D: float, d0: int, d1: int, xs: Sequence[float]) -> float:
    """Amortized decay alpha(d; x_1..x_d) with d1 blue and d0 green fixed children.

    The fixed children multiply the product term by beta^d1 / gamma^d0.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        return 0.0
    if np.any(xs <= 0) or np.any(xs > 1):
        raise InvalidInputError("alpha_vec needs every x in (0, 1]")
    if d1 > 0 and beta == 0:
        return 0.0
    a = (D + 1) / (2 * D)
    c = (D - 1) / (2 * D)
    logp = np.sum(np.log1p(beta * xs) - np.log(xs + gamma)) - d0 * math.log(gamma)
    if d1:
        logp += d1 * math.log(beta)
    p = math.exp(logp)
    s = float(np.sum(np.exp(a * np.log(xs)) / (xs + gamma)))
    return (1 - beta * gamma) * math.exp(c * logp) / (beta * p + 1) * s


def _require_guaranteed(beta: float, gamma: float) -> CriticalPoint:
    if not (0 <= beta < 1 and beta * gamma < 1):
        raise RegimeError(f"need 0 <= beta < 1 and beta*gamma < 1; got beta={beta}, gamma={gamma}")
    crit = big_gamma(beta)
    if gamma < crit.Gamma + THRESHOLD_MARGIN:
        raise RegimeError(
            f"gamma={gamma} is not above the uniqueness threshold Gamma({beta})={crit.Gamma:.10f}"
        )
    return crit


@dataclass(frozen=True)
class AlphaSup:
    alpha: float
    d: float
    x: float
    at_boundary: bool


def sup_alpha_detail(beta: float, gamma: float, D: Optional[float] = None,
                     d_max: float = D_MAX_DEFAULT) -> AlphaSup:
    crit = _require_guaranteed(beta, gamma)
    if D is None:
        D = crit.D
    d_max = max(d_max, 4 * D)
    ds = np.arange(1.0, d_max + 1e-12, 0.25)
    xs = np.arange(1, 513) / 512.0
    grid = alpha_sym(beta, gamma, D, ds[:, None], xs[None, :])
    i, j = np.unravel_index(int(np.argmax(grid)), grid.shape)
    best = AlphaSup(float(grid[i, j]), float(ds[i]), float(xs[j]), bool(i == len(ds) - 1))

    def neg(p):
        return -alpha_sym(beta, gamma, D, p[0], p[1])

    res = optimize.minimize(
        neg, x0=[best.d, best.x], method="L-BFGS-B",
        bounds=[(1.0, d_max), (1e-12, 1.0)], options={"ftol": 1e-15, "gtol": 1e-12},
    )
    if -res.fun > best.alpha:
        best = AlphaSup(float(-res.fun), float(res.x[0]), float(res.x[1]), best.at_boundary)
    if best.alpha >= 1:
        raise NumericFailure(f"sup of amortized decay not below 1 ({best.alpha})")
    return best


def sup_alpha(beta: float, gamma: float, D: Optional[float] = None) -> float:
    """Constant alpha < 1 bounding the amortized decay for all arities and x in (0, 1]."""
    return sup_alpha_detail(beta, gamma, D).alpha


def ceil_log(M: int, k: int) -> int:
    """Smallest t >= 0 with M**t >= k, by integer arithmetic."""
    t, p = 0, 1
    while p < k:
        p *= M
        t += 1
    return t


def _M_gap(k: np.ndarray, M: int, log_gamma_c: float, log_alpha: float) -> np.ndarray:
    ceil = np.array([ceil_log(M, int(kk)) for kk in k], dtype=float)
    return np.log(k) - k * log_gamma_c - ceil * log_alpha


def m_condition_holds(M: int, gamma: float, alpha: float, D: float) -> bool:
    """k / gamma^(k (D-1)/(2D)) <= alpha^ceil(log_M k) for every k >= M."""
    c = (D - 1) / (2 * D)
    lgc = c * math.log(gamma)
    la = math.log(alpha)
    slope = 1 + (-la) / math.log(M)
    # upper envelope ln k (1 + ln(1/a)/ln M) - k c ln g + ln(1/a) is concave;
    # it is decreasing past k0 and then bounds the gap for all larger k
    k0 = max(M, int(math.ceil(slope / lgc)) + 1)
    k = M
    chunk = 4096
    while True:
        ks = np.arange(k, k + chunk, dtype=float)
        if np.any(_M_gap(ks, M, lgc, la) > 0):
            return False
        k += chunk
        if k > k0:
            env = slope * math.log(k) - k * lgc - la
            if env <= 0:
                return True


def choose_M(beta: float, gamma: float, alpha: float, D: float) -> int:
    """Smallest integer M >= 2 for which the arity-compression inequality holds."""
    if not 0 < alpha < 1:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    if gamma <= 1:
        raise InvalidInputError(f"gamma must exceed 1, got {gamma}")
    c = (D - 1) / (2 * D)
    lgc = c * math.log(gamma)
    la = math.log(alpha)
    for M in range(2, M_SEARCH_LIMIT):
        # k = M alone already needs M gamma^(-cM) <= alpha
        if math.log(M) - M * lgc > la:
            continue
        if m_condition_holds(M, gamma, alpha, D):
            return M
    raise NumericFailure("no base M found below 2^20; gamma too close to the threshold")


def check_fixed_point_identities(beta: float) -> Dict[str, float]:
    """Residuals of the two fixed-point identities at (Gamma, D, X)."""
    G, D, X, _ = big_gamma(beta)
    lhs = _log_ratio(beta, G, X)
    form_a = 2 * (beta * X + 1) / ((D + 1) * (beta * X + 1) - 2 * D)
    form_b = 2 * D * (1 - beta * G) * X / ((beta * X + 1) * (2 * D * X - (D + 1) * (X + G)))
    ratio = (D - 1) / (D + 1)
    root = math.sqrt(beta * G)
    return {
        "beta": beta,
        "Gamma": G,
        "D": D,
        "X": X,
        "beta_over_Gamma": beta / G,
        "sqrt_beta_Gamma": root,
        "D_ratio": ratio,
        "identity1_holds": bool(beta / G <= root + 1e-15 and root < ratio),
        "identity2_residual": abs(lhs - form_a),
        "identity2b_residual": abs(lhs - form_b),
    }


@dataclass(frozen=True)
class ThresholdProfile:
    beta: float
    Gamma: float
    D: float
    X: float
    gamma: Optional[float] = None
    alpha: Optional[float] = None
    M: Optional[int] = None
    Gamma_int: Optional[float] = None
    identities: Dict[str, float] = field(default_factory=dict)


def threshold_profile(beta: float, gamma: Optional[float] = None) -> ThresholdProfile:
    G, D, X, _ = big_gamma(beta)
    alpha = M = None
    if gamma is not None:
        alpha = sup_alpha(beta, gamma, D)
        M = choose_M(beta, gamma, alpha, D)
    gint = big_gamma_integer_beta0().value if beta == 0 else None
    return ThresholdProfile(beta, G, D, X, gamma, alpha, M, gint,
                            check_fixed_point_identities(beta))
