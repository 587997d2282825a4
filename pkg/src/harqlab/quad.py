"""Deterministic evaluators of the recursive average-BLER integral.

The average BLER after M rounds, under the sqrt(m)-dispersion decoding
model, is a nested integral over accumulated capacities.  It satisfies a
one-dimensional recursion

    phi_m(S) = integral_0^inf Qk_{m+1}(S + x) f_{m+1}(x) phi_{m+1}(S + x) dx,

with phi_M = 1 and the answer phi_0(0), where Qk_m is the decoding kernel
of round m and f_m the capacity density of round m.  Three evaluators are
provided, each instrumented with exact work counters:

* :func:`bler_trapezoid`  -- truncated composite trapezoid, layer by layer;
* :func:`bler_gl_naive`   -- full M-fold Gauss-Laguerre tensor sum;
* :func:`bler_gl_dp`      -- the same quadrature with multiset-keyed caching,
  which shrinks the kernel-evaluation count from M*N^M to C(M+N, N) - 1.

Trapezoid grid convention
-------------------------
Layer m is tabulated on the grid {j*H : 0 <= j <= m*(K+1) - 1}, i.e.
m*(K+1) points; the deepest layer (index M, where phi = 1) therefore
holds M*(K+1) initial kernel values.  With these grids every offset
lookup S + kH stays inside the next layer's table, and the number of
integrand tabulations on the intermediate layers 1..M-1 is exactly
sum_{m=1}^{M-1} m*(K+1) = (M-1)*M*(K+1)/2, reported as ``psi_evals``.
The ``q_evals`` counter additionally includes the M*(K+1) initial
kernel values of the deepest layer.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from math import comb, factorial

import numpy as np

from .model import SystemConfig, q_function

_SQRT2 = math.sqrt(2.0)


def _q_scalar(x: float) -> float:
    """Same Gaussian tail as model.q_function, for scalar hot loops."""
    return 0.5 * math.erfc(x / _SQRT2)


def _density(x, m: int, cfg: SystemConfig):
    """Right-continuous capacity density on x >= 0.

    Identical to model.capacity_pdf except at the origin, where the
    quadrature grids need the x -> 0+ limit ln2/(snr*mean) instead of
    the support-convention value 0; a zero sample there costs the
    composite trapezoid a spurious O(H) boundary error.
    """
    snr = cfg.snr_linear[m - 1]
    lam = cfg.gain_mean
    arr = np.minimum(np.asarray(x, dtype=float), 1020.0)
    pow2 = np.exp2(arr)
    return (np.log(2.0) / (lam * snr)) * pow2 \
        * np.exp(-(pow2 - 1.0) / (snr * lam))

__all__ = [
    "TrapezoidConfig",
    "GLRule",
    "EvalCounter",
    "BudgetError",
    "truncation_bound",
    "bler_trapezoid",
    "gl_rule",
    "bler_gl_naive",
    "bler_gl_dp",
    "multiset_count",
    "complexity_report",
]

NAIVE_BUDGET = 10 ** 8
DP_BUDGET = 10 ** 8


class BudgetError(RuntimeError):
    """Raised when an evaluator would exceed its configured work budget."""


@dataclass(frozen=True)
class EvalCounter:
    """Work accounting of one evaluator run.

    ``q_evals`` counts decoding-kernel evaluations, ``cache_entries`` the
    number of cached intermediate values, ``psi_evals`` the trapezoid's
    intermediate-layer integrand tabulations (0 for the other methods).
    """

    q_evals: int
    cache_entries: int = 0
    psi_evals: int = 0

    def __post_init__(self):
        if min(self.q_evals, self.cache_entries, self.psi_evals) < 0:
            raise ValueError("counters must be nonnegative")


# ---------------------------------------------------------------------------
# trapezoid method
# ---------------------------------------------------------------------------

def truncation_bound(trunc_error: float, gain_mean: float,
                     snr_max_linear: float) -> float:
    """Smallest upper integration limit with tail mass <= trunc_error.

    The capacity tail beyond U carries mass exp(-(2^U - 1)/(snr*mean)),
    so U_min = log2(1 - snr*mean*ln(trunc_error)).
    """
    if not 0.0 < trunc_error < 1.0:
        raise ValueError("trunc_error must lie in (0, 1)")
    return float(np.log2(1.0 - gain_mean * snr_max_linear * np.log(trunc_error)))


@dataclass(frozen=True)
class TrapezoidConfig:
    """Truncated-grid parameters: K intervals of step H covering [0, U]."""

    step: float
    intervals: int
    trunc_error: float | None = None

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.intervals < 1:
            raise ValueError("intervals must be >= 1")

    @property
    def upper(self) -> float:
        return self.step * self.intervals

    @classmethod
    def from_truncation(cls, trunc_error: float, cfg: SystemConfig,
                        intervals: int) -> "TrapezoidConfig":
        """Grid whose upper limit is the truncation bound for this link."""
        u = truncation_bound(trunc_error, cfg.gain_mean,
                             float(np.max(cfg.snr_linear)))
        return cls(step=u / intervals, intervals=intervals,
                   trunc_error=trunc_error)


def bler_trapezoid(cfg: SystemConfig,
                   tcfg: TrapezoidConfig) -> tuple[float, EvalCounter]:
    """Average BLER after all max_rounds rounds by layered trapezoid sums.

    Returns the value clipped to [0, 1] and the evaluation counter (see
    the module docstring for the grid and counting convention).
    """
    m_max = cfg.max_rounds
    k = tcfg.intervals
    h = tcfg.step
    v = cfg.dispersion_scale

    # trapezoid coefficients on the K+1 offsets {0, H, ..., KH}
    coef = np.full(k + 1, h)
    coef[0] = coef[-1] = h / 2.0

    def kernel_table(m: int, size: int) -> np.ndarray:
        grid = np.arange(size) * h
        return q_function((grid - cfg.rate) / (np.sqrt(m) * v))

    q_evals = m_max * (k + 1)
    psi_evals = 0
    cache_entries = 0

    theta = kernel_table(m_max, m_max * (k + 1))  # phi_{M} = 1 on the deepest layer
    for m in range(m_max - 1, 0, -1):
        weights = coef * _density(np.arange(k + 1) * h, m + 1, cfg)
        phi = np.correlate(theta, weights, mode="valid")[: m * (k + 1)]
        theta = kernel_table(m, m * (k + 1)) * phi
        psi_evals += m * (k + 1)
        q_evals += m * (k + 1)
        cache_entries += m * (k + 1)

    weights = coef * _density(np.arange(k + 1) * h, 1, cfg)
    value = float(np.dot(weights, theta[: k + 1]))
    counter = EvalCounter(q_evals=q_evals, cache_entries=cache_entries,
                          psi_evals=psi_evals)
    return min(max(value, 0.0), 1.0), counter


# ---------------------------------------------------------------------------
# Gauss-Laguerre rule
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GLRule:
    """Gauss-Laguerre nodes and weights for integral_0^inf e^{-x} f(x) dx."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if len(self.nodes) != self.order or len(self.weights) != self.order:
            raise ValueError("rule arrays must match the order")
        if not np.all(np.diff(self.nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        if not np.all(self.weights > 0):
            raise ValueError("weights must be positive")
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-10:
            raise ValueError("weights must sum to 1")


def _laguerre_pair(n: int, x: float) -> tuple[float, float]:
    """(L_n(x), L_{n-1}(x)) by the three-term recurrence."""
    lm1, l = 1.0, 1.0 - x
    for j in range(1, n):
        lm1, l = l, ((2 * j + 1 - x) * l - j * lm1) / (j + 1)
    return l, lm1


def gl_rule(order: int) -> GLRule:
    """Gauss-Laguerre rule of the given order (1 <= order <= 64).

    Nodes are the roots of the order-N Laguerre polynomial found by
    Newton iteration on the three-term recurrence, each started from the
    standard asymptotic guess so the interlaced roots are picked up in
    ascending order; weights follow x_i / ((N+1)^2 L_{N+1}(x_i)^2).
    """
    n = order
    if not 1 <= n <= 64:
        raise ValueError("order must lie in [1, 64]")
    nodes = np.empty(n)
    for i in range(n):
        if i == 0:
            x = 3.0 / (1.0 + 2.4 * n)
        elif i == 1:
            x = nodes[0] + 15.0 / (1.0 + 2.5 * n)
        else:
            x = nodes[i - 1] + ((1.0 + 2.55 * (i - 1)) / (1.9 * (i - 1))) \
                * (nodes[i - 1] - nodes[i - 2])
        prev = np.inf
        for _ in range(100):
            l, lm1 = _laguerre_pair(n, x)
            # x L_n'(x) = n (L_n(x) - L_{n-1}(x))
            dl = n * (l - lm1) / x
            dx = l / dl
            x -= dx
            if abs(dx) <= 1e-14 * abs(x):
                break
            if abs(dx) >= 0.5 * abs(prev) and abs(dx) <= 1e-10 * abs(x):
                break  # stalled in a roundoff limit cycle at the root
            prev = dx
        else:
            raise RuntimeError(f"Laguerre root {i} did not converge")
        nodes[i] = x
    lnp1 = np.array([_laguerre_pair(n + 1, x)[0] for x in nodes])
    weights = nodes / ((n + 1) ** 2 * lnp1 ** 2)
    return GLRule(order=n, nodes=nodes, weights=weights)


# ---------------------------------------------------------------------------
# Gauss-Laguerre evaluators
# ---------------------------------------------------------------------------

def _layer_factors(cfg: SystemConfig, rule: GLRule) -> np.ndarray:
    """(M, N) table of w_i * f_m(x_i) * e^{x_i}, the per-layer node factors."""
    m_max = cfg.max_rounds
    fac = np.empty((m_max, rule.order))
    for m in range(1, m_max + 1):
        fac[m - 1] = rule.weights * _density(rule.nodes, m, cfg) \
            * np.exp(rule.nodes)
    return fac


def bler_gl_naive(cfg: SystemConfig,
                  rule: GLRule) -> tuple[float, EvalCounter]:
    """Average BLER by the full M-fold tensor sum, no caching.

    Every term of the N^M-term sum evaluates all M decoding kernels, so
    the kernel count is exactly M * N^M.  Refuses when that exceeds the
    naive budget.
    """
    m_max = cfg.max_rounds
    n = rule.order
    work = m_max * n ** m_max
    if work > NAIVE_BUDGET:
        raise BudgetError(
            f"naive tensor sum needs {work} kernel evaluations "
            f"(budget {NAIVE_BUDGET}); use bler_gl_dp")
    v = cfg.dispersion_scale
    fac = _layer_factors(cfg, rule)
    sqrt_m = np.sqrt(np.arange(1, m_max + 1))

    nodes = rule.nodes.tolist()
    fac_list = fac.tolist()
    scale = (sqrt_m * v).tolist()
    rate = cfg.rate

    q_evals = 0
    total = 0.0
    for idx in itertools.product(range(n), repeat=m_max):
        s = 0.0
        term = 1.0
        for m, j in enumerate(idx):
            s += nodes[j]
            term *= fac_list[m][j] * _q_scalar((s - rate) / scale[m])
            q_evals += 1
        total += term
    return min(max(total, 0.0), 1.0), EvalCounter(q_evals=q_evals)


def bler_gl_dp(cfg: SystemConfig, rule: GLRule) -> tuple[float, EvalCounter]:
    """Average BLER by Gauss-Laguerre quadrature with multiset caching.

    Works down from the deepest layer, caching the decoding kernel and
    the layer value phi at every distinct node multiset.  Cache keys are
    the sorted node-index multisets themselves, never the floating sums,
    so hits are exact.  The kernel count equals C(M+N, N) - 1.
    """
    m_max = cfg.max_rounds
    n = rule.order
    work = comb(m_max + n, n)
    if work > DP_BUDGET:
        raise BudgetError(
            f"multiset cache needs {work} entries (budget {DP_BUDGET})")
    v = cfg.dispersion_scale
    fac = _layer_factors(cfg, rule)
    nodes = rule.nodes.tolist()
    rate = cfg.rate

    q_evals = 0
    cache_entries = 0
    phi_next: dict[tuple[int, ...], float] | None = None  # layer M: phi = 1

    for m in range(m_max - 1, -1, -1):
        fac_m = fac[m].tolist()
        scale = math.sqrt(m + 1) * v  # kernel layer feeding phi_m
        q_cache: dict[tuple[int, ...], float] = {}
        phi: dict[tuple[int, ...], float] = {}
        for key in itertools.combinations_with_replacement(range(n), m):
            s = sum(nodes[j] for j in key)
            acc = 0.0
            for j in range(n):
                child = tuple(sorted(key + (j,)))
                q = q_cache.get(child)
                if q is None:
                    q = _q_scalar((s + nodes[j] - rate) / scale)
                    q_cache[child] = q
                    q_evals += 1
                acc += fac_m[j] * q * (phi_next[child] if phi_next is not None
                                       else 1.0)
            phi[key] = acc
        cache_entries += len(q_cache) + len(phi)
        phi_next = phi

    value = phi_next[()]
    return min(max(value, 0.0), 1.0), EvalCounter(q_evals=q_evals,
                                                  cache_entries=cache_entries)


# ---------------------------------------------------------------------------
# complexity accounting
# ---------------------------------------------------------------------------

def multiset_count(m: int, order: int) -> int:
    """Number of distinct size-m node multisets: C(m + N - 1, N - 1)."""
    return comb(m + order - 1, order - 1)


@dataclass(frozen=True)
class ComplexityRow:
    m: int
    order: int
    naive_evals: int
    dp_evals: int
    ratio_dp_to_limit: float


def complexity_report(m_max: int, orders) -> list[ComplexityRow]:
    """Kernel-evaluation counts of both quadrature evaluators.

    ``ratio_dp_to_limit`` is dp_count * M! / N^M, which tends to 1 as the
    order grows: the cached evaluator costs N^M / M! asymptotically.
    """
    if np.isscalar(orders):
        orders = [orders]
    rows = []
    for n in orders:
        n = int(n)
        naive = m_max * n ** m_max
        dp = comb(m_max + n, n) - 1
        ratio = dp * factorial(m_max) / n ** m_max
        rows.append(ComplexityRow(m=m_max, order=n, naive_evals=naive,
                                  dp_evals=dp, ratio_dp_to_limit=ratio))
    return rows
