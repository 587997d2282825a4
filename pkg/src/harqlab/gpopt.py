"""Power allocation by geometric programming on the high-SNR BLER model.

Under the monomial BLER P_m = G_m * prod_{i<=m} P_i^{-1}, maximizing the
long-term throughput subject to average-power and final-BLER caps reduces
to minimizing the posynomial sum_{m=1}^{M-1} G_m prod_{i<=m} P_i^{-1}
subject to the posynomial power constraint

    sum_{m=1}^{M} G_{m-1} P_m prod_{i<m} P_i^{-1}  <=  max_avg_power

(G_0 = 1) and the monomial BLER constraint G_M prod P_m^{-1} <= max_bler.
After x = ln P all three become sums of exponentials of affine forms, so
the problem is convex; it is solved by a log-barrier interior point with
damped Newton steps (no external solver).

:func:`grid_search` is the brute-force oracle over a dB-space grid, used
only to validate the solver at small M.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ltat as ltat_mod
from . import mc as mc_mod
from .ltat import OptConstraints, PowerPolicy
from .model import SystemConfig

__all__ = [
    "GpInfeasibleError",
    "GpConvergenceError",
    "GridSpec",
    "PolicyEvaluation",
    "solve_gp",
    "grid_search",
    "evaluate_policy",
    "gp_objective",
    "power_posynomial",
    "bler_monomial",
]

_MU = 10.0          # barrier parameter growth per outer round
_DUALITY_TOL = 1e-9
_KKT_TOL = 1e-8


class GpInfeasibleError(RuntimeError):
    """No power vector satisfies both constraints; carries the evidence."""


class GpConvergenceError(RuntimeError):
    """The interior point failed to reach the KKT tolerance."""


# ---------------------------------------------------------------------------
# posynomials in log space
# ---------------------------------------------------------------------------

class _Posynomial:
    """sum_k exp(log_coef_k + a_k . x) with value/gradient/Hessian."""

    def __init__(self, log_coefs, exponents):
        self.log_coefs = np.asarray(log_coefs, dtype=float)
        self.exponents = np.asarray(exponents, dtype=float)

    def value(self, x: np.ndarray) -> float:
        with np.errstate(over="ignore"):  # inf just means "reject this trial"
            return float(np.exp(self.log_coefs + self.exponents @ x).sum())

    def terms(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.log_coefs + self.exponents @ x)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return self.exponents.T @ self.terms(x)

    def hess(self, x: np.ndarray) -> np.ndarray:
        t = self.terms(x)
        return (self.exponents * t[:, None]).T @ self.exponents


def _objective_posy(g: np.ndarray, m: int) -> _Posynomial:
    # sum_{k=1}^{M-1} G_k prod_{i<=k} P_i^{-1}
    exps = np.zeros((m - 1, m))
    for k in range(1, m):
        exps[k - 1, :k] = -1.0
    return _Posynomial(np.log(g[:m - 1]), exps)

def _power_posy(g: np.ndarray, m: int) -> _Posynomial:
    # sum_{k=1}^{M} G_{k-1} P_k prod_{i<k} P_i^{-1}
    g0 = np.concatenate(([1.0], g[:m - 1]))
    exps = np.zeros((m, m))
    for k in range(m):
        exps[k, k] = 1.0
        exps[k, :k] = -1.0
    return _Posynomial(np.log(g0), exps)

def _bler_mono(g: np.ndarray, m: int) -> _Posynomial:
    return _Posynomial(np.array([np.log(g[m - 1])]), -np.ones((1, m)))


def gp_objective(g, powers) -> float:
    """Posynomial throughput-loss objective at the given powers."""
    g = np.asarray(g, dtype=float)
    p = np.asarray(getattr(powers, "powers", powers), dtype=float)
    m = len(p)
    if m == 1:
        return 0.0
    return _objective_posy(g, m).value(np.log(p))


def power_posynomial(g, powers) -> float:
    """Average power per message of the monomial-BLER model."""
    g = np.asarray(g, dtype=float)
    p = np.asarray(getattr(powers, "powers", powers), dtype=float)
    return _power_posy(g, len(p)).value(np.log(p))


def bler_monomial(g, powers) -> float:
    """Final-BLER monomial G_M prod P_m^{-1}."""
    g = np.asarray(g, dtype=float)
    p = np.asarray(getattr(powers, "powers", powers), dtype=float)
    return _bler_mono(g, len(p)).value(np.log(p))


# ---------------------------------------------------------------------------
# barrier solver
# ---------------------------------------------------------------------------

def _newton_barrier(obj: _Posynomial | None, cons: list[tuple[_Posynomial, float]],
                    x0: np.ndarray, t_end: float) -> tuple[np.ndarray, float]:
    """Path-following minimization of obj subject to cons_i(x) <= bound_i.

    Starts from the strictly feasible x0, multiplies the barrier
    parameter by _MU until it reaches t_end.  Returns (x, t_final).
    """
    x = x0.copy()
    t = 1.0

    def barrier_parts(x):
        slacks = [bound - c.value(x) for c, bound in cons]
        if min(slacks) <= 0.0:
            return None
        val = t * (obj.value(x) if obj is not None else 0.0) \
            - sum(np.log(s) for s in slacks)
        return val, slacks

    while True:
        for _ in range(200):
            parts = barrier_parts(x)
            assert parts is not None
            val, slacks = parts
            grad = t * (obj.grad(x) if obj is not None else 0.0)
            hess = t * (obj.hess(x) if obj is not None else 0.0)
            if obj is None:
                grad = np.zeros_like(x)
                hess = np.zeros((len(x), len(x)))
            for (c, _), s in zip(cons, slacks):
                cg = c.grad(x)
                grad = grad + cg / s
                hess = hess + c.hess(x) / s + np.outer(cg, cg) / s ** 2
            # regularize: posynomial flat directions (e.g. a slack monomial
            # constraint's only variable) otherwise blow up the Newton step
            ridge = 1e-9 * max(float(np.trace(hess)) / len(x), 1.0)
            hess = hess + ridge * np.eye(len(x))
            try:
                step = np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError:
                step = -grad
            norm = float(np.linalg.norm(step))
            if norm > 20.0:
                step *= 20.0 / norm
            decrement = float(-grad @ step)
            if decrement / 2.0 <= 1e-13:
                break
            # backtracking line search, rejecting infeasible trials
            alpha = 1.0
            accepted = False
            while alpha > 1e-14:
                trial = x + alpha * step
                tparts = barrier_parts(trial)
                if tparts is not None and tparts[0] <= val - 0.25 * alpha * decrement:
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                break  # stalled at roundoff
            x = trial
        if t >= t_end:
            return x, t
        t = min(t * _MU, t_end)


def solve_gp(coeffs, cons: OptConstraints, m: int | None = None,
             x0: np.ndarray | None = None) -> PowerPolicy:
    """Optimal powers of the monomial-model throughput maximization.

    ``coeffs`` is an AsymptoticCoeffs (its ``g`` is used) or the G_1..G_M
    vector itself.  Feasibility is established first by minimizing the
    power posynomial under the BLER cap alone; if even that minimum
    exceeds the power budget the problem is reported infeasible with the
    violated bound.  ``x0`` optionally overrides the interior starting
    point (log powers); infeasible overrides fall back to the bootstrap.
    """
    g = np.asarray(getattr(coeffs, "g", coeffs), dtype=float)
    if m is None:
        m = len(g)
    if m < 1 or len(g) < m:
        raise ValueError("need G_1..G_M for m rounds")
    if np.any(g[:m] <= 0):
        raise ValueError("monomial constants must be positive")
    pbar, bler_cap = cons.max_avg_power, cons.max_bler

    if m == 1:
        if g[0] / pbar > bler_cap:
            raise GpInfeasibleError(
                f"single-round BLER monomial G1/P = {g[0] / pbar:.3e} "
                f"exceeds the cap {bler_cap:.3e} even at full power {pbar}")
        return PowerPolicy(powers=(pbar,))

    power_c = _power_posy(g, m)
    bler_c = _bler_mono(g, m)
    obj = _objective_posy(g, m)

    # phase I: least average power under the BLER cap alone
    p_eq = (g[m - 1] / bler_cap) ** (1.0 / m) * 2.0
    x_start = np.full(m, np.log(p_eq))
    x_ph1, _ = _newton_barrier(power_c, [(bler_c, bler_cap)], x_start,
                               t_end=1e10)
    least_power = power_c.value(x_ph1)
    if least_power >= pbar:
        raise GpInfeasibleError(
            f"least achievable average power {least_power:.6g} under the "
            f"BLER cap {bler_cap:.3e} exceeds the budget {pbar:.6g}")

    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        if power_c.value(x0) < pbar and bler_c.value(x0) < bler_cap:
            x_ph1 = x0

    t_end = len((power_c, bler_c)) / _DUALITY_TOL
    x, t = _newton_barrier(obj, [(power_c, pbar), (bler_c, bler_cap)],
                           x_ph1, t_end=t_end)

    # KKT stationarity with the barrier duals 1/(t * slack)
    lam_p = 1.0 / (t * (pbar - power_c.value(x)))
    lam_b = 1.0 / (t * (bler_cap - bler_c.value(x)))
    resid = obj.grad(x) + lam_p * power_c.grad(x) + lam_b * bler_c.grad(x)
    scale = max(1.0, float(np.max(np.abs(obj.grad(x)))))
    if float(np.max(np.abs(resid))) / scale > _KKT_TOL:
        raise GpConvergenceError(
            f"KKT residual {float(np.max(np.abs(resid))):.3e} above tolerance")
    return PowerPolicy(powers=tuple(np.exp(x)))


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """dB-space grid: [lo_db, hi_db] per dimension, refined around the best."""

    lo_db: float
    hi_db: float
    points: int
    refine_rounds: int = 2

    def __post_init__(self):
        if self.hi_db <= self.lo_db or self.points < 2:
            raise ValueError("degenerate grid")


def grid_search(coeffs, cons: OptConstraints, m: int,
                spec: GridSpec) -> PowerPolicy:
    """Exhaustive feasible-point minimizer of the posynomial objective.

    Test oracle only: m <= 3 and at most 1e7 points per round.  Each
    refinement round zooms into +-2 cells around the incumbent.
    """
    g = np.asarray(getattr(coeffs, "g", coeffs), dtype=float)
    if m > 3:
        raise ValueError("grid oracle is limited to m <= 3")
    if spec.points ** m > 10 ** 7:
        raise ValueError("grid would exceed 1e7 points")
    power_c = _power_posy(g, m)
    bler_c = _bler_mono(g, m)
    # with one round the throughput objective is empty; the dropped
    # success factor then prefers the smallest final BLER
    obj = _objective_posy(g, m) if m > 1 else bler_c

    lo = np.full(m, spec.lo_db)
    hi = np.full(m, spec.hi_db)
    best_db = None
    for _ in range(max(spec.refine_rounds, 1)):
        axes = [np.linspace(lo[d], hi[d], spec.points) for d in range(m)]
        mesh = np.meshgrid(*axes, indexing="ij")
        logp = np.stack([ax * (np.log(10.0) / 10.0) for ax in mesh], axis=-1)
        flat = logp.reshape(-1, m)

        def posy_vals(p: _Posynomial) -> np.ndarray:
            return np.exp(flat @ p.exponents.T + p.log_coefs).sum(axis=1)

        feasible = (posy_vals(power_c) <= cons.max_avg_power) \
            & (posy_vals(bler_c) <= cons.max_bler)
        if not np.any(feasible):
            raise GpInfeasibleError("no feasible point on the search grid")
        objective = posy_vals(obj) if obj is not None else np.zeros(len(flat))
        objective = np.where(feasible, objective, np.inf)
        best = int(np.argmin(objective))
        best_db = flat[best] * (10.0 / np.log(10.0))
        cell = (hi - lo) / (spec.points - 1)
        lo = best_db - 2.0 * cell
        hi = best_db + 2.0 * cell
    return PowerPolicy(powers=tuple(10.0 ** (best_db / 10.0)))


# ---------------------------------------------------------------------------
# policy evaluation against any BLER backend
# ---------------------------------------------------------------------------

@dataclass
class PolicyEvaluation:
    """Throughput report plus constraint slacks of one policy."""

    curve: "mc_mod.BlerCurve"
    ltat: float
    avg_power: float
    avg_rounds: float
    power_slack: float
    bler_slack: float
    feasible: bool


def evaluate_policy(policy, cfg: SystemConfig, cons: OptConstraints,
                    backend: str = "gl-dp", n_samples: int = 10 ** 5,
                    seed=0, rule_order: int = 20) -> PolicyEvaluation:
    """BLER curve by the chosen backend, then throughput and feasibility.

    Backends: ``mc`` (exact-model Monte Carlo), ``gl-dp`` (one quadrature
    run per horizon), ``asy`` (high-SNR monomials).
    """
    from . import asy as asy_mod
    from . import quad as quad_mod

    powers = np.asarray(getattr(policy, "powers", policy), dtype=float)
    run_cfg = cfg.with_snr_linear(powers / cfg.noise_power)
    if backend == "mc":
        curve = mc_mod.estimate_bler(run_cfg, n_samples, "exact", seed)
    elif backend == "gl-dp":
        rule = quad_mod.gl_rule(rule_order)
        vals = [quad_mod.bler_gl_dp(run_cfg.truncated(h), rule)[0]
                for h in range(1, run_cfg.max_rounds + 1)]
        vals = np.minimum.accumulate(np.clip(vals, 0.0, 1.0))
        curve = mc_mod.BlerCurve(values=np.asarray(vals), method="gl-dp",
                                 meta={"order": rule_order})
    elif backend == "asy":
        curve = asy_mod.bler_asymptotic(run_cfg)
    else:
        raise ValueError(f"unknown backend {backend!r}")

    eta = ltat_mod.ltat_from_blers(cfg.rate, curve)
    p_avg = ltat_mod.avg_power(powers, curve)
    rounds = ltat_mod.avg_rounds(curve)
    p_slack = cons.max_avg_power - p_avg
    b_slack = cons.max_bler - curve.final
    return PolicyEvaluation(curve=curve, ltat=eta, avg_power=p_avg,
                            avg_rounds=rounds, power_slack=p_slack,
                            bler_slack=b_slack,
                            feasible=bool(p_slack >= 0 and b_slack >= 0))
