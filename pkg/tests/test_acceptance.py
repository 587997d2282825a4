"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and the per-cell detail of the cross-method table.
"""

import io
import json
import math
import time
from math import comb, factorial

import numpy as np
import pytest

from harqlab.asy import asymptotic_coeffs, bler_asymptotic, coeff_oracle
from harqlab.env import EnvHyper, HarqEnv, serve
from harqlab.gpopt import (GridSpec, bler_monomial, gp_objective, grid_search,
                           power_posynomial, solve_gp)
from harqlab.ltat import OptConstraints
from harqlab.mc import estimate_bler, simulate_episodes
from harqlab.model import SystemConfig
from harqlab.quad import (TrapezoidConfig, bler_gl_dp, bler_gl_naive,
                          bler_trapezoid, gl_rule, truncation_bound)

R_DEFAULT, L_DEFAULT, LAM = 5.0, 50, 1.0


def _report(num: int, ok: bool, detail: str) -> bool:
    print(f"[acceptance {num}] {'PASS' if ok else 'FAIL'} {detail}")
    return ok


def cfg_uniform(snr_db, m, r=R_DEFAULT, l=L_DEFAULT):
    return SystemConfig.uniform_snr(snr_db, max_rounds=m, blocklength=l,
                                    rate=r, gain_mean=LAM)


def test_criterion_1_method_cross_agreement():
    """MC(1e6, sqrt(m)-dispersion) vs DP quadrature within 3 sigma, and
    trapezoid within 1% of the DP quadrature, at M in {1,2,3} and
    5..20 dB with K=3000, N=20, truncation mass 1e-5."""
    t_start = time.time()
    rule = gl_rule(20)
    failures = []
    for m in (1, 2, 3):
        for snr in (5.0, 10.0, 15.0, 20.0):
            cfg = cfg_uniform(snr, m)
            gl_val, _ = bler_gl_dp(cfg, rule)
            curve = estimate_bler(cfg, 10 ** 6, "approx",
                                  seed=1000 + 10 * m + int(snr))
            mc_val = curve.values[-1]
            mc_sig = curve.std_errors[-1]
            tcfg = TrapezoidConfig.from_truncation(1e-5, cfg, 3000)
            trap_val, _ = bler_trapezoid(cfg, tcfg)
            mc_ok = abs(gl_val - mc_val) <= 3 * mc_sig
            trap_ok = abs(trap_val - gl_val) / gl_val <= 0.01
            print(f"    M={m} snr={snr:4.0f}dB: gl={gl_val:.6e} "
                  f"mc={mc_val:.6e}+-{mc_sig:.1e} trap={trap_val:.6e} "
                  f"|gl-mc|/3sig={abs(gl_val - mc_val) / (3 * mc_sig):6.1f} "
                  f"|trap-gl|/gl={abs(trap_val - gl_val) / gl_val:8.4%} "
                  f"{'ok' if mc_ok and trap_ok else 'VIOLATED'}")
            if not (mc_ok and trap_ok):
                failures.append((m, snr, mc_ok, trap_ok))
    elapsed = time.time() - t_start
    ok = not failures
    _report(1, ok, f"method cross-agreement ({elapsed:.0f}s; "
            f"{len(failures)} of 12 cells violated: {failures})")
    assert ok, (
        "the order-20 node set cannot resolve the decoding-kernel drop "
        f"(width ~0.2 capacity-bits) in these cells: {failures}; "
        "the trapezoid and Monte Carlo estimators agree with each other "
        "throughout, identifying the fixed-order quadrature as the outlier")


def test_criterion_2_dp_correctness_and_counting():
    """Tensor sum and cached evaluator agree to 1e-12 relative; kernel
    counts match M*N^M and C(M+N,N)-1 exactly; 53129 at M=5, N=20."""
    ok = True
    for m in (1, 2, 3):
        cfg = cfg_uniform(15.0, m)
        for order in range(2, 11):
            rule = gl_rule(order)
            v_dp, c_dp = bler_gl_dp(cfg, rule)
            v_nv, c_nv = bler_gl_naive(cfg, rule)
            ok &= abs(v_nv - v_dp) <= 1e-12 * abs(v_dp)
            ok &= c_nv.q_evals == m * order ** m
            ok &= c_dp.q_evals == comb(m + order, order) - 1
    _, counter = bler_gl_dp(cfg_uniform(15.0, 5), gl_rule(20))
    ok &= counter.q_evals == 53129
    _report(2, ok, f"dp==naive to 1e-12 with exact counts; "
            f"dp(M=5,N=20)={counter.q_evals}")
    assert ok


def test_criterion_3_asymptotic_count_ratio():
    """(C(M+N,N)-1) * M! / N^M within 1% of 1 at M=3, N=1000."""
    ratio = (comb(1003, 1000) - 1) * factorial(3) / 1000 ** 3
    ok = 0.99 <= ratio <= 1.01
    _report(3, ok, f"count ratio at M=3, N=1e3: {ratio:.6f}")
    assert ok


def test_criterion_4_truncation_bound():
    """Worked upper-limit example: 10.17 at 20 dB, unit gain, 1e-5 mass."""
    u = truncation_bound(1e-5, 1.0, 100.0)
    ok = abs(u - 10.17) <= 0.01
    _report(4, ok, f"U_min = {u:.4f}")
    assert ok


def test_criterion_5_asymptote_validity():
    """Monomial/quadrature ratio decreases monotonically over 20..35 dB,
    sits in [0.8, 1.25] at 35 dB, and the log-log slope is exactly -M/10."""
    rule = gl_rule(20)
    ok = True
    detail = []
    for m in (1, 2):
        ratios = []
        for snr in (20.0, 25.0, 30.0, 35.0):
            cfg = cfg_uniform(snr, m)
            a = bler_asymptotic(cfg).values[-1]
            g, _ = bler_gl_dp(cfg, rule)
            ratios.append(a / g)
        ok &= all(x > y for x, y in zip(ratios, ratios[1:]))
        ok &= 0.8 <= ratios[-1] <= 1.25
        a30 = bler_asymptotic(cfg_uniform(30.0, m)).values[-1]
        a40 = bler_asymptotic(cfg_uniform(40.0, m)).values[-1]
        slope = (math.log10(a40) - math.log10(a30)) / 10.0
        ok &= abs(slope + m / 10.0) <= 1e-12
        detail.append(f"M={m}: ratios {['%.3f' % r for r in ratios]} "
                      f"slope {slope:.12f}")
    _report(5, ok, "; ".join(detail))
    assert ok


def test_criterion_6_coefficient_recursion():
    """Symbolic layer table vs numerically integrated oracle, plus the
    single-round closed form and its long-block limit."""
    ok = True
    detail = []
    for m in (1, 2, 3):
        cfg = cfg_uniform(30.0, m)
        sym = asymptotic_coeffs(cfg).psi(0, 0.0)
        orc = coeff_oracle(cfg).psi0_zero
        rel = abs(sym - orc) / abs(orc)
        ok &= rel <= 1e-8
        detail.append(f"M={m} rel={rel:.2e}")

    cfg1 = cfg_uniform(30.0, 1)
    v1 = math.sqrt(math.pi / (2 * L_DEFAULT)) * math.log2(math.e)
    g1_closed = ((2.0 ** (R_DEFAULT + v1) - 2.0 ** (R_DEFAULT - v1))
                 / (2 * v1 * math.log(2.0)) - 1.0) / LAM
    g1_oracle = coeff_oracle(cfg1).g[0]
    rel = abs(g1_closed - g1_oracle) / g1_oracle
    ok &= rel <= 1e-10
    detail.append(f"G1 closed-vs-oracle rel={rel:.2e}")

    long_cfg = SystemConfig.uniform_snr(30.0, max_rounds=1,
                                        blocklength=10 ** 6, rate=R_DEFAULT)
    g1_long = asymptotic_coeffs(long_cfg).g[0]
    limit = (2.0 ** R_DEFAULT - 1.0) / LAM
    ok &= abs(g1_long - limit) / limit <= 1e-3
    detail.append(f"L=1e6 limit rel={(g1_long - limit) / limit:.2e}")
    _report(6, ok, "; ".join(detail))
    assert ok


def test_criterion_7_gp_optimality():
    """Solver within 0.5% of a 1e6-point grid at 10 and 20 dB budgets,
    constraints met, power constraint tight to 1e-6 of the budget.

    The rate is 1 bit/symbol here: with two rounds and a 1% BLER cap the
    monomial model is infeasible below a ~20.8 dB budget at 5 bits/symbol,
    so that rate admits no solution at either budget point.
    """
    cfg = cfg_uniform(20.0, 2, r=1.0)
    g = asymptotic_coeffs(cfg).g
    ok = True
    detail = []
    for pbar_db in (10.0, 20.0):
        cons = OptConstraints(max_avg_power=10.0 ** (pbar_db / 10.0),
                              max_bler=0.01)
        policy = solve_gp(g, cons, 2)
        spec = GridSpec(lo_db=pbar_db - 40.0, hi_db=pbar_db + 15.0,
                        points=1000, refine_rounds=2)
        grid_policy = grid_search(g, cons, 2, spec)
        obj = gp_objective(g, policy)
        gap = (gp_objective(g, grid_policy) - obj) / obj
        power = power_posynomial(g, policy)
        bler = bler_monomial(g, policy)
        slack = cons.max_avg_power - power
        ok &= abs(gap) <= 0.005
        ok &= power <= cons.max_avg_power and bler <= cons.max_bler
        ok &= 0.0 <= slack <= 1e-6 * cons.max_avg_power
        detail.append(f"{pbar_db:.0f}dB: grid gap {gap:.2e}, "
                      f"power slack {slack:.2e}")
    _report(7, ok, "; ".join(detail))
    assert ok


def test_criterion_8_environment_consistency():
    """Windowed final-failure rate vs the smooth estimator, long-run rate
    vs the episode simulator (both 3 sigma at 1e5 slots), and byte-exact
    transition streams per seed."""
    cfg = cfg_uniform(12.0, 3)
    cons = OptConstraints(max_avg_power=1000.0, max_bler=0.5)
    n = 10 ** 5
    power = float(cfg.snr_linear[0] * cfg.noise_power)

    env = HarqEnv(cfg, cons, EnvHyper(window=n, period=10 ** 9))
    env.reset(seed=81)
    rate_sum = 0.0
    for _ in range(n):
        rate_sum += env.step(power).rate
    _, ff_rate, mbar = env.window_stats()

    curve = estimate_bler(cfg, 10 ** 5, "exact", seed=82)
    sig_env = math.sqrt(max(ff_rate * (1 - ff_rate), 1e-12) / (n / mbar))
    sig_bler = math.hypot(sig_env, curve.std_errors[-1])
    bler_ok = abs(ff_rate - curve.values[-1]) <= 3 * sig_bler

    rep = simulate_episodes(cfg, np.full(3, power), n, seed=83)
    sig_rate = rep.ltat_stderr * math.sqrt(2.0)
    rate_ok = abs(rate_sum / n - rep.ltat) <= 3 * sig_rate

    def transcript(seed):
        e = HarqEnv(cfg, cons, EnvHyper())
        e.reset(seed=seed)
        chunks = []
        for i in range(2000):
            t = e.step(power if i % 3 else 0.5 * power)
            chunks.append(json.dumps([t.state.past_powers, t.action,
                                      t.reward, t.rate, t.success,
                                      t.final_round_failure]))
        return "\n".join(chunks)

    def serve_transcript(seed):
        script = ['{"type":"reset","seed":%d}' % seed] \
            + ['{"type":"step","power":%f}' % power] * 500 \
            + ['{"type":"shutdown"}']
        out = io.StringIO()
        serve(cfg, cons, EnvHyper(), stdin=io.StringIO("\n".join(script)),
              stdout=out)
        return out.getvalue()

    repro_ok = (transcript(7) == transcript(7)
                and serve_transcript(9) == serve_transcript(9))

    ok = bler_ok and rate_ok and repro_ok
    _report(8, ok,
            f"final-failure rate {ff_rate:.5f} vs estimator "
            f"{curve.values[-1]:.5f} (3sig {3 * sig_bler:.5f}); "
            f"rate {rate_sum / n:.4f} vs simulator {rep.ltat:.4f} "
            f"(3sig {3 * sig_rate:.4f}); byte-reproducible={repro_ok}")
    assert ok
