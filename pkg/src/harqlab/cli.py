"""Command-line front end emitting plot-ready CSV and JSON artifacts.

Exit codes: 0 success, 2 usage error, 3 infeasible optimization,
4 evaluation budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

import numpy as np

from . import asy, gpopt, mc, quad
from .env import EnvHyper, serve
from .ltat import OptConstraints
from .model import SystemConfig

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_BUDGET = 4

_DEFAULTS = dict(m=5, l=50, r=5.0, lam=1.0, n=20, k=3000, u=10.0,
                 samples=100_000, seed=0)


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _writer(out):
    return csv.writer(out, lineterminator="\n")


def _add_link_args(p: argparse.ArgumentParser):
    p.add_argument("--m", type=int, default=_DEFAULTS["m"],
                   help="maximum number of rounds")
    p.add_argument("--l", type=int, default=_DEFAULTS["l"],
                   help="symbols per round")
    p.add_argument("--r", type=float, default=_DEFAULTS["r"],
                   help="rate in bits/symbol")
    p.add_argument("--lambda", dest="lam", type=float,
                   default=_DEFAULTS["lam"], help="mean channel gain")


def _trap_cfg(cfg: SystemConfig, args) -> quad.TrapezoidConfig:
    if args.eps_u is not None:
        return quad.TrapezoidConfig.from_truncation(args.eps_u, cfg, args.k)
    return quad.TrapezoidConfig(step=args.u / args.k, intervals=args.k)


def _bler_rows(method: str, cfg: SystemConfig, args):
    """(m, bler, stderr, q_evals) rows for one link config."""
    if method in ("mc", "mc-approx"):
        mode = "exact" if method == "mc" else "approx"
        curve = mc.estimate_bler(cfg, args.samples, mode, args.seed)
        for m in range(1, cfg.max_rounds + 1):
            yield m, curve.values[m - 1], curve.std_errors[m - 1], ""
    elif method == "asy":
        curve = asy.bler_asymptotic(cfg)
        for m in range(1, cfg.max_rounds + 1):
            yield m, curve.values[m - 1], "", ""
    else:
        for m in range(1, cfg.max_rounds + 1):
            sub = cfg.truncated(m)
            if method == "trap":
                value, counter = quad.bler_trapezoid(sub, _trap_cfg(sub, args))
            elif method == "gl":
                value, counter = quad.bler_gl_naive(sub, quad.gl_rule(args.n))
            elif method == "gl-dp":
                value, counter = quad.bler_gl_dp(sub, quad.gl_rule(args.n))
            else:
                raise ValueError(f"unknown method {method}")
            yield m, value, "", counter.q_evals


def _cmd_bler(args, out) -> int:
    deterministic = args.method in ("trap", "gl", "gl-dp")
    if args.method != "trap" and (args.k_given or args.eps_u is not None):
        print("--k/--eps-u apply only to --method trap", file=sys.stderr)
        return EXIT_USAGE
    if args.method not in ("gl", "gl-dp") and args.n_given:
        print("--n applies only to the Gauss-Laguerre methods", file=sys.stderr)
        return EXIT_USAGE
    if deterministic and args.samples_given:
        print("--samples applies only to the Monte Carlo methods",
              file=sys.stderr)
        return EXIT_USAGE

    w = _writer(out)
    w.writerow(["snr_db", "m", "method", "bler", "stderr", "q_evals",
                "wall_ms"])
    for snr in args.snr_db:
        cfg = SystemConfig.uniform_snr(snr, max_rounds=args.m,
                                       blocklength=args.l, rate=args.r,
                                       gain_mean=args.lam)
        t0 = time.perf_counter()
        rows = list(_bler_rows(args.method, cfg, args))
        wall = (time.perf_counter() - t0) * 1000.0 / len(rows)
        for m, value, stderr, evals in rows:
            w.writerow([snr, m, args.method, repr(float(value)),
                        repr(float(stderr)) if stderr != "" else "",
                        evals, f"{wall:.3f}"])
    return EXIT_OK


def _cmd_sweep(args, out) -> int:
    w = _writer(out)
    w.writerow(["figure", "snr_db", "m", "l", "r", "method", "bler",
                "stderr"])
    methods = ["mc-approx", "trap", "gl-dp", "asy"]

    def emit(snr, cfg):
        for method in methods:
            for m, value, stderr, _ in _bler_rows(method, cfg, args):
                w.writerow([args.figure, snr, m, cfg.blocklength,
                            cfg.rate, method, repr(float(value)),
                            repr(float(stderr)) if stderr != "" else ""])

    if args.figure == "bler-vs-snr":
        for snr in (args.snr_db or np.arange(0.0, 41.0, 5.0)):
            emit(snr, SystemConfig.uniform_snr(snr, max_rounds=args.m,
                                               blocklength=args.l,
                                               rate=args.r,
                                               gain_mean=args.lam))
    elif args.figure == "bler-vs-m":
        for snr in (args.snr_db or [10.0, 15.0, 20.0]):
            emit(snr, SystemConfig.uniform_snr(snr, max_rounds=args.m,
                                               blocklength=args.l,
                                               rate=args.r,
                                               gain_mean=args.lam))
    elif args.figure == "bler-vs-l":
        info_bits = 1000.0
        for snr in (args.snr_db or [15.0, 20.0]):
            for length in (100, 200, 300, 400, 500, 600, 800, 1000):
                cfg = SystemConfig(max_rounds=args.m, blocklength=length,
                                   rate=info_bits / length,
                                   snr_db=(snr,) * args.m,
                                   gain_mean=args.lam,
                                   info_bits=info_bits)
                emit(snr, cfg)
    return EXIT_OK


def _cmd_gl_nodes(args, out) -> int:
    rule = quad.gl_rule(args.n)
    w = _writer(out)
    w.writerow(["i", "node", "weight"])
    for i, (x, wt) in enumerate(zip(rule.nodes, rule.weights), start=1):
        w.writerow([i, repr(float(x)), repr(float(wt))])
    return EXIT_OK


def _cmd_complexity(args, out) -> int:
    w = _writer(out)
    w.writerow(["m", "n", "naive_evals", "dp_evals", "ratio_dp_mfact_nm"])
    for row in quad.complexity_report(args.m, args.n):
        w.writerow([row.m, row.order, row.naive_evals, row.dp_evals,
                    repr(row.ratio_dp_to_limit)])
    return EXIT_OK


def _cmd_optimize_gp(args, out) -> int:
    cfg = SystemConfig.uniform_snr(0.0, max_rounds=args.m,
                                   blocklength=args.l, rate=args.r,
                                   gain_mean=args.lam)
    coeffs = asy.asymptotic_coeffs(cfg)
    w = _writer(out)
    w.writerow(["pbar_db", "feasible"]
               + [f"p{i}" for i in range(1, args.m + 1)]
               + ["ltat_asy", "ltat_gl_dp", "power_slack", "bler_slack"])
    any_infeasible = False
    for pbar_db in args.pbar_db:
        cons = OptConstraints(max_avg_power=10.0 ** (pbar_db / 10.0),
                              max_bler=args.bler_max)
        try:
            policy = gpopt.solve_gp(coeffs, cons, args.m)
        except gpopt.GpInfeasibleError as exc:
            print(f"pbar={pbar_db} dB infeasible: {exc}", file=sys.stderr)
            w.writerow([pbar_db, "false"] + [""] * (args.m + 4))
            any_infeasible = True
            continue
        ev_asy = gpopt.evaluate_policy(policy, cfg, cons, backend="asy")
        ev_gl = gpopt.evaluate_policy(policy, cfg, cons, backend="gl-dp",
                                      rule_order=args.n)
        w.writerow([pbar_db, "true"]
                   + [repr(p) for p in policy.powers]
                   + [repr(ev_asy.ltat), repr(ev_gl.ltat),
                      repr(ev_asy.power_slack), repr(ev_asy.bler_slack)])
    return EXIT_INFEASIBLE if any_infeasible else EXIT_OK


def _cmd_simulate(args, out) -> int:
    cfg = SystemConfig.uniform_snr(0.0, max_rounds=len(args.policy),
                                   blocklength=args.l, rate=args.r,
                                   gain_mean=args.lam)
    report = mc.simulate_episodes(cfg, np.asarray(args.policy),
                                  args.slots, args.seed)
    json.dump({
        "ltat": report.ltat, "avg_power": report.avg_power,
        "avg_rounds": report.avg_rounds, "bler_final": report.bler_final,
        "slot_count": report.slot_count, "delivered": report.delivered,
        "cycle_count": report.cycle_count,
        "ltat_stderr": report.ltat_stderr,
        "bler_stderr": report.bler_stderr,
    }, out)
    out.write("\n")
    return EXIT_OK


def _cmd_env_server(args, out) -> int:
    with open(args.config, encoding="utf-8") as fh:
        conf = json.load(fh)
    cfg = SystemConfig.uniform_snr(0.0, max_rounds=int(conf.get("m", 5)),
                                   blocklength=int(conf.get("l", 50)),
                                   rate=float(conf.get("r", 5.0)),
                                   gain_mean=float(conf.get("lambda", 1.0)),
                                   noise_power=float(conf.get("noise_power",
                                                              1.0)))
    cons = OptConstraints(max_avg_power=float(conf["pbar"]),
                          max_bler=float(conf["blermax"]))
    hyper = EnvHyper(
        rho0=float(conf.get("rho0", 1.0)), nu0=float(conf.get("nu0", 1.0)),
        step_rho=float(conf.get("tau_rho", 1e-3)),
        step_nu=float(conf.get("tau_nu", 1e-3)),
        window=int(conf.get("w", 300)), period=int(conf.get("i", 100)),
        p_max=float(conf["pmax"]) if "pmax" in conf else None)
    serve(cfg, cons, hyper, stdin=sys.stdin, stdout=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="harqlab",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bler", help="average BLER by one method")
    p.add_argument("--method", required=True,
                   choices=["mc", "mc-approx", "trap", "gl", "gl-dp", "asy"])
    p.add_argument("--snr-db", type=_parse_float_list, required=True)
    _add_link_args(p)
    p.add_argument("--n", type=int, default=None, help="quadrature order")
    p.add_argument("--k", type=int, default=None, help="trapezoid intervals")
    p.add_argument("--eps-u", type=float, default=None,
                   help="target truncation mass (sets the upper limit)")
    p.add_argument("--u", type=float, default=_DEFAULTS["u"],
                   help="upper integration limit when --eps-u is absent")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=_DEFAULTS["seed"])
    p.set_defaults(fn=_cmd_bler)

    p = sub.add_parser("sweep", help="CSV for one standard figure")
    p.add_argument("--figure", required=True,
                   choices=["bler-vs-snr", "bler-vs-m", "bler-vs-l"])
    _add_link_args(p)
    p.add_argument("--snr-db", type=_parse_float_list, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--eps-u", type=float, default=None)
    p.add_argument("--u", type=float, default=_DEFAULTS["u"])
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=_DEFAULTS["seed"])
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("gl-nodes", help="Gauss-Laguerre node/weight table")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(fn=_cmd_gl_nodes)

    p = sub.add_parser("complexity", help="kernel-evaluation counts")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=_parse_float_list, required=True)
    p.set_defaults(fn=_cmd_complexity)

    opt = sub.add_parser("optimize", help="power allocation")
    osub = opt.add_subparsers(dest="optimizer", required=True)
    p = osub.add_parser("gp", help="geometric-programming allocation")
    p.add_argument("--pbar-db", type=_parse_float_list, required=True)
    p.add_argument("--bler-max", type=float, required=True)
    _add_link_args(p)
    p.add_argument("--n", type=int, default=_DEFAULTS["n"])
    p.set_defaults(fn=_cmd_optimize_gp)

    p = sub.add_parser("simulate", help="episode simulation of a policy")
    p.add_argument("--policy", type=_parse_float_list, required=True,
                   help="per-round powers; the count sets the round limit")
    p.add_argument("--slots", type=int, required=True)
    p.add_argument("--seed", type=int, default=_DEFAULTS["seed"])
    p.add_argument("--l", type=int, default=_DEFAULTS["l"])
    p.add_argument("--r", type=float, default=_DEFAULTS["r"])
    p.add_argument("--lambda", dest="lam", type=float,
                   default=_DEFAULTS["lam"])
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("env-server", help="serve the MDP environment on stdio")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_env_server)
    return ap


def main(argv=None, out=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)

    # remember which tuning flags were given explicitly, then fill defaults
    args.k_given = getattr(args, "k", None) is not None
    args.n_given = getattr(args, "n", None) is not None
    args.samples_given = getattr(args, "samples", None) is not None
    if getattr(args, "k", None) is None:
        args.k = _DEFAULTS["k"]
    if getattr(args, "n", None) is None:
        args.n = _DEFAULTS["n"]
    if getattr(args, "samples", None) is None:
        args.samples = _DEFAULTS["samples"]

    out = out if out is not None else sys.stdout
    try:
        return args.fn(args, out)
    except quad.BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except gpopt.GpInfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
