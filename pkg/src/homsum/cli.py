"""Config-driven command line front end.

Exit codes: 0 all contracted checks pass; 1 usage/config/cap error;
2 a contracted check failed.
"""

import argparse
import math
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import suites
from .config import load_config, build_systems
from .distributions import parse_law, psi_alpha_norm
from .errors import CapExceeded, ConfigError
from .kernels import read_kernel
from .moments import HomSumSystem, kappa4_exact
from .records import (ResultRecord, qlist_str, write_checks_csv,
                      write_results_csv, cached_scalar, system_fingerprint)
from .simulate import (bound_rates, kolmogorov_max_stat, kolmogorov_orthant,
                       rate_conformance_study, sample_gaussian, sample_Q)
from .svgplot import loglog_plot


def _apply_overrides(cfg, args):
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.mc is not None:
        changes["mc"] = args.mc
    if args.threads is not None:
        changes["threads"] = args.threads
    if args.out is not None:
        changes["out"] = args.out
    if getattr(args, "format", None) is not None:
        changes["format"] = args.format
    return replace(cfg, **changes) if changes else cfg


def _summarize(rows):
    by_check = {}
    for check, *_, passed in [(r[0], r[-1]) for r in rows]:
        ok, n = by_check.get(check, (0, 0))
        by_check[check] = (ok + bool(passed), n + 1)
    for check, (ok, n) in sorted(by_check.items()):
        status = "pass" if ok == n else "FAIL"
        print(f"{status}  {check}: {ok}/{n}")
    return all(ok == n for ok, n in by_check.values())


def _ensure_out(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    return cfg.out


def cmd_verify_identities(args):
    cfg = _apply_overrides(load_config(args.config), args)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    rows = suites.identity_suite(rng, n_pairs=cfg.corpus_pairs,
                                 n_contexts=cfg.corpus_contexts)
    out = _ensure_out(cfg)
    write_checks_csv(os.path.join(out, "identities.csv"), rows)
    return 0 if _summarize(rows) else 2


def cmd_verify_inequalities(args):
    cfg = _apply_overrides(load_config(args.config), args)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    rows = suites.inequality_suite(rng, n_cases=max(10, cfg.corpus_kernels // 4))
    rows += suites.kappa4_nonneg_suite(rng, n_kernels=cfg.corpus_kernels)
    rows += suites.smoothmax_suite(rng)
    out = _ensure_out(cfg)
    write_checks_csv(os.path.join(out, "inequalities.csv"), rows)
    return 0 if _summarize(rows) else 2


def cmd_kappa4(args):
    f = read_kernel(args.kernel)
    spec = parse_law(args.law)
    system = HomSumSystem([f], [spec] * f.dim)
    value = cached_scalar("kappa4", system_fingerprint(system, "kappa4"),
                          lambda: kappa4_exact(system, 0))
    print(f"kappa4 = {value:.12g}")
    return 0


def cmd_psi_norm(args):
    spec = parse_law(args.law)
    print(f"psi_{args.alpha:g} norm = {psi_alpha_norm(spec, args.alpha):.12g}")
    return 0


def _record_for(system, cfg, exp_id, rates, dist=math.nan, dist_se=math.nan,
                wall_ms=0.0):
    return ResultRecord(
        exp_id=exp_id, n=system.dim, d=system.d,
        qlist=qlist_str(system.degrees), mc=cfg.mc, seed=cfg.seed,
        dist=dist, dist_se=dist_se, delta0=rates.delta0, delta1=rates.delta1,
        delta_n=rates.delta_n, kappa4_max=rates.kappa4_max,
        minf_max=rates.minf_max, composite=rates.composite, wall_ms=wall_ms)


def cmd_bound(args):
    cfg = _apply_overrides(load_config(args.config), args)
    systems = build_systems(cfg, base_dir=os.path.dirname(os.path.abspath(args.config)))
    records = []
    for i, system in enumerate(systems):
        t0 = time.perf_counter()
        rates = bound_rates(system, cfg.alpha, mc=cfg.mc, seed=cfg.seed,
                            threads=cfg.threads)
        records.append(_record_for(system, cfg, f"bound-{i}-n{system.dim}", rates,
                                   wall_ms=(time.perf_counter() - t0) * 1e3))
        print(f"n={system.dim} d={system.d}: delta0={rates.delta0:.6g} "
              f"delta1={rates.delta1:.6g} composite={rates.composite:.6g}")
    out = _ensure_out(cfg)
    write_results_csv(os.path.join(out, "results.csv"), records)
    return 0


def cmd_simulate(args):
    cfg = _apply_overrides(load_config(args.config), args)
    systems = build_systems(cfg, base_dir=os.path.dirname(os.path.abspath(args.config)))
    records = []
    for i, system in enumerate(systems):
        t0 = time.perf_counter()
        qs = sample_Q(system, cfg.mc, seed=cfg.seed, threads=cfg.threads)
        zs = sample_gaussian(system.covariance(), cfg.mc, seed=cfg.seed + 1,
                             threads=cfg.threads)
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed + 2))
        if cfg.distance == "orthant":
            dist, se = kolmogorov_orthant(qs, zs, rng=rng, n_anchors=cfg.anchors)
        else:
            dist, se = kolmogorov_max_stat(qs, zs, rng=rng)
        rates = bound_rates(system, cfg.alpha, mc=cfg.mc, seed=cfg.seed + 3,
                            threads=cfg.threads)
        records.append(_record_for(system, cfg, f"simulate-{i}-n{system.dim}", rates,
                                   dist=dist, dist_se=se,
                                   wall_ms=(time.perf_counter() - t0) * 1e3))
        print(f"n={system.dim} d={system.d}: {cfg.distance} distance "
              f"{dist:.5f} +/- {se:.5f}")
    out = _ensure_out(cfg)
    write_results_csv(os.path.join(out, "results.csv"), records)
    return 0


def cmd_study(args):
    cfg = _apply_overrides(load_config(args.config), args)
    systems = build_systems(cfg, base_dir=os.path.dirname(os.path.abspath(args.config)))
    if len(systems) < 2:
        raise ConfigError("study needs a family ladder with >= 2 sizes")
    points, slope, fitted_c = rate_conformance_study(
        systems, cfg.alpha, cfg.mc, cfg.seed, threads=cfg.threads,
        distance=cfg.distance, n_anchors=cfg.anchors)
    records = []
    monotone = all(b.dist <= a.dist + 2 * (a.dist_se + b.dist_se)
                   for a, b in zip(points, points[1:]))
    with_comp = [p for p in points if p.rates.composite > 0]
    if with_comp:
        bounded = all(p.dist <= fitted_c * p.rates.composite * (1 + 1e-9)
                      for p in with_comp)
    else:
        # d = 1 ladders have log d = 0, so the composite is outside the
        # bound's domain; the monotonicity contract is all that remains
        bounded = True
        print("note: composite rate is zero (d = 1); bound check skipped")
    for p in points:
        records.append(ResultRecord(
            exp_id=f"study-n{p.n}", n=p.n, d=p.d,
            qlist=qlist_str(systems[0].degrees), mc=p.mc, seed=cfg.seed,
            dist=p.dist, dist_se=p.dist_se, delta0=p.rates.delta0,
            delta1=p.rates.delta1, delta_n=p.rates.delta_n,
            kappa4_max=p.rates.kappa4_max, minf_max=p.rates.minf_max,
            composite=p.rates.composite, wall_ms=p.wall_ms))
        print(f"n={p.n}: dist={p.dist:.5f} +/- {p.dist_se:.5f} "
              f"composite={p.rates.composite:.5g}")
    print(f"fitted slope {slope:.4f}; fitted C {fitted_c:.4g}; "
          f"monotone={monotone}; bounded={bounded}")
    out = _ensure_out(cfg)
    write_results_csv(os.path.join(out, "results.csv"), records)
    if cfg.format == "csv+svg":
        ns = [p.n for p in points]
        loglog_plot([("distance", ns, [max(p.dist, 1e-12) for p in points]),
                     ("C*composite", ns,
                      [max(fitted_c * p.rates.composite, 1e-12) for p in points])],
                    os.path.join(out, "study.svg"),
                    title="distance vs composite rate", xlabel="N", ylabel="value")
    return 0 if (monotone and bounded) else 2


def build_parser():
    ap = argparse.ArgumentParser(
        prog="homsum",
        description="Verification harness for high-dimensional CLTs for "
                    "homogeneous sums.",
        epilog="Config defaults: mc=100000, alpha=1.0, threads=1, out=results, "
               "format=csv, distance=orthant. Env: HOMSUM_CACHE_DIR caches "
               "exact quantities by content hash.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--mc", type=int, default=None, help="override MC size")
        p.add_argument("--threads", type=int, default=None, help="worker threads")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", choices=["csv", "csv+svg"], default=None)

    p = sub.add_parser("verify-identities", help="exact identity suite")
    common(p)
    p.set_defaults(fn=cmd_verify_identities)

    p = sub.add_parser("verify-inequalities", help="exact inequality suite")
    common(p)
    p.set_defaults(fn=cmd_verify_inequalities)

    p = sub.add_parser("kappa4", help="exact fourth cumulant of one kernel")
    p.add_argument("--kernel", required=True, help="kernel file (homsum-kernel v1)")
    p.add_argument("--law", required=True, help="coordinate law, e.g. rademacher")
    p.set_defaults(fn=cmd_kappa4)

    p = sub.add_parser("bound", help="rate functionals for configured systems")
    common(p)
    p.set_defaults(fn=cmd_bound)

    p = sub.add_parser("simulate", help="MC distance to the Gaussian target")
    common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("study", help="convergence study over a size ladder")
    common(p)
    p.set_defaults(fn=cmd_study)

    p = sub.add_parser("psi-norm", help="psi_alpha norm of a coordinate law")
    p.add_argument("--law", required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.set_defaults(fn=cmd_psi_norm)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
