"""Randomized verification suites behind `verify-identities` and
`verify-inequalities`: exact identities, exact inequalities, and the
smooth-max sandwich, each reported as (check, case, lhs, rhs, residual, tol,
passed) rows."""

import math

import numpy as np

from . import distributions as dist
from . import gammacalc as gc
from . import moments as mom
from . import smoothmax as sm
from .kernels import random_sparse_kernel, nr_identity_check, offdiag_tensor_bound_check
from .lindeberg import uv_split, evaluate_q

IDENTITY_TOL = 1e-9
UV_TOL = 1e-12


def _random_kernel(rng, max_dim=8, max_degree=3, dim=None, degree=None):
    n = dim or int(rng.integers(3, max_dim + 1))
    q = degree or int(rng.integers(1, max_degree + 1))
    q = min(q, n)
    cap = min(math.comb(n, q), 10)
    nnz = int(rng.integers(min(2, cap), cap + 1))
    return random_sparse_kernel(n, q, nnz, rng)


def _random_gamma_context(rng, n, include_small_shape=True):
    lo = 0.25 if include_small_shape else 0.6
    specs = []
    for _ in range(n):
        pick = rng.integers(0, 3)
        if pick == 0:
            specs.append(dist.gaussian_spec())
        elif pick == 1:
            specs.append(dist.gamma_plus_spec(float(rng.uniform(lo, 4.0))))
        else:
            specs.append(dist.gamma_minus_spec(float(rng.uniform(lo, 4.0))))
    return gc.GammaCalcContext(tuple(specs))


def identity_suite(rng, n_pairs=200, n_contexts=100, n_uv=50):
    """Product-formula norm identity, chaos grading completeness, U/V split."""
    rows = []
    for case in range(n_pairs):
        n = int(rng.integers(2, 9))
        f = _random_kernel(rng, dim=n)
        g = _random_kernel(rng, dim=n)
        res, lhs, rhs = nr_identity_check(f, g)
        scale = max(abs(lhs), abs(rhs), 1e-30)
        rel = res / scale
        rows.append(("nr-identity", f"pair-{case}", lhs, rhs, rel,
                     IDENTITY_TOL, rel <= IDENTITY_TOL))
    for case in range(n_contexts):
        n = int(rng.integers(3, 8))
        ctx = _random_gamma_context(rng, n)
        f = _random_kernel(rng, dim=n)
        g = _random_kernel(rng, dim=n)
        lv = gc.var_Jk(ctx, f, g)
        system = ctx.system([f, g])
        target = mom.exact_product_moment(system, [(0, 2), (1, 2)])
        total = float(lv.sum())
        rel = abs(total - target) / max(abs(target), 1e-30)
        rows.append(("chaos-grading", f"ctx-{case}", total, target, rel,
                     IDENTITY_TOL, rel <= IDENTITY_TOL))
    for case in range(n_uv):
        n = int(rng.integers(2, 9))
        f = _random_kernel(rng, dim=n)
        w = rng.standard_normal(n)
        i = int(rng.integers(0, n))
        u, v = uv_split(f, w, i)
        q = evaluate_q(f, w)
        res = abs(u + w[i] * v - q) / max(abs(q), 1.0)
        rows.append(("uv-split", f"case-{case}", u + w[i] * v, q, res,
                     UV_TOL, res <= UV_TOL))
    return rows


def kappa4_nonneg_suite(rng, n_kernels=200):
    """kappa4 >= 0 for normal/gamma coordinates, including shapes below 1/2."""
    rows = []
    for case in range(n_kernels):
        n = int(rng.integers(3, 8))
        ctx = _random_gamma_context(rng, n, include_small_shape=True)
        degree = int(rng.integers(1, 4))
        f = _random_kernel(rng, dim=n, degree=degree)
        k4 = mom.kappa4_exact(ctx.system([f]), 0)
        rows.append(("kappa4-nonneg", f"kernel-{case}", k4, 0.0, -min(k4, 0.0),
                     1e-12, k4 >= -1e-12))
    return rows


def inequality_suite(rng, n_cases=60):
    """var-ineq, cov-ineq, the top-level chaos inequalities, the off-diagonal
    tensor bound, and the transfer chain, all with exact quantities."""
    rows = []
    for case in range(n_cases):
        n = int(rng.integers(4, 8))
        ctx = _random_gamma_context(rng, n)
        deg = int(rng.integers(1, 4))
        f = _random_kernel(rng, dim=n, degree=deg)
        g = _random_kernel(rng, dim=n, degree=deg)
        z = gc.zheng_inequalities_check(ctx, f, g)
        rows.append(("cov-ineq", f"case-{case}", z["cov_lhs"], z["cov_rhs"],
                     max(z["cov_lhs"] - z["cov_rhs"], 0.0), IDENTITY_TOL, z["cov_ok"]))
        rows.append(("var-ineq", f"case-{case}", z["var_f_lhs"], z["var_f_rhs"],
                     max(z["var_f_lhs"] - z["var_f_rhs"], 0.0), IDENTITY_TOL, z["var_f_ok"]))
        k = gc.key_inequalities_check(ctx, f, g)
        rows.append(("chaos-top-lower", f"case-{case}", k["eq1_lhs"], k["eq1_rhs"],
                     max(k["eq1_rhs"] - k["eq1_lhs"], 0.0), IDENTITY_TOL, k["eq1_ok"]))
        if "eq2_lhs" in k:
            rows.append(("chaos-top-gap", f"case-{case}", k["eq2_lhs"], k["eq2_rhs"],
                         max(k["eq2_lhs"] - k["eq2_rhs"], 0.0), IDENTITY_TOL, k["eq2_ok"]))
        lhs, rhs = offdiag_tensor_bound_check(f)
        rows.append(("offdiag-tensor", f"case-{case}", lhs, rhs,
                     max(lhs - rhs, 0.0), IDENTITY_TOL,
                     lhs <= rhs + IDENTITY_TOL * max(rhs, 1.0)))
    for case in range(n_cases // 2):
        n = int(rng.integers(4, 8))
        deg = int(rng.integers(2, 4))
        f = _random_kernel(rng, dim=n, degree=deg)
        cond = ("A", "B", "C")[case % 3]
        if cond == "A":
            # zero skewness with excess kurtosis: gaussian, or the symmetric
            # three-point law +-2/{0} with m_{2k} = 4^{k-1}
            heavy = dist.VariableSpec(
                dist.CUSTOM, (1.0, 0.0, 1.0, 0.0, 4.0, 0.0, 16.0, 0.0, 64.0))
            specs = [heavy] * n if case % 2 else [dist.gaussian_spec()] * n
        elif cond == "B":
            specs = [dist.poisson_spec(float(rng.uniform(0.5, 4.0))) for _ in range(n)]
        else:
            specs = [dist.gamma_plus_spec(float(rng.uniform(0.3, 4.0))) if rng.random() < 0.5
                     else dist.gamma_minus_spec(float(rng.uniform(0.3, 4.0)))
                     for _ in range(n)]
        m_f, maxr, k4term = mom.transfer_inequality_check(f, specs, cond)
        ok1 = m_f <= maxr + IDENTITY_TOL * max(maxr, 1.0)
        ok2 = maxr <= k4term + IDENTITY_TOL * max(k4term, 1.0)
        rows.append(("transfer-influence", f"case-{case}-{cond}", m_f, maxr,
                     max(m_f - maxr, 0.0), IDENTITY_TOL, ok1))
        rows.append(("transfer-contraction", f"case-{case}-{cond}", maxr, k4term,
                     max(maxr - k4term, 0.0), IDENTITY_TOL, ok2))
    return rows


def smoothmax_suite(rng, n_sandwich=100_000, n_derivative_pts=3):
    """Sandwich bound at random triples plus the derivative-sum constants."""
    rows = []
    violations = 0
    worst = 0.0
    batch = 0
    while batch < n_sandwich:
        b = min(20_000, n_sandwich - batch)
        d = int(rng.integers(1, 51))
        beta = float(rng.uniform(0.1, 30.0))
        x = rng.normal(0.0, 3.0, (b, d))
        phi = sm.phi_beta(x, beta)
        gap = phi - x.max(axis=1)
        worst = max(worst, float(np.max(-gap)), float(np.max(gap - math.log(d) / beta)))
        violations += int(np.sum((gap < -1e-12) | (gap > math.log(d) / beta + 1e-12)))
        batch += b
    rows.append(("max-smooth-sandwich", f"triples-{n_sandwich}", float(violations), 0.0,
                 worst, 1e-12, violations == 0))
    for m in (1, 2, 3):
        for beta in (0.5, 1.0, 5.0, 20.0):
            for d in (2, 10, 50):
                h = sm.RescaledCutoff(float(rng.uniform(0.5, 3.0)), float(rng.uniform(-0.5, 0.5)))
                ok = True
                gap = 0.0
                lhs = rhs = 0.0
                for _ in range(n_derivative_pts):
                    x = rng.normal(0.0, 1.0, d)
                    lhs, rhs = sm.derivative_sum_bound_check(h, beta, x, m)
                    gap = max(gap, lhs - rhs)
                    ok = ok and lhs <= rhs * (1 + 1e-9)
                rows.append((f"derivative-sum-m{m}", f"beta-{beta:g}-d-{d}", lhs, rhs,
                             max(gap, 0.0), 1e-9, ok))
    return rows


def all_passed(rows):
    return all(r[-1] for r in rows)
