"""Carre du champ machinery for normal/gamma coordinate systems.

A product FG of two homogeneous sums expands exactly over the orthogonal
basis  prod_{i in S} Y_i * prod_{j in T} p2(Y_j)  with S, T disjoint index
sets, using the per-coordinate identity  Y^2 = 1 + s Y + p2(Y)  (s is the
third moment; p2 is the degree-2 eigenfunction with E[p2^2] = v).  All
chaos-level quantities are assembled from those coefficients, so nothing
second-order is ever materialized symbolically.
"""

import math
from dataclasses import dataclass
from itertools import product, combinations

import numpy as np

from .distributions import GAUSSIAN, GAMMA_PLUS, GAMMA_MINUS
from .kernels import tensor_sym
from .moments import HomSumSystem, exact_product_moment, kappa4_exact
from .errors import CapExceeded

_ALLOWED = (GAUSSIAN, GAMMA_PLUS, GAMMA_MINUS)


def coordinate_v(spec):
    """E[p2(Y)^2]: 2 for Gaussian, 2(1 + 1/nu) for standardized gamma."""
    if spec.law == GAUSSIAN:
        return 2.0
    if spec.law in (GAMMA_PLUS, GAMMA_MINUS):
        return 2.0 * (1.0 + 1.0 / spec.params[0])
    raise ValueError(f"law {spec.law!r} is outside the normal/gamma class")


def coordinate_eta(spec):
    """Hypercontractivity floor: 1 for Gaussian, min(1, sqrt(nu)) for gamma."""
    if spec.law == GAUSSIAN:
        return 1.0
    if spec.law in (GAMMA_PLUS, GAMMA_MINUS):
        return min(1.0, math.sqrt(spec.params[0]))
    raise ValueError(f"law {spec.law!r} is outside the normal/gamma class")


@dataclass(frozen=True)
class GammaCalcContext:
    """Coordinate specs restricted to the normal/gamma class, plus constants."""

    specs: tuple

    def __post_init__(self):
        for s in self.specs:
            if s.law not in _ALLOWED:
                raise ValueError(f"law {s.law!r} is outside the normal/gamma class")

    @property
    def dim(self):
        return len(self.specs)

    @property
    def v(self):
        return np.array([coordinate_v(s) for s in self.specs])

    @property
    def eta(self):
        return np.array([coordinate_eta(s) for s in self.specs])

    @property
    def skew(self):
        return np.array([s.moment(3) for s in self.specs])

    @property
    def v_max(self):
        return float(self.v.max())

    @property
    def eta_min(self):
        return float(self.eta.min())

    @property
    def w_star(self):
        return 0.5 if all(s.law == GAUSSIAN for s in self.specs) else 1.0

    def system(self, kernels, target_cov=None):
        return HomSumSystem(list(kernels), list(self.specs), target_cov)


class ChaosDecomposition:
    """Coefficients of FG on the (S, T) basis described in the module docstring."""

    def __init__(self, ctx, f, g):
        if f.dim != ctx.dim or g.dim != ctx.dim:
            raise ValueError("kernel dim does not match context")
        self.ctx = ctx
        self.p = f.degree
        self.q = g.degree
        skew = ctx.skew
        cf = math.factorial(f.degree)
        cg = math.factorial(g.degree)
        coeffs = {}
        for tf, vf in f.items():
            set_f = frozenset(tf)
            for tg, vg in g.items():
                base = cf * vf * cg * vg
                common = sorted(set_f & set(tg))
                rest = tuple(sorted(set_f ^ set(tg)))
                for choice in product((0, 1, 2), repeat=len(common)):
                    coeff = base
                    lin = []
                    p2 = []
                    for idx, ch in zip(common, choice):
                        if ch == 1:
                            coeff *= skew[idx]
                            lin.append(idx)
                        elif ch == 2:
                            p2.append(idx)
                    key = (tuple(sorted((*rest, *lin))), tuple(p2))
                    coeffs[key] = coeffs.get(key, 0.0) + coeff
        self.coeffs = coeffs

    def level_of(self, key):
        s, t = key
        return len(s) + 2 * len(t)

    def level_second_moments(self):
        """E[J_k(FG)^2] for k = 0..p+q (index 0 holds E[FG]^2)."""
        v = self.ctx.v
        out = np.zeros(self.p + self.q + 1)
        for (s, t), c in self.coeffs.items():
            w = c * c
            for i in t:
                w *= v[i]
            out[len(s) + 2 * len(t)] += w
        return out

    def expectation(self):
        """E[FG], the level-0 coefficient."""
        return self.coeffs.get(((), ()), 0.0)

    def level_cross_moment(self, other, k):
        """E[J_k(FG) J_k(F'G')] against another decomposition."""
        v = self.ctx.v
        acc = 0.0
        for key, c in self.coeffs.items():
            if self.level_of(key) != k:
                continue
            c2 = other.coeffs.get(key)
            if c2 is None:
                continue
            w = c * c2
            for i in key[1]:
                w *= v[i]
            acc += w
        return acc


def var_Jk(ctx, f, g):
    """Exact E[J_k(FG)^2] vector, k = 0..p+q."""
    return ChaosDecomposition(ctx, f, g).level_second_moments()


def gamma_variance(ctx, f, g):
    """Var[Gamma(F,G)] = sum_{k<p+q} ((p+q-k)/2)^2 E[J_k(FG)^2]."""
    lv = var_Jk(ctx, f, g)
    n = f.degree + g.degree
    acc = 0.0
    for k in range(1, n):
        acc += (n - k) ** 2 / 4.0 * lv[k]
    return acc


def gamma_expectation(ctx, f, g):
    """E[Gamma(F,G)] = q E[FG] (integration by parts)."""
    return g.degree * ChaosDecomposition(ctx, f, g).expectation()


# -- the r-indexed top-level formula, kept as an independent route -------------

def _wstar_contraction(f, g, iset, kset):
    """Symmetrized partial contraction evaluated at disjoint sorted index sets."""
    p, q = f.degree, g.degree
    r = len(kset)
    m = p + q - 2 * r
    acc = 0.0
    for fa in combinations(range(m), p - r):
        sel = set(fa)
        left = tuple(iset[a] for a in fa) + kset
        right = tuple(iset[a] for a in range(m) if a not in sel) + kset
        acc += f.lookup(left) * g.lookup(right)
    return acc / math.comb(m, p - r)


def var_J_top_rform(ctx, f, g):
    """E[J_{p+q}(FG)^2] via the r-indexed sums with v-weights.

    Independent of the basis expansion; for an all-Gaussian context the
    r-weights collapse to 2^r and the top level equals (p+q)! |f ~ot g|^2.
    """
    p, q = f.degree, g.degree
    n_dim = f.dim
    v = ctx.v
    total = 0.0
    for r in range(0, min(p, q) + 1):
        m = p + q - 2 * r
        if m + r > n_dim:
            continue
        pref = (math.factorial(r) ** 2 * math.comb(p, r) ** 2 * math.comb(q, r) ** 2
                * math.factorial(m) * math.factorial(r))
        orderings = math.factorial(m) * math.factorial(r)
        support = sorted({i for t, _ in f.items() for i in t}
                         | {i for t, _ in g.items() for i in t})
        inner = 0.0
        for iset in combinations(support, m):
            remaining = [i for i in support if i not in iset]
            for kset in combinations(remaining, r):
                w = _wstar_contraction(f, g, iset, kset)
                if w == 0.0:
                    continue
                inner += w * w * float(np.prod(v[list(kset)])) * orderings
        total += pref * inner
    return total


# -- pathwise carré du champ ---------------------------------------------------

def _grad_wrt_y(f, y):
    """(M, N) array of dQ/dY_i = q! sum_{T ∋ i} f(T) prod_{j in T, j != i} Y_j."""
    m, n = y.shape
    out = np.zeros((m, n))
    scale = math.factorial(f.degree)
    for t, v in f.items():
        cols = y[:, t]
        if f.degree == 1:
            out[:, t[0]] += scale * v
            continue
        prod_all = np.prod(cols, axis=1)
        for pos, i in enumerate(t):
            col = cols[:, pos]
            safe = col != 0
            loo = np.where(safe, np.divide(prod_all, col, out=np.zeros(m), where=safe), 0.0)
            if not safe.all():
                others = [a for a in range(f.degree) if a != pos]
                loo[~safe] = np.prod(cols[np.ix_(~safe, others)], axis=1)
            out[:, i] += scale * v * loo
    return out


def gamma_pathwise_samples(ctx, f, g, y):
    """Pathwise Gamma(F,G) for an (M, N) array of standardized draws.

    Gaussian coordinates contribute dF dG; gamma coordinates contribute
    omega / nu * dF dG with omega the underlying gamma variable recovered
    from the standardized value.
    """
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    gf = _grad_wrt_y(f, y)
    gg = gf if g is f else _grad_wrt_y(g, y)
    weights = np.empty_like(y)
    for i, s in enumerate(ctx.specs):
        if s.law == GAUSSIAN:
            weights[:, i] = 1.0
        else:
            nu = s.params[0]
            sign = 1.0 if s.law == GAMMA_PLUS else -1.0
            omega = nu + sign * math.sqrt(nu) * y[:, i]
            weights[:, i] = omega / nu
    return np.sum(weights * gf * gg, axis=1)


def gamma_pathwise(ctx, f, g, y):
    """Pathwise Gamma(F,G) at a single coordinate draw."""
    return float(gamma_pathwise_samples(ctx, f, g, np.asarray(y)[None, :])[0])


def sample_coordinates(ctx, rng, n_draws):
    """(n_draws, N) standardized coordinate draws for the context laws."""
    cols = [s.sample(rng, n_draws) for s in ctx.specs]
    return np.column_stack(cols)


# -- section-level bound terms and inequality reports ---------------------------

def c_frak(q):
    return float(sum(math.factorial(r) * math.comb(q, r) ** 2 for r in range(1, q + 1)))


def prop52_bound_terms(ctx, system):
    """(delta0, delta2): covariance mismatch and the kurtosis/influence term.

    delta2 follows the displayed formula with the context constants
    (eta_min, v_max, w_star); kappa4 and fourth moments are exact.
    """
    d = system.d
    if d < 1:
        raise ValueError("empty system")
    cov = system.covariance()
    gram = system.gram()
    delta0 = float(np.abs(gram - cov).max())
    logd = math.log(max(d, 2))
    base = ctx.eta_min ** -1 * logd
    k4 = [max(kappa4_exact(system, j), 0.0) for j in range(d)]
    delta2 = 0.0
    for j in range(d):
        qj = system.kernels[j].degree
        for k in range(d):
            qk = system.kernels[k].degree
            expo = ctx.w_star * (qj + qk) - 1.0
            pref = base**expo
            if qj < qk:
                q4 = exact_product_moment(system, [(j, 4)]) ** 0.25
                term = q4 * k4[k] ** 0.25
            elif qj == qk:
                fj = system.kernels[j]
                inner = (2.0 * k4[j]
                         + (2.0 ** -qj * ctx.v_max**qj - 1.0)
                         * math.factorial(2 * qj) * c_frak(qj) * fj.sum_influence_sq())
                term = math.sqrt(max(inner, 0.0))
            else:
                continue
            delta2 = max(delta2, pref * term)
    return delta0, delta2


def mc_gamma_discrepancy(ctx, system, mc, rng):
    """Monte Carlo estimate of E max_{j,k} |Gamma(Q_j,Q_k)/q_k - C_jk|."""
    y = sample_coordinates(ctx, rng, mc)
    cov = system.covariance()
    d = system.d
    worst = np.zeros(mc)
    for j in range(d):
        for k in range(d):
            g = gamma_pathwise_samples(ctx, system.kernels[j], system.kernels[k], y)
            dev = np.abs(g / system.kernels[k].degree - cov[j, k])
            np.maximum(worst, dev, out=worst)
    est = float(worst.mean())
    se = float(worst.std(ddof=1) / math.sqrt(mc))
    return est, se


def zheng_inequalities_check(ctx, f, g):
    """Exact two-sided report for the covariance and variance inequalities.

    cov-ineq: sum_{k<p+q} E[J_k(FG)^2] <= Cov[F^2,G^2] - 2 E[FG]^2
    var-ineq: sum_{k<2p} E[J_k(F^2)^2] + p!^2 sum_r C(p,r)^2 |f *_r f|^2
              <= E[F^4] - 3 E[F^2]^2   (and the same for g).
    """
    from .kernels import contract

    system = ctx.system([f, g])
    p, q = f.degree, g.degree
    lv_fg = var_Jk(ctx, f, g)
    e_fg = ChaosDecomposition(ctx, f, g).expectation()
    e_f2g2 = exact_product_moment(system, [(0, 2), (1, 2)])
    e_f2 = exact_product_moment(system, [(0, 2)])
    e_g2 = exact_product_moment(system, [(1, 2)])
    cov_lhs = float(np.sum(lv_fg[1 : p + q]))
    cov_rhs = e_f2g2 - e_f2 * e_g2 - 2.0 * e_fg**2

    def var_side(kern, idx):
        deg = kern.degree
        lv = var_Jk(ctx, kern, kern)
        lhs = float(np.sum(lv[1 : 2 * deg]))
        lhs += math.factorial(deg) ** 2 * sum(
            math.comb(deg, r) ** 2 * contract(kern, kern, r).norm_sq()
            for r in range(1, deg)
        )
        e4 = exact_product_moment(system, [(idx, 4)])
        e2 = exact_product_moment(system, [(idx, 2)])
        return lhs, e4 - 3.0 * e2 * e2

    var_f = var_side(f, 0)
    var_g = var_side(g, 1)
    return {
        "cov_lhs": cov_lhs,
        "cov_rhs": cov_rhs,
        "cov_ok": cov_lhs <= cov_rhs + 1e-9 * max(1.0, abs(cov_rhs)),
        "var_f_lhs": var_f[0],
        "var_f_rhs": var_f[1],
        "var_f_ok": var_f[0] <= var_f[1] + 1e-9 * max(1.0, abs(var_f[1])),
        "var_g_lhs": var_g[0],
        "var_g_rhs": var_g[1],
        "var_g_ok": var_g[0] <= var_g[1] + 1e-9 * max(1.0, abs(var_g[1])),
    }


def key_inequalities_check(ctx, f, g):
    """Exact report for the top-level chaos inequalities (p = q for the second).

    eq1: E[J_{p+q}(FG)^2] >= (p+q)! |f ~ot g|^2
    eq2: |E[J_{2p}(F^2) J_{2p}(G^2)] - (2p)! <f ~ot f, g ~ot g>|
         <= (2^{-p} vbar^p - 1) (2p)! c_p sqrt(sum Inf(f)^2) sqrt(sum Inf(g)^2)
    """
    p, q = f.degree, g.degree
    top = var_Jk(ctx, f, g)[p + q]
    sym = tensor_sym(f, g)
    eq1_rhs = math.factorial(p + q) * float(np.sum(sym**2))
    out = {
        "eq1_lhs": top,
        "eq1_rhs": eq1_rhs,
        "eq1_ok": top >= eq1_rhs - 1e-9 * max(1.0, abs(eq1_rhs)),
    }
    if p == q:
        dec_f = ChaosDecomposition(ctx, f, f)
        dec_g = ChaosDecomposition(ctx, g, g)
        cross = dec_f.level_cross_moment(dec_g, 2 * p)
        gauss = math.factorial(2 * p) * float(np.sum(tensor_sym(f, f) * tensor_sym(g, g)))
        bound = ((2.0 ** -p * ctx.v_max**p - 1.0) * math.factorial(2 * p) * c_frak(p)
                 * math.sqrt(f.sum_influence_sq()) * math.sqrt(g.sum_influence_sq()))
        out.update({
            "eq2_lhs": abs(cross - gauss),
            "eq2_rhs": bound,
            "eq2_ok": abs(cross - gauss) <= bound + 1e-9 * max(1.0, abs(gauss), bound),
        })
    return out


def hypercontractivity_constants(nu, k):
    """(varsigma^2_{nu,k}, eta_{nu,k}) for the Laguerre generator.

    varsigma^2 is the rising-factorial binomial C(nu+k-1, k); eta compares
    against the nu = 1/2 reference and caps at 1.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    if k < 1:
        raise ValueError("k must be >= 1")
    num = 1.0
    for j in range(k):
        num *= nu + j
    sig2 = num / math.factorial(k)
    ref = 1.0
    for j in range(k):
        ref *= 0.5 + j
    ref /= math.factorial(k)
    eta = min(1.0, math.sqrt(sig2 / ref))
    return sig2, eta
