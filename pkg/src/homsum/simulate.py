"""Monte Carlo engine and statistical estimators for homogeneous-sum systems.

Reproducibility contract: every sampler takes an explicit numpy Generator or
a (seed, block) pair; MC work is split into fixed blocks whose RNG streams
are derived from the block index, so results are bit-identical for any
thread count.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceeded
from .distributions import psi_norm_cached
from .moments import HomSumSystem, kappa4_exact, exact_product_moment
from .kernels import SymmetricKernel

EIG_CLIP_TOL = 1e-10


def block_rngs(seed, n_blocks):
    """Independent per-block generators derived from (seed, block index)."""
    return [np.random.default_rng(np.random.SeedSequence(seed).spawn(n_blocks)[b])
            for b in range(n_blocks)]


def _run_blocks(fn, seed, n_blocks, threads):
    """Apply fn(block_index, rng) over fixed blocks; merge in block order."""
    rngs = block_rngs(seed, n_blocks)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, range(n_blocks), rngs))
    return [fn(b, r) for b, r in zip(range(n_blocks), rngs)]


def sample_coordinates(specs, mc, rng):
    return np.column_stack([s.sample(rng, mc) for s in specs])


def sample_Q(system, mc, rng=None, seed=None, threads=1, n_blocks=None):
    """(mc, d) matrix of Q(f_j; X) draws (fresh X per replication).

    Either pass `rng` for single-stream sampling or `seed` for the
    block-deterministic parallel path.
    """
    kernels = system.kernels
    # kernel families with overlapping supports evaluate as one
    # monomial-product matrix over the union support times a value matrix;
    # kernels with mostly disjoint supports fall back to per-kernel products
    by_degree = {}
    for j, f in enumerate(kernels):
        by_degree.setdefault(f.degree, []).append(j)
    groups = []
    for degree, cols in by_degree.items():
        union = {}
        total_nnz = 0
        for j in cols:
            total_nnz += kernels[j].nnz
            for t in kernels[j]._entries:
                union.setdefault(t, len(union))
        if len(union) and len(union) * len(cols) <= 4 * total_nnz:
            idx = np.array(sorted(union), dtype=np.int64)
            rows = {t: r for r, t in enumerate(sorted(union))}
            vals = np.zeros((len(union), len(cols)))
            for c, j in enumerate(cols):
                for t, v in kernels[j].items():
                    vals[rows[t], c] = math.factorial(degree) * v
            groups.append(("union", cols, idx, vals))
        else:
            groups.append(("solo", cols, None, None))

    def eval_draws(x):
        out = np.zeros((x.shape[0], len(kernels)))

        def monomials(idx, degree):
            prod = x[:, idx[:, 0]].copy()
            for c in range(1, degree):
                prod *= x[:, idx[:, c]]
            return prod

        for kind, cols, idx, vals in groups:
            if kind == "union":
                out[:, cols] = monomials(idx, kernels[cols[0]].degree) @ vals
            else:
                for j in cols:
                    f = kernels[j]
                    if f.nnz:
                        out[:, j] = monomials(f.index_array, f.degree) @ (
                            math.factorial(f.degree) * f.value_array)
        return out

    if rng is not None:
        return eval_draws(sample_coordinates(system.specs, mc, rng))
    if seed is None:
        raise ValueError("pass rng or seed")
    n_blocks = n_blocks or 16
    sizes = [mc // n_blocks + (1 if b < mc % n_blocks else 0) for b in range(n_blocks)]

    def work(b, brng):
        if sizes[b] == 0:
            return np.zeros((0, len(kernels)))
        return eval_draws(sample_coordinates(system.specs, sizes[b], brng))

    return np.vstack(_run_blocks(work, seed, n_blocks, threads))


def gaussian_root(cov):
    """Square root of a symmetric target, clipping tiny negative eigenvalues."""
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError("covariance must be a square matrix")
    if not np.allclose(cov, cov.T, atol=1e-12 * max(1.0, float(np.abs(cov).max()))):
        raise ValueError("covariance must be symmetric")
    w, v = np.linalg.eigh(cov)
    scale = max(float(w.max()), 1.0)
    bad = w < -EIG_CLIP_TOL * scale
    if bad.any():
        warnings.warn(
            f"clipped {int(bad.sum())} negative eigenvalue(s) down to "
            f"{float(w.min()):.3e} in the Gaussian target", stacklevel=2)
    return v * np.sqrt(np.clip(w, 0.0, None))


def sample_gaussian(cov, mc, rng=None, seed=None, threads=1, n_blocks=None):
    """(mc, d) draws from N(0, cov); PSD-degenerate targets are fine."""
    root = gaussian_root(cov)
    d = root.shape[0]
    if rng is not None:
        return rng.standard_normal((mc, d)) @ root.T
    if seed is None:
        raise ValueError("pass rng or seed")
    n_blocks = n_blocks or 16
    sizes = [mc // n_blocks + (1 if b < mc % n_blocks else 0) for b in range(n_blocks)]

    def work(b, brng):
        return brng.standard_normal((sizes[b], d)) @ root.T

    return np.vstack(_run_blocks(work, seed, n_blocks, threads))


# -- distance estimators --------------------------------------------------------

def _ks_1d(a, b):
    """Exact two-sample Kolmogorov statistic in one dimension."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / len(a)
    fb = np.searchsorted(b, grid, side="right") / len(b)
    return float(np.abs(fa - fb).max())


def _orthant_indicator(samples, x):
    """Boolean vector of rows componentwise <= x, with early exit."""
    m = np.all(samples[:, :64] <= x[:64], axis=1)
    d = samples.shape[1]
    for start in range(64, d, 64):
        if not m.any():
            break
        m &= np.all(samples[:, start:start + 64] <= x[start:start + 64], axis=1)
    return m


def _orthant_diff_at(anchors, a, b):
    """|F_a(x) - F_b(x)| at each anchor, with componentwise <= comparisons."""
    out = np.empty(len(anchors))
    for t, x in enumerate(anchors):
        out[t] = abs(_orthant_indicator(a, x).mean() - _orthant_indicator(b, x).mean())
    return out


def kolmogorov_orthant(samples_a, samples_b, rng=None, n_anchors=512,
                       n_bootstrap=16):
    """(estimate, se) of sup_x |P(A <= x) - P(B <= x)|.

    Candidate x are pooled sample points (all of them in d = 1, a random
    subset otherwise); the bootstrap SE resamples the near-maximal anchors'
    indicator vectors.
    """
    a = np.atleast_2d(np.asarray(samples_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(samples_b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise ValueError("sample dimension mismatch")
    d = a.shape[1]
    rng = rng or np.random.default_rng(0)
    if d == 1:
        est = _ks_1d(a[:, 0], b[:, 0])
        ses = []
        for _ in range(n_bootstrap):
            ra = a[rng.integers(0, len(a), len(a)), 0]
            rb = b[rng.integers(0, len(b), len(b)), 0]
            ses.append(_ks_1d(ra, rb))
        return est, float(np.std(ses, ddof=1)) if n_bootstrap > 1 else 0.0

    pooled = np.vstack([a, b])
    if len(pooled) <= n_anchors:
        anchors = pooled
    else:
        anchors = pooled[rng.choice(len(pooled), size=n_anchors, replace=False)]
    diffs = _orthant_diff_at(anchors, a, b)
    est = float(diffs.max())
    top = anchors[np.argsort(diffs)[-min(32, len(anchors)):]]
    ind_a = np.column_stack([_orthant_indicator(a, x) for x in top]).astype(np.float64)
    ind_b = np.column_stack([_orthant_indicator(b, x) for x in top]).astype(np.float64)
    ses = []
    for _ in range(n_bootstrap):
        ia = ind_a[rng.integers(0, len(a), len(a))].mean(axis=0)
        ib = ind_b[rng.integers(0, len(b), len(b))].mean(axis=0)
        ses.append(float(np.abs(ia - ib).max()))
    return est, float(np.std(ses, ddof=1)) if n_bootstrap > 1 else 0.0


def kolmogorov_max_stat(samples_a, samples_b, rng=None, n_bootstrap=16):
    """(estimate, se) of the Kolmogorov distance between max_k |.| statistics."""
    a = np.atleast_2d(np.asarray(samples_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(samples_b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise ValueError("sample dimension mismatch")
    ta = np.abs(a).max(axis=1)
    tb = np.abs(b).max(axis=1)
    return kolmogorov_orthant(ta[:, None], tb[:, None], rng=rng,
                              n_bootstrap=n_bootstrap)


def wasserstein_1d(a, b):
    """Exact 1-d W1 distance between empirical laws (integrated CDF gap)."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    support = np.sort(np.concatenate([a, b]))
    fa = np.searchsorted(a, support, side="right") / len(a)
    fb = np.searchsorted(b, support, side="right") / len(b)
    return float(np.sum(np.abs(fa - fb)[:-1] * np.diff(support)))


def wasserstein_kolmogorov_check_1d(samples_a, samples_b, sigma_min):
    """(lhs, rhs): Kolmogorov estimate vs sqrt(2 (sqrt(2 log d) + 2) W1 / sigma).

    d = 1 here, so the log factor collapses to 2.
    """
    a = np.asarray(samples_a, dtype=np.float64).ravel()
    b = np.asarray(samples_b, dtype=np.float64).ravel()
    lhs = _ks_1d(a, b)
    w1 = wasserstein_1d(a, b)
    rhs = math.sqrt(2.0 * 2.0 * w1 / sigma_min)
    return lhs, rhs


# -- bound-rate evaluators -------------------------------------------------------

@dataclass
class BoundRates:
    delta0: float
    delta1: float
    delta_n: float
    minf_max: float
    kappa4_max: float
    a_bar: float
    b_bar: float
    w: float
    mu: float
    composite: float
    kappa4_by_mc: bool = False


def _kappa4_with_fallback(system, j, mc, seed, threads):
    """Exact kappa4 when within caps, else an MC estimate with jackknife SE."""
    try:
        return kappa4_exact(system, j), 0.0, False
    except CapExceeded:
        pass
    q = sample_Q(system, mc, seed=seed, threads=threads)[:, j]
    n_blocks = 20
    parts = np.array_split(q, n_blocks)
    m2 = np.array([np.mean(p**2) for p in parts])
    m4 = np.array([np.mean(p**4) for p in parts])
    full = float(np.mean(q**4) - 3.0 * np.mean(q**2) ** 2)
    # delete-one jackknife over blocks
    jk = []
    for b in range(n_blocks):
        keep = [i for i in range(n_blocks) if i != b]
        jk.append(np.mean(m4[keep]) - 3.0 * np.mean(m2[keep]) ** 2)
    jk = np.array(jk)
    se = math.sqrt((n_blocks - 1) / n_blocks * np.sum((jk - jk.mean()) ** 2))
    return full, se, True


def bound_rates(system, alpha, w=None, mc=100_000, seed=0, threads=1):
    """Every displayed quantity of the main Kolmogorov bound, literally.

    delta0 compares the Gram matrix against the target covariance; delta1
    exercises both indicator branches over all (j, k) pairs; Delta_n is the
    q = 2 trace functional (nan for other degrees); the composite combines
    them with the stated log powers.
    """
    d = system.d
    if d < 1:
        raise ValueError("empty system")
    degs = system.degrees
    qbar = max(degs)
    skews = np.array([s.moment(3) for s in system.specs])
    if w is None:
        w = 0.5 if np.all(np.abs(skews) < 1e-12) else 1.0
    if not 0 < alpha <= 1.0 / w + 1e-12:
        raise ValueError(f"alpha must lie in (0, {1.0 / w:g}] for w={w:g}")
    a_bar = max(1.0, float(np.abs(skews).max()))
    b_bar = max(psi_norm_cached(s, alpha) for s in system.specs)

    cov = system.covariance()
    delta0 = float(np.abs(system.gram() - cov).max())

    k4 = np.empty(d)
    k4_mc = False
    for j in range(d):
        k4[j], _, used_mc = _kappa4_with_fallback(system, j, mc, seed, threads)
        k4_mc = k4_mc or used_mc
    inf_sq = np.array([f.sum_influence_sq() for f in system.kernels])
    minf = np.array([f.max_influence() for f in system.kernels])
    norms = np.array([f.norm() for f in system.kernels])

    inner = np.abs(k4) + a_bar ** (4 * np.array(degs)) * inf_sq
    delta1 = 0.0
    for j in range(d):
        for k in range(d):
            if degs[j] == degs[k]:
                delta1 = max(delta1, math.sqrt(inner[k]))
            elif degs[j] < degs[k]:
                delta1 = max(delta1, a_bar ** degs[j] * norms[j] * inner[k] ** 0.25)
    delta1 *= a_bar ** (2 * w * qbar - 1)

    if all(q == 2 for q in degs):
        tr = [float(np.trace(np.linalg.matrix_power(f.as_matrix(), 4)))
              for f in system.kernels]
        delta_n = max(math.sqrt(t) for t in tr) + max(
            math.sqrt(m) * n for m, n in zip(minf, norms))
    else:
        delta_n = math.nan

    mu = max(2.0 / 3.0 * w * qbar - 1.0 / 6.0, 2.0 * (qbar - 1) / (3.0 * alpha) + 1.0 / 3.0)
    logd = math.log(d) if d > 1 else 0.0
    binf = max(b_bar ** degs[k] * math.sqrt(minf[k]) for k in range(d))
    composite = (logd ** (2.0 / 3.0) * delta0 ** (1.0 / 3.0)
                 + logd ** (mu + 0.5) * delta1 ** (1.0 / 3.0)
                 + logd ** ((2.0 * qbar - 1.0) / alpha + 1.5) * binf)
    return BoundRates(delta0=delta0, delta1=delta1, delta_n=delta_n,
                      minf_max=float(minf.max()), kappa4_max=float(np.abs(k4).max()),
                      a_bar=a_bar, b_bar=b_bar, w=w, mu=mu, composite=composite,
                      kappa4_by_mc=k4_mc)


def moment_growth_diagnostic(system, alpha, p_grid=(2, 4, 6, 8), mc=200_000,
                             seed=0, threads=1, j=0):
    """(slope, norms): fitted log-log growth of |Q|_p over the p grid."""
    q = sample_Q(system, mc, seed=seed, threads=threads)[:, j]
    norms = [float(np.mean(np.abs(q) ** p) ** (1.0 / p)) for p in p_grid]
    logs = np.log(np.asarray(p_grid, dtype=np.float64))
    slope = float(np.polyfit(logs, np.log(norms), 1)[0])
    return slope, norms


@dataclass
class LadderPoint:
    n: int
    d: int
    dist: float
    dist_se: float
    rates: BoundRates
    mc: int
    wall_ms: float = 0.0


def rate_conformance_study(systems, alpha, mc, seed, threads=1,
                           distance="orthant", n_anchors=512):
    """Distance-vs-composite study over a size ladder.

    Returns (points, fitted_slope, fitted_c): per-size distance estimates,
    the regression slope of log distance on log composite, and the smallest
    constant making distance <= c * composite across the ladder.
    """
    import time

    if len(systems) < 2:
        raise ValueError("ladder needs at least 2 sizes")
    points = []
    for step, system in enumerate(systems):
        t0 = time.perf_counter()
        qs = sample_Q(system, mc, seed=seed + 1000 * step, threads=threads)
        zs = sample_gaussian(system.covariance(), mc,
                             seed=seed + 1000 * step + 1, threads=threads)
        rng = np.random.default_rng(np.random.SeedSequence(seed + 1000 * step + 2))
        if distance == "orthant":
            dist, se = kolmogorov_orthant(qs, zs, rng=rng, n_anchors=n_anchors)
        elif distance == "max":
            dist, se = kolmogorov_max_stat(qs, zs, rng=rng)
        else:
            raise ValueError(f"unknown distance {distance!r}")
        rates = bound_rates(system, alpha, mc=mc, seed=seed + 1000 * step + 3,
                            threads=threads)
        points.append(LadderPoint(n=system.dim, d=system.d, dist=dist, dist_se=se,
                                  rates=rates, mc=mc,
                                  wall_ms=(time.perf_counter() - t0) * 1e3))
    comps = np.array([p.rates.composite for p in points])
    dists = np.array([p.dist for p in points])
    ok = (comps > 0) & (dists > 0)
    if ok.sum() >= 2:
        slope = float(np.polyfit(np.log(comps[ok]), np.log(dists[ok]), 1)[0])
    else:
        slope = math.nan
    fitted_c = float(np.max(dists[comps > 0] / comps[comps > 0])) if (comps > 0).any() else math.nan
    return points, slope, fitted_c
