"""Smooth-max toolkit: log-sum-exp, its derivative tensors, the smooth cutoff
g0, derivative-sum bound checks, and the smoothing-distance estimator."""

import math
from functools import lru_cache

import numpy as np

from .errors import CapExceeded

DERIVATIVE_DIM_CAP = 100
C_M = {1: 1.0, 2: 3.0, 3: 13.0}   # derivative-sum constants for m = 1, 2, 3
Y_GRID_CAP = 10_000


def phi_beta(x, beta):
    """beta^{-1} log sum_j exp(beta x_j), evaluated stably (shift by the max)."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("phi_beta needs a nonempty vector")
    if beta <= 0:
        raise ValueError("beta must be positive")
    m = x.max(axis=-1, keepdims=True)
    out = m[..., 0] + np.log(np.sum(np.exp(beta * (x - m)), axis=-1)) / beta
    return float(out) if out.ndim == 0 else out


def softmax_weights(x, beta):
    x = np.asarray(x, dtype=np.float64)
    z = beta * (x - x.max(axis=-1, keepdims=True))
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def phi_derivatives(x, beta, order):
    """Derivative tensors of Phi_beta at x up to `order` (1, 2 or 3).

    Returns a list [grad, hessian, third] truncated at the requested order;
    grad is the softmax weight vector pi, the higher tensors follow the
    closed-form chain rule in pi.
    """
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[-1]
    if order > 3:
        raise ValueError("derivative order capped at 3")
    if d > DERIVATIVE_DIM_CAP:
        raise CapExceeded(f"dimension {d} above derivative cap {DERIVATIVE_DIM_CAP}")
    pi = softmax_weights(x, beta)
    out = [pi]
    if order >= 2:
        h = beta * (np.diag(pi) - np.outer(pi, pi))
        out.append(h)
    if order >= 3:
        eye = np.eye(d)
        dpi = beta * (np.diag(pi) - np.outer(pi, pi))     # dpi[j, l] = d pi_j / d x_l
        # d3[j,k,l] = beta * (dpi[j,l] delta_jk - dpi[j,l] pi_k - pi_j dpi[k,l])
        d3 = beta * (dpi[:, None, :] * eye[:, :, None]
                     - dpi[:, None, :] * pi[None, :, None]
                     - pi[:, None, None] * dpi[None, :, :])
        out.append(d3)
    return out[:order] if order >= 1 else []


# -- smooth cutoff g0 ------------------------------------------------------------

def _f0(t):
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def g0(t):
    """Smooth monotone cutoff: 1 for t <= 0, 0 for t >= 1."""
    t = np.asarray(t, dtype=np.float64)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    num = _f0(1.0 - t)
    den = _f0(t) + num
    out = np.where(t <= 0.0, 1.0, np.where(t >= 1.0, 0.0, np.divide(
        num, np.where(den > 0, den, 1.0))))
    return float(out[0]) if scalar else out


@lru_cache(maxsize=None)
def g0_derivative_sup(order, grid=20001):
    """sup |g0^(order)| on a fine grid, Richardson-extrapolated central differences."""
    if order == 0:
        return 1.0
    if order > 3:
        raise ValueError("derivative order capped at 3")
    t = np.linspace(-0.05, 1.05, grid)

    def deriv(h):
        if order == 1:
            return (g0(t + h) - g0(t - h)) / (2 * h)
        if order == 2:
            return (g0(t + h) - 2 * g0(t) + g0(t - h)) / h**2
        return (g0(t + 2 * h) - 2 * g0(t + h) + 2 * g0(t - h) - g0(t - 2 * h)) / (2 * h**3)

    h0 = 1e-4 if order < 3 else 1e-3
    d1, d2 = deriv(h0), deriv(h0 / 2)
    rich = (4.0 * d2 - d1) / 3.0
    return float(np.abs(rich).max())


class RescaledCutoff:
    """h(t) = g0(a t + b): the only test-function family the bounds need."""

    def __init__(self, a=1.0, b=0.0):
        self.a = float(a)
        self.b = float(b)

    def __call__(self, t):
        return g0(self.a * np.asarray(t) + self.b)

    def derivative_sup(self, k):
        return abs(self.a) ** k * g0_derivative_sup(k)

    def derivative(self, t, k, h=1e-5):
        t = np.asarray(t, dtype=np.float64)
        if k == 1:
            return (self(t + h) - self(t - h)) / (2 * h)
        if k == 2:
            return (self(t + h) - 2 * self(t) + self(t - h)) / h**2
        if k == 3:
            return (self(t + 2 * h) - 2 * self(t + h) + 2 * self(t - h) - self(t - 2 * h)) / (2 * h**3)
        raise ValueError("derivative order capped at 3")


def derivative_sum_bound_check(h, beta, x, order):
    """(lhs, rhs) of the derivative-sum bound for h composed with Phi_beta.

    lhs = sum over all index tuples of |d^m (h o Phi_beta)(x)| via the chain
    rule; rhs = c_m max_k beta^{m-k} |h^(k)|_inf with c_1 = 1, c_2 = 3,
    c_3 = 13.
    """
    if order not in C_M:
        raise ValueError("order must be 1, 2 or 3")
    x = np.asarray(x, dtype=np.float64)
    phi = phi_beta(x, beta)
    ders = phi_derivatives(x, beta, order)
    h1 = float(h.derivative(phi, 1))
    if order == 1:
        lhs = float(np.sum(np.abs(h1 * ders[0])))
    elif order == 2:
        h2 = float(h.derivative(phi, 2))
        pi, hess = ders
        full = h2 * np.outer(pi, pi) + h1 * hess
        lhs = float(np.sum(np.abs(full)))
    else:
        h2 = float(h.derivative(phi, 2))
        h3 = float(h.derivative(phi, 3))
        pi, hess, third = ders
        full = (h3 * pi[:, None, None] * pi[None, :, None] * pi[None, None, :]
                + h2 * (hess[:, :, None] * pi[None, None, :]
                        + hess[:, None, :] * pi[None, :, None]
                        + hess[None, :, :] * pi[:, None, None])
                + h1 * third)
        lhs = float(np.sum(np.abs(full)))
    rhs = C_M[order] * max(beta ** (order - k) * h.derivative_sup(k)
                           for k in range(1, order + 1))
    return lhs, rhs


# -- the smoothing-distance estimator --------------------------------------------

def _pooled_quantile_grid(samples_a, samples_b, n_points, rng):
    """Componentwise pooled-quantile anchors, capped with random subsampling."""
    pooled = np.vstack([samples_a, samples_b])
    m, d = pooled.shape
    n_points = min(n_points, Y_GRID_CAP)
    qs = np.linspace(0.01, 0.99, max(2, int(round(n_points ** (1.0 / d)))) if d <= 2 else 7)
    marg = np.quantile(pooled, qs, axis=0)           # (len(qs), d)
    if len(qs) ** d <= n_points:
        grids = np.meshgrid(*[marg[:, j] for j in range(d)], indexing="ij")
        return np.column_stack([g.ravel() for g in grids])
    # product grid too large: sample random componentwise combinations
    picks = rng.integers(0, len(qs), size=(n_points, d))
    return marg[picks, np.arange(d)[None, :]]


def delta_epsilon_estimate(samples_f, samples_z, eps, y_grid=None, rng=None,
                           n_grid=512):
    """Plug-in sup_y |E g0(Phi_beta(F-y)/eps) - E g0(Phi_beta(Z-y)/eps)|.

    beta is tied to eps by beta = log(d)/eps (with d=1 collapsing Phi to the
    identity).  Returns (estimate, se) where se is the binomial-style error
    at the maximizing grid point.
    """
    samples_f = np.atleast_2d(np.asarray(samples_f, dtype=np.float64))
    samples_z = np.atleast_2d(np.asarray(samples_z, dtype=np.float64))
    if samples_f.shape[1] != samples_z.shape[1]:
        raise ValueError("sample dimension mismatch")
    d = samples_f.shape[1]
    beta = math.log(d) / eps if d > 1 else 1.0 / eps
    if y_grid is None:
        rng = rng or np.random.default_rng(0)
        y_grid = _pooled_quantile_grid(samples_f, samples_z, n_grid, rng)
    y_grid = np.atleast_2d(y_grid)
    if y_grid.shape[0] == 0:
        raise ValueError("empty y grid")
    best, best_se = 0.0, 0.0
    mf, mz = len(samples_f), len(samples_z)
    for y in y_grid:
        gf = g0(phi_beta(samples_f - y, beta) / eps)
        gz = g0(phi_beta(samples_z - y, beta) / eps)
        diff = abs(float(gf.mean()) - float(gz.mean()))
        if diff > best:
            best = diff
            best_se = math.sqrt(gf.var(ddof=1) / mf + gz.var(ddof=1) / mz)
    return best, best_se


def nazarov_check(cov, x, eps, mc, rng):
    """(lhs, rhs, se): MC band probability vs the anti-concentration bound.

    lhs = P(Z <= x + eps) - P(Z <= x) estimated from mc Gaussian draws;
    rhs = eps / sigma_min * (sqrt(2 log d) + 2).
    """
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError("covariance must be square")
    if not np.allclose(cov, cov.T, atol=1e-12):
        raise ValueError("covariance must be symmetric")
    d = cov.shape[0]
    sig_min = math.sqrt(np.diag(cov).min())
    if sig_min <= 0:
        raise ValueError("nazarov bound needs min_j sqrt(cov_jj) > 0")
    x = np.broadcast_to(np.asarray(x, dtype=np.float64), (d,))
    w, v = np.linalg.eigh(cov)
    root = v * np.sqrt(np.clip(w, 0.0, None))
    in_band = 0
    block = max(1, min(mc, 20_000_000 // max(d, 1)))
    done = 0
    while done < mc:
        b = min(block, mc - done)
        z = rng.standard_normal((b, d)) @ root.T
        # the two orthant events are nested, so their difference is the band count
        in_band += int((np.all(z <= x + eps, axis=1) & ~np.all(z <= x, axis=1)).sum())
        done += b
    lhs = in_band / mc
    se = math.sqrt(max(lhs * (1.0 - lhs), 1.0 / mc) / mc)
    rhs = eps / sig_min * (math.sqrt(2 * math.log(d)) + 2.0)
    return lhs, rhs, se
