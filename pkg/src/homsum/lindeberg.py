"""Randomized Lindeberg interpolation: hybrid vectors, U/V splits, rate
coefficients, and the moment-matching contrast experiment."""

import math
from dataclasses import dataclass

import numpy as np

from .distributions import match_third_moment, psi_norm_cached
from .smoothmax import phi_beta, g0


@dataclass
class HybridPath:
    """Coordinate mixer W^sigma_i: X on sigma(1..i), Y on sigma(i+1..N)."""

    sigma: np.ndarray
    x_specs: list
    y_specs: list

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=np.int64)
        n = len(self.sigma)
        if sorted(self.sigma.tolist()) != list(range(n)):
            raise ValueError("sigma must be a permutation of 0..N-1")
        if len(self.x_specs) != n or len(self.y_specs) != n:
            raise ValueError("spec lists must have length N")

    @property
    def dim(self):
        return len(self.sigma)

    def mix(self, x_draw, y_draw, i):
        """Hybrid vector at step i: first i sigma-positions from X, rest from Y."""
        w = np.array(y_draw, dtype=np.float64, copy=True)
        head = self.sigma[:i]
        w[..., head] = np.asarray(x_draw)[..., head]
        return w


@dataclass
class LindebergParams:
    """Truncation levels and per-coordinate rates for the interpolation bound."""

    tau: float
    rho: float
    m_n: float
    lam: np.ndarray

    def constraint_ok(self, beta):
        """tau * rho * M_N * max_i Lambda_i <= 1/beta."""
        return self.tau * self.rho * self.m_n * float(self.lam.max()) <= 1.0 / beta


def evaluate_q(f, w):
    """Q(f; w) for one coordinate vector or an (M, N) batch."""
    w = np.atleast_2d(np.asarray(w, dtype=np.float64))
    scale = math.factorial(f.degree)
    acc = np.zeros(w.shape[0])
    for t, v in f.items():
        acc += scale * v * np.prod(w[:, t], axis=1)
    return acc if acc.shape[0] > 1 else float(acc[0])


def uv_split(f, w, i):
    """(U, V) with Q(f; w) = U + w_i V.

    U sums the index sets avoiding i; V sums the sets containing i with the
    i-factor removed, so V does not depend on w_i.
    """
    if not 0 <= i < f.dim:
        raise ValueError(f"index {i} out of range")
    w = np.asarray(w, dtype=np.float64)
    scale = math.factorial(f.degree)
    u = 0.0
    v = 0.0
    for t, val in f.items():
        if i in t:
            rest = [j for j in t if j != i]
            v += scale * val * float(np.prod(w[rest])) if rest else scale * val
        else:
            u += scale * val * float(np.prod(w[list(t)]))
    return u, v


def lambda_rates(system, alpha, m_n=None):
    """Lambda_i = (log d)^{(qbar-1)/alpha} max_k M^{q_k-1} sqrt(Inf_i(f_k)).

    m_n defaults to the largest psi_alpha norm among the coordinate laws
    (domain error when that norm is infinite for some law).
    """
    d = system.d
    qbar = max(system.degrees)
    if m_n is None:
        m_n = max(psi_norm_cached(s, alpha) for s in system.specs)
    logd = math.log(d) if d > 1 else 0.0
    expo = (qbar - 1) / alpha
    pref = logd**expo if expo > 0 else 1.0
    infl = np.array([f.influences() for f in system.kernels])      # (d, N)
    scales = np.array([m_n ** (f.degree - 1) for f in system.kernels])
    return pref * np.max(scales[:, None] * np.sqrt(infl), axis=0)


def default_truncation(d, alpha, qbar, m_n, lam_max, beta, fit=1.0):
    """tau, rho of the form (log d^2)^{1/alpha}, (log d^2)^{(qbar-1)/alpha},
    scaled down if needed so the product constraint holds."""
    ln = math.log(max(d, 2) ** 2)
    tau = fit * ln ** (1.0 / alpha)
    rho = fit * ln ** ((qbar - 1.0) / alpha)
    budget = 1.0 / beta
    if tau * rho * m_n * lam_max > budget and lam_max > 0:
        shrink = budget / (tau * rho * m_n * lam_max)
        tau *= math.sqrt(shrink)
        rho *= math.sqrt(shrink)
    return tau, rho


def telescoping_steps(path, kernels, psi, x_draws, y_draws):
    """Per-step interpolation increments |E Psi(Q(W_i)) - E Psi(Q(W_{i-1}))|.

    Common random numbers across steps: the same (x, y) draws feed every
    hybrid, so the increments telescope exactly to the end-to-end difference
    draw by draw.
    """
    n = path.dim
    m = x_draws.shape[0]
    q_prev = np.column_stack([evaluate_q(f, path.mix(x_draws, y_draws, 0)) for f in kernels])
    vals_prev = psi(q_prev)
    steps = np.empty(n)
    total = 0.0
    for i in range(1, n + 1):
        w = path.mix(x_draws, y_draws, i)
        q_i = np.column_stack([evaluate_q(f, w) for f in kernels])
        vals_i = psi(q_i)
        inc = float(np.mean(vals_i - vals_prev))
        steps[i - 1] = abs(inc)
        total += inc
        vals_prev = vals_i
    return steps, total


def interpolation_experiment(system, h, beta, y_anchor, mc, rng, n_sigma=8,
                             y_system=None):
    """Moment-matching contrast for the randomized Lindeberg interpolation.

    Estimates E[h(Phi_beta(Q(X) - y))] - E[h(Phi_beta(Q(Y) - y))] where the
    Y coordinates are third-moment matched to X by default, plus per-step
    telescoping magnitudes averaged over n_sigma random replacement orders.
    """
    n = system.dim
    x_specs = system.specs
    if y_system is None:
        y_specs = [match_third_moment(s.moment(3)) for s in x_specs]
    else:
        y_specs = y_system.specs
    y_anchor = np.broadcast_to(np.asarray(y_anchor, dtype=np.float64), (system.d,))

    def psi(q):
        return g0(phi_beta(q - y_anchor[None, :], beta))

    x_draws = np.column_stack([s.sample(rng, mc) for s in x_specs])
    y_draws = np.column_stack([s.sample(rng, mc) for s in y_specs])

    q_x = np.column_stack([evaluate_q(f, x_draws) for f in system.kernels])
    q_y = np.column_stack([evaluate_q(f, y_draws) for f in system.kernels])
    vx, vy = psi(q_x), psi(q_y)
    diff = float(vx.mean() - vy.mean())
    se = math.sqrt(vx.var(ddof=1) / mc + vy.var(ddof=1) / mc)

    step_rows = []
    totals = []
    for _ in range(n_sigma):
        sigma = rng.permutation(n)
        path = HybridPath(sigma, list(x_specs), list(y_specs))
        steps, total = telescoping_steps(path, system.kernels, psi, x_draws, y_draws)
        step_rows.append(steps)
        totals.append(total)
    return {
        "difference": diff,
        "difference_se": se,
        "step_magnitudes": np.array(step_rows),
        "telescoped_totals": np.array(totals),
    }
