"""Exact small-N expectations of products of homogeneous sums.

The generic oracle expands each factor Q(f;X) over its stored index sets,
collects the two halves of the product into multi-index polynomials, and
pairs them through per-coordinate moment tables.  Closed-form
specializations (covariance Gram matrix, q=1 cumulant sum, q=2 fourth-moment
terms) are kept as independent routes and cross-checked in the tests.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceeded
from .kernels import SymmetricKernel, contract

TENSOR_ORDER_CAP = 12
PAIR_WORK_CAP = 40_000_000


@dataclass
class HomSumSystem:
    """d kernels on a common coordinate space, plus a target covariance.

    When no target is given it defaults to the exact Gram matrix
    q_j! <f_j, f_k> 1{q_j = q_k}.
    """

    kernels: list
    specs: list
    target_cov: np.ndarray = None

    def __post_init__(self):
        if not self.kernels:
            raise ValueError("system needs at least one kernel")
        n = self.kernels[0].dim
        for f in self.kernels:
            if f.dim != n:
                raise ValueError("kernel dim mismatch")
        if len(self.specs) != n:
            raise ValueError(f"need {n} coordinate specs, got {len(self.specs)}")
        if self.target_cov is not None:
            c = np.asarray(self.target_cov, dtype=np.float64)
            if c.shape != (self.d, self.d):
                raise ValueError("target covariance has wrong shape")
            if not np.allclose(c, c.T, atol=1e-12):
                raise ValueError("target covariance must be symmetric")
            self.target_cov = c

    @property
    def d(self):
        return len(self.kernels)

    @property
    def dim(self):
        return self.kernels[0].dim

    @property
    def degrees(self):
        return [f.degree for f in self.kernels]

    def gram(self):
        """Exact covariance of Q: q_j! <f_j, f_k> 1{q_j = q_k}."""
        d = self.d
        g = np.zeros((d, d))
        for j in range(d):
            qj = self.kernels[j].degree
            for k in range(j, d):
                if qj == self.kernels[k].degree:
                    g[j, k] = g[k, j] = (
                        math.factorial(qj) * self.kernels[j].inner(self.kernels[k])
                    )
        return g

    def covariance(self):
        return self.gram() if self.target_cov is None else self.target_cov


def _expand_half(factors):
    """Collect prod_j Q(f_j; X) into {exponent bytes: coeff} over coordinates."""
    poly = {(): 1.0}
    dim = factors[0].dim
    for f in factors:
        scale = math.factorial(f.degree)
        new = {}
        for key, coeff in poly.items():
            counts = np.zeros(dim, dtype=np.int8)
            if key:
                counts[: len(key)] = np.frombuffer(key, dtype=np.int8)
            for tup, val in f.items():
                c2 = counts.copy()
                for i in tup:
                    c2[i] += 1
                k2 = c2.tobytes()
                new[k2] = new.get(k2, 0.0) + coeff * scale * val
        poly = new
        if not poly:
            break
    return poly


def _poly_arrays(poly, dim):
    if not poly:
        return np.zeros((1, dim), dtype=np.int8), np.zeros(1)
    expo = np.frombuffer(b"".join(poly.keys()), dtype=np.int8).reshape(len(poly), dim)
    coef = np.fromiter(poly.values(), dtype=np.float64, count=len(poly))
    return expo, coef


def exact_product_moment(system, exponents):
    """E[prod_j Q(f_j; X)^{count_j}] for exponents = [(kernel index, count), ...].

    Exact: expands over stored index sets, groups coincidences, and applies
    per-coordinate moment tables.  Refuses totals above the tensor-order cap
    or pairing work above the work cap.
    """
    factors = []
    for j, count in exponents:
        if count < 0:
            raise ValueError("negative exponent")
        factors.extend([system.kernels[j]] * count)
    if not factors:
        return 1.0
    order = sum(f.degree for f in factors)
    if order > TENSOR_ORDER_CAP:
        raise CapExceeded(f"total tensor order {order} exceeds cap {TENSOR_ORDER_CAP}")
    if any(f.nnz == 0 for f in factors):
        return 0.0

    # split the factor list into halves with balanced expansion sizes
    factors.sort(key=lambda f: f.nnz, reverse=True)
    half_a, half_b, na, nb = [], [], 1, 1
    for f in factors:
        if na <= nb:
            half_a.append(f)
            na *= f.nnz
        else:
            half_b.append(f)
            nb *= f.nnz
    if na * nb > PAIR_WORK_CAP:
        raise CapExceeded(
            f"pairing work {na * nb} exceeds cap {PAIR_WORK_CAP}; reduce nnz or order"
        )

    dim = system.dim
    ea, ca = _poly_arrays(_expand_half(half_a), dim)
    if half_b:
        same = len(half_a) == len(half_b) and all(
            a is b for a, b in zip(half_a, half_b)
        )
        eb, cb = (ea, ca) if same else _poly_arrays(_expand_half(half_b), dim)
    else:
        eb, cb = np.zeros((1, dim), dtype=np.int8), np.ones(1)
    if ea.shape[0] * eb.shape[0] > PAIR_WORK_CAP:
        raise CapExceeded("collected polynomial pairing exceeds the work cap")

    n_factors = len(factors)
    prod = np.ones((ea.shape[0], eb.shape[0]))
    for i in range(dim):
        tab = np.array([system.specs[i].moment(k) for k in range(n_factors + 1)])
        prod *= tab[ea[:, i][:, None] + eb[None, :, i]]
        if not prod.any():
            return 0.0
    return float(ca @ prod @ cb)


def second_moment(system, j):
    return exact_product_moment(system, [(j, 2)])


def kappa4(system, j):
    """Fourth cumulant E[Q^4] - 3 E[Q^2]^2, via the exact oracle."""
    e4 = exact_product_moment(system, [(j, 4)])
    e2 = exact_product_moment(system, [(j, 2)])
    return e4 - 3.0 * e2 * e2


def kappa4_q1_closed_form(f, specs):
    """kappa4 of a linear form: sum_i f(i)^4 kappa4(X_i)."""
    if f.degree != 1:
        raise ValueError("closed form is for q=1")
    acc = 0.0
    for (i,), v in f.items():
        acc += v**4 * (specs[i].moment(4) - 3.0)
    return acc


# -- q = 2 fourth-moment decomposition ----------------------------------------

def _q2_term_arrays(f, specs):
    m = f.as_matrix()
    m2 = m * m
    m4 = m2 * m2
    mom3 = np.array([s.moment(3) for s in specs])
    mom4 = np.array([s.moment(4) for s in specs])
    r = m2.sum(axis=1)          # r_i = sum_j f(i,j)^2
    t = m4.sum(axis=1)          # t_i = sum_j f(i,j)^4
    b = m @ m
    g1 = 8.0 * float(mom4 @ m4 @ mom4)
    g2 = 8.0 * float(mom4 @ (r * r - t))
    g4 = 2.0 * float(np.trace(b @ b) - 2.0 * np.sum(r * r) + np.sum(t))
    g5 = 2.0 * float(np.sum(m2) ** 2 - 4.0 * np.sum(r * r) + 2.0 * np.sum(t))
    gs = 96.0 * float(mom3 @ (m2 * b) @ mom3)
    return g1, g2, g4, g5, gs


def q2_fourth_moment(f, specs):
    """Exact E[Q(f;X)^4] for a q=2 kernel, any N, via the term decomposition.

    E[Q^4] = G_I + 6 G_II + 24 G_IV + 6 G_V + G_skew, where G_skew collects
    the third-moment pattern (two odd-degree vertices) and vanishes for
    zero-skewness coordinate laws.
    """
    g1, g2, g4, g5, gs = _q2_term_arrays(f, specs)
    return g1 + 6.0 * g2 + 24.0 * g4 + 6.0 * g5 + gs


def kappa4_q2_closed_form(f, specs):
    e2 = 2.0 * float(np.sum(f.as_matrix() ** 2))   # E[Q^2] = q! |f|^2
    return q2_fourth_moment(f, specs) - 3.0 * e2 * e2


def dejong_q2_fourth_moment(f, specs):
    """(E[Q^4], G_I, G_II, G_IV, G_V) for a q=2 kernel.

    The G terms are the enumerated sums over distinct-index tuples:
      G_I  = 2^3 sum_{Delta_2} f(i,j)^4 E[X_i^4] E[X_j^4]
      G_II = 2^3 sum_{Delta_3} f(i,j)^2 f(i,k)^2 E[X_i^4]
      G_IV = 2   sum_{Delta_4} f(i,j) f(i,k) f(l,j) f(l,k)
      G_V  = 2   sum_{Delta_4} f(i,j)^2 f(k,l)^2
    """
    if f.degree != 2:
        raise ValueError("the G-term decomposition is for q=2")
    g1, g2, g4, g5, gs = _q2_term_arrays(f, specs)
    return g1 + 6.0 * g2 + 24.0 * g4 + 6.0 * g5 + gs, g1, g2, g4, g5


def kappa4_exact(system, j, cap_fallback=True):
    """kappa4 by the cheapest exact route: closed forms for q<=2, oracle else."""
    f = system.kernels[j]
    if f.degree == 1:
        return kappa4_q1_closed_form(f, system.specs)
    if f.degree == 2:
        return kappa4_q2_closed_form(f, system.specs)
    return kappa4(system, j)


# -- inequality report helpers -------------------------------------------------

def contraction_bound_check(f, specs, system=None):
    """Terms of the contraction-vs-cumulant bound for one kernel.

    Returns (max_{1<=r<=q-1} |f *_r f|, |kappa4|, M |f|^2 M(f)) with
    M = 1 + max_i E[X_i^4].  The suite fits the smallest admissible constant
    over a corpus; no specific constant is asserted.
    """
    q = f.degree
    if q < 2:
        raise ValueError("contraction bound needs q >= 2")
    sysm = system or HomSumSystem([f], list(specs))
    lhs = max(contract(f, f, r).norm() for r in range(1, q))
    k4 = abs(kappa4_exact(sysm, 0))
    mconst = 1.0 + max(s.moment(4) for s in specs)
    return lhs, k4, mconst * f.norm_sq() * f.max_influence()


def check_condition(specs, condition):
    """Validate that coordinate specs satisfy condition A, B or C."""
    cond = condition.upper()
    if cond == "A":
        first = specs[0]
        if any(s != first for s in specs):
            raise ValueError("condition A requires i.i.d. coordinates")
        if abs(first.moment(3)) > 1e-12 or first.moment(4) < 3.0 - 1e-12:
            raise ValueError("condition A requires zero skewness and E[X^4] >= 3")
    elif cond == "B":
        if any(s.law != "poisson" for s in specs):
            raise ValueError("condition B requires standardized Poisson coordinates")
    elif cond == "C":
        if any(s.law not in ("gamma+", "gamma-") for s in specs):
            raise ValueError("condition C requires standardized gamma coordinates")
    else:
        raise ValueError(f"unknown condition {condition!r}")


def transfer_inequality_check(f, specs, condition):
    """(M(f), max_r |f *_r f|, sqrt(kappa4)/(q q!)) of the influence-transfer chain.

    Contract: the triple is non-decreasing when the coordinates satisfy one
    of the three moment conditions.
    """
    check_condition(specs, condition)
    q = f.degree
    if q < 2:
        raise ValueError("transfer chain needs q >= 2")
    maxr = max(contract(f, f, r).norm() for r in range(1, q))
    k4 = kappa4_exact(HomSumSystem([f], list(specs)), 0)
    return f.max_influence(), maxr, math.sqrt(max(k4, 0.0)) / (q * math.factorial(q))
