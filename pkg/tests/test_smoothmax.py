import math

import numpy as np
import pytest

from homsum import smoothmax as sm
from homsum.errors import CapExceeded


def test_phi_beta_examples():
    assert sm.phi_beta(np.zeros(5), 2.0) == pytest.approx(math.log(5) / 2.0, rel=1e-12)
    assert sm.phi_beta(np.array([3.7]), 5.0) == pytest.approx(3.7)
    with pytest.raises(ValueError):
        sm.phi_beta(np.zeros(0), 1.0)


def test_phi_beta_sandwich_random():
    rng = np.random.default_rng(40)
    for _ in range(200):
        d = int(rng.integers(1, 40))
        beta = float(rng.uniform(0.05, 40.0))
        x = rng.normal(0, 5, d)
        v = sm.phi_beta(x, beta)
        assert -1e-12 <= v - x.max() <= math.log(d) / beta + 1e-12


def test_phi_beta_extreme_values_stable():
    x = np.array([1e6, -1e6, 0.0])
    assert np.isfinite(sm.phi_beta(x, 3.0))
    assert sm.phi_beta(x, 3.0) >= 1e6


def test_gradient_sums_to_one_and_matches_fd():
    rng = np.random.default_rng(41)
    d, beta = 9, 3.0
    x = rng.normal(0, 1, d)
    (grad,) = sm.phi_derivatives(x, beta, 1)
    assert float(grad.sum()) == pytest.approx(1.0, rel=1e-12)
    h = 1e-5
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        fd = (sm.phi_beta(x + e, beta) - sm.phi_beta(x - e, beta)) / (2 * h)
        assert abs(grad[j] - fd) <= 1e-6


def test_hessian_matches_fd():
    rng = np.random.default_rng(42)
    d, beta = 6, 2.0
    x = rng.normal(0, 1, d)
    _, hess = sm.phi_derivatives(x, beta, 2)
    h = 1e-4
    for j in range(d):
        for k in range(d):
            ej = np.zeros(d); ej[j] = h
            ek = np.zeros(d); ek[k] = h
            fd = (sm.phi_beta(x + ej + ek, beta) - sm.phi_beta(x + ej - ek, beta)
                  - sm.phi_beta(x - ej + ek, beta) + sm.phi_beta(x - ej - ek, beta)) / (4 * h * h)
            assert abs(hess[j, k] - fd) <= 1e-6
    assert float(np.abs(hess).sum()) <= 2 * beta + 1e-12


def test_third_derivative_matches_fd():
    rng = np.random.default_rng(43)
    d, beta = 5, 1.5
    x = rng.normal(0, 1, d)
    _, _, third = sm.phi_derivatives(x, beta, 3)
    h = 2e-3
    for j in range(d):
        for k in range(d):
            for m in range(d):
                ej = np.zeros(d); ej[j] = h
                ek = np.zeros(d); ek[k] = h
                em = np.zeros(d); em[m] = h

                def f(z):
                    return sm.phi_beta(z, beta)

                fd = (f(x + ej + ek + em) - f(x + ej + ek - em)
                      - f(x + ej - ek + em) + f(x + ej - ek - em)
                      - f(x - ej + ek + em) + f(x - ej + ek - em)
                      + f(x - ej - ek + em) - f(x - ej - ek - em)) / (8 * h**3)
                assert abs(third[j, k, m] - fd) <= 1e-4


def test_derivative_dim_cap():
    with pytest.raises(CapExceeded):
        sm.phi_derivatives(np.zeros(101), 1.0, 2)


def test_g0_boundary_and_midpoint():
    assert sm.g0(0.0) == 1.0
    assert sm.g0(1.0) == 0.0
    assert sm.g0(0.5) == pytest.approx(0.5, rel=1e-12)
    assert sm.g0(-3.0) == 1.0 and sm.g0(4.0) == 0.0


def test_g0_monotone():
    t = np.linspace(-0.5, 1.5, 10_001)
    g = sm.g0(t)
    assert np.all(np.diff(g) <= 1e-12)
    assert np.all((0.0 <= g) & (g <= 1.0))


def test_g0_derivative_sup_stable_across_refinement():
    for order in (1, 2, 3):
        a = sm.g0_derivative_sup(order, grid=20001)
        b = sm.g0_derivative_sup(order, grid=40001)
        assert abs(a - b) <= 1e-4 * max(abs(a), 1.0)
    assert sm.g0_derivative_sup(1) == pytest.approx(2.0, abs=1e-6)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_derivative_sum_bounds(order):
    rng = np.random.default_rng(44)
    for beta in (0.5, 1.0, 5.0, 20.0):
        for d in (2, 10, 50):
            h = sm.RescaledCutoff(1.0 / 0.4, 0.1)
            for _ in range(3):
                x = rng.normal(0, 1, d)
                lhs, rhs = sm.derivative_sum_bound_check(h, beta, x, order)
                assert lhs <= rhs * (1 + 1e-9)


def test_derivative_sum_m1_is_h_prime():
    h = sm.RescaledCutoff(2.0, 0.0)
    x = np.array([0.05, 0.1, -0.2])
    lhs, rhs = sm.derivative_sum_bound_check(h, 2.0, x, 1)
    phi = sm.phi_beta(x, 2.0)
    assert lhs == pytest.approx(abs(float(h.derivative(phi, 1))), rel=1e-12)
    assert rhs == pytest.approx(h.derivative_sup(1), rel=1e-12)


def test_delta_epsilon_identical_and_symmetry():
    rng = np.random.default_rng(45)
    a = rng.normal(0, 1, (3000, 2))
    b = rng.normal(0.2, 1, (3000, 2))
    est, se = sm.delta_epsilon_estimate(a, a, 0.2, rng=rng)
    assert est == 0.0
    e_ab, _ = sm.delta_epsilon_estimate(a, b, 0.2, rng=np.random.default_rng(1))
    e_ba, _ = sm.delta_epsilon_estimate(b, a, 0.2, rng=np.random.default_rng(1))
    assert e_ab == pytest.approx(e_ba, abs=1e-12)


def test_delta_epsilon_null_calibration():
    rng = np.random.default_rng(46)
    m = 100_000
    a = rng.normal(0, 1, (m, 3))
    b = rng.normal(0, 1, (m, 3))
    est, _ = sm.delta_epsilon_estimate(a, b, 0.3, rng=rng)
    assert est <= 5.0 / math.sqrt(m) + 0.01


def test_smoothing_inequality():
    """Empirical Kolmogorov <= Delta_eps + 2 eps / sigma (sqrt(2 log d) + 2)."""
    from homsum import distributions as ds
    from homsum import kernels as kn
    from homsum import moments as mo
    from homsum.simulate import sample_Q, sample_gaussian, kolmogorov_orthant

    rng = np.random.default_rng(47)
    n = 8
    f = kn.random_sparse_kernel(n, 2, 8, rng)
    g = kn.random_sparse_kernel(n, 2, 8, rng)
    sysm = mo.HomSumSystem([f, g], [ds.gamma_plus_spec(1.0)] * n)
    m = 40_000
    qs = sample_Q(sysm, m, seed=5)
    zs = sample_gaussian(sysm.covariance(), m, seed=6)
    kol, _ = kolmogorov_orthant(qs, zs, rng=rng)
    sig_min = math.sqrt(np.diag(sysm.covariance()).min())
    for eps in (0.2, 0.5):
        delta, _ = sm.delta_epsilon_estimate(qs, zs, eps, rng=rng)
        bound = delta + 2 * eps / sig_min * (math.sqrt(2 * math.log(2)) + 2)
        assert kol <= bound + 0.02


def test_nazarov_d1_analytic():
    rng = np.random.default_rng(48)
    lhs, rhs, se = sm.nazarov_check(np.eye(1), 0.0, 0.1, 400_000, rng)
    # band mass at the mode is about eps * phi(0) = 0.0399
    assert lhs == pytest.approx(0.0399, abs=5 * se + 1e-3)
    assert rhs == pytest.approx(0.2)
    assert lhs <= rhs + 3 * se


def test_nazarov_zero_eps():
    rng = np.random.default_rng(49)
    lhs, rhs, _ = sm.nazarov_check(np.eye(3), 0.5, 0.0, 10_000, rng)
    assert lhs == 0.0 and rhs == 0.0


def test_nazarov_identity_d50():
    rng = np.random.default_rng(50)
    lhs, rhs, se = sm.nazarov_check(np.eye(50), 1.5, 0.05, 200_000, rng)
    assert lhs <= rhs + 3 * se


def test_nazarov_validation():
    rng = np.random.default_rng(51)
    with pytest.raises(ValueError):
        sm.nazarov_check(np.array([[1.0, 0.5], [0.4, 1.0]]), 0.0, 0.1, 100, rng)
