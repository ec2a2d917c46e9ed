import math

import numpy as np
import pytest

from homsum import distributions as ds
from homsum import kernels as kn
from homsum import moments as mo
from homsum.errors import CapExceeded


@pytest.fixture
def f_example():
    return kn.SymmetricKernel(2, 3, {(0, 1): 1.0, (0, 2): 2.0})


def system_of(f, spec):
    return mo.HomSumSystem([f], [spec] * f.dim)


def test_first_moment_vanishes(f_example):
    sysm = system_of(f_example, ds.gamma_plus_spec(0.7))
    assert mo.exact_product_moment(sysm, [(0, 1)]) == 0.0


def test_second_moment_closed_form(f_example):
    sysm = system_of(f_example, ds.rademacher_spec())
    assert mo.exact_product_moment(sysm, [(0, 2)]) == pytest.approx(20.0, rel=1e-12)
    assert mo.second_moment(sysm, 0) == pytest.approx(
        math.factorial(2) * f_example.norm_sq(), rel=1e-12)


def test_mixed_degree_orthogonality():
    rng = np.random.default_rng(20)
    f = kn.random_sparse_kernel(6, 2, 6, rng)
    g = kn.random_sparse_kernel(6, 3, 6, rng)
    sysm = mo.HomSumSystem([f, g], [ds.gamma_minus_spec(1.2)] * 6)
    assert mo.exact_product_moment(sysm, [(0, 1), (1, 1)]) == pytest.approx(0.0, abs=1e-14)


def test_kappa4_q1_closed_form():
    n = 5
    f = kn.SymmetricKernel(1, n, {(i,): 1 / math.sqrt(n) for i in range(n)})
    sysm = system_of(f, ds.rademacher_spec())
    assert mo.kappa4(sysm, 0) == pytest.approx(-2.0 / n, rel=1e-12)
    assert mo.kappa4_q1_closed_form(f, sysm.specs) == pytest.approx(-2.0 / n, rel=1e-12)


def test_kappa4_gaussian_q2_trace(f_example):
    sysm = system_of(f_example, ds.gaussian_spec())
    tr4 = float(np.trace(np.linalg.matrix_power(f_example.as_matrix(), 4)))
    assert mo.kappa4(sysm, 0) == pytest.approx(48.0 * tr4, rel=1e-12)


def test_kappa4_nonneg_gaussian_gamma():
    rng = np.random.default_rng(21)
    for _ in range(20):
        n = int(rng.integers(4, 7))
        q = int(rng.integers(1, 4))
        f = kn.random_sparse_kernel(n, q, 6, rng)
        spec = (ds.gaussian_spec() if rng.random() < 0.3
                else ds.gamma_plus_spec(float(rng.uniform(0.25, 3.0))))
        assert mo.kappa4(system_of(f, spec), 0) >= -1e-12


def test_dejong_matches_oracle_banded():
    f = kn.banded_kernel(6)
    sysm = system_of(f, ds.rademacher_spec())
    e4, g1, g2, g4, g5 = mo.dejong_q2_fourth_moment(f, sysm.specs)
    assert e4 == pytest.approx(mo.exact_product_moment(sysm, [(0, 4)]), rel=1e-10)
    assert g5 >= 0.0


def test_dejong_matches_oracle_skewed():
    rng = np.random.default_rng(22)
    specs = [ds.gamma_plus_spec(0.6), ds.gamma_minus_spec(1.5), ds.poisson_spec(2.0),
             ds.rademacher_spec(), ds.gaussian_spec(), ds.multiplier_two_point_spec()]
    for _ in range(5):
        f = kn.random_sparse_kernel(6, 2, int(rng.integers(3, 12)), rng)
        sysm = mo.HomSumSystem([f], specs)
        e4 = mo.q2_fourth_moment(f, specs)
        assert e4 == pytest.approx(mo.exact_product_moment(sysm, [(0, 4)]), rel=1e-10)


def test_dejong_single_entry():
    f = kn.SymmetricKernel(2, 5, {(1, 3): 0.7})
    _, g1, g2, g4, g5 = mo.dejong_q2_fourth_moment(f, [ds.rademacher_spec()] * 5)
    assert g2 == 0.0 and g4 == 0.0


def test_dejong_requires_q2():
    f = kn.SymmetricKernel(1, 3, {(0,): 1.0})
    with pytest.raises(ValueError):
        mo.dejong_q2_fourth_moment(f, [ds.rademacher_spec()] * 3)


def test_kappa4_permutation_invariance():
    rng = np.random.default_rng(23)
    n = 6
    f = kn.random_sparse_kernel(n, 2, 8, rng)
    specs = [ds.gamma_plus_spec(0.5), ds.gaussian_spec(), ds.rademacher_spec(),
             ds.gamma_minus_spec(2.0), ds.poisson_spec(1.0), ds.gaussian_spec()]
    perm = rng.permutation(n)
    f2 = f.relabel(perm)
    specs2 = [None] * n
    for i, s in enumerate(specs):
        specs2[perm[i]] = s
    k1 = mo.kappa4(mo.HomSumSystem([f], specs), 0)
    k2 = mo.kappa4(mo.HomSumSystem([f2], specs2), 0)
    assert k1 == pytest.approx(k2, rel=1e-12)


def test_oracle_vs_mc_fourth_moment():
    from homsum.simulate import sample_Q
    rng = np.random.default_rng(24)
    f = kn.random_sparse_kernel(7, 2, 8, rng)
    sysm = system_of(f, ds.gamma_plus_spec(1.0))
    exact = mo.exact_product_moment(sysm, [(0, 4)])
    q = sample_Q(sysm, 400_000, seed=77)[:, 0]
    emp = float(np.mean(q**4))
    se = float(np.std(q**4, ddof=1)) / math.sqrt(len(q))
    assert abs(emp - exact) <= 5 * se


def test_tensor_order_cap():
    f = kn.SymmetricKernel(3, 6, {(0, 1, 2): 1.0})
    sysm = system_of(f, ds.gaussian_spec())
    with pytest.raises(CapExceeded):
        mo.exact_product_moment(sysm, [(0, 5)])


def test_contraction_bound_terms():
    rng = np.random.default_rng(25)
    # Gaussian: the var-ineq chain makes each contraction term <= kappa4
    for _ in range(5):
        q = int(rng.integers(2, 4))
        f = kn.random_sparse_kernel(6, q, 6, rng)
        lhs, k4, mterm = mo.contraction_bound_check(f, [ds.gaussian_spec()] * 6)
        scaled = max(
            math.factorial(q) ** 2 * math.comb(q, r) ** 2
            * kn.contract(f, f, r).norm_sq() for r in range(1, q))
        assert scaled <= k4 * (1 + 1e-9)
        assert lhs >= 0 and mterm >= 0


def test_contraction_bound_banded_scaling():
    # both sides of the contraction bound scale like N^{-1/2} on the band
    vals = []
    for n in (16, 64, 256):
        f = kn.SymmetricKernel(2, n, {(i, i + 1): n**-0.5 for i in range(n - 1)})
        c1 = kn.contract(f, f, 1).norm()
        m_side = f.norm() * math.sqrt(f.max_influence())
        vals.append((c1 * math.sqrt(n), m_side * math.sqrt(n)))
    for a, b in zip(vals, vals[1:]):
        assert abs(a[0] - b[0]) <= 0.5 * abs(a[0])
        assert abs(a[1] - b[1]) <= 0.5 * abs(a[1])


def test_contraction_bound_single_entry():
    f = kn.SymmetricKernel(2, 4, {(0, 1): 1.0})
    lhs, k4, mterm = mo.contraction_bound_check(f, [ds.rademacher_spec()] * 4)
    assert lhs >= 0 and k4 >= 0 and mterm > 0


def test_transfer_chain_gamma():
    rng = np.random.default_rng(26)
    f = kn.random_sparse_kernel(6, 2, 8, rng)
    specs = [ds.gamma_plus_spec(1.0)] * 6
    m_f, maxr, k4term = mo.transfer_inequality_check(f, specs, "C")
    assert m_f <= maxr * (1 + 1e-9)
    assert maxr <= k4term * (1 + 1e-9)


def test_transfer_chain_zero_kernel():
    f = kn.SymmetricKernel(2, 4, {})
    m_f, maxr, k4term = mo.transfer_inequality_check(
        f, [ds.gamma_plus_spec(1.0)] * 4, "C")
    assert m_f == 0.0 and maxr == 0.0 and k4term == 0.0


def test_transfer_condition_validation():
    f = kn.SymmetricKernel(2, 3, {(0, 1): 1.0})
    with pytest.raises(ValueError):
        mo.transfer_inequality_check(f, [ds.rademacher_spec()] * 3, "A")
    with pytest.raises(ValueError):
        mo.transfer_inequality_check(f, [ds.gaussian_spec()] * 3, "B")
    with pytest.raises(ValueError):
        mo.transfer_inequality_check(f, [ds.gaussian_spec()] * 3, "Z")


def test_gram_default_covariance():
    rng = np.random.default_rng(27)
    f = kn.random_sparse_kernel(6, 2, 6, rng)
    g = kn.random_sparse_kernel(6, 2, 6, rng)
    h = kn.random_sparse_kernel(6, 3, 6, rng)
    sysm = mo.HomSumSystem([f, g, h], [ds.gaussian_spec()] * 6)
    gram = sysm.gram()
    assert gram[0, 1] == pytest.approx(
        mo.exact_product_moment(sysm, [(0, 1), (1, 1)]), rel=1e-12)
    assert gram[0, 2] == 0.0
    assert gram[2, 2] == pytest.approx(
        mo.exact_product_moment(sysm, [(2, 2)]), rel=1e-12)
