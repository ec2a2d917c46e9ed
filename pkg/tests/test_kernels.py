import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from homsum import kernels as kn
from homsum.errors import CapExceeded


@pytest.fixture
def f_example():
    # N=3, q=2, f(0,1)=1, f(0,2)=2
    return kn.SymmetricKernel(2, 3, {(0, 1): 1.0, (0, 2): 2.0})


def dense_influence(f, i):
    """Dense-grid oracle: sum of f(i, i2, ..., iq)^2 over the full grid."""
    arr = f.to_dense()
    return float(np.sum(arr[i] ** 2)) if f.degree > 1 else float(arr[i] ** 2)


def test_influence_worked_example(f_example):
    assert f_example.influence(0) == 5.0
    assert f_example.influence(1) == 1.0
    assert f_example.influence(2) == 4.0
    assert f_example.max_influence() == 5.0
    assert f_example.norm_sq() == 10.0


def test_influence_empty_row(f_example):
    g = kn.SymmetricKernel(2, 5, {(0, 1): 1.0})
    assert g.influence(3) == 0.0


def test_influence_out_of_range(f_example):
    with pytest.raises(ValueError):
        f_example.influence(3)
    with pytest.raises(ValueError):
        f_example.influence(-1)


def test_influence_matches_dense_grid_oracle():
    rng = np.random.default_rng(10)
    for _ in range(20):
        n = int(rng.integers(2, 9))
        q = int(rng.integers(1, min(3, n) + 1))
        f = kn.random_sparse_kernel(n, q, int(rng.integers(1, 8)), rng)
        for i in range(n):
            assert f.influence(i) == pytest.approx(dense_influence(f, i), rel=1e-12)
        # summing the influences recovers the grid norm (each grid cell is
        # counted exactly once through its first argument)
        assert float(f.influences().sum()) == pytest.approx(f.norm_sq(), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_lookup_permutation_symmetry_and_diagonals(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 8))
    q = int(rng.integers(1, min(3, n) + 1))
    f = kn.random_sparse_kernel(n, q, int(rng.integers(1, 6)), rng)
    for t, v in f.items():
        perm = tuple(rng.permutation(t))
        assert f.lookup(perm) == v
    if q >= 2:
        dup = (0,) * q
        assert f.lookup(dup) == 0.0


def test_dim_below_degree_gives_zero_kernel():
    f = kn.SymmetricKernel(3, 2, {})
    assert f.nnz == 0
    assert f.norm_sq() == 0.0


def test_duplicate_and_bad_entries_rejected():
    with pytest.raises(ValueError):
        kn.SymmetricKernel(2, 3, {(0, 0): 1.0})
    with pytest.raises(ValueError):
        kn.SymmetricKernel(2, 3, {(0, 1): 1.0, (1, 0): 2.0})
    with pytest.raises(ValueError):
        kn.SymmetricKernel(2, 3, {(0, 5): 1.0})


def brute_force_contract(f, g, r):
    """Triple-loop contraction over the full grid."""
    p, q = f.degree, g.degree
    n = f.dim
    shape = (n,) * (p + q - 2 * r)
    out = np.zeros(shape if shape else (1,))
    for free in product(range(n), repeat=p + q - 2 * r):
        acc = 0.0
        for ks in product(range(n), repeat=r):
            acc += f.lookup(free[: p - r] + ks) * g.lookup(free[p - r:] + ks)
        if shape:
            out[free] = acc
        else:
            out[0] = acc
    return out


def test_contract_matches_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(8):
        n = int(rng.integers(2, 6))
        p = int(rng.integers(1, 3))
        q = int(rng.integers(1, 3))
        f = kn.random_sparse_kernel(n, min(p, n), 3, rng)
        g = kn.random_sparse_kernel(n, min(q, n), 3, rng)
        for r in range(0, min(f.degree, g.degree) + 1):
            got = kn.contract(f, g, r).array
            want = brute_force_contract(f, g, r)
            assert np.allclose(got.reshape(-1), want.reshape(-1), atol=1e-12)


def test_contract_q2_matrix_square(f_example):
    c = kn.contract(f_example, f_example, 1)
    m = f_example.as_matrix()
    assert np.allclose(c.array, m @ m)
    assert c.norm_sq() == pytest.approx(
        np.trace(np.linalg.matrix_power(m, 4)), rel=1e-12)
    assert c.norm_sq() == pytest.approx(50.0)


def test_contract_tensor_and_full(f_example):
    g = kn.SymmetricKernel(2, 3, {(1, 2): 3.0})
    r0 = kn.contract(f_example, g, 0)
    assert r0.norm() == pytest.approx(f_example.norm() * g.norm(), rel=1e-12)
    full = kn.contract(f_example, g, 2)
    assert full.array.shape == ()
    assert float(full.array) == pytest.approx(f_example.inner(g), rel=1e-12)


def test_contract_dim_mismatch():
    f = kn.SymmetricKernel(1, 2, {(0,): 1.0})
    g = kn.SymmetricKernel(1, 3, {(0,): 1.0})
    with pytest.raises(ValueError):
        kn.contract(f, g, 0)


def test_symmetrize_idempotent_and_example():
    h = np.zeros((3, 3))
    h[0, 1] = 1.0
    s = kn.symmetrize(h)
    assert s[0, 1] == 0.5 and s[1, 0] == 0.5
    rng = np.random.default_rng(12)
    arr = rng.normal(size=(4, 4, 4))
    s1 = kn.symmetrize(arr)
    assert np.allclose(kn.symmetrize(s1), s1)
    # already symmetric input is unchanged
    assert np.allclose(kn.symmetrize(s1), kn.symmetrize(kn.symmetrize(s1)))


def test_tensor_sym_matches_generic_symmetrize():
    rng = np.random.default_rng(13)
    f = kn.random_sparse_kernel(4, 2, 4, rng)
    g = kn.random_sparse_kernel(4, 1, 3, rng)
    want = kn.symmetrize(np.multiply.outer(f.to_dense(), g.to_dense()))
    assert np.allclose(kn.tensor_sym(f, g), want, atol=1e-13)


def test_nr_identity_random_pairs():
    rng = np.random.default_rng(14)
    for _ in range(30):
        n = int(rng.integers(2, 9))
        f = kn.random_sparse_kernel(n, int(rng.integers(1, min(3, n) + 1)), 5, rng)
        g = kn.random_sparse_kernel(n, int(rng.integers(1, min(3, n) + 1)), 5, rng)
        res, lhs, rhs = kn.nr_identity_check(f, g)
        assert res <= 1e-9 * max(lhs, rhs, 1e-30)


def test_nr_identity_orthogonal_mixed_degree():
    f = kn.SymmetricKernel(1, 4, {(0,): 1.0})
    g = kn.SymmetricKernel(2, 4, {(2, 3): 1.0})
    res, lhs, rhs = kn.nr_identity_check(f, g)
    assert res <= 1e-12 * max(lhs, 1.0)


def test_offdiag_bound_examples():
    f = kn.SymmetricKernel(1, 2, {(0,): 1.0, (1,): 1.0})
    lhs, rhs = kn.offdiag_tensor_bound_check(f)
    assert rhs == pytest.approx(2.0)
    assert lhs <= rhs + 1e-12
    g = kn.SymmetricKernel(2, 4, {(1, 2): 1.5})
    lhs, rhs = kn.offdiag_tensor_bound_check(g)
    assert lhs <= rhs + 1e-12


def test_c_q_values():
    assert kn.c_q(1) == 1.0
    assert kn.c_q(2) == 6.0  # 1!*C(2,1)^2 + 2!*C(2,2)^2


def test_kernel_file_roundtrip(tmp_path, f_example):
    path = tmp_path / "f.kern"
    kn.write_kernel(f_example, path)
    text = path.read_text()
    assert text.startswith("homsum-kernel v1 q=2 N=3\n")
    g = kn.read_kernel(path)
    assert g.degree == f_example.degree and g.dim == f_example.dim
    assert dict(g.items()) == dict(f_example.items())


def test_kernel_file_errors(tmp_path):
    bad = tmp_path / "bad.kern"
    bad.write_text("not-a-kernel\n")
    with pytest.raises(ValueError):
        kn.read_kernel(bad)
    bad.write_text("homsum-kernel v1 q=2 N=3\n2 1 0.5\n")
    with pytest.raises(ValueError):
        kn.read_kernel(bad)


def test_dense_cap():
    f = kn.SymmetricKernel(3, 500, {(0, 1, 2): 1.0})
    with pytest.raises(CapExceeded):
        f.to_dense()


def test_families():
    fb = kn.banded_kernel(6)
    assert fb.norm_sq() == pytest.approx(1.0)  # unit grid norm, so E[Q^2] = q!
    fam = kn.banded_spike_family(8)
    assert len(fam) == 8
    assert fam[3].lookup((2, 3)) == pytest.approx(8**-0.25)
    assert fam[3].lookup((5, 6)) == pytest.approx(8**-0.5)
