"""Symmetric kernels vanishing on diagonals, and their contraction algebra.

A kernel f:[N]^q -> R is stored sparsely: one coefficient per strictly
increasing index tuple, standing for all q! permutations with equal value.
Indices are 0-based throughout the API; the text file format is 1-based.
"""

import math
from itertools import permutations, combinations

import numpy as np

from .errors import CapExceeded

# guard for dense [N]^k grids materialized by contractions / symmetrizations
DENSE_CELL_CAP = 50_000_000


def c_q(q):
    """sum_{r=1}^{q} r! C(q,r)^2, the off-diagonal tensor constant."""
    return float(sum(math.factorial(r) * math.comb(q, r) ** 2 for r in range(1, q + 1)))


class SymmetricKernel:
    """Sparse symmetric function on [N]^q vanishing on diagonals."""

    def __init__(self, degree, dim, entries):
        if degree < 1:
            raise ValueError("degree must be a positive integer")
        if dim < 1:
            raise ValueError("dim must be a positive integer")
        self.degree = int(degree)
        self.dim = int(dim)
        canon = {}
        for tup, val in entries.items():
            t = tuple(int(i) for i in tup)
            if len(t) != self.degree:
                raise ValueError(f"tuple {t} has length {len(t)}, expected {self.degree}")
            if len(set(t)) != len(t):
                raise ValueError(f"tuple {t} has a repeated index")
            if min(t) < 0 or max(t) >= self.dim:
                raise ValueError(f"tuple {t} out of range for dim {self.dim}")
            key = tuple(sorted(t))
            if key in canon:
                raise ValueError(f"duplicate entry for index set {key}")
            v = float(val)
            if v != 0.0:
                canon[key] = v
        self._entries = dict(sorted(canon.items()))
        if self._entries:
            self._idx = np.array(list(self._entries.keys()), dtype=np.int64)
            self._vals = np.array(list(self._entries.values()), dtype=np.float64)
        else:
            self._idx = np.zeros((0, self.degree), dtype=np.int64)
            self._vals = np.zeros(0, dtype=np.float64)

    # -- basic access -----------------------------------------------------

    @property
    def nnz(self):
        return len(self._entries)

    @property
    def index_array(self):
        """(nnz, q) array of stored (sorted) index tuples."""
        return self._idx

    @property
    def value_array(self):
        return self._vals

    def items(self):
        return self._entries.items()

    def lookup(self, tup):
        """Value at an arbitrary index tuple; 0 on repeats or unset tuples."""
        t = tuple(int(i) for i in tup)
        if len(t) != self.degree:
            raise ValueError(f"tuple length {len(t)} != degree {self.degree}")
        if min(t, default=0) < 0 or (t and max(t) >= self.dim):
            raise ValueError(f"tuple {t} out of range for dim {self.dim}")
        if len(set(t)) != len(t):
            return 0.0
        return self._entries.get(tuple(sorted(t)), 0.0)

    # -- norms and influences ---------------------------------------------

    def norm_sq(self):
        """Squared l2 norm over the full [N]^q grid (q! times stored mass)."""
        return math.factorial(self.degree) * float(np.dot(self._vals, self._vals))

    def norm(self):
        return math.sqrt(self.norm_sq())

    def influences(self):
        """Vector of Inf_i(f) = sum over the remaining q-1 arguments of f(i,.)^2."""
        out = np.zeros(self.dim)
        if self.nnz:
            w = math.factorial(self.degree - 1) * self._vals**2
            np.add.at(out, self._idx.ravel(), np.repeat(w, self.degree))
        return out

    def influence(self, i):
        if not 0 <= i < self.dim:
            raise ValueError(f"index {i} out of range [0, {self.dim})")
        return float(self.influences()[i])

    def max_influence(self):
        """M(f), the maximal influence."""
        return float(self.influences().max()) if self.dim else 0.0

    def sum_influence_sq(self):
        return float(np.sum(self.influences() ** 2))

    def inner(self, other):
        """Full-grid inner product <f,g> (kernels of equal degree and dim)."""
        if other.degree != self.degree or other.dim != self.dim:
            raise ValueError("kernel degree/dim mismatch")
        acc = 0.0
        small, big = (self, other) if self.nnz <= other.nnz else (other, self)
        for t, v in small.items():
            w = big._entries.get(t)
            if w is not None:
                acc += v * w
        return math.factorial(self.degree) * acc

    # -- dense views --------------------------------------------------------

    def to_dense(self):
        """Dense ndarray over [N]^q."""
        ncells = self.dim**self.degree
        if ncells > DENSE_CELL_CAP:
            raise CapExceeded(f"dense grid would need {ncells} cells (cap {DENSE_CELL_CAP})")
        arr = np.zeros((self.dim,) * self.degree)
        for t, v in self.items():
            for p in permutations(t):
                arr[p] = v
        return arr

    def as_matrix(self):
        """The N x N matrix [f] for q=2 kernels."""
        if self.degree != 2:
            raise ValueError("matrix view is defined for degree-2 kernels only")
        m = np.zeros((self.dim, self.dim))
        for (i, j), v in self.items():
            m[i, j] = v
            m[j, i] = v
        return m

    def relabel(self, perm):
        """Kernel with coordinates relabeled by i -> perm[i]."""
        return SymmetricKernel(
            self.degree, self.dim, {tuple(perm[i] for i in t): v for t, v in self.items()}
        )

    def __repr__(self):
        return f"SymmetricKernel(q={self.degree}, N={self.dim}, nnz={self.nnz})"


class ContractionResult:
    """Dense array over [N]^(p+q-2r) produced by contracting two kernels.

    Not necessarily symmetric and not necessarily vanishing on diagonals.
    """

    def __init__(self, array, p, q, r):
        self.array = np.asarray(array, dtype=np.float64)
        self.p = p
        self.q = q
        self.r = r

    @property
    def order(self):
        return self.p + self.q - 2 * self.r

    def norm_sq(self):
        return float(np.sum(self.array**2))

    def norm(self):
        return math.sqrt(self.norm_sq())

    def symmetrize(self):
        return symmetrize(self.array)

    def __repr__(self):
        return f"ContractionResult(p={self.p}, q={self.q}, r={self.r}, shape={self.array.shape})"


def contract(f, g, r):
    """Contraction f*_r g over the last r arguments of each kernel.

    r=0 is the tensor product; r=p=q is the scalar <f,g>, returned as a
    0-d ContractionResult.
    """
    if f.dim != g.dim:
        raise ValueError(f"kernel dim mismatch: {f.dim} != {g.dim}")
    p, q = f.degree, g.degree
    if not 0 <= r <= min(p, q):
        raise ValueError(f"contraction order r={r} outside 0..{min(p, q)}")
    ncells = f.dim ** (p + q - 2 * r)
    if ncells > DENSE_CELL_CAP:
        raise CapExceeded(f"contraction output would need {ncells} cells (cap {DENSE_CELL_CAP})")
    fd, gd = f.to_dense(), g.to_dense()
    if r == 0:
        arr = np.multiply.outer(fd, gd) if p + q > 0 else fd * gd
    else:
        arr = np.tensordot(fd, gd, axes=(list(range(p - r, p)), list(range(q - r, q))))
    return ContractionResult(arr, p, q, r)


def symmetrize(arr):
    """Average of an ndarray over all permutations of its axes (idempotent)."""
    arr = np.asarray(arr, dtype=np.float64)
    k = arr.ndim
    if k <= 1:
        return arr.copy()
    out = np.zeros_like(arr)
    for perm in permutations(range(k)):
        out += arr.transpose(perm)
    return out / math.factorial(k)


def tensor_sym(f, g):
    """Dense symmetrized tensor product f ~otimes g.

    Uses the subset shortcut: since f and g are themselves symmetric, only
    the C(p+q, p) placements of f's axes matter.
    """
    p, q = f.degree, g.degree
    ncells = f.dim ** (p + q)
    if ncells * math.comb(p + q, p) > DENSE_CELL_CAP * 8:
        raise CapExceeded("symmetrized tensor product too large for the dense cap")
    base = np.multiply.outer(f.to_dense(), g.to_dense())
    out = np.zeros_like(base)
    axes = range(p + q)
    for fa in combinations(axes, p):
        ga = [a for a in axes if a not in fa]
        perm = np.empty(p + q, dtype=int)
        for src, dst in enumerate(fa):
            perm[dst] = src
        for src, dst in enumerate(ga):
            perm[dst] = p + src
        out += base.transpose(perm)
    return out / math.comb(p + q, p)


def duplicate_mask(dim, order):
    """Boolean array over [N]^order marking tuples with a repeated index."""
    ncells = dim**order
    if ncells > DENSE_CELL_CAP:
        raise CapExceeded(f"duplicate mask would need {ncells} cells (cap {DENSE_CELL_CAP})")
    grids = np.indices((dim,) * order)
    mask = np.zeros((dim,) * order, dtype=bool)
    for a in range(order):
        for b in range(a + 1, order):
            mask |= grids[a] == grids[b]
    return mask


def nr_identity_check(f, g):
    """Both sides of the product-formula norm identity, plus their residual.

    lhs = (p+q)! |f ~otimes g|^2 evaluated by dense symmetrization;
    rhs = p! q! sum_r C(p,r) C(q,r) |f *_r g|^2.
    Returns (residual, lhs, rhs); the contract is residual ~ 0.
    """
    if f.dim != g.dim:
        raise ValueError("kernel dim mismatch")
    p, q = f.degree, g.degree
    lhs = math.factorial(p + q) * float(np.sum(tensor_sym(f, g) ** 2))
    rhs = math.factorial(p) * math.factorial(q) * sum(
        math.comb(p, r) * math.comb(q, r) * contract(f, g, r).norm_sq()
        for r in range(0, min(p, q) + 1)
    )
    return abs(lhs - rhs), lhs, rhs


def offdiag_tensor_bound_check(f):
    """(lhs, rhs) of the off-diagonal tensor bound.

    lhs is the squared norm of f ~otimes f restricted to tuples with a
    repeated index; rhs = c_q(p) * sum_i Inf_i(f)^2.  Contract: lhs <= rhs.
    """
    p = f.degree
    mask = duplicate_mask(f.dim, 2 * p)
    sym = tensor_sym(f, f)
    lhs = float(np.sum((sym * mask) ** 2))
    rhs = c_q(p) * f.sum_influence_sq()
    return lhs, rhs


# -- file format ------------------------------------------------------------

def write_kernel(f, path):
    """Write `homsum-kernel v1` text format (1-based increasing indices)."""
    with open(path, "w") as fh:
        fh.write(f"homsum-kernel v1 q={f.degree} N={f.dim}\n")
        for t, v in f.items():
            fh.write(" ".join(str(i + 1) for i in t) + f" {v!r}\n")


def read_kernel(path):
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "homsum-kernel" or header[1] != "v1":
            raise ValueError(f"{path}: bad kernel header")
        try:
            q = int(header[2].removeprefix("q="))
            n = int(header[3].removeprefix("N="))
        except ValueError:
            raise ValueError(f"{path}: bad kernel header") from None
        entries = {}
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != q + 1:
                raise ValueError(f"{path}:{lineno}: expected {q} indices and a value")
            idx = tuple(int(s) - 1 for s in parts[:q])
            if any(a >= b for a, b in zip(idx, idx[1:])):
                raise ValueError(f"{path}:{lineno}: indices must be strictly increasing")
            entries[idx] = float(parts[q])
    return SymmetricKernel(q, n, entries)


# -- named families ----------------------------------------------------------

def banded_kernel(n):
    """q=2 band f(i,j) = 1{|i-j|=1} / sqrt(2(n-1)), unit grid norm."""
    if n < 2:
        raise ValueError("banded kernel needs n >= 2")
    v = 1.0 / math.sqrt(2 * (n - 1))
    return SymmetricKernel(2, n, {(i, i + 1): v for i in range(n - 1)})


def banded_spike_family(n):
    """d = n quadratic kernels: the band at n^{-1/2} with row/col k at n^{-1/4}."""
    if n < 3:
        raise ValueError("banded-spike family needs n >= 3")
    lo, hi = n**-0.5, n**-0.25
    fam = []
    for k in range(n):
        entries = {}
        for i in range(n - 1):
            entries[(i, i + 1)] = hi if k in (i, i + 1) else lo
        fam.append(SymmetricKernel(2, n, entries))
    return fam


def banded_loo_family(n):
    """d = n quadratic kernels: the band with one rung left out, renormalized.

    Components stay strongly correlated while the per-kernel idiosyncratic
    part shrinks with n, so the joint Gaussian approximation improves along
    a size ladder at desk scale.
    """
    if n < 4:
        raise ValueError("leave-one-out banded family needs n >= 4")
    c = 1.0 / math.sqrt(2.0 * (n - 2))
    fam = []
    for k in range(n):
        drop = min(k, n - 2)
        entries = {(i, i + 1): c for i in range(n - 1) if i != drop}
        fam.append(SymmetricKernel(2, n, entries))
    return fam


def random_sparse_kernel(n, q, nnz, rng, normalize=True):
    """Random kernel: nnz index sets drawn without replacement, N(0,1) values."""
    total = math.comb(n, q)
    nnz = min(nnz, total)
    if nnz < 1:
        raise ValueError("no admissible index set (need nnz >= 1 and n >= q)")
    all_sets = list(combinations(range(n), q))
    chosen = rng.choice(total, size=nnz, replace=False)
    vals = rng.standard_normal(nnz)
    entries = {all_sets[c]: v for c, v in zip(chosen, vals)}
    f = SymmetricKernel(q, n, entries)
    if normalize and f.norm() > 0:
        scale = 1.0 / f.norm()
        f = SymmetricKernel(q, n, {t: v * scale for t, v in f.items()})
    return f
