"""Double forms, the Plucker subspace Z_p and its invariant complement A_p.

A double form of bidegree (p, q) on R^n is stored as the C(n,p) x C(n,q)
matrix ``M[I, J] = omega(e_I, e_J)``; evaluation on multivectors is then
``v.coeffs @ M @ w.coeffs``.

Z_p is spanned numerically by sampled Plucker quadrics. A_p is the numerical
kernel of the Gray derivation restricted to symmetric forms.
"""
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial

import numpy as np
from scipy import sparse

from ._subsets import compound, merge_sign, subset_index, subsets, wedge_matrix
from .errors import (DegenerateBasisError, DimensionMismatchError, GradeError,
                     IncompatibleDataError, RankDeficientError)
from .exterior import ExtForm, Multivector, Subspace, contract, random_decomposable, wedge

__all__ = [
    "DoubleForm",
    "SymmetricDoubleForm",
    "dwedge",
    "gray_prime",
    "gray_matrix",
    "euclidean",
    "plucker_generator",
    "basis_Y",
    "basis_Z",
    "basis_A",
    "dim_Y",
    "project_ZA",
    "sym_power",
    "restrict_double",
    "lift_from_hyperplanes",
    "symmetry_check_vertical",
]

SVD_CUTOFF = 1e-8
COMPAT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class DoubleForm:
    n: int
    p: int
    q: int
    coeffs: np.ndarray

    def __post_init__(self):
        shape = (comb(self.n, self.p), comb(self.n, self.q))
        c = np.array(self.coeffs, dtype=float)
        if c.size == 0:
            c = c.reshape(shape)
        if c.shape != shape:
            raise DimensionMismatchError(
                f"bidegree ({self.p},{self.q}) on R^{self.n} needs shape {shape}, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, n, p, q):
        return cls(n, p, q, np.zeros((comb(n, p), comb(n, q))))

    @classmethod
    def from_tensor(cls, left, right):
        """Simple tensor of two forms (or two multivectors read as forms)."""
        if left.n != right.n:
            raise DimensionMismatchError("factors live in different ambient spaces")
        return cls(left.n, left.k, right.k, np.outer(left.coeffs, right.coeffs))

    def _check(self, other):
        if (self.n, self.p, self.q) != (other.n, other.p, other.q):
            raise DimensionMismatchError("double forms differ in ambient dimension or bidegree")

    def __add__(self, other):
        self._check(other)
        return _rewrap(self, other, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return _rewrap(self, other, self.coeffs - other.coeffs)

    def __neg__(self):
        return type(self)(self.n, self.p, self.q, -self.coeffs)

    def __mul__(self, scalar):
        return type(self)(self.n, self.p, self.q, float(scalar) * self.coeffs)

    __rmul__ = __mul__

    def __call__(self, v, w):
        return float(v.coeffs @ self.coeffs @ w.coeffs)

    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    def transpose(self):
        return DoubleForm(self.n, self.q, self.p, self.coeffs.T)

    def asymmetry(self):
        if self.p != self.q:
            raise GradeError("asymmetry needs p == q")
        return float(np.linalg.norm(self.coeffs - self.coeffs.T))

    def symmetric(self, tol=1e-12):
        """View as a SymmetricDoubleForm, symmetrizing away rounding."""
        if self.p != self.q:
            raise GradeError("symmetric forms need p == q")
        scale = max(1.0, self.norm())
        if self.asymmetry() > tol * scale:
            raise GradeError(f"form is not symmetric (asymmetry {self.asymmetry():.3g})")
        return SymmetricDoubleForm(self.n, self.p, self.p, 0.5 * (self.coeffs + self.coeffs.T))

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, p={self.p}, q={self.q})"


class SymmetricDoubleForm(DoubleForm):
    """Element of Y_p = Sym^2 of the p-th exterior power of the dual."""

    def __post_init__(self):
        super().__post_init__()
        if self.p != self.q:
            raise GradeError("symmetric double forms need p == q")
        c = self.coeffs
        if not np.allclose(c, c.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(c).max(initial=0.0)))):
            raise GradeError("coefficient matrix is not symmetric")

    @classmethod
    def zero(cls, n, p, q=None):
        return cls(n, p, p, np.zeros((comb(n, p), comb(n, p))))

    @classmethod
    def from_matrix(cls, n, p, m):
        m = np.asarray(m, dtype=float)
        return cls(n, p, p, 0.5 * (m + m.T))

    @property
    def k(self):
        return self.p

    def quadratic(self, v):
        """Value of the associated quadratic form v -> Q(v, v)."""
        return float(v.coeffs @ self.coeffs @ v.coeffs)


def _rewrap(a, b, coeffs):
    if isinstance(a, SymmetricDoubleForm) and isinstance(b, SymmetricDoubleForm):
        return SymmetricDoubleForm(a.n, a.p, a.q, coeffs)
    return DoubleForm(a.n, a.p, a.q, coeffs)


def dwedge(omega, eta):
    """Wedge product of double forms, (a (x) b) ^ (c (x) d) = (a^c) (x) (b^d)."""
    if omega.n != eta.n:
        raise DimensionMismatchError("double forms live in different ambient spaces")
    n, p, q, r, s = omega.n, omega.p, omega.q, eta.p, eta.q
    left = wedge_matrix(n, p, r)
    right = wedge_matrix(n, q, s)
    # kron over (I, I') x (J, J') ordered to match the wedge matrices
    big = np.einsum("ij,ab->iajb", omega.coeffs, eta.coeffs).reshape(
        comb(n, p) * comb(n, r), comb(n, q) * comb(n, s))
    out = left @ (right @ big.T).T
    out = np.asarray(out).reshape(comb(n, p + r) if p + r <= n else 0,
                                  comb(n, q + s) if q + s <= n else 0)
    res = DoubleForm(n, p + r, q + s, out)
    if isinstance(omega, SymmetricDoubleForm) and isinstance(eta, SymmetricDoubleForm):
        return res.symmetric(tol=1e-10)
    return res


@lru_cache(maxsize=None)
def gray_matrix(n, p, q):
    """Sparse matrix of omega -> omega' from D_{p,q} to D_{p+1,q-1}.

    Acts on row-major flattened coefficient matrices.
    """
    if q < 1:
        raise GradeError("the Gray derivation needs q >= 1")
    rows_k = subsets(n, p + 1)
    rows_l = subsets(n, q - 1)
    ip = subset_index(n, p)
    iq = subset_index(n, q)
    ncols_q = comb(n, q)
    data, ri, ci = [], [], []
    nl = len(rows_l)
    for a, K in enumerate(rows_k):
        for b, L in enumerate(rows_l):
            row = a * nl + b
            for j, kj in enumerate(K):
                if kj in L:
                    continue
                rest = K[:j] + K[j + 1:]
                sign = merge_sign((kj,), L)
                target = tuple(sorted((kj,) + L))
                data.append((-1) ** j * sign)
                ri.append(row)
                ci.append(ip[rest] * ncols_q + iq[target])
    shape = (len(rows_k) * nl, comb(n, p) * ncols_q)
    return sparse.csr_matrix((np.array(data, dtype=float), (ri, ci)), shape=shape)


def gray_prime(omega):
    """Gray's derivation D_{p,q} -> D_{p+1,q-1}.

    omega'(v_1^...^v_{p+1}, w_2^...^w_q)
        = sum_j (-1)^(j+1) omega(v_1^..(no v_j)..^v_{p+1}, v_j^w_2^...^w_q)
    """
    n, p, q = omega.n, omega.p, omega.q
    if q < 1:
        raise GradeError("the Gray derivation needs q >= 1")
    if p + 1 > n:
        return DoubleForm.zero(n, p + 1, q - 1)
    out = gray_matrix(n, p, q) @ omega.coeffs.reshape(-1)
    return DoubleForm(n, p + 1, q - 1, out.reshape(comb(n, p + 1), comb(n, q - 1)))


def euclidean(n):
    """The Euclidean structure P as a symmetric (1,1)-form."""
    return SymmetricDoubleForm(n, 1, 1, np.eye(n))


def plucker_generator(xi, eta):
    """Symmetric form of the Plucker quadric v -> <i_v xi ^ eta, v>.

    ``xi`` has grade p+1 and ``eta`` grade p-1; both should be decomposable.
    """
    if not isinstance(xi, ExtForm) or not isinstance(eta, ExtForm):
        raise TypeError("plucker_generator expects two ExtForms")
    if xi.n != eta.n:
        raise DimensionMismatchError("xi and eta live in different ambient spaces")
    n, p = xi.n, xi.k - 1
    if p < 1 or eta.k != p - 1:
        raise GradeError(f"need grades (p+1, p-1) with p >= 1, got ({xi.k}, {eta.k})")
    # column I of B: the form i_{e_I} xi ^ eta, a grade-p form
    cols = []
    for I in subsets(n, p):
        e_I = Multivector(n, p, np.eye(comb(n, p))[subset_index(n, p)[I]])
        cols.append(wedge(contract(xi, e_I), eta).coeffs)
    b = np.array(cols)  # b[I, J] = <i_{e_I} xi ^ eta, e_J>
    if b.size == 0:
        b = np.zeros((comb(n, p), comb(n, p)))
    return SymmetricDoubleForm(n, p, p, 0.5 * (b + b.T))


def dim_Y(n, p):
    m = comb(n, p)
    return m * (m + 1) // 2


@lru_cache(maxsize=None)
def _basis_Y_matrix(n, p):
    """Orthonormal (Frobenius) basis of symmetric m x m matrices, flattened."""
    m = comb(n, p)
    vecs = []
    for a in range(m):
        for b in range(a, m):
            e = np.zeros((m, m))
            if a == b:
                e[a, a] = 1.0
            else:
                e[a, b] = e[b, a] = 1.0 / np.sqrt(2.0)
            vecs.append(e.reshape(-1))
    out = np.array(vecs).T if vecs else np.zeros((m * m, 0))
    out.setflags(write=False)
    return out


def basis_Y(n, p):
    m = comb(n, p)
    return [SymmetricDoubleForm(n, p, p, v.reshape(m, m)) for v in _basis_Y_matrix(n, p).T]


def _numerical_range(mat, cutoff):
    """Orthonormal basis of the column space, singular values above cutoff*s_max."""
    if mat.shape[1] == 0 or mat.shape[0] == 0:
        return np.zeros((mat.shape[0], 0))
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((mat.shape[0], 0))
    return u[:, s > cutoff * s[0]]


@lru_cache(maxsize=None)
def _basis_Z_matrix(n, p, seed=0):
    m = comb(n, p)
    if p < 1 or p >= n:
        return np.zeros((m * m, 0))
    rng = np.random.default_rng([seed, n, p, 0x5A])
    samples = dim_Y(n, p) + 20
    gens = []
    for _ in range(samples):
        xi = random_decomposable(n, p + 1, rng).dual()
        xi = xi * (1.0 / xi.norm())
        if p - 1 >= 1:
            eta = random_decomposable(n, p - 1, rng).dual()
            eta = eta * (1.0 / eta.norm())
        else:
            eta = ExtForm(n, 0, [1.0])
        gens.append(plucker_generator(xi, eta).coeffs.reshape(-1))
    g = np.array(gens).T
    # absolute cutoff: generators are unit scale, rounding noise sits near 1e-16
    u, s, _ = np.linalg.svd(g, full_matrices=False)
    out = u[:, s > SVD_CUTOFF * max(1.0, s[0] if s.size else 1.0)].copy()
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _basis_A_matrix(n, p):
    m = comb(n, p)
    y = _basis_Y_matrix(n, p)
    if p + 1 > n or y.shape[1] == 0:
        out = y.copy()
    else:
        g = gray_matrix(n, p, p) @ y
        _, s, vt = np.linalg.svd(np.asarray(g), full_matrices=True)
        smax = s[0] if s.size else 0.0
        rank = int(np.sum(s > SVD_CUTOFF * smax)) if smax > 0 else 0
        kernel = vt[rank:].T
        out = y @ kernel
    out.setflags(write=False)
    assert out.shape[0] == m * m
    return out


def basis_Z(n, p):
    """List of symmetric forms spanning Z_p(R^n), orthonormal in Frobenius norm."""
    m = comb(n, p)
    return [SymmetricDoubleForm.from_matrix(n, p, v.reshape(m, m)) for v in _basis_Z_matrix(n, p).T]


def basis_A(n, p):
    """List of symmetric forms spanning A_p(R^n) = ker of gray_prime on Y_p."""
    m = comb(n, p)
    return [SymmetricDoubleForm.from_matrix(n, p, v.reshape(m, m)) for v in _basis_A_matrix(n, p).T]


def project_ZA(Q, tol=1e-10):
    """Split Q = Q_Z + Q_A along Y_p = Z_p (+) A_p.

    Raises DegenerateBasisError when the concatenated bases do not reproduce Q
    to relative tolerance ``tol``.
    """
    n, p = Q.n, Q.p
    if Q.p != Q.q:
        raise GradeError("project_ZA needs a (p,p)-form")
    if p > n:
        raise GradeError(f"p={p} exceeds n={n}")
    m = comb(n, p)
    bz = _basis_Z_matrix(n, p)
    ba = _basis_A_matrix(n, p)
    basis = np.hstack([bz, ba])
    target = Q.coeffs.reshape(-1)
    coef, *_ = np.linalg.lstsq(basis, target, rcond=None)
    qz = (bz @ coef[:bz.shape[1]]).reshape(m, m)
    qa = (ba @ coef[bz.shape[1]:]).reshape(m, m)
    resid = np.linalg.norm(target - basis @ coef)
    if resid > tol * max(1.0, np.linalg.norm(target)):
        raise DegenerateBasisError(f"Z/A projection residual {resid:.3g} above {tol:g}")
    return (SymmetricDoubleForm.from_matrix(n, p, qz),
            SymmetricDoubleForm.from_matrix(n, p, qa))


def sym_power(Q, p):
    """Normalized wedge power Q^p / p! of a symmetric (1,1)-form."""
    if Q.p != 1 or Q.q != 1:
        raise GradeError("sym_power needs a (1,1)-form")
    if p < 1:
        raise GradeError("sym_power needs p >= 1")
    out = Q
    for _ in range(p - 1):
        out = dwedge(out, Q)
    return SymmetricDoubleForm.from_matrix(Q.n, p, out.coeffs / factorial(p))


def restrict_double(Q, H):
    """Restriction of a (p,q)-form to a subspace, in the subspace's frame coordinates.

    Any subspace dimension is accepted; hyperplanes are the usual case.
    """
    if Q.n != H.n:
        raise DimensionMismatchError(f"form lives on R^{Q.n}, subspace in R^{H.n}")
    cp = compound(H.frame, Q.p)
    cq = compound(H.frame, Q.q)
    out = cp.T @ Q.coeffs @ cq
    if isinstance(Q, SymmetricDoubleForm):
        return SymmetricDoubleForm.from_matrix(H.d, Q.p, out)
    return DoubleForm(H.d, Q.p, Q.q, out)


def lift_from_hyperplanes(samples, tol=COMPAT_TOL, check_pairs=False):
    """Recover Q in A_k(R^n) from its restrictions to finitely many hyperplanes.

    ``samples`` is a sequence of (H, Q_H) pairs. The unknown coefficients of Q
    in the A_k basis are found by least squares over all restriction
    equations; the stacked system must have full column rank.

    Raises RankDeficientError for too few or degenerate hyperplanes and
    IncompatibleDataError when the best lift misses some Q_H by more than
    ``tol`` (relative to the data scale).
    """
    samples = list(samples)
    if not samples:
        raise RankDeficientError("no hyperplanes given")
    n = samples[0][0].n
    k = samples[0][1].p
    for H, QH in samples:
        if H.n != n or H.d != n - 1:
            raise DimensionMismatchError("every sample must be a hyperplane of the same R^n")
        if QH.n != n - 1 or QH.p != k or QH.q != k:
            raise DimensionMismatchError("data must be (k,k)-forms on the hyperplanes")
    if check_pairs:
        _check_hyperplane_pairs(samples, tol)
    ba = _basis_A_matrix(n, k)
    m = comb(n, k)
    mats = ba.T.reshape(-1, m, m)
    rows, rhs = [], []
    iu = None
    for H, QH in samples:
        c = compound(H.frame, k)
        restricted = c.T @ mats @ c
        if iu is None:
            iu = np.triu_indices(c.shape[1])
        rows.append(restricted[:, iu[0], iu[1]].T)
        rhs.append(QH.coeffs[iu])
    a = np.vstack(rows)
    b = np.concatenate(rhs)
    s = np.linalg.svd(a, compute_uv=False)
    rank = int(np.sum(s > SVD_CUTOFF * s[0])) if s.size and s[0] > 0 else 0
    if rank < ba.shape[1]:
        raise RankDeficientError(f"restriction system has rank {rank} < dim A = {ba.shape[1]}")
    coef, *_ = np.linalg.lstsq(a, b, rcond=None)
    Q = SymmetricDoubleForm.from_matrix(n, k, (ba @ coef).reshape(m, m))
    scale = max(1.0, max(QH.norm() for _, QH in samples))
    worst = max((restrict_double(Q, H) - QH).norm() for H, QH in samples)
    if worst > tol * scale:
        raise IncompatibleDataError(f"lift misses the data by {worst:.3g} (tolerance {tol:g})")
    return Q


def _check_hyperplane_pairs(samples, tol):
    from .arrangements import intersect

    for a in range(len(samples)):
        Ha, Qa = samples[a]
        for b in range(a + 1, len(samples)):
            Hb, Qb = samples[b]
            G = intersect(Ha, Hb)
            if G.d < Qa.p:
                continue
            ga = Subspace(Ha.coords(G.frame), orthonormalize=False)
            gb = Subspace(Hb.coords(G.frame), orthonormalize=False)
            diff = restrict_double(Qa, ga) - restrict_double(Qb, gb)
            if diff.norm() > tol * max(1.0, Qa.norm(), Qb.norm()):
                raise IncompatibleDataError(f"samples {a} and {b} disagree on their intersection")


def _perp_compound(xi, p):
    x = np.asarray(xi, dtype=float)
    x = x / np.linalg.norm(x)
    return compound(np.eye(x.size) - np.outer(x, x), p)


def symmetry_check_vertical(field, points, tol=1e-8):
    """Maximal asymmetry and Gray residual of a vertical double-form field.

    ``points`` are unit vectors xi on the sphere and ``field`` is either a
    callable xi -> DoubleForm or a sequence of DoubleForms aligned with
    ``points``. Verticality means every value is annihilated by xi in both
    slots, i.e. it is unchanged by projecting both slots to xi^perp.

    Returns ``(max_asymmetry, max_gray_residual)``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    values = [field(x) for x in pts] if callable(field) else list(field)
    if len(values) != len(pts):
        raise DimensionMismatchError("one field value per sample point is required")
    asym = 0.0
    gray = 0.0
    for x, R in zip(pts, values):
        if R.p != R.q:
            raise GradeError("field values must have bidegree (p,p)")
        c = _perp_compound(x, R.p)
        vert = np.linalg.norm(R.coeffs - c.T @ R.coeffs @ c)
        if vert > tol * max(1.0, R.norm()):
            raise IncompatibleDataError(f"field value at {x} is not vertical (residual {vert:.3g})")
        asym = max(asym, R.asymmetry())
        if R.p >= 1 and R.p + 1 <= R.n:
            gray = max(gray, gray_prime(R).norm())
    return asym, gray
