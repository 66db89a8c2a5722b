"""Exterior algebra over R^n for small n.

Multivectors and exterior forms share one coefficient layout: a grade-k
element of R^n stores ``comb(n, k)`` reals indexed by the lexicographically
sorted k-subsets of ``range(n)``. Bases are orthonormal, so the pairing of a
form with a multivector is the coefficientwise dot product.

A grade that exceeds the ambient dimension is allowed and yields the zero
element with an empty coefficient array.
"""
from dataclasses import dataclass
from math import comb

import numpy as np

from ._subsets import compound, merge_sign, subset_index, subsets, wedge_table
from .errors import DimensionMismatchError, GradeError

__all__ = [
    "Multivector",
    "ExtForm",
    "Subspace",
    "basis_multivector",
    "basis_form",
    "vector",
    "pairing",
    "wedge",
    "contract",
    "hodge",
    "restrict_form",
    "push",
    "random_decomposable",
    "MAX_DIM",
]

MAX_DIM = 10
DEFAULT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class _Graded:
    n: int
    k: int
    coeffs: np.ndarray

    def __post_init__(self):
        if not 0 <= self.n <= MAX_DIM:
            raise DimensionMismatchError(f"ambient dimension {self.n} outside [0, {MAX_DIM}]")
        if self.k < 0:
            raise GradeError(f"negative grade {self.k}")
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        expected = comb(self.n, self.k) if self.k <= self.n else 0
        if c.size != expected:
            raise GradeError(f"grade {self.k} on R^{self.n} needs {expected} coefficients, got {c.size}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, n, k):
        return cls(n, k, np.zeros(comb(n, k) if k <= n else 0))

    def _check(self, other):
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.n != self.n or other.k != self.k:
            raise DimensionMismatchError("operands differ in ambient dimension or grade")

    def __add__(self, other):
        self._check(other)
        return type(self)(self.n, self.k, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return type(self)(self.n, self.k, self.coeffs - other.coeffs)

    def __neg__(self):
        return type(self)(self.n, self.k, -self.coeffs)

    def __mul__(self, scalar):
        return type(self)(self.n, self.k, float(scalar) * self.coeffs)

    __rmul__ = __mul__

    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    def allclose(self, other, atol=DEFAULT_TOL):
        self._check(other)
        return bool(np.allclose(self.coeffs, other.coeffs, rtol=0.0, atol=atol))

    def __repr__(self):
        name = type(self).__name__
        terms = [f"{c:+.4g}*{''.join(str(i + 1) for i in s) or '1'}"
                 for c, s in zip(self.coeffs, subsets(self.n, self.k)) if c != 0]
        return f"{name}(n={self.n}, k={self.k}, {' '.join(terms) or '0'})"


class Multivector(_Graded):
    """Element of the k-th exterior power of R^n."""

    def dual(self):
        """Same coefficients read as a form (orthonormal identification)."""
        return ExtForm(self.n, self.k, self.coeffs)


class ExtForm(_Graded):
    """Element of the k-th exterior power of the dual of R^n."""

    def dual(self):
        return Multivector(self.n, self.k, self.coeffs)

    def __call__(self, w):
        return pairing(self, w)


def basis_multivector(n, subset, coeff=1.0):
    """Coefficient times e_I for a subset of 0-based indices (any order)."""
    s = tuple(subset)
    sign = 1
    if len(set(s)) != len(s):
        return Multivector.zero(n, len(s))
    # bubble sort parity
    arr = list(s)
    for i in range(len(arr)):
        for j in range(len(arr) - 1 - i):
            if arr[j] > arr[j + 1]:
                arr[j], arr[j + 1] = arr[j + 1], arr[j]
                sign = -sign
    c = np.zeros(comb(n, len(s)))
    c[subset_index(n, len(s))[tuple(arr)]] = sign * coeff
    return Multivector(n, len(s), c)


def basis_form(n, subset, coeff=1.0):
    return basis_multivector(n, subset, coeff).dual()


def vector(v):
    """Grade-1 multivector from a coordinate vector."""
    v = np.asarray(v, dtype=float)
    return Multivector(v.size, 1, v)


def pairing(xi, w):
    """Evaluate a form on a multivector of the same grade."""
    if not isinstance(xi, ExtForm) or not isinstance(w, Multivector):
        raise TypeError("pairing expects (ExtForm, Multivector)")
    if xi.n != w.n or xi.k != w.k:
        raise DimensionMismatchError("pairing needs equal ambient dimension and grade")
    return float(xi.coeffs @ w.coeffs)


def wedge(a, b):
    """Exterior product of two multivectors (or two forms).

    Signs come from the inversion count of the merged index sequence. When the
    total grade exceeds n the zero element of that grade is returned.
    """
    if type(a) is not type(b):
        raise TypeError("wedge operands must both be multivectors or both forms")
    if a.n != b.n:
        raise DimensionMismatchError(f"ambient dimensions {a.n} and {b.n} differ")
    n, p, q = a.n, a.k, b.k
    cls = type(a)
    if p + q > n:
        return cls.zero(n, p + q)
    kk, ii, jj, ss = wedge_table(n, p, q)
    out = np.bincount(kk, weights=ss * a.coeffs[ii] * b.coeffs[jj], minlength=comb(n, p + q))
    return cls(n, p + q, out)


def contract(xi, v):
    """Interior product i_v xi, defined by <i_v xi, w> = <xi, v ^ w>."""
    if not isinstance(xi, ExtForm) or not isinstance(v, Multivector):
        raise TypeError("contract expects (ExtForm, Multivector)")
    if xi.n != v.n:
        raise DimensionMismatchError(f"ambient dimensions {xi.n} and {v.n} differ")
    n, p, k = xi.n, xi.k, v.k
    if k > p:
        raise GradeError(f"cannot contract a grade-{p} form with a grade-{k} multivector")
    if p > n:
        return ExtForm.zero(n, p - k)
    kk, ii, ll, ss = wedge_table(n, k, p - k)
    out = np.bincount(ll, weights=ss * v.coeffs[ii] * xi.coeffs[kk], minlength=comb(n, p - k))
    return ExtForm(n, p - k, out)


def hodge(a, orientation=1):
    """Hodge star in the standard orthonormal basis.

    ``*e_I = orientation * sign(I, I^c) e_{I^c}``, so that
    ``hodge(hodge(a)) == (-1)**(k*(n-k)) * a``.
    """
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    n, k = a.n, a.k
    if k > n:
        return type(a).zero(n, n - k) if n - k >= 0 else a
    out = np.zeros(comb(n, n - k))
    target = subset_index(n, n - k)
    for c, s in zip(a.coeffs, subsets(n, k)):
        rest = tuple(x for x in range(n) if x not in s)
        out[target[rest]] += orientation * merge_sign(s, rest) * c
    return type(a)(n, n - k, out)


class Subspace:
    """Linear subspace of R^n stored by an orthonormal n x d frame.

    The frame passed in may be any full-column-rank spanning matrix; it is
    re-orthonormalized with a thin QR factorization. Columns that are
    numerically dependent (relative R-diagonal below ``rank_tol``) are dropped.
    """

    __slots__ = ("_frame",)

    def __init__(self, frame, orthonormalize=True, rank_tol=1e-10):
        f = np.array(frame, dtype=float)
        if f.ndim == 1:
            f = f.reshape(-1, 1)
        if f.ndim != 2:
            raise DimensionMismatchError("frame must be a 2-D array")
        if f.shape[0] > MAX_DIM:
            raise DimensionMismatchError(f"ambient dimension {f.shape[0]} exceeds {MAX_DIM}")
        if orthonormalize and f.shape[1]:
            u, s, _ = np.linalg.svd(f, full_matrices=False)
            keep = s > rank_tol * max(1.0, s[0])
            if keep.all():
                q, r = np.linalg.qr(f)
                # fix signs so the frame is deterministic given its input
                q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
                f = q
            else:
                f = u[:, keep]
        f.setflags(write=False)
        self._frame = f

    @classmethod
    def span(cls, *vectors, n=None):
        if not vectors:
            if n is None:
                raise ValueError("need n for the zero subspace")
            return cls(np.zeros((n, 0)))
        return cls(np.column_stack(vectors))

    @classmethod
    def coordinate(cls, n, indices):
        """Span of the standard basis vectors with the given 0-based indices."""
        return cls(np.eye(n)[:, list(indices)])

    @classmethod
    def whole(cls, n):
        return cls(np.eye(n))

    @classmethod
    def zero(cls, n):
        return cls(np.zeros((n, 0)))

    @property
    def frame(self):
        return self._frame

    @property
    def n(self):
        return self._frame.shape[0]

    @property
    def d(self):
        return self._frame.shape[1]

    @property
    def dim(self):
        return self.d

    @property
    def codim(self):
        return self.n - self.d

    def projector(self):
        return self._frame @ self._frame.T

    def complement(self):
        """Orthogonal complement, with an orthonormal frame."""
        if self.d == 0:
            return Subspace(np.eye(self.n), orthonormalize=False)
        u, _, _ = np.linalg.svd(self._frame, full_matrices=True)
        return Subspace(u[:, self.d:].copy(), orthonormalize=False)

    def coords(self, x):
        """Frame coordinates of ambient vectors (columns of ``x``)."""
        return self._frame.T @ np.asarray(x, dtype=float)

    def contains(self, x, tol=DEFAULT_TOL):
        x = np.asarray(x, dtype=float).reshape(self.n, -1)
        resid = x - self._frame @ (self._frame.T @ x)
        scale = max(1.0, float(np.linalg.norm(x)))
        return bool(np.linalg.norm(resid) <= tol * scale)

    def contains_subspace(self, other, tol=DEFAULT_TOL):
        return self.contains(other.frame, tol) if other.d else True

    def rotate(self, g):
        return Subspace(np.asarray(g) @ self._frame)

    def is_orthonormal(self, tol=1e-12):
        return bool(np.allclose(self._frame.T @ self._frame, np.eye(self.d), atol=tol))

    def __repr__(self):
        return f"Subspace(n={self.n}, d={self.d})"


def push(w, E):
    """Map a multivector given in E's frame coordinates into R^n."""
    if w.n != E.d:
        raise DimensionMismatchError(f"multivector lives on R^{w.n}, subspace has dim {E.d}")
    return Multivector(E.n, w.k, compound(E.frame, w.k) @ w.coeffs)


def restrict_form(omega, E):
    """Restriction of a form on R^n to E, expressed in E's frame coordinates."""
    if omega.n != E.n:
        raise DimensionMismatchError(f"form lives on R^{omega.n}, subspace in R^{E.n}")
    if omega.k > E.d:
        raise GradeError(f"grade {omega.k} exceeds subspace dimension {E.d}")
    return ExtForm(E.d, omega.k, compound(E.frame, omega.k).T @ omega.coeffs)


def random_decomposable(n, k, rng):
    """Wedge of k independent standard Gaussian vectors in R^n."""
    if not 1 <= k <= n:
        raise GradeError(f"need 1 <= k <= n, got k={k}, n={n}")
    vs = rng.standard_normal((n, k))
    # the wedge of the columns is the column of k x k minors
    return Multivector(n, k, compound(vs, k)[:, 0])
