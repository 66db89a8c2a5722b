"""Finite subspace arrangements and their intersection lattice.

All lattice dimensions come from one routine, :func:`intersect`, which reads
intersections off principal angles. Predicates and the adapted-basis
construction only ever consult the memoized lattice, so tie-breaking is
consistent everywhere.
"""
import threading
from itertools import combinations
from typing import NamedTuple, Optional

import numpy as np

from .errors import DimensionMismatchError, PreconditionError
from .exterior import Subspace

__all__ = [
    "Arrangement",
    "Check",
    "AdaptedBasis",
    "intersect",
    "span_of",
    "is_minimally_intersecting",
    "is_semi_generic",
    "adapted_bases",
    "quotient_arrangement",
    "random_subspace",
    "random_minimally_intersecting",
    "random_general_position_hyperplanes",
    "COSINE_CUTOFF",
]

COSINE_CUTOFF = 1e-10


def intersect(E, F, tol=COSINE_CUTOFF):
    """E cap F from the principal vectors whose cosine exceeds 1 - tol."""
    if E.n != F.n:
        raise DimensionMismatchError(f"subspaces live in R^{E.n} and R^{F.n}")
    if E.d == 0 or F.d == 0:
        return Subspace.zero(E.n)
    u, s, _ = np.linalg.svd(E.frame.T @ F.frame)
    keep = s > 1.0 - tol
    if not keep.any():
        return Subspace.zero(E.n)
    return Subspace(E.frame @ u[:, :keep.sum()])


def span_of(subspaces, n=None):
    """Sum of subspaces, orthonormalized."""
    subspaces = list(subspaces)
    if not subspaces:
        if n is None:
            raise ValueError("need n for an empty sum")
        return Subspace.zero(n)
    frames = [E.frame for E in subspaces if E.d]
    if not frames:
        return Subspace.zero(subspaces[0].n)
    return Subspace(np.hstack(frames))


class Check(NamedTuple):
    ok: bool
    witness: Optional[tuple] = None

    def __bool__(self):
        return self.ok


class Arrangement:
    """Immutable list of subspaces of a common R^n with a lazy lattice.

    ``lattice(I)`` returns the intersection E_I for a sorted tuple of member
    indices; the empty tuple maps to the whole space.
    """

    def __init__(self, subspaces, n=None):
        subs = tuple(subspaces)
        if not subs and n is None:
            raise ValueError("an empty arrangement needs n")
        self._n = subs[0].n if subs else n
        for E in subs:
            if E.n != self._n:
                raise DimensionMismatchError("all members must share the ambient dimension")
        self._subspaces = subs
        self._lattice = {}
        self._lock = threading.Lock()

    @property
    def n(self):
        return self._n

    @property
    def subspaces(self):
        return self._subspaces

    def __len__(self):
        return len(self._subspaces)

    def __getitem__(self, i):
        return self._subspaces[i]

    def __iter__(self):
        return iter(self._subspaces)

    def lattice(self, index_set):
        key = tuple(sorted(index_set))
        with self._lock:
            hit = self._lattice.get(key)
        if hit is not None:
            return hit
        if not key:
            out = Subspace.whole(self._n)
        elif len(key) == 1:
            out = self._subspaces[key[0]]
        else:
            out = intersect(self.lattice(key[:-1]), self._subspaces[key[-1]])
        with self._lock:
            self._lattice.setdefault(key, out)
        return out

    def dim(self, index_set):
        return self.lattice(index_set).d

    def span(self):
        return span_of(self._subspaces, self._n)

    def subset(self, indices):
        return Arrangement([self._subspaces[i] for i in indices], n=self._n)

    def in_coordinates(self, W):
        """Members (assumed inside W) expressed in W's frame coordinates."""
        return Arrangement([Subspace(W.coords(E.frame)) if E.d else Subspace.zero(W.d)
                            for E in self._subspaces], n=W.d)

    def __repr__(self):
        return f"Arrangement(n={self._n}, dims={[E.d for E in self._subspaces]})"


def _nonempty_subsets(indices):
    for r in range(1, len(indices) + 1):
        yield from combinations(indices, r)


def is_minimally_intersecting(arr, within=None, indices=None):
    """codim E_I == sum of codim E_i for every nonempty I.

    Codimensions are taken inside ``within`` (a subspace containing all
    members) when given, else inside R^n. ``indices`` restricts the check to a
    sub-family. Returns ``Check(ok, witness)`` with the first violating I.
    """
    idx = tuple(range(len(arr))) if indices is None else tuple(indices)
    if not idx:
        raise PreconditionError("empty arrangement")
    total = arr.n if within is None else within.d
    for I in _nonempty_subsets(idx):
        lhs = total - arr.dim(I)
        rhs = sum(total - arr.dim((i,)) for i in I)
        if lhs != rhs:
            return Check(False, I)
    return Check(True, None)


def is_semi_generic(arr):
    """Every sub-family with nonzero intersection is minimally intersecting in its span."""
    if len(arr) == 0:
        raise PreconditionError("empty arrangement")
    for I in _nonempty_subsets(tuple(range(len(arr)))):
        if arr.dim(I) == 0:
            continue
        W = span_of([arr[i] for i in I])
        if not is_minimally_intersecting(arr, within=W, indices=I):
            return Check(False, I)
    return Check(True, None)


class AdaptedBasis(NamedTuple):
    """A basis of R^n with designated column subsets spanning each member.

    ``matrix`` has the common part b, then the completions c_1..c_N, then an
    orthonormal completion of the span to R^n. ``members[i]`` lists the column
    indices forming the basis of E_i.
    """
    matrix: np.ndarray
    members: tuple
    common: tuple
    completions: tuple
    outside: tuple

    def member_basis(self, i):
        return self.matrix[:, list(self.members[i])]


def _complete(base, target):
    """Columns extending the orthonormal columns ``base`` to a basis of ``target``."""
    if target.d == 0:
        return np.zeros((target.n, 0))
    t = target.frame
    if base.shape[1]:
        t = t - base @ (base.T @ t)
    u, s, _ = np.linalg.svd(t, full_matrices=False)
    need = target.d - base.shape[1]
    if need < 0:
        raise PreconditionError("completion target is smaller than its base")
    return _sign_fixed(u[:, :need])


def _sign_fixed(cols):
    """Flip columns so the largest-magnitude entry of each is positive."""
    if cols.shape[1] == 0:
        return cols
    lead = cols[np.argmax(np.abs(cols), axis=0), np.arange(cols.shape[1])]
    return cols * np.where(lead < 0, -1.0, 1.0)


def adapted_bases(arr, tol=1e-8):
    """Bases e_i of E_i whose union is a basis of the span.

    The construction takes a basis b of F = cap E_i, completes it by c_j to a
    basis of F_j = cap_{i != j} E_i, and sets e_i = b + (c_j for j != i).
    Requires the arrangement to be minimally intersecting within its span.
    """
    N = len(arr)
    span = arr.span()
    if not is_minimally_intersecting(arr, within=span):
        raise PreconditionError("arrangement is not minimally intersecting within its span")
    all_idx = tuple(range(N))
    F = arr.lattice(all_idx)
    b = _sign_fixed(F.frame)
    completions = []
    for j in range(N):
        others = tuple(i for i in all_idx if i != j)
        Fj = arr.lattice(others) if others else span
        completions.append(_complete(b, Fj))
    cols = [b] + completions
    mat = np.hstack(cols) if cols else np.zeros((arr.n, 0))
    extra = _complete(_orthonormal(mat), Subspace.whole(arr.n)) if mat.shape[1] < arr.n else np.zeros((arr.n, 0))
    full = np.hstack([mat, extra])
    if full.shape[1] != arr.n:
        raise PreconditionError("adapted basis has the wrong size; arrangement is degenerate")
    offsets = np.cumsum([0] + [c.shape[1] for c in cols])
    common = tuple(range(offsets[0], offsets[1]))
    comp = tuple(tuple(range(offsets[j + 1], offsets[j + 2])) for j in range(N))
    outside = tuple(range(mat.shape[1], arr.n))
    members = tuple(common + sum((comp[j] for j in range(N) if j != i), ()) for i in range(N))
    for i, cols_i in enumerate(members):
        if len(cols_i) != arr[i].d:
            raise PreconditionError(f"member {i}: {len(cols_i)} basis vectors for dimension {arr[i].d}")
        if not arr[i].contains(full[:, list(cols_i)], tol):
            raise PreconditionError(f"member {i}: adapted basis leaves the subspace")
    s = np.linalg.svd(full, compute_uv=False)
    if s[-1] < tol * s[0]:
        raise PreconditionError("union of adapted bases is numerically dependent")
    return AdaptedBasis(full, members, common, comp, outside)


def _orthonormal(mat):
    if mat.shape[1] == 0:
        return mat
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    return u[:, s > 1e-12 * s[0]]


def quotient_arrangement(arr, F, tol=1e-9):
    """Members E_i / F realized as E_i cap F^perp in F^perp frame coordinates."""
    for i, E in enumerate(arr):
        if not E.contains_subspace(F, tol):
            raise PreconditionError(f"F is not contained in member {i}")
    W = F.complement()
    members = [intersect(E, W) for E in arr]
    return Arrangement([Subspace(W.coords(M.frame)) if M.d else Subspace.zero(W.d) for M in members],
                       n=W.d)


def random_subspace(n, d, rng):
    return Subspace(rng.standard_normal((n, d))) if d else Subspace.zero(n)


def random_minimally_intersecting(n, codims, rng, attempts=100):
    """Gaussian subspaces with prescribed codimensions, rejection-checked."""
    if sum(codims) > n:
        raise PreconditionError("codimensions sum beyond n cannot be minimally intersecting")
    for _ in range(attempts):
        arr = Arrangement([random_subspace(n, n - c, rng) for c in codims], n=n)
        if is_minimally_intersecting(arr):
            return arr
    raise PreconditionError("no minimally intersecting sample within the attempt budget")


def random_general_position_hyperplanes(n, count, rng, attempts=100):
    """Hyperplanes with every subfamily of size <= n intersecting in the generic dimension."""
    for _ in range(attempts):
        arr = Arrangement([random_subspace(n, n - 1, rng) for _ in range(count)], n=n)
        ok = all(arr.dim(I) == max(n - len(I), 0)
                 for r in range(1, min(count, n) + 1)
                 for I in combinations(range(count), r))
        if ok:
            return arr
    raise PreconditionError("no general-position sample within the attempt budget")
