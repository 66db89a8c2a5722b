"""Sampling and quadrature on Grassmannians, and tangent-direction predicates.

Samples are stored both as :class:`Subspace` objects and as one stacked
``(count, n, k)`` array of frames so that cosines against a fixed subspace
are computed in a single batched determinant.
"""
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatchError, PreconditionError
from .exterior import Subspace

__all__ = [
    "GrassmannSample",
    "TangentField",
    "sample_grassmannian",
    "cosine",
    "cosines",
    "cosine_transform",
    "projector_features",
    "random_test_functions",
    "evaluation_rank",
    "RankResult",
    "perfectly_nonparallel_check",
    "self_avoiding_check",
    "PairCheck",
    "NEAR_DIAGONAL_STEPS",
]

NEAR_DIAGONAL_STEPS = 5
RANK_CUTOFF = 1e-6


class GrassmannSample:
    """Quadrature nodes on Gr_k(R^n) with nonnegative weights summing to 1."""

    def __init__(self, frames, weights=None):
        f = np.array(frames, dtype=float)
        if f.ndim != 3:
            raise DimensionMismatchError("frames must have shape (count, n, k)")
        count = f.shape[0]
        w = np.full(count, 1.0 / count) if weights is None else np.array(weights, dtype=float)
        if w.shape != (count,) or np.any(w < 0):
            raise ValueError("weights must be nonnegative, one per node")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        f.setflags(write=False)
        w.setflags(write=False)
        self.frames = f
        self.weights = w

    @classmethod
    def from_subspaces(cls, subspaces, weights=None):
        subs = list(subspaces)
        if len({(E.n, E.d) for E in subs}) != 1:
            raise DimensionMismatchError("all subspaces must share (n, k)")
        return cls(np.stack([E.frame for E in subs]), weights)

    @property
    def n(self):
        return self.frames.shape[1]

    @property
    def k(self):
        return self.frames.shape[2]

    def __len__(self):
        return self.frames.shape[0]

    @property
    def subspaces(self):
        return [Subspace(f, orthonormalize=False) for f in self.frames]

    def projectors(self):
        return self.frames @ np.swapaxes(self.frames, 1, 2)

    def rotate(self, g):
        return GrassmannSample(np.asarray(g) @ self.frames, self.weights)


@dataclass(frozen=True, eq=False)
class TangentField:
    """Points x_t of a curve with unit tangent directions v_t on a parameter grid."""

    points: np.ndarray
    tangents: np.ndarray
    periodic: bool = False

    def __post_init__(self):
        x = np.array(self.points, dtype=float)
        v = np.array(self.tangents, dtype=float)
        if x.ndim != 2 or x.shape != v.shape:
            raise DimensionMismatchError("points and tangents must both have shape (T, n)")
        if np.max(np.abs(np.linalg.norm(v, axis=1) - 1.0), initial=0.0) > 1e-12:
            raise ValueError("tangent directions must be unit vectors")
        for a in (x, v):
            a.setflags(write=False)
        object.__setattr__(self, "points", x)
        object.__setattr__(self, "tangents", v)

    @classmethod
    def from_derivative(cls, points, derivative, periodic=False):
        der = np.asarray(derivative, dtype=float)
        norms = np.linalg.norm(der, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise PreconditionError("curve is not immersed: vanishing derivative")
        return cls(points, der / norms, periodic)

    @classmethod
    def from_curve(cls, func, derivative, t, periodic=False):
        t = np.asarray(t, dtype=float)
        return cls.from_derivative(np.array([func(s) for s in t]),
                                   np.array([derivative(s) for s in t]), periodic)


def sample_grassmannian(n, k, count, rng):
    """``count`` uniform k-planes: Q factors of Gaussian n x k matrices, equal weights."""
    if not 1 <= k <= n - 1:
        raise PreconditionError(f"need 1 <= k <= n-1, got k={k}, n={n}")
    q, r = np.linalg.qr(rng.standard_normal((count, n, k)))
    # sign fix makes the Q factor Haar distributed rather than dependent on LAPACK conventions
    signs = np.sign(np.diagonal(r, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    return GrassmannSample(q * signs[:, None, :])


def cosine(E, F):
    """|det(A^T B)| for orthonormal frames A, B of equal-dimensional E and F."""
    if E.n != F.n or E.d != F.d:
        raise DimensionMismatchError(f"cosine needs equal (n, k): ({E.n},{E.d}) vs ({F.n},{F.d})")
    if E.d == 0:
        return 1.0
    return float(min(1.0, abs(np.linalg.det(E.frame.T @ F.frame))))


def cosines(E, sample):
    """Vector of cosine(E, F_j) over the nodes of a sample."""
    if E.n != sample.n or E.d != sample.k:
        raise DimensionMismatchError("subspace and sample differ in (n, k)")
    return np.minimum(1.0, np.abs(np.linalg.det(E.frame.T @ sample.frames)))


def cosine_transform(h, E, sample):
    """Quadrature value of the integral of |cos(E, F)| h(F) dF."""
    h = np.asarray(h, dtype=float)
    if h.shape[0] != len(sample):
        raise DimensionMismatchError(f"{h.shape[0]} values for {len(sample)} nodes")
    return (sample.weights * cosines(E, sample)) @ h


def projector_features(sample, degree=3):
    """All monomials of degree <= ``degree`` in the upper-triangular projector entries."""
    P = sample.projectors()
    iu = np.triu_indices(sample.n)
    z = P[:, iu[0], iu[1]]
    z = np.hstack([np.ones((z.shape[0], 1)), z])
    cols = [np.prod(z[:, list(c)], axis=1)
            for c in combinations_with_replacement(range(z.shape[1]), degree)]
    return np.column_stack(cols)


def random_test_functions(sample, count, rng, degree=3):
    """Values of ``count`` random polynomials of the projector on the sample nodes."""
    feats = projector_features(sample, degree)
    return feats @ rng.standard_normal((feats.shape[1], count))


class RankResult(NamedTuple):
    rank: int
    singular_values: np.ndarray

    @property
    def sigma_min(self):
        return float(self.singular_values[-1]) if self.singular_values.size else 0.0


def evaluation_rank(points, basis_count, rng, sample=None, nodes=4000):
    """Numerical rank of M[i, j] = cosine transform of h_j at points[i].

    The h_j are random polynomials of degree <= 3 in the projector entries,
    integrated against a shared uniform sample (``nodes`` points unless an
    explicit ``sample`` is given). Singular values above 1e-6 of the largest
    count toward the rank.
    """
    points = list(points)
    if not points:
        raise PreconditionError("need at least one point")
    if len(points) > basis_count:
        raise PreconditionError("rank experiment needs N <= basis_count")
    n, k = points[0].n, points[0].d
    if sample is None:
        sample = sample_grassmannian(n, k, nodes, rng)
    H = random_test_functions(sample, basis_count, rng)
    K = np.stack([cosines(E, sample) for E in points]) * sample.weights
    s = np.linalg.svd(K @ H, compute_uv=False)
    rank = int(np.sum(s > RANK_CUTOFF * s[0])) if s[0] > 0 else 0
    return RankResult(rank, s)


class PairCheck(NamedTuple):
    ok: bool
    worst_pair: tuple
    worst_value: float


def _far_pairs(T, cutoff, periodic):
    idx = np.arange(T)
    gap = np.abs(idx[:, None] - idx[None, :])
    if periodic:
        gap = np.minimum(gap, T - gap)
    return np.triu(gap > cutoff)


def perfectly_nonparallel_check(field, tol=1e-6, cutoff=NEAR_DIAGONAL_STEPS):
    """No two grid tangents beyond ``cutoff`` steps apart span the same line.

    Returns ``PairCheck(ok, (s, t), value)`` where value is the smallest
    1 - |<v_s, v_t>| over the far pairs. The grid must resolve the curve so
    that the immersion handles the near-diagonal pairs; that is the caller's
    responsibility.
    """
    v = field.tangents
    far = _far_pairs(v.shape[0], cutoff, field.periodic)
    if not far.any():
        return PairCheck(True, (), np.inf)
    gap = np.maximum(0.0, 1.0 - np.abs(v @ v.T))
    gap = np.where(far, gap, np.inf)
    s, t = np.unravel_index(np.argmin(gap), gap.shape)
    worst = float(gap[s, t])
    return PairCheck(worst > tol, (int(s), int(t)), worst)


def self_avoiding_check(subspaces, tol=1e-6, cutoff=NEAR_DIAGONAL_STEPS, periodic=False):
    """No two grid subspaces beyond ``cutoff`` steps share a line.

    The value for a pair is 1 minus their largest principal cosine.
    """
    subs = list(subspaces)
    far = _far_pairs(len(subs), cutoff, periodic)
    best = (True, (), np.inf)
    for s, t in zip(*np.nonzero(far)):
        top = np.linalg.svd(subs[s].frame.T @ subs[t].frame, compute_uv=False)
        value = max(0.0, float(1.0 - (top[0] if top.size else 0.0)))
        if value < best[2]:
            best = (value > tol, (int(s), int(t)), value)
    return PairCheck(*best)
