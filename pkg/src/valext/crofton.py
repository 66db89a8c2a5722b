"""Monte Carlo and exact-quadrature Crofton integrals for convex bodies.

Invariant measures are realized by sampling: an affine plane of codimension
k has a uniformly distributed normal k-frame and an offset uniform in the
k-ball of radius R of the normal space. Constants of integral geometry are
never used in closed form; experiments compare ratios or calibrate against a
reference body run through the same sampler.
"""
import math
import time
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

import numpy as np
from scipy.signal import fftconvolve
from scipy.spatial import Delaunay

from .errors import DimensionMismatchError, PreconditionError
from .exterior import Subspace
from .grassmann import sample_grassmannian
from .rng import shard_sizes

__all__ = [
    "AffinePlane",
    "Flag",
    "HalfSpaceElement",
    "ConvexBody",
    "Ball",
    "Polytope",
    "Segment",
    "Estimate",
    "min_norm_point",
    "euler_chi_convex",
    "sample_affine_planes",
    "crofton_even_estimate",
    "slice_support",
    "eta_halfspace",
    "regular_simplex_configuration",
    "crofton_odd_simplex",
    "OddSimplexReport",
    "exp_kernel_constant",
    "exp_kernel_pair",
    "ExpKernelResult",
    "sample_lines",
    "crofton_curve_length",
    "circle_polyline",
]

HIT_TOL = 1e-10


# ---------------------------------------------------------------- geometry

@dataclass(frozen=True, eq=False)
class AffinePlane:
    """``direction + offset`` with the offset orthogonal to the direction."""

    direction: Subspace
    offset: np.ndarray

    def __post_init__(self):
        o = np.array(self.offset, dtype=float).reshape(-1)
        if o.size != self.direction.n:
            raise DimensionMismatchError("offset and direction live in different spaces")
        along = self.direction.coords(o)
        if np.linalg.norm(along) > 1e-12 * max(1.0, np.linalg.norm(o)):
            raise ValueError("offset must be orthogonal to the direction")
        o.setflags(write=False)
        object.__setattr__(self, "offset", o)

    @classmethod
    def through(cls, direction, point):
        """The translate of ``direction`` through an arbitrary point."""
        x = np.asarray(point, dtype=float)
        return cls(direction, x - direction.frame @ direction.coords(x))

    @property
    def normal(self):
        return self.direction.complement()


@dataclass(frozen=True, eq=False)
class Flag:
    """Cooriented flag F0 subset F1 with F0 = F1 cap p^perp and unit p in F1."""

    F1: Subspace
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float).reshape(-1)
        if p.size != self.F1.n:
            raise DimensionMismatchError("coorientation must live in the ambient space")
        if abs(np.linalg.norm(p) - 1.0) > 1e-12:
            raise ValueError("coorientation must be a unit vector")
        if not self.F1.contains(p, 1e-10):
            raise ValueError("coorientation must lie in F1")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def F0(self):
        c = self.F1.coords(self.p)
        rest = Subspace(c.reshape(-1, 1)).complement()
        return Subspace(self.F1.frame @ rest.frame, orthonormalize=False) if rest.d else Subspace.zero(self.F1.n)

    def flipped(self):
        return Flag(self.F1, -self.p)


@dataclass(frozen=True, eq=False)
class HalfSpaceElement:
    """The affine half-flat {y + w : w in F1, <w, p> >= x}."""

    flag: Flag
    y: np.ndarray
    x: float = 0.0

    def __post_init__(self):
        y = np.array(self.y, dtype=float).reshape(-1)
        if y.size != self.flag.F1.n:
            raise DimensionMismatchError("offset lives in the wrong space")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)


class ConvexBody:
    """Compact convex body with support and plane-intersection oracles."""

    def support(self, u):
        raise NotImplementedError

    def radius_bound(self):
        """Radius of a centered ball containing the body."""
        raise NotImplementedError

    @property
    def n(self):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Ball(ConvexBody):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.array(self.center, dtype=float).reshape(-1)
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)

    @property
    def n(self):
        return self.center.size

    def support(self, u):
        u = np.asarray(u, dtype=float)
        return u @ self.center + self.radius * np.linalg.norm(u, axis=-1)

    def radius_bound(self):
        return float(np.linalg.norm(self.center) + self.radius)

    def moved(self, g, t):
        return Ball(np.asarray(g) @ self.center + t, self.radius)


@dataclass(frozen=True, eq=False)
class Polytope(ConvexBody):
    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] == 0:
            raise ValueError("polytope needs a nonempty (m, n) vertex array")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def n(self):
        return self.vertices.shape[1]

    def support(self, u):
        return np.max(np.asarray(u, dtype=float) @ self.vertices.T, axis=-1)

    def radius_bound(self):
        return float(np.max(np.linalg.norm(self.vertices, axis=1)))

    def moved(self, g, t):
        return type(self)(self.vertices @ np.asarray(g).T + t)


class Segment(Polytope):
    """Polytope with two vertices."""

    def __post_init__(self):
        super().__post_init__()
        if self.vertices.shape[0] != 2:
            raise ValueError("a segment has exactly two endpoints")

    @classmethod
    def between(cls, a, b):
        return cls(np.vstack([a, b]))

    @property
    def length(self):
        return float(np.linalg.norm(self.vertices[1] - self.vertices[0]))


# ----------------------------------------------------------- min-norm point

def min_norm_point(points, tol=1e-12, max_iter=500):
    """Point of minimum Euclidean norm in the convex hull of the rows of ``points``.

    Wolfe's algorithm: major cycles add the most improving vertex to a corral,
    minor cycles shrink the corral until its affine minimizer lies inside the
    hull of its members.
    """
    P = np.asarray(points, dtype=float)
    if P.shape[0] == 0:
        raise ValueError("need at least one point")
    scale = max(1.0, float(np.max(np.sum(P * P, axis=1))))
    S = [int(np.argmin(np.sum(P * P, axis=1)))]
    lam = np.array([1.0])
    x = P[S[0]].copy()
    for _ in range(max_iter):
        j = int(np.argmin(P @ x))
        if x @ x - P[j] @ x <= tol * scale or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            A = P[S]
            m = len(S)
            kkt = np.zeros((m + 1, m + 1))
            kkt[:m, :m] = A @ A.T
            kkt[:m, m] = kkt[m, :m] = 1.0
            rhs = np.zeros(m + 1)
            rhs[m] = 1.0
            alpha = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:m]
            if np.all(alpha > 1e-14):
                lam = alpha
                break
            neg = alpha <= 1e-14
            theta = np.min(lam[neg] / (lam[neg] - alpha[neg]))
            lam = lam + theta * (alpha - lam)
            keep = lam > 1e-14
            S = [s for s, k in zip(S, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
        x = lam @ P[S]
    return x


# ------------------------------------------------------------ even Crofton

def _normal_frame(E):
    return E.direction.complement().frame


def euler_chi_convex(K, E):
    """Euler characteristic of K cap E for convex K: 1 iff they meet, else 0."""
    N = _normal_frame(E)
    target = N.T @ E.offset
    if isinstance(K, Ball):
        gap = np.linalg.norm(N.T @ K.center - target) - K.radius
        return int(gap <= HIT_TOL * max(1.0, K.radius))
    q = K.vertices @ N - target
    if N.shape[1] == 0:
        return 1
    dist = np.linalg.norm(min_norm_point(q))
    return int(dist <= HIT_TOL * max(1.0, float(np.max(np.abs(q)))))


def sample_affine_planes(n, k, count, R, rng):
    """Normal k-frames (count, n, k) and offsets (count, k) of uniform planes meeting B_R."""
    if k == n:
        normals = np.broadcast_to(np.eye(n), (count, n, n))
    else:
        normals = sample_grassmannian(n, k, count, rng).frames
    g = rng.standard_normal((count, k))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    offsets = g * (R * rng.random(count) ** (1.0 / k))[:, None]
    return normals, offsets


def _hits(K, normals, offsets):
    if isinstance(K, Ball):
        proj = np.einsum("snk,n->sk", normals, K.center)
        return (np.linalg.norm(proj - offsets, axis=1) <= K.radius * (1 + HIT_TOL)).astype(float)
    if normals.shape[2] == 1:
        vals = np.einsum("snk,mn->sm", normals, K.vertices)
        t = offsets[:, 0]
        eps = HIT_TOL * max(1.0, K.radius_bound())
        return ((vals.min(axis=1) - eps <= t) & (t <= vals.max(axis=1) + eps)).astype(float)
    out = np.empty(normals.shape[0])
    for s in range(normals.shape[0]):
        q = K.vertices @ normals[s] - offsets[s]
        dist = np.linalg.norm(min_norm_point(q))
        out[s] = float(dist <= HIT_TOL * max(1.0, float(np.max(np.abs(q)))))
    return out


def _ball_volume(k, R):
    return math.pi ** (k / 2) * R ** k / math.gamma(k / 2 + 1)


class Estimate(NamedTuple):
    value: float
    stderr: float
    samples: int

    @classmethod
    def from_values(cls, values, scale=1.0):
        values = np.asarray(values, dtype=float)
        N = values.size
        se = float(np.std(values, ddof=1) / math.sqrt(N)) if N > 1 else math.inf
        return cls(scale * float(values.mean()), scale * se, N)

    def ratio(self, other):
        """Quotient of two independent estimates with first-order error propagation."""
        r = self.value / other.value
        rel = math.hypot(self.stderr / self.value if self.value else 0.0, other.stderr / other.value)
        return Estimate(r, abs(r) * rel, min(self.samples, other.samples))


def _generators(rng, samples):
    """Pair each shard generator with its sample count."""
    gens = list(rng) if isinstance(rng, (list, tuple)) else [rng]
    return list(zip(gens, shard_sizes(samples, len(gens))))


def crofton_even_estimate(K, k, R, samples, rng):
    """Integral of chi(K cap E) over affine planes of codimension k.

    The measure is the product of the probability measure on directions and
    Lebesgue measure on offsets, restricted to planes meeting the window
    ball B_R. ``rng`` may be a list of per-shard generators.
    """
    n = K.n
    if not 1 <= k <= n:
        raise PreconditionError(f"codimension must be in [1, {n}]")
    if K.radius_bound() > R:
        raise PreconditionError("body is not inside the window ball")
    vals = [_hits(K, *sample_affine_planes(n, k, m, R, g)) for g, m in _generators(rng, samples)]
    return Estimate.from_values(np.concatenate(vals), _ball_volume(k, R))


# ------------------------------------------------------------- odd Crofton

def _slice_points(K, F1, y):
    """Vertices (up to redundancy) of (K - y) cap F1 for a polytope K."""
    N = F1.complement().frame
    c = N.shape[1]
    V = K.vertices - y
    if c == 0:
        return V
    W = V @ N
    pts = []
    for S in combinations(range(V.shape[0]), c + 1):
        A = np.vstack([W[list(S)].T, np.ones(c + 1)])
        rhs = np.zeros(c + 1)
        rhs[c] = 1.0
        if abs(np.linalg.det(A)) < 1e-12:
            continue
        lam = np.linalg.solve(A, rhs)
        if np.all(lam >= -1e-12):
            pts.append(np.clip(lam, 0.0, None) @ V[list(S)])
    return np.array(pts).reshape(-1, V.shape[1])


def slice_support(K, F1, y, p):
    """Support function of (K - y) cap F1 at p, or None when the slice is empty."""
    p = np.asarray(p, dtype=float)
    y = np.asarray(y, dtype=float)
    if isinstance(K, Ball):
        d = K.center - y
        along = F1.frame @ F1.coords(d)
        rho2 = K.radius ** 2 - float(np.sum((d - along) ** 2))
        if rho2 < 0:
            return None
        return float(along @ p + math.sqrt(rho2) * np.linalg.norm(F1.coords(p)))
    pts = _slice_points(K, F1, y)
    if pts.shape[0] == 0:
        return None
    return float(np.max(pts @ p))


def _meets_halfflat(K, H):
    """Independent predicate: does K meet the half-flat H? (min-norm point / closed form)"""
    F1, p = H.flag.F1, H.flag.p
    if isinstance(K, Ball):
        d = K.center - H.y
        along = F1.frame @ F1.coords(d)
        rho2 = K.radius ** 2 - float(np.sum((d - along) ** 2))
        return rho2 >= 0 and along @ p + math.sqrt(rho2) >= H.x
    N = F1.complement().frame
    V = K.vertices - H.y
    T = np.hstack([V @ N, (V @ p - H.x)[:, None]])
    reach = 2.0 * (float(np.max(np.abs(T))) + 1.0)
    lowered = T.copy()
    lowered[:, -1] -= reach
    pts = np.vstack([T, lowered])
    dist = np.linalg.norm(min_norm_point(pts))
    return bool(dist <= HIT_TOL * max(1.0, reach))


def _meets_flat(K, F1, y):
    return euler_chi_convex(K, AffinePlane.through(F1, y)) == 1


def eta_halfspace(K, flag, y):
    """Compensated half-flat integral eta(K, (F0, F1), y).

    Integrates chi(K cap (F0^+ + y + x p)) over x > 0 plus
    chi(K cap (F0^+ + y + x p)) - chi(K cap (F1 + y)) over x < 0, where
    F0^+ = {w in F1 : <w, p> >= 0}. Both integrands are piecewise constant
    with breakpoints at 0 and at the slice support h_{(K-y) cap F1}(p); each
    piece is evaluated at its midpoint with the half-flat predicate, so the
    result is exact for polytopes and balls.
    """
    y = np.asarray(y, dtype=float)
    if not _meets_flat(K, flag.F1, y):
        return 0.0
    h = slice_support(K, flag.F1, y, flag.p)
    if h is None:
        return 0.0
    cuts = sorted({0.0, h})
    lo, hi = min(cuts) - 1.0, max(cuts) + 1.0
    edges = [lo] + cuts + [hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        mid = 0.5 * (a + b)
        val = float(_meets_halfflat(K, HalfSpaceElement(flag, y, mid)))
        if mid < 0:
            val -= 1.0  # chi of the full slice, known to be 1 here
        total += val * (b - a)
    return total


def regular_simplex_configuration(n, j):
    """Regular n-simplex with a face of dimension n-j+1 parallel to R^{n-j+1}.

    Returns ``(vertices, face, F1)``: the (n+1, n) vertex array, the indices
    of the face's vertices and F1 as the span of the first n-j+1 axes.
    """
    m = n - j + 1
    eye = np.eye(n + 1)
    # columns e_i - e_0: the first m span the face directions
    dirs = (eye[:, 1:] - eye[:, [0]])
    q, r = np.linalg.qr(dirs)
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    centered = eye - 1.0 / (n + 1)
    vertices = centered @ q
    vertices[np.abs(vertices) < 1e-15] = 0.0
    return vertices, tuple(range(m + 1)), Subspace.coordinate(n, range(m))


class OddSimplexReport(NamedTuple):
    n: int
    j: int
    directions: np.ndarray
    moment_residual: float
    phi: float
    support_differences: np.ndarray
    support_spread: float
    eta_identity_residual: float


def _gauss_pieces(points, order=3):
    """Gauss-Legendre nodes and weights on the hull of 1-D points, split at each point."""
    xs = np.unique(np.round(points, 14))
    g, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in zip(xs[:-1], xs[1:]):
        nodes.append(0.5 * (b - a) * g + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    if not nodes:
        return np.zeros((0, 1)), np.zeros(0)
    return np.concatenate(nodes)[:, None], np.concatenate(weights)


def _simplex_cells(points):
    """Centroid rule over a Delaunay triangulation; exact for piecewise-affine integrands."""
    pts = np.unique(np.round(points, 12), axis=0)
    tri = Delaunay(pts)
    nodes, weights = [], []
    d = pts.shape[1]
    for simplex in tri.simplices:
        verts = pts[simplex]
        vol = abs(np.linalg.det(verts[1:] - verts[0])) / math.factorial(d)
        nodes.append(verts.mean(axis=0))
        weights.append(vol)
    return np.array(nodes), np.array(weights)


def crofton_odd_simplex(n, j, rng=None):
    """Delta-measure odd Crofton value of the regular simplex and its checks.

    mu puts +1 on (p, F1) and -1 on (-p, F1) for the vertex directions p of
    the face simplex in F1. The value sums over p the integral over
    y in F1^perp of eta(K,(p,F1),y) - eta(K,(-p,F1),y). With ``rng`` the whole
    configuration is moved by a random rotation first.
    """
    if not 0 < j < n:
        raise PreconditionError("need 0 < j < n")
    if n > 6:
        raise PreconditionError("desk-scale construction supports n <= 6")
    vertices, face, F1 = regular_simplex_configuration(n, j)
    g = np.eye(n)
    if rng is not None:
        q, r = np.linalg.qr(rng.standard_normal((n, n)))
        g = q * np.sign(np.diag(r))
    K = Polytope(vertices @ g.T)
    F1 = F1.rotate(g)
    fv = K.vertices[list(face)]
    centroid = fv.mean(axis=0)
    dirs = fv - centroid
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    basis = np.eye(n)
    moment = float(np.max(np.abs(dirs.sum(axis=0) @ basis)))

    N = F1.complement().frame
    if N.shape[1] == 0:
        nodes, weights = np.zeros((1, 0)), np.ones(1)
    elif N.shape[1] == 1:
        nodes, weights = _gauss_pieces((K.vertices @ N)[:, 0])
    else:
        nodes, weights = _simplex_cells(K.vertices @ N)

    phi = 0.0
    flags = [Flag(F1, p) for p in dirs]
    for coords, w in zip(nodes, weights):
        y = N @ coords
        for fl in flags:
            phi += w * (eta_halfspace(K, fl, y) - eta_halfspace(K, fl.flipped(), y))

    # evaluate at the projection of the body's centroid, inside the slab
    y0 = N @ (N.T @ K.vertices.mean(axis=0))
    diffs, worst = [], 0.0
    for fl in flags:
        hp = slice_support(K, F1, y0, fl.p)
        hm = slice_support(K, F1, y0, -fl.p)
        eta_diff = eta_halfspace(K, fl, y0) - eta_halfspace(K, fl.flipped(), y0)
        diffs.append(hp - hm)
        worst = max(worst, abs(eta_diff - (hp - hm)))
    diffs = np.array(diffs)
    return OddSimplexReport(n, j, dirs, moment, float(phi), diffs,
                            float(diffs.max() - diffs.min()), worst)


# ----------------------------------------------------- exponential kernel

def exp_kernel_constant(n):
    """c_n with c_n (1 + |xi|^2)^((n+1)/2) the reciprocal Fourier symbol of exp(-|x|)."""
    return 1.0 / (2 ** n * math.pi ** ((n - 1) / 2) * math.gamma((n + 1) / 2))


def _laplacian(f, h):
    out = np.zeros_like(f)
    for ax in range(f.ndim):
        padded = np.pad(f, [(1, 1) if a == ax else (0, 0) for a in range(f.ndim)])
        lo = [slice(None)] * f.ndim
        hi = [slice(None)] * f.ndim
        lo[ax] = slice(0, -2)
        hi[ax] = slice(2, None)
        out += (padded[tuple(lo)] + padded[tuple(hi)] - 2.0 * f) / h ** 2
    return out


class ExpKernelResult(NamedTuple):
    g: np.ndarray
    reconstruction: np.ndarray
    error: float


def exp_kernel_pair(f, spacing):
    """Solve f = g * exp(-|.|) for g on a uniform grid, and measure the round trip.

    ``g = c_n sum_i (-1)^i C((n+1)/2, i) Laplacian^i f`` with second-order
    central differences and zero padding; the reconstruction is the discrete
    convolution of g with the sampled kernel, and the error is its max-norm
    deviation from f relative to max |f|.
    """
    f = np.asarray(f, dtype=float)
    n = f.ndim
    if n % 2 == 0:
        raise PreconditionError("the alternating Laplacian formula needs odd n")
    h = float(spacing)
    m = (n + 1) // 2
    g = np.zeros_like(f)
    term = f.copy()
    for i in range(m + 1):
        g += (-1) ** i * math.comb(m, i) * term
        if i < m:
            term = _laplacian(term, h)
    g *= exp_kernel_constant(n)
    axes = [h * np.arange(-(s - 1), s) for s in f.shape]
    grids = np.meshgrid(*axes, indexing="ij")
    radius = np.sqrt(sum(a * a for a in grids))
    kernel = np.exp(-radius)
    full = fftconvolve(g, kernel, mode="full") * h ** n
    centre = tuple(slice(s - 1, 2 * s - 1) for s in f.shape)
    recon = full[centre]
    scale = float(np.max(np.abs(f)))
    error = float(np.max(np.abs(recon - f)) / scale) if scale > 0 else float(np.max(np.abs(recon)))
    return ExpKernelResult(g, recon, error)


# --------------------------------------------------------- curve lengths

def sample_lines(count, R, rng, stratified=True):
    """Unit normals (count, 2) and offsets in [-R, R] of uniform lines meeting B_R.

    With ``stratified`` the normal angles are stratified over [0, pi), which
    keeps the measure and removes most of the angular variance.
    """
    if stratified:
        theta = math.pi * (np.arange(count) + rng.random(count)) / count
    else:
        theta = math.pi * rng.random(count)
    u = np.column_stack([np.cos(theta), np.sin(theta)])
    t = R * (2.0 * rng.random(count) - 1.0)
    return u, t


def _crossings(polylines, u, t, chunk=4096):
    counts = np.zeros(t.size)
    for P in polylines:
        for a in range(0, t.size, chunk):
            s = P @ u[a:a + chunk].T - t[a:a + chunk]
            side = s > 0
            counts[a:a + chunk] += np.sum(side[1:] != side[:-1], axis=0)
    return counts


def _calibration_star(copies):
    """Unit segments through the origin at equally spaced angles."""
    out = []
    for i in range(copies):
        a = math.pi * i / copies
        d = 0.5 * np.array([math.cos(a), math.sin(a)])
        out.append(np.vstack([-d, d]))
    return out


def crofton_curve_length(curves, samples, R, rng, calibration_copies=8):
    """Length of planar polylines from their average number of line crossings.

    The same lines hit a calibration set of unit segments (equally rotated
    copies, averaged), so the Crofton constant cancels in the ratio. The
    standard error uses first-order propagation through the ratio.
    """
    if isinstance(curves, np.ndarray):
        curves = [curves]
    curves = [np.asarray(c, dtype=float) for c in curves]
    for c in curves:
        if c.ndim != 2 or c.shape[1] != 2:
            raise DimensionMismatchError("curves must be (T, 2) polylines")
        if np.max(np.linalg.norm(c, axis=1)) > R:
            raise PreconditionError("curve exits the window")
    star = _calibration_star(calibration_copies)
    a_parts, b_parts = [], []
    for g, m in _generators(rng, samples):
        u, t = sample_lines(m, R, g)
        a_parts.append(_crossings(curves, u, t))
        b_parts.append(_crossings(star, u, t) / calibration_copies)
    a, b = np.concatenate(a_parts), np.concatenate(b_parts)
    ratio = a.mean() / b.mean()
    se = np.std(a - ratio * b, ddof=1) / math.sqrt(a.size) / b.mean()
    return Estimate(float(ratio), float(se), a.size)


def circle_polyline(radius=1.0, points=2000, center=(0.0, 0.0)):
    """Closed inscribed polygon; its length is 2 r T sin(pi / T)."""
    th = 2 * math.pi * np.arange(points + 1) / points
    return np.column_stack([center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)])


def timed(fn, *args, **kwargs):
    """Run ``fn`` and return (result, wall time in ms)."""
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, 1000.0 * (time.perf_counter() - start)
