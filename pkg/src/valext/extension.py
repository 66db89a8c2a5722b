"""Extension of compatible forms from the members of an arrangement.

Forms attached to a member E_i are always written in E_i's frame
coordinates. Wherever a construction leaves a value free it is set to zero,
which keeps every solver deterministic and linear in its data.
"""
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple

import numpy as np

from ._subsets import compound, subset_index, subsets
from .arrangements import (Arrangement, adapted_bases, is_minimally_intersecting,
                           random_general_position_hyperplanes)
from .errors import (DimensionMismatchError, ExtensionError,
                     IncompatibleDataError, PreconditionError)
from .exterior import ExtForm, Subspace, restrict_form

__all__ = [
    "FormFamily",
    "Cocycle",
    "Compatibility",
    "check_compatible",
    "restrict_between",
    "family_from_global",
    "extend_forms",
    "extend_double_forms",
    "restrict_double_data",
    "extend_general_position",
    "coboundary",
    "d1_matrix",
    "solve_coboundary",
    "random_cocycle",
    "inclusion_exclusion_extend",
    "build_counterexample",
    "Counterexample",
]

RESIDUAL_TOL = 1e-10
COMPAT_TOL = 1e-8


def _sub_in(E, G):
    """G (a subspace of E, ambient frame) in E's frame coordinates."""
    if G.d == 0:
        return Subspace.zero(E.d)
    return Subspace(E.coords(G.frame), orthonormalize=False)


def restrict_between(form, E, G):
    """Restrict a form written in E's frame to G subset E, in G's frame."""
    k = form.k
    if k > G.d:
        return ExtForm.zero(G.d, k)
    return ExtForm(G.d, k, compound(E.coords(G.frame), k).T @ form.coeffs)


@dataclass(frozen=True)
class FormFamily:
    arrangement: Arrangement
    k: int
    forms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        forms = tuple(self.forms)
        object.__setattr__(self, "forms", forms)
        if len(forms) != len(self.arrangement):
            raise DimensionMismatchError("one form per member is required")
        for i, (E, w) in enumerate(zip(self.arrangement, forms)):
            if w.n != E.d or w.k != self.k:
                raise DimensionMismatchError(f"form {i} must be a grade-{self.k} form on R^{E.d}")

    def scale(self):
        return max([1.0] + [w.norm() for w in self.forms])

    def subfamily(self, indices):
        return FormFamily(self.arrangement.subset(indices), self.k, [self.forms[i] for i in indices])

    def combine(self, a, other, b):
        return FormFamily(self.arrangement, self.k,
                          [a * u + b * v for u, v in zip(self.forms, other.forms)])


def family_from_global(arr, omega):
    """Restrictions of one global form to every member (zero where k exceeds the dimension)."""
    return FormFamily(arr, omega.k, [restrict_form(omega, E) if omega.k <= E.d
                                     else ExtForm.zero(E.d, omega.k) for E in arr])


class Compatibility(NamedTuple):
    ok: bool
    residual: float


def check_compatible(fam, tol=COMPAT_TOL):
    """Largest pairwise disagreement of the family on intersections.

    ``ok`` compares the residual against ``tol`` times the data scale.
    """
    arr = fam.arrangement
    worst = 0.0
    for i, j in combinations(range(len(arr)), 2):
        G = arr.lattice((i, j))
        if G.d < fam.k:
            continue
        ri = restrict_between(fam.forms[i], arr[i], G)
        rj = restrict_between(fam.forms[j], arr[j], G)
        worst = max(worst, float(np.linalg.norm(ri.coeffs - rj.coeffs)))
    return Compatibility(worst <= tol * fam.scale(), worst)


def _member_values(basis, i, E, form, k):
    """Values of ``form`` on the k-wedges of member i's adapted basis vectors."""
    cols = basis.members[i]
    coords = E.coords(basis.matrix[:, list(cols)])
    vals = compound(coords, k).T @ form.coeffs
    gidx = subset_index(basis.matrix.shape[0], k)
    targets = [gidx[tuple(cols[a] for a in s)] for s in subsets(len(cols), k)]
    return np.array(targets, dtype=np.intp), vals


def extend_forms(fam, tol=RESIDUAL_TOL, compat_tol=COMPAT_TOL):
    """Global k-form restricting to every member of a minimally intersecting family.

    Values on wedges of adapted basis vectors that lie in a common member are
    read off that member; all mixed wedges get the value 0.
    """
    arr, k = fam.arrangement, fam.k
    n = arr.n
    comp = check_compatible(fam, compat_tol)
    if not comp.ok:
        raise IncompatibleDataError(f"family is not compatible (residual {comp.residual:.3g})")
    basis = adapted_bases(arr)
    m = math.comb(n, k)
    values = np.zeros(m)
    assigned = np.zeros(m, dtype=bool)
    for i, (E, w) in enumerate(zip(arr, fam.forms)):
        if k > E.d:
            continue
        targets, vals = _member_values(basis, i, E, w, k)
        fresh = ~assigned[targets]
        values[targets[fresh]] = vals[fresh]
        assigned[targets] = True
    ck = compound(basis.matrix, k)
    omega = ExtForm(n, k, np.linalg.solve(ck.T, values)) if m else ExtForm.zero(n, k)
    _verify(fam, omega, tol)
    return omega


def _verify(fam, omega, tol):
    scale = fam.scale()
    for i, (E, w) in enumerate(zip(fam.arrangement, fam.forms)):
        if fam.k > E.d:
            continue
        resid = float(np.linalg.norm(restrict_form(omega, E).coeffs - w.coeffs))
        if resid > tol * scale:
            raise ExtensionError(f"extension misses member {i} by {resid:.3g}")


def restrict_double_data(arrE, arrF, omega, p, q):
    """r(omega): restrictions of a global (p,q)-tensor to each pair (E_i, F_i)."""
    return [compound(E.frame, p).T @ omega @ compound(F.frame, q) for E, F in zip(arrE, arrF)]


def extend_double_forms(arrE, arrF, data, p, q, tol=RESIDUAL_TOL, compat_tol=COMPAT_TOL):
    """Lift data in the kernel of d to a global tensor in the p-th by q-th dual powers.

    ``data[i]`` is the C(dim E_i, p) x C(dim F_i, q) coefficient matrix of
    omega_i in the frames of E_i and F_i. Returns the C(m, p) x C(n, q) matrix
    of the lift on R^m x R^n.
    """
    if len(arrE) != len(arrF) or len(arrE) != len(data):
        raise DimensionMismatchError("the two arrangements and the data must have equal length")
    data = [np.asarray(D, dtype=float) for D in data]
    for i, (E, F, D) in enumerate(zip(arrE, arrF, data)):
        if D.shape != (math.comb(E.d, p), math.comb(F.d, q)):
            raise DimensionMismatchError(f"datum {i} has shape {D.shape}")
    scale = max([1.0] + [float(np.linalg.norm(D)) for D in data])
    for i, j in combinations(range(len(data)), 2):
        GE, GF = arrE.lattice((i, j)), arrF.lattice((i, j))
        if p > GE.d or q > GF.d:
            continue
        ri = compound(arrE[i].coords(GE.frame), p).T @ data[i] @ compound(arrF[i].coords(GF.frame), q)
        rj = compound(arrE[j].coords(GE.frame), p).T @ data[j] @ compound(arrF[j].coords(GF.frame), q)
        resid = float(np.linalg.norm(ri - rj))
        if resid > compat_tol * scale:
            raise IncompatibleDataError(f"data not in ker d: pair ({i},{j}) differs by {resid:.3g}")
    bE, bF = adapted_bases(arrE), adapted_bases(arrF)
    m, n = arrE.n, arrF.n
    values = np.zeros((math.comb(m, p), math.comb(n, q)))
    assigned = np.zeros(values.shape, dtype=bool)
    for i, (E, F, D) in enumerate(zip(arrE, arrF, data)):
        if p > E.d or q > F.d:
            continue
        ce, cf = bE.members[i], bF.members[i]
        block = (compound(E.coords(bE.matrix[:, list(ce)]), p).T @ D
                 @ compound(F.coords(bF.matrix[:, list(cf)]), q))
        gE, gF = subset_index(m, p), subset_index(n, q)
        rows = np.array([gE[tuple(ce[a] for a in s)] for s in subsets(len(ce), p)], dtype=np.intp)
        cols = np.array([gF[tuple(cf[a] for a in s)] for s in subsets(len(cf), q)], dtype=np.intp)
        sel = np.ix_(rows, cols)
        fresh = ~assigned[sel]
        target = values[sel]
        target[fresh] = block[fresh]
        values[sel] = target
        assigned[sel] = True
    cpE = compound(bE.matrix, p)
    cqF = compound(bF.matrix, q)
    omega = np.linalg.solve(cpE.T, values) @ np.linalg.inv(cqF)
    for i, (D, R) in enumerate(zip(data, restrict_double_data(arrE, arrF, omega, p, q))):
        resid = float(np.linalg.norm(D - R))
        if resid > tol * scale:
            raise ExtensionError(f"double-form lift misses pair {i} by {resid:.3g}")
    return omega


def extend_general_position(fam, anchor=None, tol=RESIDUAL_TOL):
    """Extension for families whose subfamilies of size <= k+2 are minimally intersecting.

    With at least k+1 members the extension is pinned down by the ``anchor``
    members (default: the first k+1) and then verified on the rest. Returns
    ``(omega, unique)``; ``unique`` is True when some k+1 members determine it.
    """
    arr, k = fam.arrangement, fam.k
    N = len(arr)
    size = min(N, k + 2)
    for r in range(1, size + 1):
        for I in combinations(range(N), r):
            if not is_minimally_intersecting(arr, indices=I):
                raise PreconditionError(f"subfamily {I} is not minimally intersecting")
    if N <= k + 1:
        omega = extend_forms(fam, tol)
        return omega, N == k + 1
    if anchor is None:
        anchor = tuple(range(k + 1))
    anchor = tuple(anchor)
    if len(anchor) != k + 1:
        raise ValueError(f"anchor must name exactly k+1 = {k + 1} members")
    omega = extend_forms(fam.subfamily(anchor), tol)
    scale = fam.scale()
    for i, (E, w) in enumerate(zip(arr, fam.forms)):
        if k > E.d:
            continue
        resid = float(np.linalg.norm(restrict_form(omega, E).coeffs - w.coeffs))
        if resid > max(tol, COMPAT_TOL) * scale:
            raise ExtensionError(f"anchored extension disagrees with member {i} by {resid:.3g}")
    return omega, True


@dataclass(frozen=True)
class Cocycle:
    """Entries R_ij on the pairwise intersections, in lattice frame coordinates."""

    arrangement: Arrangement
    p: int
    entries: dict

    def entry(self, i, j):
        G = self.arrangement.lattice((i, j))
        return self.entries.get((i, j), ExtForm.zero(G.d, self.p))

    def scale(self):
        return max([1.0] + [R.norm() for R in self.entries.values()])

    def cocycle_residual(self):
        """Largest norm of R_ij - R_ik + R_jk on the triple intersections."""
        arr = self.arrangement
        worst = 0.0
        for i, j, k in combinations(range(len(arr)), 3):
            T = arr.lattice((i, j, k))
            if T.d < self.p:
                continue
            parts = []
            for a, b in ((i, j), (i, k), (j, k)):
                parts.append(restrict_between(self.entry(a, b), arr.lattice((a, b)), T).coeffs)
            worst = max(worst, float(np.linalg.norm(parts[0] - parts[1] + parts[2])))
        return worst


def coboundary(arr, forms):
    """d_1: (L_i) -> (L_j - L_i) restricted to E_ij."""
    p = forms[0].k
    entries = {}
    for i, j in combinations(range(len(arr)), 2):
        G = arr.lattice((i, j))
        if G.d < p:
            continue
        entries[(i, j)] = restrict_between(forms[j], arr[j], G) - restrict_between(forms[i], arr[i], G)
    return Cocycle(arr, p, entries)


def d1_matrix(arr, p):
    """Matrix of d_1 from the sum of p-th dual powers of the E_i to those of the E_ij."""
    N = len(arr)
    col_off = np.cumsum([0] + [math.comb(E.d, p) if p <= E.d else 0 for E in arr])
    pairs = [(i, j) for i, j in combinations(range(N), 2) if arr.dim((i, j)) >= p]
    row_off = np.cumsum([0] + [math.comb(arr.dim(ij), p) for ij in pairs])
    mat = np.zeros((row_off[-1], col_off[-1]))
    for r, (i, j) in enumerate(pairs):
        G = arr.lattice((i, j))
        rows = slice(row_off[r], row_off[r + 1])
        mat[rows, col_off[j]:col_off[j + 1]] = compound(arr[j].coords(G.frame), p).T
        mat[rows, col_off[i]:col_off[i + 1]] = -compound(arr[i].coords(G.frame), p).T
    return mat, pairs, row_off, col_off


def _extend_step(sub, lam, p, tol):
    """One inner extension of the backward induction; returns (L_i, method)."""
    fam = FormFamily(sub, p, lam)
    E = Subspace.whole(sub.n)
    if is_minimally_intersecting(sub, within=sub.span()):
        return extend_forms(fam, tol=tol), "minimal"
    ok = all(is_minimally_intersecting(sub, indices=I)
             for r in range(1, min(len(sub), p + 2) + 1)
             for I in combinations(range(len(sub)), r))
    if ok:
        return extend_general_position(fam, tol=tol)[0], "general-position"
    # outside the supported classes: plain least squares, judged by its residual
    rows = [compound(G.frame, p).T for G in sub]
    a = np.vstack(rows)
    b = np.concatenate([w.coeffs for w in lam])
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    resid = float(np.linalg.norm(a @ sol - b))
    if resid > tol * fam.scale():
        raise ExtensionError(
            f"no form on E restricts to the prescribed data (least-squares residual {resid:.3g})")
    return ExtForm(E.d, p, sol), "least-squares"


def solve_coboundary(R, tol=1e-9):
    """Find L_i with R_ij = L_j - L_i on every E_ij by backward induction.

    L_N = 0; for i = N-1 down to 1 the forms lambda_j = L_j - R_ij on
    E_i cap E_j (j > i) are extended to E_i. Raises ExtensionError when an
    extension step cannot meet its data.
    """
    arr, p = R.arrangement, R.p
    N = len(arr)
    if R.cocycle_residual() > COMPAT_TOL * R.scale():
        raise IncompatibleDataError("input violates the cocycle condition")
    L = [None] * N
    L[N - 1] = ExtForm.zero(arr[N - 1].d, p)
    for i in range(N - 2, -1, -1):
        Ei = arr[i]
        members, lam = [], []
        for j in range(i + 1, N):
            G = arr.lattice((i, j))
            if G.d < p:
                continue
            members.append(_sub_in(Ei, G))
            lam.append(restrict_between(L[j], arr[j], G) - R.entry(i, j))
        if not members:
            L[i] = ExtForm.zero(Ei.d, p)
            continue
        sub = Arrangement(members, n=Ei.d)
        try:
            L[i], _ = _extend_step(sub, lam, p, tol)
        except (ExtensionError, IncompatibleDataError, PreconditionError) as exc:
            raise ExtensionError(f"step i={i}: {exc}") from exc
    check = coboundary(arr, L)
    worst = max([0.0] + [float(np.linalg.norm(check.entry(i, j).coeffs - R.entry(i, j).coeffs))
                         for i, j in combinations(range(N), 2) if arr.dim((i, j)) >= p])
    if worst > tol * R.scale():
        raise ExtensionError(f"d1 L misses R by {worst:.3g}")
    return L


def random_cocycle(arr, p, rng):
    """A random element of ker d_2 built pair by pair.

    Each new R_ij is random away from the triple intersections and forced on
    them by the cocycle condition, which makes this valid for N = 3 without
    going through d_1. For N > 3 the triple constraints may clash, in which
    case a coboundary of random forms is returned instead.
    """
    N = len(arr)
    if N != 3:
        L = [ExtForm(E.d, p, rng.standard_normal(math.comb(E.d, p))) for E in arr]
        return coboundary(arr, L)
    entries = {}
    for (i, j) in ((0, 1), (0, 2)):
        G = arr.lattice((i, j))
        if G.d >= p:
            entries[(i, j)] = ExtForm(G.d, p, rng.standard_normal(math.comb(G.d, p)))
    G12 = arr.lattice((1, 2))
    if G12.d >= p:
        free = ExtForm(G12.d, p, rng.standard_normal(math.comb(G12.d, p)))
        T = arr.lattice((0, 1, 2))
        if T.d >= p:
            zero01 = ExtForm.zero(arr.dim((0, 1)), p)
            zero02 = ExtForm.zero(arr.dim((0, 2)), p)
            target = (restrict_between(entries.get((0, 2), zero02), arr.lattice((0, 2)), T)
                      - restrict_between(entries.get((0, 1), zero01), arr.lattice((0, 1)), T))
            sub = _sub_in(G12, T)
            current = restrict_between(free, G12, T)
            fix = extend_forms(FormFamily(Arrangement([sub], n=G12.d), p, [target - current]))
            free = free + fix
        entries[(1, 2)] = free
    return Cocycle(arr, p, entries)


def inclusion_exclusion_extend(slices, block_axes, y_axes=(), exact=True, tol=0.0):
    """Extend grid data from the coordinate subspaces {x^i = 0} to the full grid.

    The full grid is the tensor product of the axes of blocks x^1..x^N followed
    by the y axes, in that (row-major) order. Every x axis must contain 0.
    ``slices[i]`` holds the values on {x^i = 0}: the full grid with block i's
    axes removed. The result is

        f = sum over nonempty J of (-1)^(|J|+1) f(x with blocks in J set to 0),

    each term read from the slice of the smallest index in J. With
    ``exact=True`` terms are summed with correctly rounded summation, so on
    {x^i = 0} the output equals slice i bit for bit when the input slices agree
    exactly on overlaps.
    """
    N = len(block_axes)
    if len(slices) != N:
        raise DimensionMismatchError("one slice per block is required")
    axes = [[np.asarray(a, dtype=float) for a in blk] for blk in block_axes]
    yax = [np.asarray(a, dtype=float) for a in y_axes]
    zero_at = []
    for blk in axes:
        zs = []
        for a in blk:
            hits = np.flatnonzero(a == 0.0)
            if hits.size != 1:
                raise PreconditionError("every block axis must contain 0 exactly once")
            zs.append(int(hits[0]))
        zero_at.append(zs)
    sizes = [[a.size for a in blk] for blk in axes]
    ysize = [a.size for a in yax]
    full_shape = tuple(s for blk in sizes for s in blk) + tuple(ysize)
    slices = [np.asarray(s, dtype=float) for s in slices]
    for i, s in enumerate(slices):
        expect = tuple(x for b, blk in enumerate(sizes) if b != i for x in blk) + tuple(ysize)
        if s.shape != expect:
            raise DimensionMismatchError(f"slice {i} has shape {s.shape}, expected {expect}")

    offsets = np.cumsum([0] + [len(blk) for blk in sizes])

    def term(J):
        # f with blocks in J zeroed, read from slice min(J) and broadcast back
        i = min(J)
        index = []
        for b in range(N):
            if b != i:
                index.extend(slice(z, z + 1) if b in J else slice(None) for z in zero_at[b])
        index.extend(slice(None) for _ in ysize)
        out = slices[i][tuple(index)]
        out = np.expand_dims(out, tuple(range(offsets[i], offsets[i + 1])))
        return np.broadcast_to(out, full_shape)

    for i, j in combinations(range(N), 2):
        a = _slice_restrict(slices[i], i, j, sizes, zero_at, ysize)
        b = _slice_restrict(slices[j], j, i, sizes, zero_at, ysize)
        diff = float(np.max(np.abs(a - b), initial=0.0))
        if diff > tol:
            raise IncompatibleDataError(f"slices {i} and {j} disagree on their overlap by {diff:.3g}")

    terms, signs = [], []
    for r in range(1, N + 1):
        for J in combinations(range(N), r):
            terms.append(term(set(J)))
            signs.append(1.0 if r % 2 else -1.0)
    stack = np.stack([s * t for s, t in zip(signs, terms)]).reshape(len(terms), -1)
    if exact:
        flat = np.array([math.fsum(col) for col in stack.T])
    else:
        flat = stack.sum(axis=0)
    return flat.reshape(full_shape)


def _slice_restrict(s, own, other, sizes, zero_at, ysize):
    """Restrict slice ``own`` to {x^other = 0}, returned with block axes in canonical order."""
    index = []
    for b in range(len(sizes)):
        if b == own:
            continue
        for z in zero_at[b]:
            index.append(z if b == other else slice(None))
    index.extend(slice(None) for _ in ysize)
    return s[tuple(index)]


class Counterexample(NamedTuple):
    arrangement: Arrangement
    cocycle: Cocycle
    certificate: dict


def build_counterexample(N, rng, attempts=100):
    """N >= 4 general-position planes in R^3 with a cocycle outside the image of d_1."""
    if N < 4:
        raise PreconditionError("the dimension count is positive only for N >= 4")
    for _ in range(attempts):
        arr = random_general_position_hyperplanes(3, N, rng)
        mat, pairs, row_off, _ = d1_matrix(arr, 1)
        u, s, _ = np.linalg.svd(mat, full_matrices=True)
        rank = int(np.sum(s > 1e-10 * s[0]))
        if s[rank - 1] < 1e-6 * s[0]:
            continue  # nearly degenerate sample
        r = u[:, rank]
        entries = {ij: ExtForm(1, 1, r[row_off[a]:row_off[a + 1]]) for a, ij in enumerate(pairs)}
        R = Cocycle(arr, 1, entries)
        coef, *_ = np.linalg.lstsq(mat, r, rcond=None)
        distance = float(np.linalg.norm(mat @ coef - r) / np.linalg.norm(r))
        try:
            solve_coboundary(R)
            failed, message = False, ""
        except ExtensionError as exc:
            failed, message = True, str(exc)
        cert = {
            "N": N,
            "dimension_count": 3 - 2 * N + math.comb(N, 2),
            "domain_dim": 2 * N,
            "codomain_dim": math.comb(N, 2),
            "rank_d1": rank,
            "expected_rank": 2 * N - 3,
            "sigma_min_nonzero": float(s[rank - 1]),
            "image_distance": distance,
            "solve_failed": failed,
            "failure": message,
        }
        return Counterexample(arr, R, cert)
    raise PreconditionError("could not sample a non-degenerate arrangement")
