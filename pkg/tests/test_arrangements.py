from itertools import combinations

import numpy as np
import pytest
from scipy.linalg import null_space, orth

from valext.arrangements import (Arrangement, adapted_bases, intersect, is_minimally_intersecting,
                                 is_semi_generic, quotient_arrangement, random_general_position_hyperplanes,
                                 random_minimally_intersecting, random_subspace, span_of)
from valext._subsets import compound
from valext.errors import DimensionMismatchError, PreconditionError
from valext.exterior import Subspace


def coord(n, *axes):
    return Subspace.coordinate(n, [a - 1 for a in axes])


def nullspace_intersection_dim(E, F):
    """dim E cap F as the null space of [E.frame, -F.frame]."""
    return null_space(np.hstack([E.frame, -F.frame]), rcond=1e-9).shape[1]


def test_intersect_coordinate_planes():
    G = intersect(coord(3, 1, 2), coord(3, 2, 3))
    assert G.d == 1
    assert abs(abs(G.frame[1, 0]) - 1.0) < 1e-12


def test_intersect_with_itself():
    rng = np.random.default_rng(0)
    E = random_subspace(6, 3, rng)
    assert intersect(E, E).d == 3
    assert intersect(E, Subspace.zero(6)).d == 0


def test_intersect_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        intersect(coord(3, 1), coord(4, 1))


def test_intersect_against_nullspace_oracle():
    rng = np.random.default_rng(1)
    for _ in range(100):
        E, F = random_subspace(6, 3, rng), random_subspace(6, 3, rng)
        assert intersect(E, F).d == nullspace_intersection_dim(E, F) == 0
    for _ in range(100):
        common = rng.standard_normal((6, 2))
        E = Subspace(np.hstack([common, rng.standard_normal((6, 2))]))
        F = Subspace(np.hstack([common, rng.standard_normal((6, 1))]))
        assert intersect(E, F).d == nullspace_intersection_dim(E, F) == 2


def test_minimally_intersecting_examples():
    assert is_minimally_intersecting(Arrangement([coord(3, 1, 2), coord(3, 2, 3)]))
    line = np.array([[0.0], [0.0], [1.0]])
    planes = [Subspace(np.hstack([line, [[np.cos(t)], [np.sin(t)], [0.0]]])) for t in (0.1, 1.2, 2.3)]
    check = is_minimally_intersecting(Arrangement(planes))
    assert not check
    assert check.witness == (0, 1, 2)


def test_pairs_are_minimally_intersecting_in_their_span():
    rng = np.random.default_rng(2)
    for _ in range(50):
        a, b = random_subspace(7, 3, rng), random_subspace(7, 2, rng)
        arr = Arrangement([a, b])
        assert is_minimally_intersecting(arr, within=arr.span())


def test_empty_arrangement_rejected():
    with pytest.raises(PreconditionError):
        is_minimally_intersecting(Arrangement([], n=3))
    with pytest.raises(PreconditionError):
        is_semi_generic(Arrangement([], n=3))


def test_semi_generic_examples():
    rng = np.random.default_rng(3)
    for _ in range(30):
        triple = Arrangement([random_subspace(5, d, rng) for d in (2, 3, 2)])
        assert triple.dim((0, 1, 2)) == 0
        assert is_semi_generic(triple)
    hyps = random_general_position_hyperplanes(4, 6, rng)
    assert is_semi_generic(hyps)
    for r in range(1, 6):
        for idx in combinations(range(6), r):
            assert is_semi_generic(hyps.subset(idx))


def test_non_semi_generic_detected():
    # three planes through a common line, inside R^3 and meeting in that line
    line = np.array([[0.0], [0.0], [1.0]])
    planes = [Subspace(np.hstack([line, [[np.cos(t)], [np.sin(t)], [0.0]]])) for t in (0.1, 1.2, 2.3)]
    assert not is_semi_generic(Arrangement(planes))


@pytest.mark.parametrize("codims", [(1, 2), (2, 2, 3), (1, 1, 1, 1), (3, 4)])
def test_minimally_intersecting_invariants(codims):
    rng = np.random.default_rng(sum(codims))
    n = 7
    arr = random_minimally_intersecting(n, list(codims), rng)
    N = len(arr)
    for i, j in combinations(range(N), 2):
        assert np.linalg.matrix_rank(np.hstack([arr[i].frame, arr[j].frame])) == n
    for r in range(1, N + 1):
        for I in combinations(range(N), r):
            assert is_minimally_intersecting(arr, indices=I)
            for j in set(range(N)) - set(I):
                assert arr.dim(tuple(sorted(I + (j,)))) <= arr.dim(I)
    for i in range(N):
        EI = arr.lattice((i,))
        rest = [j for j in range(N) if j != i]
        if rest:
            local = Arrangement([intersect(arr[j], EI) for j in rest]).in_coordinates(EI)
            assert is_minimally_intersecting(local)


def test_size_bound():
    rng = np.random.default_rng(4)
    with pytest.raises(PreconditionError):
        random_minimally_intersecting(4, [1] * 5, rng)
    arr = random_minimally_intersecting(4, [1] * 4, rng)
    assert len(arr) == 4


def test_wedge_of_intersection_is_intersection_of_wedges():
    rng = np.random.default_rng(5)
    for _ in range(20):
        arr = random_minimally_intersecting(6, [1, 2], rng)
        k = 2
        G = arr.lattice((0, 1))
        wedge_of_meet = compound(G.frame, k).shape[1]
        spaces = [orth(compound(E.frame, k)) for E in arr]
        meet = null_space(np.hstack([spaces[0], -spaces[1]]), rcond=1e-9).shape[1]
        assert wedge_of_meet == meet


def test_adapted_bases_coordinate_example():
    basis = adapted_bases(Arrangement([coord(3, 1, 2), coord(3, 2, 3)]))
    e = np.eye(3)
    assert np.allclose(basis.member_basis(0), e[:, [1, 0]])
    assert np.allclose(basis.member_basis(1), e[:, [1, 2]])
    assert abs(abs(np.linalg.det(basis.matrix)) - 1.0) < 1e-12


def test_adapted_bases_random_triples():
    rng = np.random.default_rng(6)
    for _ in range(100):
        arr = random_minimally_intersecting(7, [1, 2, 2], rng)
        basis = adapted_bases(arr)
        for i, E in enumerate(arr):
            cols = basis.member_basis(i)
            assert cols.shape[1] == E.d
            assert E.contains(cols, 1e-10)
        assert np.linalg.svd(basis.matrix, compute_uv=False)[-1] > 1e-6


def test_adapted_bases_precondition():
    line = np.array([[0.0], [0.0], [1.0]])
    planes = [Subspace(np.hstack([line, [[np.cos(t)], [np.sin(t)], [0.0]]])) for t in (0.1, 1.2, 2.3)]
    with pytest.raises(PreconditionError):
        adapted_bases(Arrangement(planes))


def test_quotient_by_zero_is_identity():
    rng = np.random.default_rng(7)
    arr = random_minimally_intersecting(5, [1, 2], rng)
    out = quotient_arrangement(arr, Subspace.zero(5))
    assert out.n == 5
    for E, Q in zip(arr, out):
        assert E.d == Q.d and E.contains_subspace(Q, 1e-10)


def test_quotient_planes_by_common_line():
    out = quotient_arrangement(Arrangement([coord(3, 1, 3), coord(3, 2, 3)]), coord(3, 3))
    assert out.n == 2
    assert [E.d for E in out] == [1, 1]
    assert out.dim((0, 1)) == 0


def test_quotient_preserves_codimensions():
    rng = np.random.default_rng(8)
    for _ in range(30):
        common = rng.standard_normal((7, 2))
        arr = Arrangement([Subspace(np.hstack([common, rng.standard_normal((7, d))])) for d in (3, 4)])
        F = Subspace(common)
        quot = quotient_arrangement(arr, F)
        for E, Q in zip(arr, quot):
            assert arr.n - E.d == quot.n - Q.d
        assert is_minimally_intersecting(quot) == is_minimally_intersecting(arr)


def test_quotient_requires_containment():
    with pytest.raises(PreconditionError):
        quotient_arrangement(Arrangement([coord(3, 1, 2), coord(3, 2, 3)]), coord(3, 1))


def test_span_of_and_lattice_memo():
    arr = Arrangement([coord(4, 1), coord(4, 2)])
    assert span_of(list(arr)).d == 2
    assert arr.lattice((1, 0)) is arr.lattice((0, 1))
    assert arr.lattice(()).d == 4
