import math
from itertools import combinations

import numpy as np
import pytest

from oracles import D1_RANK, d1_rank_cross_product
from valext._subsets import compound
from valext.arrangements import (Arrangement, adapted_bases, random_general_position_hyperplanes,
                                 random_minimally_intersecting, random_subspace)
from valext.errors import (DimensionMismatchError, ExtensionError, IncompatibleDataError,
                           PreconditionError)
from valext.exterior import ExtForm, Subspace, restrict_form
from valext.extension import (Cocycle, FormFamily, build_counterexample, check_compatible, coboundary,
                              d1_matrix, extend_double_forms, extend_forms, extend_general_position,
                              family_from_global, inclusion_exclusion_extend, random_cocycle,
                              restrict_double_data, solve_coboundary)


def coord(n, *axes):
    return Subspace.coordinate(n, [a - 1 for a in axes])


def rand_form(n, k, rng):
    return ExtForm(n, k, rng.standard_normal(math.comb(n, k)))


def restriction_residual(fam, omega):
    return max(float(np.linalg.norm(restrict_form(omega, E).coeffs - w.coeffs))
               for E, w in zip(fam.arrangement, fam.forms) if fam.k <= E.d)


def planes_through_line(angles=(0.1, 1.2, 2.3)):
    line = np.array([[0.0], [0.0], [1.0]])
    return Arrangement([Subspace(np.hstack([line, [[np.cos(t)], [np.sin(t)], [0.0]]]))
                        for t in angles])


# --- compatibility -----------------------------------------------------------

def test_global_restrictions_are_compatible():
    rng = np.random.default_rng(0)
    arr = random_minimally_intersecting(7, [1, 2, 2], rng)
    check = check_compatible(family_from_global(arr, rand_form(7, 2, rng)))
    assert check.ok and check.residual < 1e-13


def test_trivial_intersections_impose_nothing():
    arr = Arrangement([coord(2, 1), coord(2, 2)])
    fam = FormFamily(arr, 1, [ExtForm(1, 1, [3.0]), ExtForm(1, 1, [-7.0])])
    assert check_compatible(fam) == (True, 0.0)


@pytest.mark.parametrize("size", [1e-3, 1e-5, 1e-7])
def test_perturbation_is_measured(size):
    rng = np.random.default_rng(1)
    arr = Arrangement([coord(3, 1, 2), coord(3, 2, 3)])
    fam = family_from_global(arr, rand_form(3, 1, rng))
    forms = list(fam.forms)
    # member 0 in frame (e1, e2): the common line e2 is its second coordinate
    forms[0] = forms[0] + ExtForm(2, 1, [0.0, size])
    check = check_compatible(FormFamily(arr, 1, forms))
    assert check.residual == pytest.approx(size, rel=1e-6)


def test_family_shape_validation():
    arr = Arrangement([coord(3, 1, 2), coord(3, 2, 3)])
    with pytest.raises(DimensionMismatchError):
        FormFamily(arr, 1, [ExtForm(2, 1, [1.0, 0.0])])
    with pytest.raises(DimensionMismatchError):
        FormFamily(arr, 1, [ExtForm(2, 1, [1.0, 0.0]), ExtForm(3, 1, [1.0, 0.0, 0.0])])


# --- extend_forms ------------------------------------------------------------

def test_extend_coordinate_lines():
    arr = Arrangement([coord(2, 1), coord(2, 2)])
    fam = FormFamily(arr, 1, [ExtForm(1, 1, [2.5]), ExtForm(1, 1, [-1.5])])
    assert np.allclose(extend_forms(fam).coeffs, [2.5, -1.5], atol=1e-15)


def test_mixed_wedges_get_zero():
    rng = np.random.default_rng(2)
    arr = Arrangement([coord(3, 1, 2), coord(3, 2, 3)])
    omega = rand_form(3, 2, rng)
    out = extend_forms(family_from_global(arr, omega))
    # subsets of {1,2,3} in order 12, 13, 23; e1 ^ e3 is the mixed wedge
    assert out.coeffs[1] == 0.0
    assert out.coeffs[0] == pytest.approx(omega.coeffs[0], abs=1e-14)
    assert out.coeffs[2] == pytest.approx(omega.coeffs[2], abs=1e-14)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_extend_random_triples(k):
    rng = np.random.default_rng(10 + k)
    for _ in range(100):
        arr = random_minimally_intersecting(7, [1, 2, 2], rng)
        fam = family_from_global(arr, rand_form(7, k, rng))
        assert restriction_residual(fam, extend_forms(fam)) < 1e-10 * fam.scale()


def test_extend_is_linear():
    rng = np.random.default_rng(3)
    arr = random_minimally_intersecting(6, [1, 2, 1], rng)
    f1 = family_from_global(arr, rand_form(6, 2, rng))
    f2 = family_from_global(arr, rand_form(6, 2, rng))
    a, b = 1.7, -0.4
    combined = extend_forms(f1.combine(a, f2, b))
    separate = a * extend_forms(f1).coeffs + b * extend_forms(f2).coeffs
    assert np.linalg.norm(combined.coeffs - separate) < 1e-12 * max(1.0, np.linalg.norm(separate))


def test_extend_rejects_incompatible_family():
    rng = np.random.default_rng(4)
    arr = random_minimally_intersecting(5, [1, 1], rng)
    fam = family_from_global(arr, rand_form(5, 1, rng))
    forms = list(fam.forms)
    forms[0] = forms[0] + rand_form(4, 1, rng) * 1e-3
    with pytest.raises(IncompatibleDataError):
        extend_forms(FormFamily(arr, 1, forms))


def test_extend_rejects_non_minimal_arrangement():
    arr = planes_through_line()
    fam = family_from_global(arr, ExtForm(3, 1, [0.0, 0.0, 1.0]))
    with pytest.raises(PreconditionError):
        extend_forms(fam)


# --- double forms ------------------------------------------------------------

def paired_arrangements(rng):
    arrE = random_minimally_intersecting(5, [1, 2], rng)
    arrF = random_minimally_intersecting(4, [1, 1], rng)
    return arrE, arrF


def test_double_extension_single_pair():
    rng = np.random.default_rng(5)
    E, F = random_subspace(5, 3, rng), random_subspace(4, 2, rng)
    arrE, arrF = Arrangement([E]), Arrangement([F])
    data = [rng.standard_normal((math.comb(3, 2), math.comb(2, 1)))]
    out = extend_double_forms(arrE, arrF, data, 2, 1)
    assert np.linalg.norm(restrict_double_data(arrE, arrF, out, 2, 1)[0] - data[0]) < 1e-10


@pytest.mark.parametrize("p,q", [(1, 1), (2, 1), (1, 2), (2, 2)])
def test_double_extension_hidden_tensor(p, q):
    rng = np.random.default_rng(6 + p + 2 * q)
    arrE, arrF = paired_arrangements(rng)
    hidden = rng.standard_normal((math.comb(5, p), math.comb(4, q)))
    data = restrict_double_data(arrE, arrF, hidden, p, q)
    out = extend_double_forms(arrE, arrF, data, p, q)
    again = restrict_double_data(arrE, arrF, out, p, q)
    assert max(np.linalg.norm(a - b) for a, b in zip(again, data)) < 1e-10 * max(1.0, np.linalg.norm(hidden))
    # what is lost restricts to zero on every pair
    lost = restrict_double_data(arrE, arrF, out - hidden, p, q)
    assert max(np.linalg.norm(x) for x in lost) < 1e-10 * max(1.0, np.linalg.norm(hidden))


def test_double_extension_rejects_data_outside_kernel():
    rng = np.random.default_rng(7)
    arrE, arrF = paired_arrangements(rng)
    hidden = rng.standard_normal((5, 4))
    data = restrict_double_data(arrE, arrF, hidden, 1, 1)
    data[0] = data[0] + 1e-3 * rng.standard_normal(data[0].shape)
    with pytest.raises(IncompatibleDataError):
        extend_double_forms(arrE, arrF, data, 1, 1)


# --- general position --------------------------------------------------------

@pytest.mark.parametrize("n,k,count", [(4, 1, 6), (4, 2, 6), (5, 2, 7), (5, 3, 8)])
def test_general_position_recovery(n, k, count):
    rng = np.random.default_rng(n * 10 + k)
    arr = random_general_position_hyperplanes(n, count, rng)
    omega = rand_form(n, k, rng)
    out, unique = extend_general_position(family_from_global(arr, omega))
    assert unique
    assert np.linalg.norm(out.coeffs - omega.coeffs) < 1e-10 * omega.norm()


def test_general_position_anchor_independence():
    rng = np.random.default_rng(8)
    n, k, count = 5, 2, 7
    arr = random_general_position_hyperplanes(n, count, rng)
    fam = family_from_global(arr, rand_form(n, k, rng))
    outs = [extend_general_position(fam, anchor=a)[0].coeffs
            for a in combinations(range(count), k + 1)]
    assert max(np.linalg.norm(o - outs[0]) for o in outs) < 1e-10 * fam.scale()


def test_general_position_order_independence_at_k_plus_one():
    rng = np.random.default_rng(9)
    n, k = 4, 2
    arr = random_general_position_hyperplanes(n, k + 1, rng)
    fam = family_from_global(arr, rand_form(n, k, rng))
    first, unique = extend_general_position(fam)
    order = [2, 0, 1]
    second, _ = extend_general_position(fam.subfamily(order))
    assert unique
    assert np.linalg.norm(first.coeffs - second.coeffs) < 1e-10 * fam.scale()


def test_general_position_single_member():
    rng = np.random.default_rng(10)
    arr = Arrangement([random_subspace(4, 3, rng)])
    fam = family_from_global(arr, rand_form(4, 2, rng))
    out, unique = extend_general_position(fam)
    assert not unique
    assert restriction_residual(fam, out) < 1e-12


def test_general_position_detects_incompatible_member():
    rng = np.random.default_rng(11)
    arr = random_general_position_hyperplanes(4, 6, rng)
    fam = family_from_global(arr, rand_form(4, 1, rng))
    forms = list(fam.forms)
    forms[5] = forms[5] + rand_form(3, 1, rng) * 1e-3
    with pytest.raises(ExtensionError):
        extend_general_position(FormFamily(arr, 1, forms))


# --- coboundary solver -------------------------------------------------------

def coboundary_residual(R, L):
    check = coboundary(R.arrangement, L)
    arr = R.arrangement
    return max([0.0] + [float(np.linalg.norm(check.entry(i, j).coeffs - R.entry(i, j).coeffs))
                        for i, j in combinations(range(len(arr)), 2) if arr.dim((i, j)) >= R.p])


def hidden_coboundary(arr, p, rng):
    L = [rand_form(E.d, p, rng) for E in arr]
    return coboundary(arr, L)


ARRANGEMENT_CLASSES = {
    "minimal": lambda rng: random_minimally_intersecting(7, [1, 2, 2, 1], rng),
    "general-position": lambda rng: random_general_position_hyperplanes(4, 6, rng),
    "three-members": lambda rng: planes_through_line(),
}


@pytest.mark.parametrize("kind", sorted(ARRANGEMENT_CLASSES))
def test_coboundary_round_trip(kind):
    rng = np.random.default_rng(12)
    for _ in range(10):
        arr = ARRANGEMENT_CLASSES[kind](rng)
        R = hidden_coboundary(arr, 1, rng)
        assert coboundary_residual(R, solve_coboundary(R)) < 1e-9 * R.scale()


def test_coboundary_round_trip_higher_grade():
    rng = np.random.default_rng(13)
    arr = random_minimally_intersecting(7, [1, 1, 2], rng)
    R = hidden_coboundary(arr, 2, rng)
    assert coboundary_residual(R, solve_coboundary(R)) < 1e-9 * R.scale()


def test_three_members_arbitrary_cocycle():
    rng = np.random.default_rng(14)
    for arr in (planes_through_line(), random_minimally_intersecting(6, [2, 2, 1], rng),
                Arrangement([random_subspace(5, 4, rng) for _ in range(3)])):
        for p in (1, 2):
            R = random_cocycle(arr, p, rng)
            assert R.cocycle_residual() < 1e-12 * R.scale()
            assert coboundary_residual(R, solve_coboundary(R)) < 1e-9 * R.scale()


def test_zero_cocycle_gives_consistent_forms():
    rng = np.random.default_rng(15)
    arr = random_minimally_intersecting(6, [1, 2, 1], rng)
    R = Cocycle(arr, 1, {})
    L = solve_coboundary(R)
    assert coboundary_residual(R, L) < 1e-12


def test_image_of_d1_is_closed():
    rng = np.random.default_rng(16)
    for _ in range(20):
        arr = Arrangement([random_subspace(6, d, rng) for d in (5, 4, 5, 4)])
        R = hidden_coboundary(arr, 2, rng)
        assert R.cocycle_residual() < 1e-12 * R.scale()


def test_cocycle_condition_is_enforced():
    rng = np.random.default_rng(17)
    arr = random_minimally_intersecting(6, [1, 1, 1], rng)
    R = hidden_coboundary(arr, 1, rng)
    entries = dict(R.entries)
    entries[(0, 1)] = entries[(0, 1)] + rand_form(entries[(0, 1)].n, 1, rng) * 1e-3
    with pytest.raises(IncompatibleDataError):
        solve_coboundary(Cocycle(arr, 1, entries))


def test_d1_matrix_agrees_with_coboundary():
    rng = np.random.default_rng(18)
    arr = random_general_position_hyperplanes(4, 5, rng)
    mat, pairs, row_off, col_off = d1_matrix(arr, 1)
    L = [rand_form(E.d, 1, rng) for E in arr]
    flat = mat @ np.concatenate([w.coeffs for w in L])
    R = coboundary(arr, L)
    for a, ij in enumerate(pairs):
        assert np.allclose(flat[row_off[a]:row_off[a + 1]], R.entry(*ij).coeffs, atol=1e-14)


# --- inclusion-exclusion -----------------------------------------------------

def grid_restrict(values, block, block_sizes, zero_at):
    index = []
    for b, sizes in enumerate(block_sizes):
        for z in zero_at[b]:
            index.append(z if b == block else slice(None))
    index.append(Ellipsis)
    return values[tuple(index)]


def slices_of(full, block_axes):
    sizes = [[len(a) for a in blk] for blk in block_axes]
    zeros = [[int(np.flatnonzero(np.asarray(a) == 0.0)[0]) for a in blk] for blk in block_axes]
    return [grid_restrict(full, i, sizes, zeros) for i in range(len(block_axes))], sizes, zeros


def test_two_blocks_formula():
    x1 = np.linspace(-1, 1, 5)
    x2 = np.linspace(-2, 2, 9)
    full = np.exp(np.add.outer(x1, 2 * x2)) + np.multiply.outer(x1, x2) ** 2
    slices, _, _ = slices_of(full, [[x1], [x2]])
    out = inclusion_exclusion_extend(slices, [[x1], [x2]])
    expect = (full[[2], :] + full[:, [4]]) - full[2, 4]
    assert np.allclose(out, expect, atol=1e-14)


def test_blockwise_affine_function_is_reproduced():
    rng = np.random.default_rng(19)
    axes = [[np.linspace(-1, 1, 3), np.linspace(-1, 2, 4)], [np.linspace(-2, 0, 5)],
            [np.linspace(0, 1, 3)]]
    y = [np.linspace(-1, 1, 4)]
    grids = np.meshgrid(*[a for blk in axes for a in blk], *y, indexing="ij")
    x = grids[:-1]
    yy = grids[-1]
    # sum of functions each depending on y and at most N-1 of the blocks
    block_of = [0, 0, 1, 2]
    full = np.zeros_like(yy)
    for drop in range(3):
        coef = rng.standard_normal(4)
        part = np.sin(yy)
        for axis, b in enumerate(block_of):
            if b != drop:
                part = part * (1 + coef[axis] * x[axis])
        full = full + part
    slices, _, _ = slices_of(full, axes)
    out = inclusion_exclusion_extend(slices, axes, y_axes=y)
    assert np.max(np.abs(out - full)) < 1e-12


def test_restriction_reproduces_slices_bit_for_bit():
    rng = np.random.default_rng(20)
    axes = [[np.array([-0.5, 0.0, 0.7])], [np.array([0.0, 1.0]), np.array([-1.0, 0.0, 2.0])],
            [np.array([-3.0, 0.0])]]
    y = [np.arange(3.0)]
    shape = tuple(len(a) for blk in axes for a in blk) + (3,)
    full = rng.standard_normal(shape)
    slices, sizes, zeros = slices_of(full, axes)
    out = inclusion_exclusion_extend(slices, axes, y_axes=y)
    for i in range(3):
        assert np.array_equal(grid_restrict(out, i, sizes, zeros), slices[i])


def test_inconsistent_slices_rejected():
    x1, x2 = np.array([-1.0, 0.0, 1.0]), np.array([0.0, 1.0])
    full = np.arange(6.0).reshape(3, 2)
    slices, _, _ = slices_of(full, [[x1], [x2]])
    slices[0] = slices[0] + np.array([1e-6, 0.0])
    with pytest.raises(IncompatibleDataError):
        inclusion_exclusion_extend(slices, [[x1], [x2]])


def test_axes_must_contain_zero():
    with pytest.raises(PreconditionError):
        inclusion_exclusion_extend([np.zeros(2), np.zeros(2)],
                                   [[np.array([1.0, 2.0])], [np.array([0.0, 1.0])]])


# --- counterexample ----------------------------------------------------------

@pytest.mark.parametrize("N", [4, 5, 6])
def test_counterexample_certificate(N):
    rng = np.random.default_rng(21 + N)
    arr, R, cert = build_counterexample(N, rng)
    normals = [arr[i].complement().frame[:, 0] for i in range(N)]
    assert cert["rank_d1"] == D1_RANK[N] == d1_rank_cross_product(normals) == 2 * N - 3
    assert cert["dimension_count"] == 3 - 2 * N + math.comb(N, 2)
    assert cert["image_distance"] >= 0.1
    assert cert["solve_failed"]
    with pytest.raises(ExtensionError):
        solve_coboundary(R)


def test_counterexample_residual_against_lstsq_oracle():
    rng = np.random.default_rng(30)
    arr, R, cert = build_counterexample(4, rng)
    mat, pairs, row_off, _ = d1_matrix(arr, 1)
    r = np.concatenate([R.entry(*ij).coeffs for ij in pairs])
    coef, *_ = np.linalg.lstsq(mat, r, rcond=None)
    assert np.linalg.norm(mat @ coef - r) / np.linalg.norm(r) >= 0.1
    assert cert["dimension_count"] == 1


def test_counterexample_needs_four_planes():
    with pytest.raises(PreconditionError):
        build_counterexample(3, np.random.default_rng(0))


def test_adapted_bases_used_by_extension_are_invertible():
    rng = np.random.default_rng(31)
    arr = random_minimally_intersecting(7, [2, 2, 3], rng)
    for k in range(1, 4):
        s = np.linalg.svd(compound(adapted_bases(arr).matrix, k), compute_uv=False)
        assert s[-1] > 1e-6 * s[0]


def test_family_is_zero_on_members_below_the_grade():
    rng = np.random.default_rng(40)
    arr = random_minimally_intersecting(5, [1, 3], rng)
    fam = family_from_global(arr, rand_form(5, 3, rng))
    assert fam.forms[1].coeffs.size == 0
    assert restriction_residual(fam, extend_forms(fam)) < 1e-10 * fam.scale()
