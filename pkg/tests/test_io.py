import json

import numpy as np
import pytest

from valext import io
from valext.arrangements import random_minimally_intersecting, random_subspace
from valext.doubleforms import SymmetricDoubleForm, restrict_double, sym_power, euclidean
from valext.exterior import ExtForm, Multivector, Subspace
from valext.extension import family_from_global, random_cocycle, solve_coboundary


def through_text(obj):
    return json.loads(json.dumps(obj))


def test_graded_round_trip():
    w = ExtForm(4, 2, np.arange(6.0) - 2.5)
    back = io.graded_from_json(through_text(io.graded_to_json(w)))
    assert isinstance(back, ExtForm) and np.array_equal(back.coeffs, w.coeffs)
    v = io.multivector_from_json(io.graded_to_json(Multivector(3, 1, [1.0, 2.0, 3.0])))
    assert isinstance(v, Multivector)


def test_subspace_round_trip_is_exact():
    rng = np.random.default_rng(0)
    for d in range(0, 5):
        E = random_subspace(5, d, rng)
        back = io.subspace_from_json(through_text(io.subspace_to_json(E)))
        assert back.d == d and np.array_equal(back.frame, E.frame)


def test_subspace_rank_is_checked():
    obj = {"n": 3, "d": 2, "frame": [[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]}
    with pytest.raises(io.FormatError):
        io.subspace_from_json(obj)
    with pytest.raises(io.FormatError):
        io.subspace_from_json({"n": 3})


def test_lift_problem_round_trip():
    rng = np.random.default_rng(1)
    Q = sym_power(euclidean(4), 2)
    samples = [(H, restrict_double(Q, H)) for H in (random_subspace(4, 3, rng) for _ in range(3))]
    back = io.lift_problem_from_json(through_text(io.lift_problem_to_json(samples)))
    for (H, QH), (H2, QH2) in zip(samples, back):
        assert isinstance(QH2, SymmetricDoubleForm)
        assert np.array_equal(H.frame, H2.frame) and np.array_equal(QH.coeffs, QH2.coeffs)
    bad = io.lift_problem_to_json(samples)
    bad["data"].pop()
    with pytest.raises(io.FormatError):
        io.lift_problem_from_json(bad)


def test_family_round_trip():
    rng = np.random.default_rng(2)
    arr = random_minimally_intersecting(6, [1, 2], rng)
    fam = family_from_global(arr, ExtForm(6, 2, rng.standard_normal(15)))
    back = io.family_from_json(through_text(io.family_to_json(fam)))
    assert back.k == 2
    for a, b in zip(fam.forms, back.forms):
        assert np.array_equal(a.coeffs, b.coeffs)


def test_cocycle_round_trip_solves_identically():
    rng = np.random.default_rng(3)
    arr = random_minimally_intersecting(6, [2, 1, 2], rng)
    R = random_cocycle(arr, 1, rng)
    back = io.cocycle_from_json(through_text(io.cocycle_to_json(R)))
    for (i, j), w in R.entries.items():
        assert np.array_equal(back.entry(i, j).coeffs, w.coeffs)
        assert np.array_equal(back.arrangement.lattice((i, j)).frame, arr.lattice((i, j)).frame)
    for a, b in zip(solve_coboundary(R), solve_coboundary(back)):
        assert np.array_equal(a.coeffs, b.coeffs)


def test_cocycle_index_validation():
    rng = np.random.default_rng(4)
    R = random_cocycle(random_minimally_intersecting(5, [1, 1, 1], rng), 1, rng)
    obj = io.cocycle_to_json(R)
    obj["cocycle"][0]["i"] = 5
    with pytest.raises(io.FormatError):
        io.cocycle_from_json(obj)


def test_dump_and_load(tmp_path):
    path = tmp_path / "form.json"
    io.dump(io.doubleform_to_json(euclidean(3)), path)
    assert np.array_equal(io.doubleform_from_json(io.load(path)).coeffs, np.eye(3))
    path.write_text("{not json")
    with pytest.raises(io.FormatError):
        io.load(path)


def test_subspace_json_layout():
    obj = io.subspace_to_json(Subspace.coordinate(3, [1]))
    assert obj == {"n": 3, "d": 1, "frame": [[0.0, 1.0, 0.0]]}


def test_cocycle_entries_follow_a_rotated_lattice_frame():
    rng = np.random.default_rng(5)
    arr = random_minimally_intersecting(6, [2, 1, 2], rng)
    R = random_cocycle(arr, 1, rng)
    obj = io.cocycle_to_json(R)
    # rotate each stored intersection frame and rewrite its entry to match
    for e in obj["cocycle"]:
        G = arr.lattice((e["i"], e["j"]))
        rot, _ = np.linalg.qr(rng.standard_normal((G.d, G.d)))
        e["frame"] = (G.frame @ rot).T.tolist()
        e["R"]["coeffs"] = (rot.T @ np.asarray(e["R"]["coeffs"])).tolist()
    back = io.cocycle_from_json(through_text(obj))
    for (i, j), w in R.entries.items():
        assert np.allclose(back.entry(i, j).coeffs, w.coeffs, atol=1e-12)
