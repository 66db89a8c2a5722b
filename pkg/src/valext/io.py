"""JSON codecs for the library's data types.

Subspace frames are written column-major: ``"frame"`` is a list of the d
column vectors, each of length n. Frames that are orthonormal on reading are
kept as stored, so a written document reloads to bit-identical objects.
Cocycle entries carry the frame of their intersection, which lets them be
re-expressed in whatever frame the reloaded lattice computes.
"""
import json

import numpy as np

from ._subsets import compound
from .arrangements import Arrangement
from .doubleforms import DoubleForm, SymmetricDoubleForm
from .errors import ValextError
from .exterior import ExtForm, Multivector, Subspace
from .extension import Cocycle, FormFamily

__all__ = [
    "FormatError",
    "graded_to_json", "graded_from_json", "multivector_from_json",
    "subspace_to_json", "subspace_from_json",
    "doubleform_to_json", "doubleform_from_json",
    "arrangement_to_json", "arrangement_from_json",
    "lift_problem_to_json", "lift_problem_from_json",
    "family_to_json", "family_from_json",
    "cocycle_to_json", "cocycle_from_json",
    "load", "dump",
]


class FormatError(ValextError, ValueError):
    """Malformed JSON document."""


def _need(obj, *keys):
    if not isinstance(obj, dict):
        raise FormatError(f"expected an object with keys {keys}")
    missing = [k for k in keys if k not in obj]
    if missing:
        raise FormatError(f"missing keys {missing}")
    return [obj[k] for k in keys]


def graded_to_json(a):
    return {"n": a.n, "k": a.k, "coeffs": [float(c) for c in a.coeffs]}


def graded_from_json(obj, cls=ExtForm):
    n, k, coeffs = _need(obj, "n", "k", "coeffs")
    return cls(int(n), int(k), np.asarray(coeffs, dtype=float))


def multivector_from_json(obj):
    return graded_from_json(obj, Multivector)


def subspace_to_json(E):
    return {"n": E.n, "d": E.d, "frame": E.frame.T.tolist()}


def _frame_from_json(n, d, frame):
    try:
        return np.asarray(frame, dtype=float).reshape(int(d), int(n)).T
    except ValueError as exc:
        raise FormatError(f"frame does not have {d} columns of length {n}") from exc


def subspace_from_json(obj):
    n, d, frame = _need(obj, "n", "d", "frame")
    if not int(d):
        return Subspace.zero(int(n))
    f = _frame_from_json(n, d, frame)
    orthonormal = np.max(np.abs(f.T @ f - np.eye(f.shape[1]))) <= 1e-12
    E = Subspace(f, orthonormalize=not orthonormal)
    if E.d != int(d):
        raise FormatError(f"frame has rank {E.d}, declared d={d}")
    return E


def doubleform_to_json(w):
    return {"n": w.n, "p": w.p, "q": w.q, "coeffs": w.coeffs.tolist()}


def doubleform_from_json(obj, symmetric=False):
    n, p, q, coeffs = _need(obj, "n", "p", "q", "coeffs")
    cls = SymmetricDoubleForm if symmetric else DoubleForm
    return cls(int(n), int(p), int(q), np.asarray(coeffs, dtype=float))


def arrangement_to_json(arr):
    return {"n": arr.n, "subspaces": [subspace_to_json(E) for E in arr]}


def arrangement_from_json(obj):
    n, subs = _need(obj, "n", "subspaces")
    return Arrangement([subspace_from_json(s) for s in subs], n=int(n))


def lift_problem_to_json(samples):
    return {"hyperplanes": [subspace_to_json(H) for H, _ in samples],
            "data": [doubleform_to_json(Q) for _, Q in samples]}


def lift_problem_from_json(obj):
    hyps, data = _need(obj, "hyperplanes", "data")
    if len(hyps) != len(data):
        raise FormatError("one datum per hyperplane is required")
    return [(subspace_from_json(h), doubleform_from_json(d, symmetric=True))
            for h, d in zip(hyps, data)]


def family_to_json(fam):
    return {"arrangement": arrangement_to_json(fam.arrangement), "grade": fam.k,
            "forms": [graded_to_json(w) for w in fam.forms]}


def family_from_json(obj):
    arr, k, forms = _need(obj, "arrangement", "grade", "forms")
    return FormFamily(arrangement_from_json(arr), int(k), [graded_from_json(w) for w in forms])


def cocycle_to_json(R):
    return {"arrangement": arrangement_to_json(R.arrangement), "grade": R.p,
            "cocycle": [{"i": i, "j": j, "R": graded_to_json(w),
                         "frame": R.arrangement.lattice((i, j)).frame.T.tolist()}
                        for (i, j), w in sorted(R.entries.items())]}


def cocycle_from_json(obj):
    arr, p, entries = _need(obj, "arrangement", "grade", "cocycle")
    arr = arrangement_from_json(arr)
    table = {}
    for e in entries:
        i, j, w = _need(e, "i", "j", "R")
        if not 0 <= int(i) < int(j) < len(arr):
            raise FormatError(f"bad cocycle index pair ({i}, {j})")
        w = graded_from_json(w)
        if "frame" in e:
            # entry is written in the stored frame; move it to the lattice's frame
            G = arr.lattice((int(i), int(j)))
            old = _frame_from_json(arr.n, w.n, e["frame"])
            if G.d != w.n:
                raise FormatError(f"entry ({i}, {j}) has dimension {w.n}, intersection has {G.d}")
            if not np.array_equal(old, G.frame):
                w = ExtForm(G.d, w.k, compound(old.T @ G.frame, w.k).T @ w.coeffs)
        table[(int(i), int(j))] = w
    return Cocycle(arr, int(p), table)


def load(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def dump(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
