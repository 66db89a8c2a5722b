"""Sorted-subset indexing and sparse wedge tables.

All grade-k objects on R^n store coefficients indexed by the lexicographically
sorted k-subsets of ``range(n)``.
"""
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np
from scipy import sparse


@lru_cache(maxsize=None)
def subsets(n, k):
    """Tuple of sorted k-subsets of range(n) in lexicographic order."""
    if k < 0 or k > n:
        return ()
    return tuple(combinations(range(n), k))


@lru_cache(maxsize=None)
def subset_index(n, k):
    return {s: i for i, s in enumerate(subsets(n, k))}


def merge_sign(a, b):
    """Sign of the permutation sorting the concatenation a+b, 0 on overlap."""
    if set(a) & set(b):
        return 0
    inversions = sum(1 for x in a for y in b if x > y)
    return -1 if inversions % 2 else 1


@lru_cache(maxsize=None)
def wedge_table(n, p, q):
    """Triples (K, I, J, sign) with e_I ^ e_J = sign * e_K.

    Returned as four int/float arrays; empty when p + q > n.
    """
    ks, is_, js, signs = [], [], [], []
    if p + q <= n and p >= 0 and q >= 0:
        kidx = subset_index(n, p + q)
        jidx = subset_index(n, q)
        for i, a in enumerate(subsets(n, p)):
            rest = [x for x in range(n) if x not in a]
            for b in combinations(rest, q):
                ks.append(kidx[tuple(sorted(a + b))])
                is_.append(i)
                js.append(jidx[b])
                signs.append(merge_sign(a, b))
    return (np.array(ks, dtype=np.intp), np.array(is_, dtype=np.intp),
            np.array(js, dtype=np.intp), np.array(signs, dtype=float))


@lru_cache(maxsize=None)
def wedge_matrix(n, p, q):
    """Sparse map vec(a (x) b) -> a ^ b, vec in row-major (I, J) order."""
    k, i, j, s = wedge_table(n, p, q)
    rows = comb(n, p + q) if p + q <= n else 0
    cols = comb(n, p) * comb(n, q)
    return sparse.csr_matrix((s, (k, i * comb(n, q) + j)), shape=(rows, cols))


def compound(a, k):
    """k-th compound matrix: all k x k minors of ``a`` in subset order.

    For an n x d matrix the result is C(n,k) x C(d,k). The 0-th compound is
    the 1 x 1 identity.
    """
    a = np.asarray(a, dtype=float)
    n, d = a.shape
    rows, cols = subsets(n, k), subsets(d, k)
    out = np.empty((len(rows), len(cols)))
    if k == 0:
        out[...] = 1.0
        return out
    if not rows or not cols:
        return out
    r = np.array(rows)
    c = np.array(cols)
    blocks = a[r[:, None, :, None], c[None, :, None, :]]
    return np.linalg.det(blocks)
