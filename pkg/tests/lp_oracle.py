"""Exhaustive vertex enumeration for small dual transport LPs.

Independent of the package's solver: every choice of ``n`` constraints
(``n`` = number of free variables) is solved as a square system, infeasible
points are discarded and the best objective is returned.  Only usable when
``C(|E|, n)`` is small.
"""

from itertools import combinations
from math import comb

import numpy as np


def northwest_corner(a, b):
    """Support of the northwest-corner transport plan between masses ``a`` and ``b``."""
    a, b = np.array(a, dtype=float), np.array(b, dtype=float)
    i = j = 0
    support = []
    while i < len(a) and j < len(b):
        support.append((i, j))
        t = min(a[i], b[j])
        a[i] -= t
        b[j] -= t
        if i == len(a) - 1 and j == len(b) - 1:
            break
        if a[i] <= b[j] and i < len(a) - 1:
            i += 1
        else:
            j += 1
    return support


def enumerate_optimum(r_weights, z_weights, rows, cols, rhs, anchor_value, anchor=0,
                      tol=1e-9, batch=20000):
    """Minimum of ``a.r + b.z`` over ``r_i + z_j >= rhs`` with ``r[anchor]`` fixed.

    Returns ``(objective, r, z)`` of the best feasible vertex.
    """
    M, N = len(r_weights), len(z_weights)
    free_r = [i for i in range(M) if i != anchor]
    pos = {i: k for k, i in enumerate(free_r)}
    n = M - 1 + N
    m = len(rows)
    if comb(m, n) > 2_000_000:
        raise ValueError("too many vertex candidates")
    A = np.zeros((m, n))
    b = np.array(rhs, dtype=float)
    for k, (i, j) in enumerate(zip(rows, cols)):
        if i == anchor:
            b[k] -= anchor_value
        else:
            A[k, pos[i]] = 1.0
        A[k, M - 1 + j] = 1.0
    c = np.concatenate([np.asarray(r_weights)[free_r], z_weights])
    const = r_weights[anchor] * anchor_value

    best = (np.inf, None)
    combos = combinations(range(m), n)
    while True:
        chunk = [next(combos, None) for _ in range(batch)]
        chunk = np.array([x for x in chunk if x is not None])
        if len(chunk) == 0:
            break
        As, bs = A[chunk], b[chunk]
        ok = np.abs(np.linalg.det(As)) > 1e-9
        if not np.any(ok):
            continue
        v = np.linalg.solve(As[ok], bs[ok][..., None])[..., 0]
        feasible = np.all(v @ A.T >= b - tol, axis=1)
        if not np.any(feasible):
            continue
        vals = v[feasible] @ c
        k = int(np.argmin(vals))
        if vals[k] < best[0]:
            best = (vals[k], v[feasible][k])
    if best[1] is None:
        raise ValueError("no feasible vertex")
    v = best[1]
    r = np.empty(M)
    r[anchor] = anchor_value
    r[free_r] = v[: M - 1]
    return best[0] + const, r, v[M - 1:]
