"""Shared test oracles, kept independent of the implementations they check."""

import itertools

import numpy as np


def vertex_enumeration(normals, bounds, total, n, tol=1e-9):
    """Exact vertex enumeration of a majorisation polytope for n = 2 or 3.

    The polytope lives on the affine plane sum(x) = total; vertices are
    intersections of n-1 active halfspace boundaries with that plane,
    filtered by feasibility.  Only meant as a small-n oracle.
    """
    rows = [np.ones(n)]
    verts = []
    eqs = list(zip(normals, bounds))
    for combo in itertools.combinations(eqs, n - 1):
        a = np.vstack(rows + [m for m, _ in combo])
        b = np.array([total] + [v for _, v in combo])
        if abs(np.linalg.det(a)) < 1e-12:
            continue
        x = np.linalg.solve(a, b)
        if all(m @ x <= v + tol for m, v in eqs):
            if not any(np.max(np.abs(x - w)) <= 1e-7 for w in verts):
                verts.append(x)
    return verts


def partial_sum_majorises(x, y, tol=1e-9):
    """Classical majorisation by direct sorted partial sums."""
    x = np.sort(np.asarray(x, dtype=float))[::-1]
    y = np.sort(np.asarray(y, dtype=float))[::-1]
    if abs(x.sum() - y.sum()) > tol:
        return False
    return bool(np.all(np.cumsum(x)[:-1] <= np.cumsum(y)[:-1] + tol))


def random_simplex_point(rng, n):
    v = rng.uniform(0.0, 1.0, n)
    return v / v.sum()
