"""Dense two-phase simplex solver with Bland's rule.

All linear programs in this package are tiny (tableaux well under a hundred
columns), so a textbook dense tableau with Bland's anti-cycling rule is both
sufficient and dependency-free.  Problems are stated as

    minimize    c^T v
    subject to  A_eq v  = b_eq
                A_ub v <= b_ub
                v >= 0.

Inequalities are absorbed into equalities with slack variables; phase one
minimizes the sum of artificial variables to find a basic feasible point,
phase two minimizes the objective proper.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InternalError

_PIVOT_TOL = 1e-11


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective: float | None
    degenerate: bool = False
    infeasibility: float = 0.0  # phase-one optimum (distance to feasibility)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _simplex(tab: np.ndarray, basis: np.ndarray, ncols: int, max_iter: int) -> tuple[str, bool]:
    """Run Bland-rule simplex on a tableau whose last row is the reduced cost row.

    The tableau layout is [A | b] stacked over [c_red | -obj].  Returns the
    termination status and whether any degenerate pivot occurred.
    """
    m = tab.shape[0] - 1
    degenerate = False
    for _ in range(max_iter):
        cost = tab[-1, :ncols]
        entering = -1
        for j in range(ncols):
            if cost[j] < -_PIVOT_TOL:
                entering = j
                break
        if entering < 0:
            return "optimal", degenerate
        col = tab[:m, entering]
        best_ratio = np.inf
        leaving = -1
        for i in range(m):
            if col[i] > _PIVOT_TOL:
                ratio = tab[i, -1] / col[i]
                if ratio < best_ratio - _PIVOT_TOL or (
                    abs(ratio - best_ratio) <= _PIVOT_TOL
                    and (leaving < 0 or basis[i] < basis[leaving])
                ):
                    best_ratio = ratio
                    leaving = i
        if leaving < 0:
            return "unbounded", degenerate
        if best_ratio <= _PIVOT_TOL:
            degenerate = True
        piv = tab[leaving, entering]
        tab[leaving] /= piv
        for i in range(m + 1):
            if i != leaving and abs(tab[i, entering]) > 0.0:
                tab[i] -= tab[i, entering] * tab[leaving]
        basis[leaving] = entering
    raise InternalError("simplex failed to terminate (Bland's rule exhausted iterations)")


def solve_lp(
    c,
    a_eq=None,
    b_eq=None,
    a_ub=None,
    b_ub=None,
    feas_tol: float = 1e-9,
    max_iter: int = 20000,
) -> LPResult:
    """Solve min c^T v over v >= 0 with equality and upper-bound constraints."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    nvar = c.size

    rows = []
    rhs = []
    if a_eq is not None and len(np.atleast_2d(a_eq)):
        a_eq = np.atleast_2d(np.asarray(a_eq, dtype=float))
        for r, b in zip(a_eq, np.atleast_1d(b_eq)):
            rows.append((r, float(b), 0.0))
    nslack = 0
    if a_ub is not None and len(np.atleast_2d(a_ub)):
        a_ub = np.atleast_2d(np.asarray(a_ub, dtype=float))
        nslack = a_ub.shape[0]
        for k, (r, b) in enumerate(zip(a_ub, np.atleast_1d(b_ub))):
            rows.append((r, float(b), k))
    m = len(rows)

    ncols = nvar + nslack
    a = np.zeros((m, ncols))
    b = np.zeros(m)
    for i, (r, bi, tag) in enumerate(rows):
        a[i, :nvar] = r
        b[i] = bi
        if a_ub is not None and i >= m - nslack:
            a[i, nvar + (i - (m - nslack))] = 1.0
    # normalize to b >= 0 for phase one
    for i in range(m):
        if b[i] < 0:
            a[i] *= -1.0
            b[i] *= -1.0

    # phase one: artificial variables
    total = ncols + m
    tab = np.zeros((m + 1, total + 1))
    tab[:m, :ncols] = a
    tab[:m, ncols:total] = np.eye(m)
    tab[:m, -1] = b
    basis = np.arange(ncols, total)
    # phase-one cost row: unit cost on artificials, reduced against the basis
    tab[-1, :] = 0.0
    tab[-1, ncols:total] = 1.0
    for i in range(m):
        tab[-1] -= tab[i]

    status, deg1 = _simplex(tab, basis, total, max_iter)
    phase1_obj = max(0.0, -tab[-1, -1])
    if status != "optimal" or phase1_obj > feas_tol:
        return LPResult("infeasible", None, None, deg1, phase1_obj)

    # drive surviving artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= ncols:
            row = tab[i, :ncols]
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > _PIVOT_TOL:
                piv = tab[i, j]
                tab[i] /= piv
                for k in range(m + 1):
                    if k != i and abs(tab[k, j]) > 0.0:
                        tab[k] -= tab[k, j] * tab[i]
                basis[i] = j
    # rows still holding a basic artificial are redundant constraints (rhs ~ 0)
    live = [i for i in range(m) if basis[i] < ncols]
    if len(live) < m:
        tab = np.vstack([tab[live], tab[-1:]])
        basis = basis[live]
        m = len(live)

    # phase two
    tab2 = np.zeros((m + 1, ncols + 1))
    tab2[:m, :ncols] = tab[:m, :ncols]
    tab2[:m, -1] = tab[:m, -1]
    cost = np.zeros(ncols)
    cost[:nvar] = c
    tab2[-1, :ncols] = cost
    for i in range(m):
        j = basis[i]
        if abs(cost[j]) > 0.0:
            tab2[-1] -= cost[j] * tab2[i]

    status, deg2 = _simplex(tab2, basis, ncols, max_iter)
    if status == "unbounded":
        return LPResult("unbounded", None, None, deg1 or deg2, phase1_obj)
    x = np.zeros(ncols)
    for i in range(m):
        x[basis[i]] = tab2[i, -1]
    return LPResult("optimal", x[:nvar], float(c @ x[:nvar]), deg1 or deg2, phase1_obj)
