"""Thermomajorisation curves, d-majorisation, and the majorisation polytope.

The central object is the piecewise-linear curve of a pair (d, y): sort the
level ratios y_i/d_i decreasingly and connect the partial-sum elbow points.
Dominance of these curves characterizes when a d-stochastic matrix maps y to
x, together with three equivalent formulations (transition-matrix existence,
elbow dominance, and a family of 1-norm inequalities), all implemented here
and cross-checked in the test suite.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import ALG_TOL
from .errors import InvalidInputError
from .lp import solve_lp


def _check_pair(d, y):
    d = np.asarray(d, dtype=float)
    y = np.asarray(y, dtype=float)
    if d.ndim != 1 or y.ndim != 1 or d.size != y.size:
        raise InvalidInputError("d and y must be 1-D vectors of equal length")
    if np.any(d <= 0.0) or not np.all(np.isfinite(d)):
        raise InvalidInputError("d must be strictly positive (zero Gibbs weights unsupported)")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("y must be finite")
    return d, y


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThermoCurve:
    """Piecewise-linear curve through the elbow points of (d, y).

    ``abscissas`` runs from 0 to sum(d); ``ordinates`` from 0 to sum(y).  The
    sorting permutation (stable in the original index on ratio ties) is kept
    for elbow bookkeeping.
    """

    abscissas: np.ndarray
    ordinates: np.ndarray
    d: np.ndarray
    y: np.ndarray
    perm: np.ndarray

    def __call__(self, c):
        return np.interp(c, self.abscissas, self.ordinates)

    @property
    def total_weight(self) -> float:
        return float(self.abscissas[-1])

    def slopes(self) -> np.ndarray:
        return np.diff(self.ordinates) / np.diff(self.abscissas)

    def is_concave(self, tol: float = ALG_TOL) -> bool:
        s = self.slopes()
        return bool(np.all(np.diff(s) <= tol))


def thermo_curve(d, y) -> ThermoCurve:
    """Elbow-point construction of the curve of (d, y)."""
    d, y = _check_pair(d, y)
    ratios = y / d
    # stable sort on descending ratio; ties keep original index order
    perm = np.argsort(-ratios, kind="stable")
    absc = np.concatenate([[0.0], np.cumsum(d[perm])])
    ordi = np.concatenate([[0.0], np.cumsum(y[perm])])
    return ThermoCurve(absc, ordi, d, y, perm)


def thermo_curve_min_formula(d, y, c):
    """Direct min-of-affine evaluation of the curve; the oracle form.

    th(c) = min_i [ sum_j max(y_j - (y_i/d_i) d_j, 0) + (y_i/d_i) c ].
    """
    d, y = _check_pair(d, y)
    c = np.atleast_1d(np.asarray(c, dtype=float))
    slopes = y / d
    intercepts = np.array([np.sum(np.maximum(y - s * d, 0.0)) for s in slopes])
    vals = intercepts[None, :] + np.outer(c, slopes)
    out = vals.min(axis=1)
    return out if out.size > 1 else float(out[0])


# ---------------------------------------------------------------------------
# Majorisation predicates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DMajResult:
    holds: bool
    violated_index: int | None = None
    margin: float = 0.0

    def __bool__(self) -> bool:
        return self.holds


def d_majorises(x, y, d, tol: float = ALG_TOL) -> DMajResult:
    """Does a d-stochastic matrix map y to x?  Decided by 1-norm inequalities.

    Checks equal totals and ||d_i x - y_i d||_1 <= ||d_i y - y_i d||_1 for
    every i; the certificate records the first violated index (-1 for the
    total-sum constraint).
    """
    d, y = _check_pair(d, y)
    x = np.asarray(x, dtype=float)
    if x.shape != y.shape:
        raise InvalidInputError("x and y must have equal length")
    scale = max(1.0, np.abs(y).sum(), np.abs(x).sum())
    if abs(x.sum() - y.sum()) > tol * scale:
        return DMajResult(False, -1, float(abs(x.sum() - y.sum())))
    margins = np.array([
        np.abs(d[i] * y - y[i] * d).sum() - np.abs(d[i] * x - y[i] * d).sum()
        for i in range(d.size)
    ])
    worst = int(np.argmin(margins))
    if margins[worst] < -tol * scale:
        return DMajResult(False, worst, float(margins[worst]))
    return DMajResult(True, None, float(margins[worst]))


def dmaj_by_elbows(x, y, d, tol: float = ALG_TOL) -> bool:
    """Elbow form: partial sums of x in its own ratio order against th_{d,y}."""
    d, y = _check_pair(d, y)
    x = np.asarray(x, dtype=float)
    scale = max(1.0, np.abs(y).sum(), np.abs(x).sum())
    if abs(x.sum() - y.sum()) > tol * scale:
        return False
    cx = thermo_curve(d, x)
    cy = thermo_curve(d, y)
    return bool(np.all(cx.ordinates[1:-1] <= cy(cx.abscissas[1:-1]) + tol * scale))


def dmaj_by_curve_samples(x, y, d, samples: int = 1000, tol: float = ALG_TOL) -> bool:
    """Curve-dominance form, sampled on a uniform grid of the abscissa."""
    d, y = _check_pair(d, y)
    x = np.asarray(x, dtype=float)
    scale = max(1.0, np.abs(y).sum(), np.abs(x).sum())
    if abs(x.sum() - y.sum()) > tol * scale:
        return False
    cx = thermo_curve(d, x)
    cy = thermo_curve(d, y)
    grid = np.linspace(0.0, cx.total_weight, samples)
    return bool(np.all(cx(grid) <= cy(grid) + tol * scale))


def dmaj_by_lp(x, y, d, tol: float = 1e-8) -> bool:
    """Transition-matrix form, decided by LP feasibility."""
    return find_transition_matrix(d, y, x, tol).feasible


def classical_majorises(x, y, tol: float = ALG_TOL) -> bool:
    """Classical vector majorisation x < y via sorted partial sums."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidInputError("expected equal-length vectors")
    scale = max(1.0, np.abs(y).sum(), np.abs(x).sum())
    if abs(x.sum() - y.sum()) > tol * scale:
        return False
    px = np.cumsum(np.sort(x)[::-1])
    py = np.cumsum(np.sort(y)[::-1])
    return bool(np.all(px[:-1] <= py[:-1] + tol * scale))


# ---------------------------------------------------------------------------
# The polytope, its extreme points, and the maximal corner
# ---------------------------------------------------------------------------

def _binary_normals(n: int):
    for bits in itertools.product((0, 1), repeat=n):
        if any(bits) and not all(bits):
            yield np.array(bits, dtype=float)


@dataclass(frozen=True)
class MajPolytope:
    """Halfspace description of { A y : A d-stochastic }."""

    d: np.ndarray
    y: np.ndarray
    normals: np.ndarray  # (2^n - 2, n) 0/1 rows
    bounds: np.ndarray
    total: float

    @property
    def dim(self) -> int:
        return self.d.size

    def membership_margin(self, x) -> float:
        """Smallest slack over all halfspaces (negative means outside)."""
        x = np.asarray(x, dtype=float)
        slack = self.bounds - self.normals @ x
        return float(min(slack.min(), -abs(x.sum() - self.total)))

    def contains(self, x, tol: float = ALG_TOL) -> bool:
        scale = max(1.0, abs(self.total))
        return self.membership_margin(x) >= -tol * scale

    def to_json(self) -> dict:
        return {
            "halfspaces": [
                {"m": [int(b) for b in m], "bound": float(v)}
                for m, v in zip(self.normals, self.bounds)
            ],
            "total": self.total,
            "vertices": [v.tolist() for v in all_extreme_points(self.d, self.y)],
        }


def polytope(d, y) -> MajPolytope:
    """All 2^n - 2 nontrivial halfspaces m^T x <= th_{d,y}(m^T d)."""
    d, y = _check_pair(d, y)
    if np.any(y < 0.0):
        raise InvalidInputError("polytope construction requires y >= 0")
    curve = thermo_curve(d, y)
    normals = np.array(list(_binary_normals(d.size)))
    bounds = curve(normals @ d)
    return MajPolytope(d, y, normals, np.asarray(bounds), float(y.sum()))


def extreme_point(d, y, sigma) -> np.ndarray:
    """Vertex of the polytope indexed by a permutation.

    Entry j is the increment of the curve across the slot of j in sigma's
    ordering of the weights d.
    """
    d, y = _check_pair(d, y)
    if np.any(y < 0.0):
        raise InvalidInputError("extreme points require y >= 0")
    sigma = np.asarray(sigma, dtype=int)
    if sorted(sigma.tolist()) != list(range(d.size)):
        raise InvalidInputError(f"not a permutation: {sigma.tolist()}")
    curve = thermo_curve(d, y)
    absc = np.concatenate([[0.0], np.cumsum(d[sigma])])
    vals = curve(absc)
    increments = np.diff(vals)
    out = np.empty(d.size)
    out[sigma] = increments
    return out


def all_extreme_points(d, y, dedup_tol: float = 1e-12) -> list[np.ndarray]:
    d, y = _check_pair(d, y)
    pts: list[np.ndarray] = []
    for sigma in itertools.permutations(range(d.size)):
        p = extreme_point(d, y, sigma)
        if not any(np.max(np.abs(p - q)) <= dedup_tol for q in pts):
            pts.append(p)
    return pts


def max_corner(d, y) -> np.ndarray:
    """The vertex for the d-decreasing order; classically majorises the polytope."""
    d, y = _check_pair(d, y)
    sigma = np.argsort(-d, kind="stable")
    return extreme_point(d, y, sigma)


# ---------------------------------------------------------------------------
# Transition-matrix synthesis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransitionResult:
    feasible: bool
    matrix: np.ndarray | None = None
    violated_index: int | None = field(default=None)
    marginal: bool = False

    def __bool__(self) -> bool:
        return self.feasible


def find_transition_matrix(d, y, x, tol: float = 1e-8) -> TransitionResult:
    """Feasibility LP for a column-stochastic A with A d = d and A y = x.

    Returns the matrix on success; on failure a no-transition result whose
    ``violated_index`` points at the certificate from the 1-norm test.
    """
    d, y = _check_pair(d, y)
    x = np.asarray(x, dtype=float)
    if x.shape != y.shape:
        raise InvalidInputError("x and y must have equal length")
    n = d.size
    scale = max(1.0, np.abs(y).sum(), np.abs(x).sum())
    if abs(x.sum() - y.sum()) > tol * scale:
        return TransitionResult(False, None, -1)

    # variables A[i, j] laid out row-major; constraints: columns sum to one,
    # A d = d, A y = x (one row of A y = x is redundant and dropped)
    nv = n * n
    rows = []
    rhs = []
    for j in range(n):
        r = np.zeros(nv)
        r[j::n] = 1.0
        rows.append(r)
        rhs.append(1.0)
    for i in range(n):
        r = np.zeros(nv)
        r[i * n:(i + 1) * n] = d
        rows.append(r)
        rhs.append(d[i])
    for i in range(n - 1):
        r = np.zeros(nv)
        r[i * n:(i + 1) * n] = y
        rows.append(r)
        rhs.append(x[i])

    res = solve_lp(np.zeros(nv), np.array(rows), np.array(rhs), feas_tol=tol)
    marginal = 0.1 * tol < res.infeasibility <= 10.0 * tol
    if marginal:
        warnings.warn(
            f"transition LP feasibility is marginal (residual {res.infeasibility:.2e} "
            f"near tolerance {tol:.0e}); verdict may be ill-conditioned",
            RuntimeWarning, stacklevel=2)
    if not res.optimal:
        cert = d_majorises(x, y, d)
        return TransitionResult(False, None, cert.violated_index, marginal)
    a = res.x.reshape(n, n)
    return TransitionResult(True, a, None, marginal)


def random_d_stochastic(d, rng, iters: int = 400) -> np.ndarray:
    """Random d-stochastic matrix via Sinkhorn scaling of a positive seed.

    Writing W = A diag(d), the constraints become prescribed row and column
    sums d for W, which Sinkhorn iteration produces from any positive start.
    """
    d = np.asarray(d, dtype=float)
    w = rng.uniform(0.2, 1.0, size=(d.size, d.size))
    for _ in range(iters):
        w *= (d / w.sum(axis=1))[:, None]
        w *= d / w.sum(axis=0)
    a = w / d[None, :]
    # exact column normalization; Ad = d then holds to Sinkhorn accuracy
    a /= a.sum(axis=0, keepdims=True)
    return a
