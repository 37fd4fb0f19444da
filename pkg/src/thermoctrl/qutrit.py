"""Exact three-level analysis of the hybrid simplex control system.

Casting the permutation/relaxation system as a differential inclusion with
derivative set { -pi B pi^T x } turns stabilisability into a planar convex
geometry question: a state is stabilisable iff zero lies in the convex hull
of its six achievable derivatives.  For the thermal ladder generator the
boundary of the stabilisable set consists of six conic arcs obtained by
intersecting kernels of permuted separating functionals; outside that set a
pointed derivative cone defines left/right extremal vector fields whose
integral curves bound the reachable sets.

Everything here works in the isometric plane embedding of the simplex given
by the fixed 2 x 3 partial isometry P (rows orthonormal, kernel spanned by
the all-ones vector).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import permutations

import numpy as np
from matplotlib.path import Path

from .core import GEO_TOL, ProbVector, perm_matrix
from .errors import DomainError, IntegrationError, InternalError, InvalidInputError
from .lp import solve_lp
from .toymodel import ToyGenerator, toy_generator_ladder

# ---------------------------------------------------------------------------
# Embedding
# ---------------------------------------------------------------------------

_P = np.array([
    [0.0, -1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0)],
    [math.sqrt(2.0 / 3.0), -1.0 / math.sqrt(6.0), -1.0 / math.sqrt(6.0)],
])


@dataclass(frozen=True)
class SimplexEmbedding:
    """Isometric embedding of the qutrit simplex plane into R^2."""

    p: np.ndarray = field(default_factory=lambda: _P.copy())

    def embed(self, x) -> np.ndarray:
        """Map barycentric points (rows or a single vector) to the plane."""
        return np.asarray(x, dtype=float) @ self.p.T

    def unembed(self, xy) -> np.ndarray:
        """Inverse on the simplex plane: x = P^T u + (1,1,1)/3."""
        return np.asarray(xy, dtype=float) @ self.p + 1.0 / 3.0

    @property
    def vertices(self) -> np.ndarray:
        return self.embed(np.eye(3))


EMBED = SimplexEmbedding()

_PERMS3 = tuple(permutations(range(3)))
_TAU23 = (0, 2, 1)
_REV = (2, 1, 0)


def _perm_conjugates(gen: ToyGenerator) -> np.ndarray:
    """Stacked derivative matrices -pi B pi^T over all six permutations."""
    mats = []
    for p in _PERMS3:
        pm = perm_matrix(p)
        mats.append(-pm @ gen.b @ pm.T)
    return np.asarray(mats)


def qutrit_generator(a: float) -> ToyGenerator:
    """Ladder generator for any level ratio a > 0 (a > 1 via reversal)."""
    if not (a > 0.0) or not math.isfinite(a):
        raise InvalidInputError("need a > 0")
    if a <= 1.0:
        return toy_generator_ladder(a, 3)
    r = perm_matrix(_REV)
    return ToyGenerator(r @ toy_generator_ladder(1.0 / a, 3).b @ r.T,
                        source=f"ladder(a={a})")


# ---------------------------------------------------------------------------
# Derivative cones and stabilisability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DerivativeCone:
    """Achievable derivatives at a point with planar cone data.

    ``pointed`` means the nonzero rays stay inside an open half-plane; the
    ``left``/``right`` indices then select the counterclockwise-most and
    clockwise-most rays.  ``gap`` is the largest circular angle gap: > pi is
    pointed, == pi a half-plane, < pi the full plane.
    """

    x: np.ndarray
    rays: np.ndarray          # (6, 3) barycentric velocities
    embedded: np.ndarray      # (6, 2)
    perms: tuple
    has_zero_ray: bool
    pointed: bool
    gap: float
    left: int | None
    right: int | None


def derv_cone(x, gen: ToyGenerator, zero_tol: float = 1e-12) -> DerivativeCone:
    x = np.asarray(x if not isinstance(x, ProbVector) else x.as_array(), dtype=float)
    mats = _perm_conjugates(gen)
    rays = np.einsum("kij,j->ki", mats, x)
    emb = EMBED.embed(rays)
    norms = np.linalg.norm(emb, axis=1)
    scale = max(norms.max(), 1e-300)
    nz = norms > zero_tol * max(1.0, scale)
    has_zero = bool((~nz).any())
    if nz.sum() == 0:
        return DerivativeCone(x, rays, emb, _PERMS3, True, False, 0.0, None, None)
    ang = np.arctan2(emb[nz, 1], emb[nz, 0])
    idx = np.where(nz)[0]
    order = np.argsort(ang)
    sorted_ang = ang[order]
    gaps = np.diff(np.concatenate([sorted_ang, [sorted_ang[0] + 2.0 * math.pi]]))
    gmax = int(np.argmax(gaps))
    gap = float(gaps[gmax])
    pointed = (gap > math.pi + 1e-12) and not has_zero
    left = int(idx[order[gmax]])
    right = int(idx[order[(gmax + 1) % len(order)]])
    return DerivativeCone(x, rays, emb, _PERMS3, has_zero, pointed, gap, left, right)


@dataclass(frozen=True)
class StabResult:
    stabilisable: bool
    weights: np.ndarray | None = None      # convex combination certificate
    alpha: np.ndarray | None = None        # separating functional on R^3

    def __bool__(self) -> bool:
        return self.stabilisable


def is_stabilisable(x, gen: ToyGenerator, tol: float = 1e-9) -> StabResult:
    """Zero in the convex hull of achievable derivatives, with certificate.

    Solves the convex-combination feasibility LP; on failure produces a
    functional that is strictly negative on every achievable derivative.
    """
    cone = derv_cone(x, gen)
    emb = cone.embedded
    res = solve_lp(
        np.zeros(6),
        a_eq=np.vstack([emb.T, np.ones(6)]),
        b_eq=np.array([0.0, 0.0, 1.0]),
        feas_tol=tol,
    )
    if res.optimal:
        return StabResult(True, weights=res.x)
    # maximize delta with alpha . e_i <= -delta, |alpha| box-bounded
    nv = 5  # alpha = ap - am (2 + 2 vars), delta
    a_ub, b_ub = [], []
    for e in emb:
        a_ub.append(np.array([e[0], e[1], -e[0], -e[1], 1.0]))
        b_ub.append(0.0)
    for i in range(4):
        r = np.zeros(nv)
        r[i] = 1.0
        a_ub.append(r)
        b_ub.append(1.0)
    cost = np.zeros(nv)
    cost[4] = -1.0
    sep = solve_lp(cost, a_ub=np.array(a_ub), b_ub=np.array(b_ub))
    if not sep.optimal or sep.objective >= -tol:
        raise InternalError("separation LP failed although hull LP was infeasible")
    alpha2 = np.array([sep.x[0] - sep.x[2], sep.x[1] - sep.x[3]])
    return StabResult(False, alpha=EMBED.p.T @ alpha2)


def stabilisable_mask(points: np.ndarray, gen: ToyGenerator,
                      zero_tol: float = 1e-12) -> np.ndarray:
    """Vectorized stabilisability over rows of barycentric points.

    Equivalent to the hull LP: zero lies in the convex hull of the planar
    rays iff some ray vanishes or the largest circular gap between ray
    angles is at most pi.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    mats = _perm_conjugates(gen)
    emb_mats = np.einsum("ri,kij->krj", EMBED.p, mats)  # (6, 2, 3)
    rays = np.einsum("krj,nj->nkr", emb_mats, pts)      # (n, 6, 2)
    norms = np.linalg.norm(rays, axis=2)
    scale = np.maximum(norms.max(axis=1, keepdims=True), 1e-300)
    zero_ray = (norms <= zero_tol * np.maximum(scale, 1.0)).any(axis=1)
    ang = np.arctan2(rays[..., 1], rays[..., 0])
    ang = np.sort(ang, axis=1)
    gaps = np.diff(np.concatenate([ang, ang[:, :1] + 2.0 * math.pi], axis=1), axis=1)
    return zero_ray | (gaps.max(axis=1) <= math.pi + 1e-12)


# ---------------------------------------------------------------------------
# Analytic stabilisable boundary
# ---------------------------------------------------------------------------

def _lambda_scale(a: float) -> float:
    if abs(a - 0.25) < 1e-9:
        return 1.0
    return 0.5 * math.sqrt(1.0 + 2.0 * a) / math.sqrt(abs((3.0 + 2.0 * a) * (1.0 - 4.0 * a)))


def conic_case(a: float) -> str:
    if abs(a - 1.0) < 1e-12:
        return "degenerate-unital"
    if abs(a - 0.25) < 1e-9:
        return "parabolic"
    return "elliptic" if a < 0.25 else "hyperbolic"


def conic_coefficients(a: float) -> tuple[float, float, float]:
    """(u, v, w) of the hyperbolic/elliptic base-arc parametrization."""
    if abs(a - 0.25) < 1e-9:
        raise InvalidInputError("parabolic case has no (u, v, w) form")
    v_minus_u = math.sqrt(2.0 / 3.0) * (1.0 - a) / (1.0 + 2.0 * a)
    u_plus_v = math.sqrt(2.0 / 3.0) * (1.0 - a) / (1.0 - 4.0 * a)
    w = math.sqrt(2.0) * (1.0 - a) * a / math.sqrt(abs((1.0 + 2.0 * a) * (3.0 + 2.0 * a) * (1.0 - 4.0 * a)))
    u = 0.5 * (u_plus_v - v_minus_u)
    v = 0.5 * (u_plus_v + v_minus_u)
    return u, v, w


def conic_embedded(a: float, lam) -> np.ndarray:
    """Closed-form planar base arc: parabola at a = 1/4, else conic via (u,v,w)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if abs(a - 0.25) < 1e-9:
        out = np.column_stack([lam / math.sqrt(2.0),
                               (1.0 + 14.0 * lam ** 2) / math.sqrt(6.0)])
    else:
        u, v, w = conic_coefficients(a)
        if a > 0.25:
            out = np.column_stack([w * (-2.0 * lam) / (lam ** 2 - 1.0),
                                   u * (lam ** 2 + 1.0) / (lam ** 2 - 1.0) + v])
        else:
            out = np.column_stack([w * (2.0 * lam) / (lam ** 2 + 1.0),
                                   u * (lam ** 2 - 1.0) / (lam ** 2 + 1.0) + v])
    return out if out.shape[0] > 1 else out[0]


def _functional_rows(a: float, base_b: np.ndarray, lam: float) -> tuple[np.ndarray, np.ndarray]:
    l = lam * _lambda_scale(a)
    alpha = np.array([0.0, -(0.5 - l), -(0.5 + l)])
    tau = perm_matrix(_TAU23)
    return alpha @ (-base_b), alpha @ (tau @ (-base_b) @ tau)


def kernel_intersection_point(a: float, lam: float, base_b: np.ndarray | None = None) -> ProbVector:
    """Simplex point in ker(alpha_id) and ker(alpha_tau23) for the lam functional.

    For a = 1/4 this is (4 + 28 lam^2, -14 lam^2 - 3 lam + 1,
    -14 lam^2 + 3 lam + 1) / 6; the valid lam range is returned by
    :func:`lambda_range`.
    """
    if base_b is None:
        base_b = qutrit_generator(a).b
    lo, hi = lambda_range(a, base_b)
    if not (lo - 1e-9 <= lam <= hi + 1e-9):
        raise DomainError(f"lambda {lam} outside the arc range [{lo:.6f}, {hi:.6f}]")
    n_id, n_tau = _functional_rows(a, base_b, lam)
    v = np.cross(n_id, n_tau)
    s = v.sum()
    if abs(s) < 1e-300:
        raise DomainError("kernels do not intersect the simplex at this lambda")
    return ProbVector(v / s, tol=1e-7)


def lambda_range(a: float, base_b: np.ndarray | None = None) -> tuple[float, float]:
    """Arc parameter interval: endpoints map to the fixed point and its 2<->3 swap."""
    if base_b is None:
        base_b = qutrit_generator(a).b
    gen = ToyGenerator(base_b)
    d = gen.fixed_point.as_array()
    tau = perm_matrix(_TAU23)
    kap = _lambda_scale(a)

    def solve_endpoint(v: np.ndarray) -> float:
        denom = v[1] - v[2]
        if abs(denom) < 1e-300:
            raise InternalError("degenerate endpoint equation")
        return ((v[1] + v[2]) / 2.0) / denom / kap

    lam_d = solve_endpoint(tau @ (-base_b) @ tau @ d)
    lam_t = solve_endpoint((-base_b) @ (tau @ d))
    return (lam_d, lam_t) if lam_d <= lam_t else (lam_t, lam_d)


@dataclass(frozen=True)
class BoundaryConic:
    """One arc of the stabilisable-set boundary.

    The base arc (permutation = identity) runs between the family's fixed
    point and its 2<->3 swap; ``perm`` transplants it to the other chambers.
    ``sample`` returns barycentric points; embed them with :data:`EMBED`.
    """

    case: str
    a_param: float
    perm: tuple
    lam_range: tuple[float, float]
    base_b: np.ndarray
    uvw: tuple[float, float, float] | None

    def sample(self, count: int = 101) -> np.ndarray:
        lams = np.linspace(self.lam_range[0], self.lam_range[1], count)
        pts = np.array([
            kernel_intersection_point(self.a_param, l, self.base_b).as_array()
            for l in lams
        ])
        return pts[:, np.asarray(self.perm, dtype=int)]

    @property
    def endpoints(self) -> np.ndarray:
        return self.sample(2)


def stab_boundary(a: float) -> list[BoundaryConic]:
    """Six boundary arcs of the stabilisable set of the ladder system.

    Three permuted copies of the base arc for level ratio ``a`` plus three of
    the reversed-ladder arc (same formulas with a -> 1/a).  For a = 1 the
    stabilisable set collapses to the barycenter and a single degenerate
    marker is returned.
    """
    if not (a > 0.0) or not math.isfinite(a):
        raise InvalidInputError("need a > 0")
    if abs(a - 1.0) < 1e-12:
        return [BoundaryConic("degenerate-unital", 1.0, (0, 1, 2), (0.0, 0.0),
                              qutrit_generator(1.0).b, None)]
    arcs = []
    for fam_a in (a, 1.0 / a):
        base_b = qutrit_generator(fam_a).b
        rng = lambda_range(fam_a, base_b)
        case = conic_case(fam_a)
        uvw = None if case == "parabolic" else conic_coefficients(fam_a)
        for perm in ((0, 1, 2), (1, 0, 2), (2, 1, 0)):
            arcs.append(BoundaryConic(case, fam_a, perm, rng, base_b, uvw))
    return arcs


def stab_boundary_polygon(a: float, samples_per_arc: int = 200) -> np.ndarray:
    """Closed boundary polygon (embedded coordinates) assembled from the arcs."""
    arcs = stab_boundary(a)
    if arcs[0].case == "degenerate-unital":
        return np.zeros((1, 2))
    pieces = [arc.sample(samples_per_arc) for arc in arcs]
    ordered = [pieces.pop(0)]
    while pieces:
        tail = ordered[-1][-1]
        for i, piece in enumerate(pieces):
            if np.linalg.norm(piece[0] - tail) < 1e-7:
                ordered.append(pieces.pop(i))
                break
            if np.linalg.norm(piece[-1] - tail) < 1e-7:
                ordered.append(pieces.pop(i)[::-1])
                break
        else:
            raise InternalError("stabilisable boundary arcs do not close up")
    poly = np.vstack([p[:-1] for p in ordered])
    return EMBED.embed(poly)


# ---------------------------------------------------------------------------
# Extremal vector fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtremalRay:
    """One-sided boundary ray of the derivative cone at a point."""

    velocity: np.ndarray      # barycentric, magnitude preserved
    degenerate: bool          # a zero ray was present (permutations of d)


def extremal_field(x, gen: ToyGenerator, side: str, angle_tol: float = 1e-9) -> ExtremalRay:
    """Boundary ray of the pointed derivative cone on the requested side.

    ``side`` is "left" (counterclockwise-most, in the plane embedding) or
    "right".  Among rays within ``angle_tol`` of the extremal direction the
    longest is returned; the norm is genuinely discontinuous across switching
    loci and is preserved on purpose.  Raises for stabilisable interior
    points, where no extremal direction exists.
    """
    if side not in ("left", "right"):
        raise InvalidInputError("side must be 'left' or 'right'")
    cone = derv_cone(x, gen)
    emb = cone.embedded
    norms = np.linalg.norm(emb, axis=1)
    scale = max(norms.max(), 1e-300)
    nz = norms > 1e-12 * max(1.0, scale)
    degenerate = bool((~nz).any())
    if nz.sum() == 0:
        raise DomainError("all achievable derivatives vanish at this point")
    ang = np.arctan2(emb[nz, 1], emb[nz, 0])
    idx = np.where(nz)[0]
    order = np.argsort(ang)
    sorted_ang = ang[order]
    gaps = np.diff(np.concatenate([sorted_ang, [sorted_ang[0] + 2.0 * math.pi]]))
    g = int(np.argmax(gaps))
    if gaps[g] < math.pi - 1e-9:
        raise DomainError("derivative cone spans the plane; point is stabilisable interior")
    target = sorted_ang[g] if side == "left" else sorted_ang[(g + 1) % len(order)]
    diffs = np.abs((ang - target + math.pi) % (2.0 * math.pi) - math.pi)
    near = diffs <= max(angle_tol, 1e-12)
    cand = idx[near]
    best = cand[int(np.argmax(norms[idx[near]]))] if cand.size else idx[order[g]]
    return ExtremalRay(cone.rays[best], degenerate)


@dataclass(frozen=True)
class EmbeddedCurve:
    """Integrated extremal solution with its termination bookkeeping."""

    times: np.ndarray
    points: np.ndarray        # (k, 3) barycentric
    termination: str          # "wall" | "class-d" | "stab" | "time-cap"

    @cached_property
    def embedded(self) -> np.ndarray:
        return EMBED.embed(self.points)

    @property
    def final(self) -> np.ndarray:
        return self.points[-1]


def _wall_values(x: np.ndarray) -> np.ndarray:
    return np.array([x[0] - x[1], x[1] - x[2]])


def integrate_extremal(
    x0,
    gen: ToyGenerator,
    side: str,
    step: float = 1e-3,
    t_max: float = 1e3,
    avoid_region: "ReachRegion | None" = None,
    event_tol: float = 1e-10,
) -> EmbeddedCurve:
    """Follow an extremal field inside the descending Weyl chamber.

    Fixed-step RK4 on the chosen side's ray, with step halving when the
    direction turns by more than twenty percent of a radian in one step
    (norm discontinuities), and bisection-located events: crossing a chamber
    wall, entering ``avoid_region`` (the invariant class of d), or losing
    cone pointedness.  The start may sit on the stabilisable boundary (d
    included); zero rays there are skipped by the field.
    """
    x = np.asarray(x0 if not isinstance(x0, ProbVector) else x0.as_array(), dtype=float)
    if np.any(np.diff(x) > 1e-12):
        raise InvalidInputError("start must lie in the descending Weyl chamber")

    def ray(p):
        return extremal_field(p, gen, side).velocity

    ts = [0.0]
    pts = [x.copy()]
    t = 0.0
    h = step
    vel = ray(x)
    termination = "time-cap"

    def rk4(p, h):
        k1 = ray(p)
        k2 = ray(p + 0.5 * h * k1)
        k3 = ray(p + 0.5 * h * k2)
        k4 = ray(p + h * k3)
        return p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def event(p):
        w = _wall_values(p)
        if w.min() < 0.0:
            return "wall"
        if avoid_region is not None and avoid_region.contains_chamber_point(p, tol=-1e-9):
            return "class-d"
        return None

    while t < t_max:
        h_try = min(h, t_max - t)
        try:
            nxt = rk4(x, h_try)
            new_vel = ray(nxt) if _wall_values(nxt).min() >= 0.0 else vel
        except DomainError:
            termination = "stab"
            break
        turn = _direction_turn(vel, new_vel)
        if turn > 0.2 and h_try > 1e-6:
            h = h_try / 2.0
            continue
        ev = event(nxt)
        if ev is not None:
            lo, hi = 0.0, h_try
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if event(rk4(x, mid)) is None:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < event_tol:
                    break
            x = rk4(x, hi)
            t += hi
            ts.append(t)
            pts.append(np.clip(x, 0.0, None) / max(np.sum(np.clip(x, 0.0, None)), 1e-300))
            termination = ev
            break
        x = nxt
        vel = new_vel
        t += h_try
        ts.append(t)
        pts.append(x.copy())
        h = min(step, h * 2.0)
    else:
        termination = "time-cap"
    if termination == "time-cap" and t >= t_max:
        raise IntegrationError(
            f"extremal curve did not terminate within t_max={t_max}",
            partial=EmbeddedCurve(np.asarray(ts), np.asarray(pts), "time-cap"))
    return EmbeddedCurve(np.asarray(ts), np.asarray(pts), termination)


def _direction_turn(v1: np.ndarray, v2: np.ndarray) -> float:
    n1 = np.linalg.norm(v1)
    n2 = np.linalg.norm(v2)
    if n1 < 1e-300 or n2 < 1e-300:
        return 0.0
    c = float(np.clip(np.dot(v1, v2) / (n1 * n2), -1.0, 1.0))
    return math.acos(c)


# ---------------------------------------------------------------------------
# Reachable regions
# ---------------------------------------------------------------------------

_CENTROID = np.full(3, 1.0 / 3.0)


@dataclass(frozen=True)
class ReachRegion:
    """Closure of a reachable set, stored as its descending-chamber polygon.

    Permutations are free controls of the hybrid system, so reachability is
    naturally read on the quotient by coordinate permutations (the descending
    Weyl chamber as domain): a point belongs to the region iff its descending
    rearrangement lies in the chamber polygon.  ``polygon`` is closed (first
    point repeated last) in embedded coordinates.
    """

    polygon: np.ndarray
    kind: str                 # "class-d" | "generic"
    source: np.ndarray | None = None

    @cached_property
    def _path(self) -> Path:
        return Path(self.polygon)

    def contains_chamber_point(self, x: np.ndarray, tol: float = GEO_TOL) -> bool:
        return bool(self._path.contains_point(EMBED.embed(x), radius=2.0 * tol)
                    or self._path.contains_point(EMBED.embed(x), radius=-2.0 * tol))

    def contains(self, x, tol: float = GEO_TOL) -> bool:
        x = np.asarray(x if not isinstance(x, ProbVector) else x.as_array(), dtype=float)
        return self.contains_chamber_point(np.sort(x)[::-1], tol)

    def contains_many(self, pts: np.ndarray, tol: float = GEO_TOL) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        down = np.sort(pts, axis=1)[:, ::-1]
        emb = EMBED.embed(down)
        return self._path.contains_points(emb, radius=2.0 * tol) \
            | self._path.contains_points(emb, radius=-2.0 * tol)

    def boundary_is_simple(self, tol: float = 1e-9) -> bool:
        """No self-intersections among non-adjacent polygon edges."""
        p = self.polygon
        k = p.shape[0] - 1
        for i in range(k):
            a1, a2 = p[i], p[i + 1]
            for j in range(i + 2, k):
                if i == 0 and j == k - 1:
                    continue
                if _segments_cross(a1, a2, p[j], p[j + 1], tol):
                    return False
        return True


def _segments_cross(p1, p2, q1, q2, tol=1e-9) -> bool:
    d1 = p2 - p1
    d2 = q2 - q1
    den = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(den) < 1e-300:
        return False
    r = q1 - p1
    t = (r[0] * d2[1] - r[1] * d2[0]) / den
    s = (r[0] * d1[1] - r[1] * d1[0]) / den
    return tol < t < 1.0 - tol and tol < s < 1.0 - tol


def _chamber_sort(x) -> np.ndarray:
    x = np.asarray(x if not isinstance(x, ProbVector) else x.as_array(), dtype=float)
    if np.any(x < -1e-9) or x.sum() <= 0.0:
        raise InvalidInputError("expected a probability vector")
    return np.sort(x / x.sum())[::-1]


def _wall_index(p: np.ndarray) -> int:
    """0 for the x1 = x2 wall, 1 for x2 = x3 (nearest when both are close)."""
    return int(np.argmin(_wall_values(p)))


def invariant_class_region(gen: ToyGenerator, step: float = 1e-3) -> ReachRegion:
    """The invariant class [d]: region bounded by the extremal curves from d.

    Integrates the left and right extremal solutions from the fixed point to
    the chamber walls and closes the polygon through the barycenter corner.
    """
    d = _chamber_sort(gen.fixed_point.as_array())
    if np.max(np.abs(d - _CENTROID)) < 1e-12:
        # unital case: the class degenerates to the barycenter
        c = EMBED.embed(_CENTROID)
        eps = 1e-9
        poly = np.array([c + [eps, 0], c + [0, eps], c - [eps, 0], c - [0, eps], c + [eps, 0]])
        return ReachRegion(poly, "class-d", d)
    left = integrate_extremal(d, gen, "left", step=step)
    right = integrate_extremal(d, gen, "right", step=step)
    if left.termination != "wall" or right.termination != "wall":
        raise InternalError(
            f"extremal curves from d must end on chamber walls, got "
            f"{left.termination}/{right.termination}")
    wl, wr = _wall_index(left.final), _wall_index(right.final)
    if wl == wr:
        raise InternalError("both extremal curves from d hit the same wall")
    pts = np.vstack([
        left.points,
        _CENTROID[None, :],
        right.points[::-1],
    ])
    emb = EMBED.embed(pts)
    return ReachRegion(np.vstack([emb, emb[:1]]), "class-d", d)


def reachable_set(x0, gen: ToyGenerator, step: float = 1e-3,
                  class_d: ReachRegion | None = None) -> ReachRegion:
    """Closure of the reachable set of x0 as a chamber polygon.

    Points of the invariant class [d] (the barycenter and the whole
    stabilisable set included) reach exactly [d].  Other starts prepend the
    fan swept between their left and right extremal curves; the fan closes
    through the chamber walls and, when a curve terminates on [d], along the
    boundary of [d].
    """
    if class_d is None:
        class_d = invariant_class_region(gen, step=step)
    x = _chamber_sort(x0)
    if class_d.contains_chamber_point(x, tol=1e-9):
        return class_d
    left = integrate_extremal(x, gen, "left", step=step, avoid_region=class_d)
    right = integrate_extremal(x, gen, "right", step=step, avoid_region=class_d)
    if left.termination == "stab" or right.termination == "stab":
        raise InternalError("extremal curve entered the stabilisable interior")

    def connector(curve: EmbeddedCurve, incoming: np.ndarray) -> np.ndarray:
        """Path from the curve end to the barycenter along walls or [d]."""
        end = curve.final
        if curve.termination == "wall":
            return np.vstack([end[None, :], _CENTROID[None, :]])
        # terminated on [d]: walk its boundary polyline toward the barycenter
        poly = class_d.polygon[:-1]
        bary = EMBED.unembed(poly)
        k = int(np.argmin(np.linalg.norm(poly - EMBED.embed(end)[None, :], axis=1)))
        fwd = bary[(k + 1) % len(bary)] - bary[k]
        direction = 1 if float(np.dot(fwd, incoming)) >= 0.0 else -1
        cidx = int(np.argmin(np.linalg.norm(bary - _CENTROID[None, :], axis=1)))
        # skip boundary vertices behind the entry point; a curve that rode the
        # boundary before entering would otherwise double back over itself
        i = k
        for _ in range(20):
            nxt = (i + direction) % len(bary)
            if nxt == cidx or float(np.dot(bary[nxt] - end, incoming)) > 0.0:
                break
            i = nxt
        path = [end]
        while i != cidx:
            i = (i + direction) % len(bary)
            path.append(bary[i])
        return np.asarray(path)

    conn_l = connector(left, left.points[-1] - left.points[-2])
    conn_r = connector(right, right.points[-1] - right.points[-2])
    pts = np.vstack([
        left.points,
        conn_l[1:],
        conn_r[1:][::-1],
        right.points[::-1],
    ])
    emb = EMBED.embed(pts)
    return ReachRegion(np.vstack([emb, emb[:1]]), "generic", x)


class ReachOrder:
    FORWARD = "x-reaches-y"
    BACKWARD = "y-reaches-x"
    EQUIVALENT = "equivalent"
    INCOMPARABLE = "incomparable"


def reach_order(x, y, gen: ToyGenerator, tol: float = GEO_TOL,
                class_d: ReachRegion | None = None) -> str:
    """Mutual reachability verdict via region membership both ways.

    Read on the permutation quotient (see :class:`ReachRegion`); there the
    invariant class of the fixed point is the only multi-point equivalence
    class.
    """
    if class_d is None:
        class_d = invariant_class_region(gen)
    fwd = reachable_set(x, gen, class_d=class_d).contains(y, tol)
    bwd = reachable_set(y, gen, class_d=class_d).contains(x, tol)
    if fwd and bwd:
        return ReachOrder.EQUIVALENT
    if fwd:
        return ReachOrder.FORWARD
    if bwd:
        return ReachOrder.BACKWARD
    return ReachOrder.INCOMPARABLE
