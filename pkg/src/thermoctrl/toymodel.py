"""Hybrid control system on the probability simplex.

The model alternates two primitives: instantaneous coordinate permutations
and the relaxation flow x' = -B x of a column-stochastic semigroup with a
unique interior fixed point d.  This module provides the ladder generator
(the diagonal restriction of the thermal ladder dissipator), trajectory
simulation with schedules, Monte-Carlo reachability clouds, and the convex
outer bound of the reachable set: the classical majorisation polytope of a
point z taken from the ordered past cone of the initial state.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from itertools import permutations

import numpy as np

from .core import ALG_TOL, GibbsVector, ProbVector, perm_matrix
from .errors import InternalError, InvalidInputError
from .lp import solve_lp
from .thermomaj import classical_majorises, max_corner

# ---------------------------------------------------------------------------
# Generator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ToyGenerator:
    """Relaxation generator B (flow x' = -Bx) with fixed point d."""

    b: np.ndarray
    source: str = "custom"

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        n = b.shape[0]
        if b.ndim != 2 or b.shape != (n, n):
            raise InvalidInputError("B must be square")
        off = -b - np.diag(np.diag(-b))
        if off.min() < -ALG_TOL:
            raise InvalidInputError("-B must have nonnegative off-diagonal entries")
        if np.max(np.abs(b.sum(axis=0))) > ALG_TOL * max(1.0, np.abs(b).max()):
            raise InvalidInputError("columns of B must sum to zero")
        bb = b.copy()
        bb.flags.writeable = False
        object.__setattr__(self, "b", bb)

    @property
    def n(self) -> int:
        return self.b.shape[0]

    @cached_property
    def fixed_point(self) -> ProbVector:
        """Unique kernel vector of B inside the simplex (checked by rank)."""
        u, s, vt = np.linalg.svd(self.b)
        scale = max(1.0, s.max())
        null_dim = int(np.sum(s <= 1e-12 * scale))
        if null_dim != 1:
            raise InvalidInputError(f"B has a {null_dim}-dimensional kernel; need exactly 1")
        v = vt[-1]
        v = v / v.sum()
        if v.min() < -ALG_TOL:
            raise InvalidInputError("kernel vector of B is not in the simplex")
        return ProbVector(v)

    @cached_property
    def _eig(self):
        """Eigendecomposition of -B, or None when it cannot be trusted.

        Defective or ill-conditioned generators (possible for custom B) fall
        back to the dense matrix exponential.
        """
        w, v = np.linalg.eig(-self.b)
        try:
            vinv = np.linalg.inv(v)
        except np.linalg.LinAlgError:
            return None
        recon = (v * w) @ vinv
        scale = max(1.0, float(np.abs(self.b).max()))
        if np.max(np.abs(recon - (-self.b))) > 1e-9 * scale or np.linalg.cond(v) > 1e9:
            return None
        return w, v, vinv

    def flow(self, x: np.ndarray, t: float) -> np.ndarray:
        """e^{-tB} x."""
        return self.flow_many(np.asarray(x, dtype=float)[None, :], np.array([t]))[0]

    def flow_many(self, xs: np.ndarray, ts: np.ndarray) -> np.ndarray:
        """Row-wise e^{-ts[i] B} xs[i] for matching batches."""
        if self._eig is None:
            from .core import expm_real
            return np.array([expm_real(-t * self.b) @ x for t, x in zip(ts, xs)])
        w, v, vinv = self._eig
        y = xs @ vinv.T                       # coordinates in the eigenbasis
        y = y * np.exp(np.outer(ts, w))
        out = y @ v.T
        return out.real

    def flow_matrix(self, t: float) -> np.ndarray:
        if self._eig is None:
            from .core import expm_real
            return expm_real(-t * self.b)
        w, v, vinv = self._eig
        return ((v * np.exp(t * w)) @ vinv).real

    def permuted(self, perm) -> "ToyGenerator":
        p = perm_matrix(perm)
        return ToyGenerator(p @ self.b @ p.T, source=self.source)


def toy_generator_ladder(a: float, n: int) -> ToyGenerator:
    """Birth-death generator of the thermal ladder with level ratio a.

    Level k+1 decays to level k at rate w_k^2 / (1+a) with w_k = sqrt(k(n-k))
    and is pumped upward at a times that rate; this is the diagonal
    restriction of the ladder dissipator, with fixed point
    (1, a, ..., a^{n-1})/Z.
    """
    if not (0.0 < a <= 1.0):
        raise InvalidInputError("need a in (0, 1]")
    if n < 2:
        raise InvalidInputError("need n >= 2")
    mb = np.zeros((n, n))
    for k in range(n - 1):
        w2 = (k + 1) * (n - 1 - k)
        down = w2 / (1.0 + a)
        up = a * down
        mb[k, k + 1] += down
        mb[k + 1, k + 1] -= down
        mb[k + 1, k] += up
        mb[k, k] -= up
    return ToyGenerator(-mb, source=f"ladder(a={a})")


# ---------------------------------------------------------------------------
# Schedules and simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    """Finite list of (permutation, duration) steps, permutation applied first."""

    steps: tuple

    def __post_init__(self):
        norm = []
        for perm, dt in self.steps:
            perm = tuple(int(i) for i in perm)
            dt = float(dt)
            if dt < 0.0 or not math.isfinite(dt):
                raise InvalidInputError("durations must be finite and nonnegative")
            if sorted(perm) != list(range(len(perm))):
                raise InvalidInputError(f"invalid permutation {perm}")
            norm.append((perm, dt))
        object.__setattr__(self, "steps", tuple(norm))

    @property
    def total_time(self) -> float:
        return sum(dt for _, dt in self.steps)

    def to_json(self) -> list:
        return [{"perm": list(p), "dt": dt} for p, dt in self.steps]

    @staticmethod
    def from_json(data) -> "Schedule":
        if isinstance(data, str):
            data = json.loads(data)
        return Schedule(tuple((tuple(e["perm"]), float(e["dt"])) for e in data))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), n)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def simulate(
    x0: ProbVector,
    gen: ToyGenerator,
    schedule: Schedule | None = None,
    t_final: float | None = None,
    step: float = 0.01,
) -> Trajectory:
    """Piecewise flow with instantaneous permutations at switch times.

    Runs the schedule (permute, then flow for the step duration) and, if
    ``t_final`` exceeds the scheduled time, keeps flowing freely to
    ``t_final``.  Dense output every ``step`` plus the exact switch times.
    """
    steps = list(schedule.steps) if schedule is not None else []
    sched_time = sum(dt for _, dt in steps)
    if t_final is None:
        t_final = sched_time
    if t_final > sched_time:
        ident = tuple(range(gen.n))
        steps.append((ident, t_final - sched_time))

    times = [0.0]
    states = [x0.as_array()]
    t = 0.0
    x = x0.as_array()
    for perm, dt in steps:
        x = x[np.asarray(perm, dtype=int)]
        times.append(t)
        states.append(x)
        if dt > 0.0:
            k = max(1, int(math.ceil(dt / step)))
            ts = np.linspace(0.0, dt, k + 1)[1:]
            seg = gen.flow_many(np.repeat(x[None, :], ts.size, axis=0), ts)
            times.extend((t + ts).tolist())
            states.extend(seg)
            x = seg[-1]
            t += dt
    arr = np.clip(np.asarray(states), 0.0, None)
    arr /= arr.sum(axis=1, keepdims=True)
    return Trajectory(np.asarray(times), arr)


def random_schedule(rng: np.random.Generator, n: int,
                    mean_length: float = 5.0) -> Schedule:
    """Random control word: geometric length, uniform permutations, Exp(1) times."""
    length = 1 + rng.geometric(1.0 / mean_length)
    perms = list(permutations(range(n)))
    steps = []
    for _ in range(length):
        perm = perms[rng.integers(len(perms))]
        steps.append((perm, float(rng.exponential(1.0))))
    return Schedule(tuple(steps))


def trajectory_cloud(
    x0: ProbVector,
    gen: ToyGenerator,
    count: int = 1000,
    seed: int = 0,
    samples_per_segment: int = 4,
    mean_length: float = 5.0,
) -> np.ndarray:
    """Sampled points of ``count`` random-schedule trajectories, batched.

    All trajectories advance segment by segment as one vectorized batch;
    every segment contributes ``samples_per_segment`` interior points plus
    its endpoint.  Deterministic for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    n = gen.n
    perms = np.array(list(permutations(range(n))))
    lengths = 1 + rng.geometric(1.0 / mean_length, size=count)
    kmax = int(lengths.max())
    xs = np.repeat(x0.as_array()[None, :], count, axis=0)
    out = [xs.copy()]
    fracs = np.linspace(0.0, 1.0, samples_per_segment + 1)[1:]
    for k in range(kmax):
        act = lengths > k
        if not act.any():
            break
        pidx = rng.integers(len(perms), size=count)
        dts = rng.exponential(1.0, size=count)
        sub = np.where(act)[0]
        xp = xs[sub[:, None], perms[pidx[sub]]]
        for f in fracs:
            pts = gen.flow_many(xp, f * dts[sub])
            out.append(pts)
        xs[sub] = pts
    return np.vstack(out)


def steer_to_uniform(x0: ProbVector, gen: ToyGenerator,
                     t_total: float = 25.0, dt: float = 2e-4) -> np.ndarray:
    """Drive toward the barycenter by palindromic cycling through all permutations.

    The symmetric composition of e^{-dt pi B pi^T} over all permutations and
    their reverse approximates the permutation-averaged flow to O(dt^2), whose
    unique fixed point is the uniform vector.
    """
    n = gen.n
    perms = list(permutations(range(n)))
    mats = [np.linalg.multi_dot([perm_matrix(p), gen.flow_matrix(dt), perm_matrix(p).T])
            for p in perms]
    cycle = np.eye(n)
    for m in mats + mats[::-1]:
        cycle = m @ cycle
    reps = max(1, int(round(t_total / (2 * len(mats) * dt))))
    x = x0.as_array()
    step_mat = cycle
    # square the cycle map log2(reps) times for speed
    k = reps
    while k:
        if k & 1:
            x = step_mat @ x
        step_mat = step_mat @ step_mat
        k >>= 1
    return x


def greedy_steer(
    x0: ProbVector,
    target: np.ndarray,
    gen: ToyGenerator,
    max_steps: int = 400,
    dt_grid=None,
) -> tuple[np.ndarray, Schedule]:
    """Greedy schedule search toward a target point (asymptotic-regime helper).

    Permutations cost nothing, so progress is measured between sorted copies
    and a single aligning permutation is appended at the end.
    """
    if dt_grid is None:
        dt_grid = np.concatenate([[0.0], np.geomspace(1e-3, 8.0, 30)])
    n = gen.n
    perms = list(permutations(range(n)))
    target = np.asarray(target, dtype=float)
    tsort = np.sort(target)[::-1]

    def sorted_dist(pts):
        return np.abs(np.sort(pts, axis=-1)[..., ::-1] - tsort).sum(axis=-1)

    x = x0.as_array()
    steps = []
    best = float(sorted_dist(x))
    for _ in range(max_steps):
        cand_best = None
        for p in perms:
            xp = x[np.asarray(p)]
            pts = gen.flow_many(np.repeat(xp[None, :], len(dt_grid), axis=0),
                                np.asarray(dt_grid))
            dists = sorted_dist(pts)
            j = int(np.argmin(dists))
            if cand_best is None or dists[j] < cand_best[0]:
                cand_best = (float(dists[j]), p, float(dt_grid[j]), pts[j])
        if cand_best[0] >= best - 1e-12:
            break
        best, p, dt, x = cand_best
        steps.append((p, dt))
    # align with the target by one final free permutation
    align = min(permutations(range(n)),
                key=lambda p: float(np.abs(x[np.asarray(p)] - target).sum()))
    x = x[np.asarray(align)]
    steps.append((align, 0.0))
    return x, Schedule(tuple(steps))


# ---------------------------------------------------------------------------
# Convex reachability bound
# ---------------------------------------------------------------------------

def _ordered_likewise(z: np.ndarray, d: np.ndarray, tol: float = ALG_TOL) -> bool:
    """Is there one permutation sorting d descending and z/d descending?

    Ties in d constrain only the strict part, so it suffices to check the
    ratio chain along a d-descending order that sorts ratios within tie
    blocks.
    """
    order = np.lexsort((-z / d, -d))
    dd, rr = d[order], (z / d)[order]
    return bool(np.all(np.diff(dd) <= tol) and np.all(np.diff(rr) <= tol))


def ordered_past_cone_z(x0: ProbVector, d: GibbsVector, tol: float = ALG_TOL) -> ProbVector:
    """Distinguished bound vertex: the 1-norm-closest cone point to d.

    The cone is { z : x0 classically majorised by z, d and z/d ordered
    likewise }.  If x0 is majorised by d the answer is d; if x0 lies in its
    own ordered past cone the answer is x0 (suitably arranged).  Otherwise an
    LP minimizes ||z - d||_1 inside the d-descending Weyl chamber (where the
    ordering constraint is linear).  The minimizer can be a face; a second
    stage breaks the tie toward the maximal corner of the polytope of x0,
    which is strictly positive whenever x0 > 0 and always lies in the cone.
    """
    x = x0.as_array()
    dd = d.as_array()
    n = x.size
    sigma = np.argsort(-dd, kind="stable")
    dsort = dd[sigma]
    xsort = np.sort(x)[::-1]

    if classical_majorises(x, dd, tol):
        return ProbVector(dd)
    cand = np.empty(n)
    cand[sigma] = xsort
    if _ordered_likewise(cand, dd, tol):
        return ProbVector(cand)

    # stage-one variables: w (chamber representative) and s (|w - d| epigraph)
    nv = 3 * n
    a_eq = [np.concatenate([np.ones(n), np.zeros(2 * n)])]
    b_eq = [1.0]
    a_ub, b_ub = [], []
    for k in range(n - 1):
        r = np.zeros(nv)
        r[: k + 1] = -1.0
        a_ub.append(r)
        b_ub.append(-float(np.sum(xsort[: k + 1])))      # partial sums >= x0
    for i in range(n - 1):
        r = np.zeros(nv)
        r[i] = -dsort[i + 1]
        r[i + 1] = dsort[i]
        a_ub.append(r)
        b_ub.append(0.0)                                  # ratio chain decreasing
    for i in range(n):
        for sign in (1.0, -1.0):
            r = np.zeros(nv)
            r[i] = sign
            r[n + i] = -1.0
            a_ub.append(r)
            b_ub.append(sign * dsort[i])

    cost = np.concatenate([np.zeros(n), np.ones(n), np.zeros(n)])
    res = solve_lp(cost, a_eq, b_eq, a_ub, b_ub)
    if not res.optimal:
        raise InternalError("ordered past cone LP infeasible; this cone is never empty")

    # stage two: pin the 1-norm at its optimum and move toward the max corner
    mc = max_corner(dd, x)[sigma]
    a_eq2 = a_eq + [cost]
    b_eq2 = b_eq + [res.objective]
    a_ub2 = list(a_ub)
    b_ub2 = list(b_ub)
    for i in range(n):
        for sign in (1.0, -1.0):
            r = np.zeros(nv)
            r[i] = sign
            r[2 * n + i] = -1.0
            a_ub2.append(r)
            b_ub2.append(sign * mc[i])
    cost2 = np.concatenate([np.zeros(2 * n), np.ones(n)])
    res2 = solve_lp(cost2, a_eq2, b_eq2, a_ub2, b_ub2)
    w = res2.x[:n] if res2.optimal else res.x[:n]
    z = np.empty(n)
    z[sigma] = w
    return ProbVector(z)


@dataclass(frozen=True)
class ReachBound:
    """Classical majorisation polytope of z: conv of all permutations of z."""

    z: ProbVector

    @cached_property
    def sorted_partials(self) -> np.ndarray:
        return np.cumsum(np.sort(self.z.as_array())[::-1])

    @cached_property
    def vertices(self) -> np.ndarray:
        zz = self.z.as_array()
        seen = []
        for p in permutations(range(zz.size)):
            v = zz[np.asarray(p)]
            if not any(np.max(np.abs(v - q)) <= 1e-12 for q in seen):
                seen.append(v)
        return np.asarray(seen)

    def margin(self, x: np.ndarray) -> float:
        """Smallest halfspace slack (vectorized over rows when x is 2-D)."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        part = np.cumsum(np.sort(pts, axis=1)[:, ::-1], axis=1)
        slack = self.sorted_partials[None, :-1] - part[:, :-1]
        total = -np.abs(part[:, -1] - self.sorted_partials[-1])
        return float(np.min(np.concatenate([slack, total[:, None]], axis=1)))

    def contains(self, x, tol: float = ALG_TOL) -> bool:
        return self.margin(x) >= -tol

    def to_json(self) -> dict:
        return {"z": self.z.to_json(), "vertices": [v.tolist() for v in self.vertices]}


def reach_bound(x0: ProbVector, gen: ToyGenerator) -> ReachBound:
    """Outer bound of the reachable set from x0 under the hybrid dynamics."""
    d = GibbsVector(gen.fixed_point.as_array())
    return ReachBound(ordered_past_cone_z(x0, d))


def vectorfield_inward_check(z: ProbVector, gen: ToyGenerator,
                             tol: float = 1e-9) -> bool:
    """Do all achievable derivatives point into the bound at all its vertices?

    At every vertex pi(z) and for every permuted generator, active halfspace
    normals m must satisfy m . (-pi' B pi'^T) pi(z) <= tol.
    """
    zz = z.as_array()
    n = zz.size
    bound = ReachBound(z)
    partials = bound.sorted_partials
    perms = [np.asarray(p) for p in permutations(range(n))]
    masks = [m for m in _binary_masks(n)]
    for p in perms:
        v = zz[p]
        for q in perms:
            pq = perm_matrix(q)
            vel = -(pq @ gen.b @ pq.T) @ v
            for m in masks:
                bnd = partials[int(m.sum()) - 1]
                if m @ v >= bnd - 1e-10 and m @ vel > tol:
                    return False
    return True


def _binary_masks(n: int):
    out = []
    for bits in range(1, 2 ** n - 1):
        out.append(np.array([(bits >> i) & 1 for i in range(n)], dtype=float))
    return out
