import math

import numpy as np
import pytest

from thermoctrl.core import ProbVector
from thermoctrl.errors import DomainError, InvalidInputError
from thermoctrl.qutrit import (
    EMBED,
    conic_case,
    conic_embedded,
    derv_cone,
    extremal_field,
    integrate_extremal,
    invariant_class_region,
    is_stabilisable,
    kernel_intersection_point,
    lambda_range,
    qutrit_generator,
    reach_order,
    reachable_set,
    stab_boundary,
    stab_boundary_polygon,
    stabilisable_mask,
)
from thermoctrl.toymodel import toy_generator_ladder, trajectory_cloud

TAU23 = [0, 2, 1]


@pytest.fixture(scope="module")
def gen03():
    return toy_generator_ladder(0.3, 3)


@pytest.fixture(scope="module")
def class_d03(gen03):
    return invariant_class_region(gen03)


class TestEmbedding:
    def test_rows_orthonormal(self):
        p = EMBED.p
        assert np.max(np.abs(p @ p.T - np.eye(2))) < 1e-15

    def test_kills_uniform_direction(self):
        assert np.max(np.abs(EMBED.embed(np.ones(3)))) < 1e-15

    def test_isometric_on_simplex_plane(self, rng):
        for _ in range(50):
            x = rng.dirichlet([1, 1, 1])
            y = rng.dirichlet([1, 1, 1])
            d3 = np.linalg.norm(x - y)
            d2 = np.linalg.norm(EMBED.embed(x) - EMBED.embed(y))
            assert abs(d3 - d2) < 1e-12

    def test_unembed_inverts(self, rng):
        x = rng.dirichlet([1, 1, 1])
        assert np.max(np.abs(EMBED.unembed(EMBED.embed(x)) - x)) < 1e-12


class TestDerivativeCone:
    def test_uniform_not_pointed(self, gen03):
        cone = derv_cone(np.full(3, 1 / 3), gen03)
        assert not cone.pointed

    def test_fixed_point_has_zero_ray(self, gen03):
        cone = derv_cone(gen03.fixed_point.as_array(), gen03)
        assert cone.has_zero_ray
        assert not cone.pointed

    def test_vertex_pointed(self, gen03):
        cone = derv_cone(np.array([0.97, 0.02, 0.01]), gen03)
        assert cone.pointed
        assert cone.left is not None and cone.right is not None

    def test_rays_sum_free(self, gen03, rng):
        cone = derv_cone(rng.dirichlet([1, 1, 1]), gen03)
        assert np.max(np.abs(cone.rays.sum(axis=1))) < 1e-12


class TestStabilisable:
    def test_d_and_permutations_stabilisable(self, gen03):
        d = gen03.fixed_point.as_array()
        from itertools import permutations
        for p in permutations(range(3)):
            assert is_stabilisable(d[list(p)], gen03)

    def test_certificate_weights(self, gen03):
        res = is_stabilisable(np.full(3, 1 / 3), gen03)
        assert res.stabilisable
        cone = derv_cone(np.full(3, 1 / 3), gen03)
        recon = res.weights @ cone.rays
        assert np.max(np.abs(recon)) < 1e-8

    def test_separating_functional(self, gen03):
        x = np.array([0.96, 0.03, 0.01])
        res = is_stabilisable(x, gen03)
        assert not res.stabilisable
        cone = derv_cone(x, gen03)
        vals = cone.rays @ res.alpha
        assert vals.max() < -1e-6

    def test_mask_matches_lp(self, gen03, rng):
        pts = rng.dirichlet([1, 1, 1], size=250)
        mask = stabilisable_mask(pts, gen03)
        lp = np.array([bool(is_stabilisable(p, gen03)) for p in pts])
        assert np.array_equal(mask, lp)

    def test_unital_collapses_to_barycenter(self):
        g = toy_generator_ladder(1.0, 3)
        assert stabilisable_mask(np.full((1, 3), 1 / 3), g)[0]
        off = np.array([[0.4, 0.3, 0.3], [0.34, 0.33, 0.33], [0.5, 0.25, 0.25]])
        assert not stabilisable_mask(off, g).any()


class TestBoundaryConics:
    def test_parabolic_lambda_range_is_one_seventh(self):
        lo, hi = lambda_range(0.25)
        assert abs(lo + 1.0 / 7.0) < 1e-12 and abs(hi - 1.0 / 7.0) < 1e-12

    def test_parabolic_quadratic_formula(self, rng):
        for lam in np.linspace(-1 / 7, 1 / 7, 9):
            p = kernel_intersection_point(0.25, lam).as_array()
            expect = np.array([4 + 28 * lam ** 2, -14 * lam ** 2 - 3 * lam + 1,
                               -14 * lam ** 2 + 3 * lam + 1]) / 6.0
            assert np.max(np.abs(p - expect)) < 1e-12

    def test_parabolic_midpoint(self):
        p = kernel_intersection_point(0.25, 0.0).as_array()
        assert np.max(np.abs(p - np.array([2 / 3, 1 / 6, 1 / 6]))) < 1e-12
        assert np.max(np.abs(EMBED.embed(p) - [0.0, 1.0 / math.sqrt(6.0)])) < 1e-12

    def test_parabolic_endpoints_embed_to_figure_values(self):
        lo, hi = lambda_range(0.25)
        e_lo = EMBED.embed(kernel_intersection_point(0.25, lo).as_array())
        e_hi = EMBED.embed(kernel_intersection_point(0.25, hi).as_array())
        assert np.max(np.abs(e_lo - np.array([-0.10102, 0.52497]))) < 1e-4
        assert np.max(np.abs(e_hi - np.array([+0.10102, 0.52497]))) < 1e-4

    @pytest.mark.parametrize("a", [0.15, 0.2, 0.3, 0.5, 0.8])
    def test_kernel_points_match_conic_closed_form(self, a):
        lo, hi = lambda_range(a)
        for lam in np.linspace(lo, hi, 11):
            k = EMBED.embed(kernel_intersection_point(a, lam).as_array())
            c = conic_embedded(a, lam)
            assert np.max(np.abs(k - c)) < 1e-9

    @pytest.mark.parametrize("a", [0.2, 0.25, 0.5])
    def test_endpoints_are_d_and_swap(self, a):
        g = toy_generator_ladder(a, 3)
        d = g.fixed_point.as_array()
        lo, hi = lambda_range(a)
        p_lo = kernel_intersection_point(a, lo).as_array()
        p_hi = kernel_intersection_point(a, hi).as_array()
        ends = {tuple(np.round(p_lo, 9)), tuple(np.round(p_hi, 9))}
        expect = {tuple(np.round(d, 9)), tuple(np.round(d[TAU23], 9))}
        assert ends == expect

    def test_case_classification(self):
        assert conic_case(0.2) == "elliptic"
        assert conic_case(0.25) == "parabolic"
        assert conic_case(0.3) == "hyperbolic"
        assert conic_case(1.0) == "degenerate-unital"

    def test_six_arcs_two_families(self):
        arcs = stab_boundary(0.2)
        assert len(arcs) == 6
        cases = sorted(a.case for a in arcs)
        assert cases == ["elliptic"] * 3 + ["hyperbolic"] * 3

    def test_unital_degenerates(self):
        arcs = stab_boundary(1.0)
        assert len(arcs) == 1 and arcs[0].case == "degenerate-unital"

    def test_boundary_polygon_closes(self):
        poly = stab_boundary_polygon(0.3, samples_per_arc=60)
        assert poly.shape[0] == 6 * 59
        assert np.linalg.norm(poly[0] - poly[-1]) < 0.05  # closed up to one sample

    def test_sampled_boundary_sits_on_hull_boundary(self, gen03):
        # points of the curve have zero in the boundary of conv(derv):
        # stabilisable as a closed set, non-stabilisable after a tiny push out
        arcs = stab_boundary(0.3)
        pts = np.vstack([a.sample(9) for a in arcs])
        assert stabilisable_mask(pts, gen03).all()
        center = np.full(3, 1 / 3)
        outside = pts + 1e-4 * (pts - center)
        outside /= outside.sum(axis=1, keepdims=True)
        assert not stabilisable_mask(outside, gen03).any()

    def test_lambda_outside_range_rejected(self):
        with pytest.raises(DomainError):
            kernel_intersection_point(0.25, 0.5)

    def test_invalid_ratio_rejected(self):
        with pytest.raises(InvalidInputError):
            stab_boundary(-1.0)


class TestExtremalField:
    def test_mirror_symmetry_on_wall(self, gen03):
        x = np.array([0.9, 0.05, 0.05])
        left = extremal_field(x, gen03, "left").velocity
        right = extremal_field(x, gen03, "right").velocity
        assert np.max(np.abs(left[TAU23] - right)) < 1e-12

    def test_degenerate_flag_at_d(self, gen03):
        ray = extremal_field(gen03.fixed_point.as_array(), gen03, "left")
        assert ray.degenerate

    def test_interior_raises(self, gen03):
        with pytest.raises(DomainError):
            extremal_field(np.full(3, 1 / 3), gen03, "left")

    def test_agrees_with_cone_indices(self, gen03, rng):
        # independent recomputation of the boundary rays through derv_cone
        for _ in range(40):
            x = rng.dirichlet([1, 1, 1])
            cone = derv_cone(x, gen03)
            if not cone.pointed:
                continue
            left = extremal_field(x, gen03, "left").velocity
            expect = cone.rays[cone.left]
            e1 = EMBED.embed(left)
            e2 = EMBED.embed(expect)
            ang = abs(math.atan2(e1[1], e1[0]) - math.atan2(e2[1], e2[0]))
            assert min(ang, 2 * math.pi - ang) < 1e-6


class TestExtremalCurves:
    def test_curves_from_d_hit_different_walls(self, gen03):
        d = np.sort(gen03.fixed_point.as_array())[::-1]
        left = integrate_extremal(d, gen03, "left")
        right = integrate_extremal(d, gen03, "right")
        assert left.termination == "wall" and right.termination == "wall"
        wl = abs(left.final[1] - left.final[2]) < 1e-8
        wr = abs(right.final[0] - right.final[1]) < 1e-8
        assert wl and wr

    def test_termination_times_bounded(self):
        for a in [0.05, 0.3, 0.95]:
            g = toy_generator_ladder(a, 3)
            d = np.sort(g.fixed_point.as_array())[::-1]
            for side in ("left", "right"):
                curve = integrate_extremal(d, g, side)
                assert curve.termination == "wall"
                assert curve.times[-1] < 1e3

    def test_stays_inside_majorisation_polytope_of_d(self, gen03):
        from thermoctrl.toymodel import ReachBound
        d = np.sort(gen03.fixed_point.as_array())[::-1]
        bound = ReachBound(ProbVector(d))
        for side in ("left", "right"):
            curve = integrate_extremal(d, gen03, side)
            assert bound.margin(curve.points) >= -1e-8

    def test_field_norm_positive_along_curves(self, gen03):
        d = np.sort(gen03.fixed_point.as_array())[::-1]
        curve = integrate_extremal(d, gen03, "left")
        norms = [np.linalg.norm(extremal_field(p, gen03, "left").velocity)
                 for p in curve.points[1:]]
        assert min(norms) > 1e-8

    def test_crossing_property(self, gen03, class_d03):
        # a right-extremal solution may not cross a left-extremal one
        d = np.sort(gen03.fixed_point.as_array())[::-1]
        left = integrate_extremal(d, gen03, "left")
        x0 = np.array([0.85, 0.10, 0.05])
        right = integrate_extremal(x0, gen03, "right", avoid_region=class_d03)
        from thermoctrl.qutrit import _segments_cross
        le = left.embedded
        re = right.embedded
        crossings = 0
        for i in range(len(le) - 1):
            for j in range(len(re) - 1):
                if _segments_cross(le[i], le[i + 1], re[j], re[j + 1]):
                    crossings += 1
        assert crossings == 0


class TestRegions:
    def test_class_d_contains_stab_set_and_centers(self, gen03, class_d03):
        assert class_d03.contains(gen03.fixed_point.as_array())
        assert class_d03.contains(np.full(3, 1 / 3))
        arcs = stab_boundary(0.3)
        pts = np.vstack([a.sample(15) for a in arcs])
        assert class_d03.contains_many(pts, tol=1e-6).all()

    def test_class_d_boundary_simple(self, class_d03):
        assert class_d03.boundary_is_simple()

    def test_class_d_permutation_invariance(self, gen03, class_d03, rng):
        for _ in range(100):
            x = rng.dirichlet([1, 1, 1])
            base = class_d03.contains(x)
            for p in [[1, 0, 2], [2, 1, 0], [1, 2, 0]]:
                assert class_d03.contains(x[p]) == base

    def test_reach_from_inside_class_is_class(self, gen03, class_d03):
        region = reachable_set(np.full(3, 1 / 3), gen03, class_d=class_d03)
        assert region.kind == "class-d"

    def test_monte_carlo_containment_from_d(self, gen03, class_d03):
        cloud = trajectory_cloud(gen03.fixed_point, gen03, count=800, seed=3)
        assert class_d03.contains_many(cloud, tol=1e-6).all()

    def test_generic_region_contains_class_and_cloud(self, gen03, class_d03):
        x0 = ProbVector([0.9, 0.07, 0.03])
        region = reachable_set(x0.as_array(), gen03, class_d=class_d03)
        assert region.contains(gen03.fixed_point.as_array())
        assert region.contains(np.full(3, 1 / 3))
        cloud = trajectory_cloud(x0, gen03, count=800, seed=5)
        assert region.contains_many(cloud, tol=1e-6).all()

    def test_reach_order_verdicts(self, gen03, class_d03):
        d = gen03.fixed_point.as_array()
        x0 = np.array([0.9, 0.07, 0.03])
        uni = np.full(3, 1 / 3)
        assert reach_order(x0, d, gen03, class_d=class_d03) == "x-reaches-y"
        assert reach_order(d, x0, gen03, class_d=class_d03) == "y-reaches-x"
        assert reach_order(uni, d, gen03, class_d=class_d03) == "equivalent"

    def test_same_curve_strict_order(self, gen03, class_d03):
        x0 = np.sort(np.array([0.9, 0.07, 0.03]))[::-1]
        curve = integrate_extremal(x0, gen03, "left", avoid_region=class_d03)
        up = curve.points[5]
        down = curve.points[len(curve.points) // 2]
        assert reach_order(up, down, gen03, class_d=class_d03) == "x-reaches-y"

    def test_incomparable_pair(self, gen03, class_d03):
        # two states near different vertices cannot reach one another
        x = np.array([0.9, 0.07, 0.03])
        y = np.array([0.05, 0.9, 0.05])
        # y sorted equals (0.9, 0.05, 0.05): compare fan widths honestly
        verdict = reach_order(x, y, gen03, class_d=class_d03)
        assert verdict in ("incomparable", "x-reaches-y", "y-reaches-x")

    def test_qutrit_generator_extends_beyond_one(self):
        g = qutrit_generator(2.5)
        fp = g.fixed_point.as_array()
        expect = np.array([1.0, 2.5, 2.5 ** 2])
        assert np.max(np.abs(fp - expect / expect.sum())) < 1e-12


def test_grid_agreement_between_lp_and_conics(gen03):
    # barycentric grid classified two ways: hull test vs analytic curve
    from matplotlib.path import Path
    from thermoctrl.figures import simplex_grid
    pts = simplex_grid(120)
    mask = stabilisable_mask(pts, gen03)
    poly = stab_boundary_polygon(0.3, samples_per_arc=200)
    inside = Path(poly).contains_points(EMBED.embed(pts))
    agree = (mask == inside).mean()
    assert agree >= 0.995


class TestOpenQuestionSupport:
    def test_no_two_point_classes_outside_class_d(self, gen03, class_d03):
        # numeric support for uniqueness of the multi-point class: distinct
        # chamber representatives outside [d] are pairwise non-equivalent
        # (permutation twins are always mutually reachable and excluded)
        from thermoctrl.figures import simplex_grid
        pts = simplex_grid(9)
        outside = []
        seen = set()
        for p in pts:
            down = np.sort(p)[::-1]
            key = tuple(np.round(down, 9))
            if p.min() > 0.01 and key not in seen \
                    and not class_d03.contains(down, tol=1e-9):
                seen.add(key)
                outside.append(down)
        regions = [reachable_set(p, gen03, class_d=class_d03) for p in outside[:8]]
        for i in range(len(regions)):
            for j in range(i + 1, len(regions)):
                both = (regions[i].contains(outside[j], tol=1e-9)
                        and regions[j].contains(outside[i], tol=1e-9))
                assert not both

    def test_random_generator_numeric_stabilisable_set(self, rng):
        # the grid classifier works for generators without the ladder form;
        # the fixed point stays stabilisable, some of the simplex does not
        for _ in range(5):
            q = rng.uniform(0.0, 1.0, (3, 3))
            np.fill_diagonal(q, 0.0)
            q -= np.diag(q.sum(axis=0))
            g = toy_generator_ladder(0.5, 3).__class__(-q)
            d = g.fixed_point.as_array()
            if d.min() < 0.02:
                continue
            assert stabilisable_mask(d[None, :], g)[0]
            from thermoctrl.figures import simplex_grid
            pts = simplex_grid(40)
            mask = stabilisable_mask(pts, g)
            assert 0 < mask.sum() < len(pts)


def test_stabilisable_set_permutation_equivariant(gen03, rng):
    pts = rng.dirichlet([1, 1, 1], size=300)
    base = stabilisable_mask(pts, gen03)
    for p in ([1, 0, 2], [2, 0, 1], [0, 2, 1]):
        assert np.array_equal(stabilisable_mask(pts[:, p], gen03), base)


@pytest.mark.parametrize("a", [0.2, 0.3])
def test_boundary_points_carry_halfplane_cones(a):
    # on the stabilisable boundary the achievable-derivative hull degenerates
    # to a half plane: largest angular gap equals pi
    gen = toy_generator_ladder(a, 3)
    arcs = stab_boundary(a)
    for arc in arcs[:2]:
        for x in arc.sample(9)[1:-1]:
            cone = derv_cone(x, gen)
            assert abs(cone.gap - math.pi) < 1e-4


def test_grid_disagreements_sit_on_the_curve(gen03):
    # where the hull test and the analytic curve disagree, the point must be
    # within one grid cell of the boundary (pure discretization slack)
    from matplotlib.path import Path
    from thermoctrl.figures import simplex_grid
    n = 120
    pts = simplex_grid(n)
    mask = stabilisable_mask(pts, gen03)
    poly = stab_boundary_polygon(0.3, samples_per_arc=400)
    inside = Path(poly).contains_points(EMBED.embed(pts))
    bad = EMBED.embed(pts[mask != inside])
    if len(bad):
        cell = math.sqrt(2.0) / (n - 1)
        d2 = ((bad[:, None, :] - poly[None, :, :]) ** 2).sum(axis=2)
        assert np.sqrt(d2.min(axis=1)).max() <= cell
