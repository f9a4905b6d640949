"""
Unit tests for the convex hull projection solver
"""

import math

import numpy as np
import pytest

from quermass_lab.errors import ConvergenceError, RejectedInputError
from quermass_lab.hull_projection import (
    HullOracle,
    away_step_frank_wolfe,
    hull_distances,
    min_norm_point,
    project_onto_hull,
)
from quermass_lab.sampling import BodySpec, generate

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])

# eight vertices: a very flat cap over [0, 1] and one point below it
FLAT_CAP = np.vstack([
    np.column_stack([np.linspace(0.0, 1.0, 7), -1e-4 * (np.linspace(0.0, 1.0, 7) - 0.5) ** 2]),
    [[0.5, -1.0]],
])


def _pairwise_segment_distance(x, V):
    """Distance from x to the union of all segments [v_a, v_b]"""
    best = np.inf
    for a in range(len(V)):
        for b in range(a, len(V)):
            e = V[b] - V[a]
            ee = float(e @ e)
            s = 0.0 if ee == 0.0 else min(max(float((x - V[a]) @ e) / ee, 0.0), 1.0)
            best = min(best, float(np.linalg.norm(x - V[a] - s * e)))
    return best


class TestProjectOntoHull:

    def test_segment_endpoint(self):
        """(2, 2) projects onto the end (1, 0) of the segment"""
        nearest, dist = project_onto_hull((2.0, 2.0), [(0.0, 0.0), (1.0, 0.0)])
        assert nearest == pytest.approx([1.0, 0.0], abs=1e-9)
        assert dist == pytest.approx(math.sqrt(5.0), abs=1e-9)

    def test_segment_interior(self):
        nearest, dist = project_onto_hull((0.3, -2.0), [(0.0, 0.0), (1.0, 0.0)])
        assert nearest == pytest.approx([0.3, 0.0], abs=1e-6)
        assert dist == pytest.approx(2.0, abs=1e-9)

    def test_point_inside(self):
        nearest, dist = project_onto_hull((0.25, 0.5), SQUARE)
        assert dist < 1e-6
        assert nearest == pytest.approx([0.25, 0.5], abs=1e-6)

    def test_single_vertex(self):
        nearest, dist = project_onto_hull((3.0, 4.0), [(0.0, 0.0)])
        assert dist == pytest.approx(5.0)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(RejectedInputError):
            project_onto_hull((1.0, 2.0, 3.0), SQUARE)

    def test_iteration_cap(self):
        """Running out of iterations reports the gap reached"""
        with pytest.raises(ConvergenceError) as exc_info:
            project_onto_hull((0.5, 5.0), [(0.0, 0.0), (1.0, 0.0)], max_iter=0)
        assert exc_info.value.achieved_gap > 0
        assert exc_info.value.iterations == 0


class TestBatchedSolver:

    def test_batch_matches_single_points(self, rng):
        X = rng.uniform(-2.0, 3.0, size=(40, 2))
        Y, gaps, _ = away_step_frank_wolfe(X, SQUARE)
        for x, y in zip(X, Y):
            nearest, _ = project_onto_hull(x, SQUARE)
            assert y == pytest.approx(nearest, abs=1e-5)
        assert np.all(gaps >= -1e-12)

    def test_projection_into_box(self, rng):
        """The nearest point of the unit square is the coordinate clip"""
        X = rng.uniform(-2.0, 3.0, size=(40, 2))
        Y, _, _ = away_step_frank_wolfe(X, SQUARE)
        assert Y == pytest.approx(np.clip(X, 0.0, 1.0), abs=1e-5)


class TestHullOracle:

    def test_facets_for_full_dimensional_hull(self):
        assert HullOracle(SQUARE).facets is not None

    def test_no_facets_for_flat_hull(self):
        assert HullOracle([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]).facets is None
        assert HullOracle([(0.0, 0.0), (1.0, 0.0)]).facets is None

    def test_inside_points_are_exactly_zero(self, rng):
        X = rng.uniform(0.1, 0.9, size=(25, 2))
        assert np.all(HullOracle(SQUARE).distances(X) == 0.0)

    def test_distances_match_box_clip(self, rng):
        X = rng.uniform(-2.0, 3.0, size=(50, 2))
        expected = np.linalg.norm(X - np.clip(X, 0.0, 1.0), axis=1)
        assert hull_distances(X, SQUARE) == pytest.approx(expected, abs=1e-6)

    def test_cutoff_gives_lower_bound(self):
        """Beyond the cutoff the facet violation stands in for the distance"""
        X = np.array([[5.0, 5.0], [1.2, 0.5]])
        out = HullOracle(SQUARE).distances(X, cutoff=1.0)
        assert 1.0 < out[0] <= math.hypot(4.0, 4.0)
        assert out[1] == pytest.approx(0.2, abs=1e-9)

    def test_bracket_contains_true_distance(self, rng):
        X = rng.uniform(-2.0, 3.0, size=(50, 2))
        expected = np.linalg.norm(X - np.clip(X, 0.0, 1.0), axis=1)
        lower, upper = HullOracle(SQUARE).distance_bracket(X)
        assert np.all(lower <= expected + 1e-9)
        assert np.all(upper >= expected - 1e-9)
        assert np.all(upper - lower <= 1e-5)

    def test_non_strict_oracle_reports_bracket(self):
        """Out of iterations, a non-strict oracle still brackets the distance"""
        oracle = HullOracle(SQUARE, max_iter=0, strict=False)
        lower, upper = oracle.distance_bracket(np.array([[0.5, 5.0]]))
        assert lower[0] <= 4.0 <= upper[0]
        assert upper[0] == pytest.approx(math.hypot(0.5, 4.0))

    def test_strict_oracle_raises(self):
        with pytest.raises(ConvergenceError):
            HullOracle(SQUARE, max_iter=0).distances(np.array([[0.5, 5.0]]))


class TestMinNormPoint:

    def test_edge_midpoint(self):
        weights, gap, majors = min_norm_point(np.array([[1.0, -1.0], [1.0, 1.0]]), 1e-14, 100)
        assert weights == pytest.approx([0.5, 0.5], abs=1e-12)
        assert gap == pytest.approx(0.0, abs=1e-14)
        assert majors == 1

    def test_origin_inside_triangle(self):
        P = np.array([[1.0, 0.0], [-1.0, 1.0], [-1.0, -1.0]])
        weights, gap, _ = min_norm_point(P, 1e-14, 100)
        assert weights == pytest.approx([0.5, 0.25, 0.25], abs=1e-12)
        assert weights @ P == pytest.approx([0.0, 0.0], abs=1e-12)
        assert gap <= 1e-14

    def test_no_major_cycles_keeps_nearest_row(self):
        weights, gap, majors = min_norm_point(np.array([[1.0, -1.0], [1.0, 1.0]]), 1e-14, 0)
        assert weights == pytest.approx([1.0, 0.0])
        assert gap == pytest.approx(2.0)
        assert majors == 0

    def test_drops_vertices_leaving_the_active_set(self):
        """The starting vertex (0, 1) leaves the active set; the answer lies on the opposite edge"""
        P = np.array([[0.0, 1.0], [2.0, -2.0], [-1.0, 2.0]])
        weights, gap, majors = min_norm_point(P, 1e-14, 100)
        assert weights @ P == pytest.approx([0.32, 0.24], abs=1e-12)
        assert weights == pytest.approx([0.0, 0.44, 0.56], abs=1e-12)
        assert majors == 2
        assert gap <= 1e-12


class TestNearlyCollinearVertices:

    def test_flat_cap_converges(self):
        """The nearest face is one short edge of an almost straight chain"""
        points = np.array([[0.37, 0.05], [0.0834, 1e-3], [0.61, 1e-4], [0.9, -0.5]])
        Y, gaps, _ = away_step_frank_wolfe(points, FLAT_CAP)
        for x, y in zip(points, Y):
            assert np.linalg.norm(x - y) == pytest.approx(_pairwise_segment_distance(x, FLAT_CAP), abs=1e-8)
        assert np.all(gaps <= 1e-12)

    def test_flat_cap_bracket(self, rng):
        X = np.column_stack([rng.uniform(-0.2, 1.2, 200), rng.uniform(-1e-4, 1e-3, 200)])
        lower, upper = HullOracle(FLAT_CAP).distance_bracket(X)
        outside = upper > 0.0
        assert np.any(outside)
        expected = np.array([_pairwise_segment_distance(x, FLAT_CAP) for x in X[outside]])
        assert np.all(lower[outside] <= expected + 1e-10)
        assert np.all(expected <= upper[outside] + 1e-10)
        assert np.all(upper - lower <= 1e-6)

    def test_random_planar_core_edge(self):
        """Seeded 8-vertex planar core; away steps alone zig-zag on its nearest edge"""
        V = np.asarray(generate(BodySpec(dim=2, seed=1)).core_vertices)
        x = np.array([0.14626509796531284, 0.6929135156034194])
        _, dist = project_onto_hull(x, V)
        assert dist == pytest.approx(_pairwise_segment_distance(x, V), abs=1e-9)


class TestOptimality:

    @pytest.mark.parametrize("dim", [2, 3, 5])
    def test_variational_inequality(self, dim, rng):
        """<x - p, v - p> <= 0 for every vertex v at the projection p"""
        V = rng.normal(size=(3 * dim + 2, dim))
        X = 3.0 * rng.normal(size=(30, dim))
        Y, gaps, _ = away_step_frank_wolfe(X, V)
        inner = np.einsum("nd,nmd->nm", X - Y, V[None, :, :] - Y[:, None, :])
        assert np.max(inner) <= 1e-9
        assert np.all(gaps <= 1e-9)
