"""
Unit tests for body representation and geometric primitives
"""

import math

import numpy as np
import pytest

from quermass_lab.bodies import (
    Ball,
    CoreBall,
    Sausage,
    VPolytope,
    circumradius,
    contains,
    core_dimension,
    diameter,
    dilate,
    distance,
    dump_body,
    erode,
    lambda_of,
    load_body,
    minimal_enclosing_ball,
    project,
    read_body_file,
    scale,
    support,
    support_dominates,
    support_many,
    to_core_ball,
    write_body_file,
)
from quermass_lab.errors import RejectedInputError, UnsupportedOperationError
from quermass_lab.integral_geometry import sample_subspace
from quermass_lab.sampling import BodySpec, generate
from quermass_lab.tests.fixtures.sample_data import BODY_JSON, INVALID_BODY_JSON


class TestJsonContract:
    """Loading and validating bodies"""

    @pytest.mark.parametrize("kind", sorted(BODY_JSON))
    def test_load_each_kind(self, kind):
        """Every body kind parses from its JSON form"""
        body = load_body(BODY_JSON[kind])
        assert body.kind == kind

    @pytest.mark.parametrize("name", sorted(INVALID_BODY_JSON))
    def test_invalid_json_rejected(self, name):
        """Malformed bodies raise RejectedInputError"""
        with pytest.raises(RejectedInputError):
            load_body(INVALID_BODY_JSON[name])

    def test_nan_coordinate_rejected(self):
        """Non-finite coordinates are rejected"""
        with pytest.raises(RejectedInputError):
            load_body({"dim": 2, "kind": "sausage", "p": [float("nan"), 0.0], "q": [1.0, 0.0], "radius": 1.0})

    def test_error_names_field(self):
        """The rejection message names the offending field"""
        with pytest.raises(RejectedInputError) as exc_info:
            load_body(INVALID_BODY_JSON["negative_radius"])
        assert "radius" in str(exc_info.value)

    def test_file_round_trip(self, temp_dir, rounded_cube):
        """A body written to disk reads back equal"""
        path = write_body_file(rounded_cube, temp_dir / "nested" / "cube.json")
        assert read_body_file(path) == rounded_cube
        assert load_body(dump_body(rounded_cube)) == rounded_cube


class TestSupport:

    def test_ball_support(self, unit_ball_3d):
        assert support(unit_ball_3d, (1.0, 0.0, 0.0)) == pytest.approx(1.0)

    def test_sausage_support(self, sausage_2d):
        assert support(sausage_2d, (1.0, 0.0)) == pytest.approx(4.0)
        assert support(sausage_2d, (-1.0, 0.0)) == pytest.approx(1.0)
        assert support(sausage_2d, (0.0, 1.0)) == pytest.approx(1.0)

    def test_non_unit_direction_rejected(self, unit_disk):
        with pytest.raises(RejectedInputError):
            support(unit_disk, (2.0, 0.0))

    def test_support_many_matches_single(self, rounded_square):
        U = np.array([[1.0, 0.0], [0.0, -1.0], [math.sqrt(0.5), math.sqrt(0.5)]])
        batch = support_many(rounded_square, U)
        assert batch == pytest.approx([support(rounded_square, u) for u in U])
        assert batch[2] == pytest.approx(math.sqrt(2.0) + 1.0)

    def test_support_dominates(self, unit_square_core):
        """The core sits inside its dilation"""
        core = VPolytope(dim=2, vertices=unit_square_core.core_vertices)
        angles = np.linspace(0, 2 * np.pi, 32, endpoint=False)
        U = np.column_stack([np.cos(angles), np.sin(angles)])
        assert support_dominates(core, unit_square_core, U)
        assert not support_dominates(unit_square_core, core, U)


class TestMembership:

    def test_sausage_distance(self, sausage_2d):
        assert distance(sausage_2d, (5.0, 0.0)) == pytest.approx(1.0)
        assert distance(sausage_2d, (1.5, 3.0)) == pytest.approx(2.0)
        assert distance(sausage_2d, (1.5, 0.5)) == 0.0

    def test_polytope_interior_is_inside(self, unit_square_polytope):
        """Interior points are inside with zero tolerance"""
        assert contains(unit_square_polytope, (0.5, 0.5))
        assert not contains(unit_square_polytope, (1.5, 0.5))

    def test_rounded_square_boundary(self, rounded_square):
        assert contains(rounded_square, (2.0, 0.0), tol=1e-9)
        assert distance(rounded_square, (3.0, 0.0)) == pytest.approx(1.0, abs=1e-9)
        corner = 1.0 + 2.0 / math.sqrt(2.0)
        assert distance(rounded_square, (corner, corner)) == pytest.approx(1.0, abs=1e-9)

    def test_wrong_point_dimension(self, unit_disk):
        with pytest.raises(RejectedInputError):
            distance(unit_disk, (0.0, 0.0, 0.0))


class TestMinkowski:

    def test_dilate_keeps_kind(self, sausage_2d, unit_square_polytope):
        assert dilate(sausage_2d, 0.5).radius == pytest.approx(1.5)
        grown = dilate(unit_square_polytope, 1.0)
        assert isinstance(grown, CoreBall)
        assert grown.radius == 1.0

    def test_erode_within_radius(self, rounded_square):
        shrunk = erode(rounded_square, 0.25)
        assert isinstance(shrunk, CoreBall)
        assert shrunk.radius == pytest.approx(0.75)

    def test_erode_to_core(self, rounded_square):
        core = erode(rounded_square, 1.0)
        assert isinstance(core, VPolytope)
        assert len(core.vertices) == 4

    def test_erode_past_radius(self, rounded_square):
        """Eroding the side-2 square core by 0.5 leaves the side-1 square"""
        inner = erode(rounded_square, 1.5)
        pts = sorted(tuple(round(c, 9) for c in v) for v in inner.vertices)
        assert pts == [(-0.5, -0.5), (-0.5, 0.5), (0.5, -0.5), (0.5, 0.5)]

    def test_erode_to_empty(self, rounded_square, sausage_2d):
        assert erode(rounded_square, 3.0) is None
        assert erode(sausage_2d, 1.5) is None

    def test_erode_4d_full_core_unsupported(self):
        core = tuple(tuple(float(b) for b in np.binary_repr(n, 4)) for n in range(16))
        body = CoreBall(dim=4, core_vertices=core, radius=1.0)
        with pytest.raises(UnsupportedOperationError):
            erode(body, 1.2)

    def test_negative_amounts_rejected(self, unit_disk):
        with pytest.raises(RejectedInputError):
            dilate(unit_disk, -1.0)
        with pytest.raises(RejectedInputError):
            erode(unit_disk, -1.0)

    def test_scale(self, rounded_square):
        big = scale(rounded_square, 2.0)
        assert big.radius == 2.0
        assert big.core_vertices[0] == (-2.0, -2.0)
        with pytest.raises(RejectedInputError):
            scale(rounded_square, 0.0)


class TestProjection:

    def test_ball_projects_to_disk(self, unit_ball_3d):
        frame = np.eye(3)[:, :2]
        disk = project(unit_ball_3d, frame)
        assert isinstance(disk, Ball)
        assert disk.dim == 2 and disk.radius == 1.0

    def test_cube_projects_to_square(self, rounded_cube):
        """Projection keeps the radius and prunes the core to its hull"""
        square = project(rounded_cube, np.eye(3)[:, :2])
        assert isinstance(square, CoreBall)
        assert square.radius == rounded_cube.radius
        assert len(square.core_vertices) == 4

    def test_sausage_projects_to_sausage(self, sausage_3d):
        s = math.sqrt(0.5)
        frame = np.array([[s, 0.0], [s, 0.0], [0.0, 1.0]])
        assert isinstance(project(sausage_3d, frame), Sausage)

    def test_non_orthonormal_frame_rejected(self, unit_ball_3d):
        with pytest.raises(RejectedInputError):
            project(unit_ball_3d, np.array([[1.0, 1.0], [0.0, 1.0], [0.0, 0.0]]))


class TestMetrics:

    def test_diameter(self, sausage_2d, rounded_square):
        assert diameter(sausage_2d) == pytest.approx(5.0)
        assert diameter(rounded_square) == pytest.approx(2.0 * math.sqrt(2.0) + 2.0)

    def test_core_dimension(self, unit_ball_3d, sausage_3d, rounded_square, planar_square_3d, rounded_cube):
        assert core_dimension(unit_ball_3d) == 0
        assert core_dimension(sausage_3d) == 1
        assert core_dimension(rounded_square) == 2
        assert core_dimension(planar_square_3d) == 2
        assert core_dimension(rounded_cube) == 3

    def test_core_dimension_ignores_duplicates(self):
        body = CoreBall(dim=2, core_vertices=((0, 0), (0, 0), (1, 1)), radius=1.0)
        assert core_dimension(body) == 1

    def test_polytope_has_no_core(self, unit_square_polytope):
        with pytest.raises(RejectedInputError):
            core_dimension(unit_square_polytope)

    def test_circumradius(self, rounded_square, sausage_2d):
        assert circumradius(rounded_square) == pytest.approx(math.sqrt(2.0) + 1.0, rel=1e-9)
        assert circumradius(sausage_2d) == pytest.approx(2.5, rel=1e-9)

    def test_minimal_enclosing_ball_obtuse_triangle(self):
        """The two far points span the smallest ball of an obtuse triangle"""
        center, r = minimal_enclosing_ball([(0.0, 0.0), (2.0, 0.0), (1.0, 0.1)])
        assert r == pytest.approx(1.0, rel=1e-9)
        assert center == pytest.approx([1.0, 0.0], abs=1e-9)

    def test_lambda_of(self, rounded_square, unit_square_polytope):
        assert lambda_of(scale(rounded_square, 0.5)) == pytest.approx(2.0)
        with pytest.raises(RejectedInputError):
            lambda_of(unit_square_polytope)

    def test_to_core_ball(self, sausage_2d):
        view = to_core_ball(sausage_2d)
        assert view.core_vertices == (sausage_2d.p, sausage_2d.q)
        assert view.radius == sausage_2d.radius


def _directions(rng, dim, count=64):
    U = rng.normal(size=(count, dim))
    return U / np.linalg.norm(U, axis=1, keepdims=True)


class TestMinkowskiInvariants:
    """Identities every core-plus-ball body satisfies"""

    BODIES = ["unit_disk", "unit_ball_3d", "sausage_2d", "sausage_3d", "rounded_square", "rounded_cube",
              "planar_square_3d"]

    @pytest.mark.parametrize("name", BODIES)
    @pytest.mark.parametrize("fraction", [0.25, 1.0])
    def test_opening_within_radius(self, name, fraction, request, rng):
        """Eroding by t <= r and dilating back by t returns the body"""
        body = request.getfixturevalue(name)
        t = fraction * body.radius
        U = _directions(rng, body.dim)
        reopened = dilate(erode(body, t), t)
        assert support_many(reopened, U) == pytest.approx(support_many(body, U), abs=1e-12)

    @pytest.mark.parametrize("name", BODIES + ["unit_square_polytope"])
    def test_support_adds_under_dilation(self, name, request, rng):
        body = request.getfixturevalue(name)
        U = _directions(rng, body.dim)
        for t in (0.0, 0.3, 2.0):
            assert support_many(dilate(body, t), U) == pytest.approx(support_many(body, U) + t, abs=1e-12)

    @pytest.mark.parametrize("name", BODIES + ["unit_square_polytope"])
    def test_diameter_grows_by_twice_the_dilation(self, name, request):
        body = request.getfixturevalue(name)
        for t in (0.0, 0.3, 2.0):
            assert diameter(dilate(body, t)) == pytest.approx(diameter(body) + 2.0 * t, rel=1e-12)

    @pytest.mark.parametrize("seed", range(6))
    def test_projection_does_not_raise_core_dimension(self, seed):
        for family, core_dim in [("random_core", None), ("sausage", None), ("flat_core", 2)]:
            body = generate(BodySpec(dim=4, family=family, core_dim=core_dim, core_vertex_count=6, seed=seed))
            for m in (1, 2, 3):
                frame = sample_subspace(4, m, seed).as_array()
                assert core_dimension(project(body, frame)) <= core_dimension(body)
                assert core_dimension(project(body, frame)) <= m

    def test_projection_keeps_support_in_frame_directions(self, rounded_cube, rng):
        """h_{K|E}(u) = h_K(F u) for u in frame coordinates"""
        frame = sample_subspace(3, 2, 7).as_array()
        shadow = project(rounded_cube, frame)
        U = _directions(rng, 2)
        assert support_many(shadow, U) == pytest.approx(support_many(rounded_cube, U @ frame.T), abs=1e-9)
