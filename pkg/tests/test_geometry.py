from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accessgraph import (EmptyScene, EmptyWalkableSet, TriangleMesh,
                         build_scene, dst, fixtures, inter)


def unit_quad_mesh():
    return fixtures.make_quad("floor", 0.0, 0.0, 1.0, 1.0)


class TestDst:
    def test_unit(self):
        assert dst((0, 0, 0), (1, 0, 0)) == 1.0

    def test_identity(self):
        assert dst((0, 0, 0), (0, 0, 0)) == 0.0

    def test_one_two_two(self):
        assert dst((1, 2, 2), (0, 0, 0)) == 3.0

    coords = st.floats(min_value=-1e6, max_value=1e6,
                       allow_nan=False, allow_infinity=False)
    points = st.tuples(coords, coords, coords)

    @given(points, points)
    def test_symmetric_nonnegative(self, a, b):
        assert dst(a, b) >= 0.0
        assert dst(a, b) == dst(b, a)

    @settings(max_examples=200)
    @given(points, points, points)
    def test_triangle_inequality(self, a, b, c):
        assert dst(a, c) <= dst(a, b) + dst(b, c) + 1e-9


class TestBuildScene:
    def test_unlabeled_quad_defaults_walkable(self):
        scene = build_scene([unit_quad_mesh()])
        assert scene.is_walkable(0)
        assert scene.triangle_count() == 2

    def test_obstacle_only_rejected(self):
        with pytest.raises(EmptyWalkableSet):
            build_scene([unit_quad_mesh()], {"floor": "obstacle"})

    def test_empty_scene_rejected(self):
        with pytest.raises(EmptyScene):
            build_scene([])

    def test_degenerate_triangles_dropped_with_count(self):
        vertices = np.array([
            [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0],
            [2.0, 2.0, 0.0]])
        faces = np.array([[0, 1, 2], [0, 1, 1], [3, 3, 3]])
        scene = build_scene([TriangleMesh("m", vertices, faces)])
        assert scene.degenerate_dropped == 2
        assert scene.triangle_count() == 1

    def test_surface_class_counts_as_walkable(self):
        scene = build_scene([unit_quad_mesh()],
                            {"floor": "surface-class:carpet"})
        assert scene.is_walkable(0)
        assert scene.tag(0) == "surface-class:carpet"

    def test_kitchen_counters_stay_in_scene(self, kitchen):
        # avoidance of counters comes from geometry, not labels: the floor
        # and every counter are walkable members of the scene
        scene, _ = kitchen
        names = [m.name for m in scene.objects]
        assert "floor" in names and "counter_w" in names
        assert all(scene.is_walkable(k) for k in range(len(names)))


class TestInter:
    def test_downcast_onto_floor(self):
        scene = build_scene([fixtures.make_quad("f", -1, -1, 1, 1)])
        hit = inter(scene, (0.0, 0.0, 1.0), (0.0, 0.0, -1.0), 5.0)
        assert hit is not None
        assert hit.distance == pytest.approx(1.0, abs=1e-9)
        assert hit.point[2] == pytest.approx(0.0, abs=1e-9)

    def test_downcast_through_hole_misses(self):
        scene = fixtures.floor_with_hole_scene()
        assert inter(scene, (0.0, 0.0, 1.0), (0.0, 0.0, -1.0), 5.0) is None

    def test_hit_beyond_max_dist_is_none(self):
        scene = build_scene([fixtures.make_quad("f", -1, -1, 1, 1)])
        assert inter(scene, (0.0, 0.0, 2.0), (0.0, 0.0, -1.0), 1.5) is None

    def test_non_unit_direction_rejected(self):
        scene = build_scene([unit_quad_mesh()])
        with pytest.raises(ValueError):
            inter(scene, (0.0, 0.0, 1.0), (0.0, 0.0, -2.0), 5.0)

    def test_max_dist_bound_holds(self):
        scene, _ = fixtures.kitchen_scene()
        rng = np.random.default_rng(7)
        for _ in range(300):
            origin = rng.uniform([-1, -1, 0.1], [5, 4, 3])
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            m = float(rng.uniform(0.1, 6.0))
            hit = inter(scene, origin, d, m)
            if hit is not None:
                assert hit.distance <= m
                assert hit.distance >= 0.0
                expected = origin + hit.distance * d
                assert np.allclose(hit.point, expected, atol=1e-6)
