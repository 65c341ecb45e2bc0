from __future__ import annotations

import numpy as np
import pytest

from accessgraph import (AccessGraph, NodeKey, ViewshedConfig, fixtures,
                         viewshed, viewshed_directions)

K = NodeKey


def single_vertex_graph(position):
    g = AccessGraph()
    g.add_vertex(K(0, 0, 0), position)
    g.finalize_csr()
    return g


def sphere_expected(radius: float, eye: float, z: float) -> float:
    # |o + t u| = radius with o = (0, 0, eye): solve the quadratic
    oz = eye * z
    return -oz + np.sqrt(oz * oz + radius * radius - eye * eye)


class TestDirections:
    def test_count_and_unit_norm(self):
        dirs = viewshed_directions(ViewshedConfig(ray_count=500))
        assert dirs.shape == (500, 3)
        assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-12)

    def test_band_limits_respected(self):
        config = ViewshedConfig(ray_count=1000, elevation_span=40.0)
        dirs = viewshed_directions(config)
        assert np.abs(dirs[:, 2]).max() <= np.sin(np.radians(40.0))

    def test_seed_fixes_directions(self):
        a = viewshed_directions(ViewshedConfig(seed=9))
        b = viewshed_directions(ViewshedConfig(seed=9))
        c = viewshed_directions(ViewshedConfig(seed=10))
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestViewshed:
    def test_sphere_shell_min_max_match_analytic(self):
        scene = fixtures.sphere_shell_scene(radius=5.0, subdivisions=4)
        graph = single_vertex_graph((0.0, 0.0, 0.0))
        viewshed(graph, scene, ViewshedConfig(max_range=50.0))
        z_hi = np.sin(np.radians(40.0))
        expect_min = sphere_expected(5.0, 1.8, z_hi)
        expect_max = sphere_expected(5.0, 1.8, -z_hi)
        assert graph.node_attrs["view_min"][0] == pytest.approx(
            expect_min, rel=0.02)
        assert graph.node_attrs["view_max"][0] == pytest.approx(
            expect_max, rel=0.02)

    def test_open_scene_clamps_to_max_range(self, floor_scene):
        graph = single_vertex_graph((0.0, 0.0, 0.0))
        viewshed(graph, floor_scene, ViewshedConfig(max_range=100.0))
        assert graph.node_attrs["view_max"][0] == 100.0

    def test_corridor_min_is_half_width(self):
        scene = fixtures.corridor_scene(width=1.2, length=10.0)
        graph = single_vertex_graph((0.0, 5.0, 0.0))
        viewshed(graph, scene, ViewshedConfig())
        assert graph.node_attrs["view_min"][0] == pytest.approx(0.6,
                                                                rel=0.02)

    def test_default_range_is_bounding_sphere_diameter(self, floor_scene):
        g = single_vertex_graph((0.0, 0.0, 0.0))
        viewshed(g, floor_scene, ViewshedConfig(ray_count=64))
        _, radius = floor_scene.bounding_sphere()
        assert g.meta["viewshed"]["max_range"] == pytest.approx(2 * radius)

    def test_deterministic_across_runs_and_workers(self, stairs_scene,
                                                   stairs_graph):
        graph, _ = stairs_graph
        config = ViewshedConfig(ray_count=400, seed=3)
        viewshed(graph, stairs_scene, config, workers=1)
        v_min = graph.node_attrs["view_min"].copy()
        v_max = graph.node_attrs["view_max"].copy()
        viewshed(graph, stairs_scene, config, workers=4)
        assert np.array_equal(graph.node_attrs["view_min"], v_min)
        assert np.array_equal(graph.node_attrs["view_max"], v_max)
        viewshed(graph, stairs_scene, config, workers=1)
        assert np.array_equal(graph.node_attrs["view_min"], v_min)
