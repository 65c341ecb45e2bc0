from __future__ import annotations

import time

import numpy as np
import pytest

from accessgraph import (ConnectionType, GraphParams, InvalidStart, NodeKey,
                         build_graph, check_child, fixtures, get_connection,
                         get_nodes)
from accessgraph.builder import DEFAULT_DIRECTIONS, _get_nodes_batched
from accessgraph.fixtures import make_quad

K = NodeKey
DIRECT, OVER, UP, DOWN, INVALID = ConnectionType


class TestBuildGraph:
    def test_flat_floor_grid(self, floor_graph):
        graph, report = floor_graph
        assert report.vertex_count == 41 * 41
        assert not report.terminated_early
        # interior vertices connect to all 8 neighbors
        assert graph.out_degree(K(3, -2, 0)) == 8

    def test_discovery_follows_direction_order(self, floor_graph):
        graph, _ = floor_graph
        first_ring = [(k.i, k.j) for k in graph.keys[1:9]]
        assert first_ring == list(DEFAULT_DIRECTIONS)

    def test_steep_ramp_start_terminates_immediately(self):
        scene = fixtures.narrow_ramp_scene(angle_deg=40.0)
        params = GraphParams(tau=(0.0, 0.0, 3.0), slope_up=20.0,
                             slope_down=-20.0)
        started = time.perf_counter()
        graph, report = build_graph(scene, params)
        elapsed = time.perf_counter() - started
        assert report.vertex_count == 1
        assert report.terminated_early
        assert graph.num_edges == 0
        assert elapsed < 0.1

    def test_two_box_scene_shadows_and_ring_growth(self):
        scene = fixtures.two_box_scene()
        graph, report = build_graph(scene, GraphParams(tau=(0.0, 0.0, 0.5)))
        # no node stands on or inside the labeled obstacles
        for key in graph.keys:
            x, y, _ = graph.positions[graph.index_of[key]]
            assert not (-2.2 < x < -0.9 and -0.8 < y < 0.8), (x, y)
            assert not (0.9 < x < 2.2 and -2.2 < y < -0.7), (x, y)
        # discovery order is breadth-first: BFS depth over the final
        # adjacency never decreases along the discovery sequence
        depth = {K(0, 0, 0): 0}
        frontier = [K(0, 0, 0)]
        while frontier:
            nxt = []
            for key in frontier:
                for edge in graph.out_edges(key):
                    if edge.head not in depth:
                        depth[edge.head] = depth[key] + 1
                        nxt.append(edge.head)
            frontier = nxt
        order = [depth[k] for k in graph.keys]
        assert order == sorted(order)
        assert report.frontier_snapshots[0] == 1

    def test_invalid_start_over_hole(self):
        scene = fixtures.floor_with_hole_scene()
        with pytest.raises(InvalidStart):
            build_graph(scene, GraphParams(tau=(0.0, 0.0, 1.0)))

    def test_invalid_start_over_obstacle(self):
        scene = fixtures.two_box_scene()
        with pytest.raises(InvalidStart):
            build_graph(scene, GraphParams(tau=(-1.5, 0.0, 2.0)))

    def test_deterministic_rebuild(self, floor_scene):
        params = GraphParams(tau=(0.0, 0.0, 0.5))
        g1, _ = build_graph(floor_scene, params)
        g2, _ = build_graph(floor_scene, params)
        assert g1.keys == g2.keys
        assert np.array_equal(g1.positions, g2.positions)
        g1.finalize_csr()
        g2.finalize_csr()
        assert np.array_equal(g1.csr.cols, g2.csr.cols)
        assert np.array_equal(g1.csr.step_type, g2.csr.step_type)
        for name in g1.csr.factors:
            assert np.array_equal(g1.csr.factors[name], g2.csr.factors[name])

    def test_every_vertex_reachable_from_seed(self, stairs_graph):
        graph, _ = stairs_graph
        seen = {K(0, 0, 0)}
        frontier = [K(0, 0, 0)]
        while frontier:
            key = frontier.pop()
            for edge in graph.out_edges(key):
                if edge.head not in seen:
                    seen.add(edge.head)
                    frontier.append(edge.head)
        assert seen == set(graph.keys)

    def test_limit_monotonicity(self):
        scene = fixtures.stairs_scene(risers=6)
        base = GraphParams(tau=(0.0, -1.875, 0.5), step_up=0.12,
                           step_down=-0.12, slope_up=15.0, slope_down=-15.0,
                           min_children=6)
        wider = GraphParams(tau=(0.0, -1.875, 0.5), step_up=0.2,
                            step_down=-0.3, slope_up=25.0, slope_down=-30.0,
                            min_children=2)
        small, _ = build_graph(scene, base)
        large, _ = build_graph(scene, wider)
        assert set(small.keys) <= set(large.keys)

    def test_wheelchair_gate_blocks_steps(self, stairs_scene):
        params = GraphParams(tau=(0.0, -1.875, 0.5), step_up=0.0,
                             step_down=0.0)
        graph, _ = build_graph(stairs_scene, params)
        types = {e.weights.step_type
                 for k in graph.parents() for e in graph.out_edges(k)}
        assert types == {DIRECT}
        # the upper landing (z = 1.8) is unreachable
        assert max(p[2] for p in graph.positions) < 0.15

    def test_stairs_connect_with_step_limit(self, stairs_graph):
        graph, _ = stairs_graph
        zs = graph.positions[:, 2]
        assert zs.max() == pytest.approx(1.8, abs=1e-9)


class TestGetNodes:
    def test_interior_full_neighborhood(self, floor_scene):
        params = GraphParams(tau=(0.0, 0.0, 0.5), min_children=8)
        children = get_nodes(floor_scene, params, K(0, 0, 0),
                             (0.0, 0.0, 0.0))
        assert len(children) == 8
        assert all(t == DIRECT for t, _ in children.values())

    def test_wall_buffer_empties_gated_parent(self):
        scene = fixtures.wall_scene()
        params = GraphParams(tau=(0.0, -1.55, 0.5), min_children=8)
        # parent one cell from the wall: only 5 of 8 candidates validate
        parent = K(0, 5, 0)
        position = (0.0, -0.3, 0.0)
        assert get_nodes(scene, params, parent, position) == {}
        relaxed = GraphParams(tau=(0.0, -1.55, 0.5), min_children=0)
        children = get_nodes(scene, relaxed, parent, position)
        assert len(children) == 5
        assert {d for d in children} == {(-1, -1), (-1, 0), (0, -1),
                                         (1, -1), (1, 0)}

    @pytest.mark.parametrize("scene_fn,tau,pos", [
        (lambda: fixtures.stairs_scene(), (0.0, -1.875, 0.5),
         (0.0, -0.125, 0.0)),
        (lambda: fixtures.hill_scene(), (-2.0, 0.0, 1.0),
         (-2.0, 0.0, 0.0374)),
        (lambda: fixtures.curb_scene(), (0.0, -0.625, 0.5),
         (0.0, -0.125, 0.0)),
    ])
    def test_batched_matches_scalar(self, scene_fn, tau, pos):
        import math

        scene = scene_fn()
        params = GraphParams(tau=tau, step_up=0.2, step_down=-0.2)
        tan_lo = math.tan(math.radians(params.slope_down))
        tan_hi = math.tan(math.radians(params.slope_up))
        scalar = get_nodes(scene, params, K(0, 0, 0), pos)
        batched = _get_nodes_batched(scene, params, K(0, 0, 0),
                                     np.asarray(pos), tan_lo, tan_hi)
        assert scalar.keys() == batched.keys()
        for d in scalar:
            assert scalar[d][0] == batched[d][0]
            assert np.array_equal(scalar[d][1], batched[d][1])


class TestCheckChild:
    def test_flat_neighbor_direct_same_height(self, floor_scene):
        params = GraphParams(tau=(0.0, 0.0, 0.5))
        got = check_child(floor_scene, params, (0.0, 0.0, 0.0),
                          (0.25, 0.0, 1.7))
        assert got is not None
        ctype, child = got
        assert ctype == DIRECT
        assert child[2] == pytest.approx(0.0, abs=1e-9)

    def test_riser_within_step_limit_is_up(self):
        scene = fixtures.stairs_scene(risers=3, rise=0.12)
        params = GraphParams(tau=(0.0, -1.875, 0.5), step_up=0.2,
                             step_down=-0.2)
        got = check_child(scene, params, (0.0, -0.125, 0.0),
                          (0.0, 0.125, 1.7))
        assert got is not None
        ctype, child = got
        assert ctype == UP
        assert child[2] == pytest.approx(0.12, abs=1e-9)

    def test_riser_above_step_limit_rejected(self):
        scene = fixtures.stairs_scene(risers=3, rise=0.25)
        params = GraphParams(tau=(0.0, -1.875, 0.5), step_up=0.2,
                             step_down=-0.2)
        assert check_child(scene, params, (0.0, -0.125, 0.0),
                           (0.0, 0.125, 1.7)) is None

    def test_steep_descent_fails_slope_gate(self):
        scene = fixtures.wedge_scene(angle_deg=30.0)
        params = GraphParams(tau=(0.0, 0.0, 0.5), slope_up=20.0,
                             slope_down=-20.0)
        z = -np.tan(np.radians(30.0)) * 0.5
        parent = (0.0, 0.5, z)
        candidate = (0.0, 0.75, z + 1.7)
        assert check_child(scene, params, parent, candidate) is None

    def test_downcast_beyond_max_drop_rejected(self):
        from accessgraph import build_scene

        # 2 m balcony drop; the step-down limit would allow it, so the
        # cast length is the only gate that differs between the two runs
        scene = build_scene([
            make_quad("upper", -2.0, -2.0, 2.0, 0.0, 0.0),
            make_quad("pit", -2.0, 0.0, 2.0, 2.0, -2.0),
        ])
        parent = (0.0, -0.125, 0.0)
        candidate = (0.0, 0.125, 1.7)
        generous = GraphParams(tau=(0.0, -1.0, 0.5), step_down=-3.0)
        got = check_child(scene, generous, parent, candidate)
        assert got is not None
        assert got[0] == DOWN
        assert got[1][2] == pytest.approx(-2.0, abs=1e-9)
        short_cast = GraphParams(tau=(0.0, -1.0, 0.5), step_down=-3.0,
                                 max_drop=3.0)
        # downcast origin is 1.7 above the parent; a 3 m cast stops at
        # z = -1.3 and never reaches the pit floor
        assert check_child(scene, short_cast, parent, candidate) is None

    def test_nonwalkable_landing_rejected(self):
        scene = fixtures.two_box_scene()
        params = GraphParams(tau=(0.0, 0.0, 0.5))
        # candidate over box_a (an obstacle): nearest downcast hit is the
        # box top, which is not walkable
        assert check_child(scene, params, (-0.75, 0.0, 0.0),
                           (-1.0, 0.0, 1.7)) is None


class TestGetConnection:
    def test_open_flat_segment_direct(self, floor_scene):
        params = GraphParams(tau=(0.0, 0.0, 0.5))
        assert get_connection(floor_scene, params, (0.0, 0.0, 0.0),
                              (0.25, 0.0, 0.0)) == DIRECT

    def test_thin_curb_between_equal_nodes_is_over(self):
        scene = fixtures.curb_scene(height=0.10, width=0.02)
        params = GraphParams(tau=(0.0, -0.625, 0.5), step_up=0.2,
                             step_down=-0.2)
        assert get_connection(scene, params, (0.0, -0.125, 0.0),
                              (0.0, 0.125, 0.0)) == OVER

    def test_curb_unsteppable_with_zero_limit(self):
        scene = fixtures.curb_scene(height=0.10, width=0.02)
        params = GraphParams(tau=(0.0, -0.625, 0.5), step_up=0.0,
                             step_down=0.0)
        assert get_connection(scene, params, (0.0, -0.125, 0.0),
                              (0.0, 0.125, 0.0)) == INVALID

    def test_bump_then_drop_blocks_both_casts(self):
        scene = fixtures.blocked_drop_scene()
        params = GraphParams(tau=(0.0, 0.0, 1.0), step_up=0.2,
                             step_down=-0.3)
        assert get_connection(scene, params, (0.0, 0.0, 0.3),
                              (0.5, 0.0, 0.0)) == INVALID

    def test_descent_classified_down(self):
        scene = fixtures.stairs_scene(risers=3, rise=0.12)
        params = GraphParams(tau=(0.0, -1.875, 0.5), step_up=0.2,
                             step_down=-0.2)
        assert get_connection(scene, params, (0.0, 0.125, 0.12),
                              (0.0, -0.125, 0.0)) == DOWN
