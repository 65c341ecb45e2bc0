from __future__ import annotations

import numpy as np
import pytest

from accessgraph import (AccessGraph, ConnectionType, DuplicateEdge,
                         GraphFinalized, GraphParams, NodeKey, WeightVector,
                         build_graph, fixtures)

K = NodeKey


def weight(step=ConnectionType.DIRECT, distance=0.25, slope=0.0):
    return WeightVector(step_type=step, distance=distance, slope=slope)


def tiny_graph():
    g = AccessGraph()
    g.add_vertex(K(0, 0, 0), (0.0, 0.0, 0.0))
    g.add_vertex(K(1, 0, 0), (0.25, 0.0, 0.0))
    g.add_vertex(K(0, 1, 0), (0.0, 0.25, 0.0))
    g.add_vertex(K(1, 1, 0), (0.25, 0.25, 0.0))
    return g


class TestEdges:
    def test_add_then_query(self):
        g = tiny_graph()
        g.add_edge(K(0, 0, 0), K(1, 0, 0), weight())
        out = g.out_edges(K(0, 0, 0))
        assert [e.head for e in out] == [K(1, 0, 0)]

    def test_duplicate_insert_rejected(self):
        g = tiny_graph()
        g.add_edge(K(0, 0, 0), K(1, 0, 0), weight())
        with pytest.raises(DuplicateEdge):
            g.add_edge(K(0, 0, 0), K(1, 0, 0), weight())

    def test_fan_out_three(self):
        g = tiny_graph()
        for head in (K(1, 0, 0), K(0, 1, 0), K(1, 1, 0)):
            g.add_edge(K(0, 0, 0), head, weight())
        assert g.out_degree(K(0, 0, 0)) == 3
        assert g.parents() == {K(0, 0, 0)}

    def test_invalid_step_type_rejected(self):
        g = tiny_graph()
        with pytest.raises(ValueError):
            g.add_edge(K(0, 0, 0), K(1, 0, 0),
                       weight(step=ConnectionType.INVALID))

    def test_nonpositive_distance_rejected(self):
        g = tiny_graph()
        with pytest.raises(ValueError):
            g.add_edge(K(0, 0, 0), K(1, 0, 0), weight(distance=0.0))


class TestOutSubgraph:
    def test_childless_vertex_empty(self):
        g = tiny_graph()
        assert len(g.out_subgraph(K(1, 1, 0))) == 0
        assert K(1, 1, 0) not in g.parents()

    def test_interior_floor_vertex_has_eight(self, floor_graph):
        graph, _ = floor_graph
        sub = graph.out_subgraph(K(0, 0, 0))
        assert len(sub) == 8
        assert all(e.weights.distance > 0 for e in sub.edges)

    def test_wall_adjacent_vertex_gated_out_of_parent_set(self):
        # with the full-neighborhood requirement, vertices one cell from
        # the wall validate only 5 of 8 children and contribute no edges
        scene = fixtures.wall_scene()
        params = GraphParams(tau=(0.0, -1.55, 0.5), min_children=8)
        graph, _ = build_graph(scene, params)
        parents = graph.parents()
        near_wall = [k for k in graph.keys if k.j == 5]  # y = -0.3 row
        assert near_wall, "fixture should reach the wall row"
        assert all(k not in parents for k in near_wall)
        assert K(0, 0, 0) in parents


class TestFinalize:
    def test_empty_graph_offsets(self):
        g = AccessGraph()
        g.finalize_csr()
        assert g.csr.offsets.tolist() == [0]
        assert len(g.csr.cols) == 0

    def test_row_of_fanout_three(self):
        g = tiny_graph()
        for head in (K(1, 0, 0), K(0, 1, 0), K(1, 1, 0)):
            g.add_edge(K(0, 0, 0), head, weight())
        g.finalize_csr()
        assert g.csr.offsets.tolist() == [0, 3, 3, 3, 3]
        assert len(g.csr.cols[0:3]) == 3

    def test_random_build_round_trips_adjacency(self):
        rng = np.random.default_rng(11)
        g = AccessGraph()
        side = 23  # 23 * 22 > 500 vertices
        for i in range(side):
            for j in range(22):
                g.add_vertex(K(i, j, 0), (i * 0.25, j * 0.25, 0.0))
        for key in list(g.keys):
            for di, dj in ((1, 0), (0, 1), (1, 1), (-1, 1)):
                head = K(key.i + di, key.j + dj, 0)
                if head in g.index_of and rng.random() < 0.7:
                    g.add_edge(key, head, weight())
        before = g.adjacency_map()
        g.finalize_csr()
        assert g.adjacency_map() == before

    def test_mutation_after_finalize_rejected(self):
        g = tiny_graph()
        g.finalize_csr()
        with pytest.raises(GraphFinalized):
            g.add_vertex(K(9, 9, 0), (1, 1, 0))
        with pytest.raises(GraphFinalized):
            g.add_edge(K(0, 0, 0), K(1, 0, 0), weight())

    def test_csr_keeps_per_row_insertion_order(self):
        g = tiny_graph()
        heads = [K(1, 1, 0), K(0, 1, 0), K(1, 0, 0)]  # deliberately not sorted
        for head in heads:
            g.add_edge(K(0, 0, 0), head, weight())
        g.finalize_csr()
        assert [e.head for e in g.out_edges(K(0, 0, 0))] == heads


class TestInvariants:
    def test_every_parent_has_nonempty_subgraph(self, floor_graph):
        graph, _ = floor_graph
        for key in graph.parents():
            assert len(graph.out_subgraph(key)) > 0

    def test_vertex_count_equals_distinct_keys(self, floor_graph):
        graph, _ = floor_graph
        assert graph.num_vertices == len(set(graph.keys))

    def test_out_degree_bounded_by_direction_count(self, floor_graph):
        graph, _ = floor_graph
        assert max(graph.out_degree(k) for k in graph.keys) <= 8

    def test_one_way_ramp_is_weakly_connected_only(self):
        scene = fixtures.one_way_ramp_scene()
        params = GraphParams(tau=(0.0, -2.0, 1.5), step_up=0.0,
                             step_down=0.0, slope_up=20.0, slope_down=-35.0)
        graph, report = build_graph(scene, params)
        assert not report.terminated_early
        down = [
            (e.tail, e.head)
            for key in graph.parents() for e in graph.out_edges(key)
            if e.weights.slope < -0.2
        ]
        assert down, "ramp should produce descending edges"
        for tail, head in down:
            assert not graph.has_edge(head, tail), \
                f"one-way ramp must not be climbable: {head} -> {tail}"


class TestNodeIdentity:
    def test_merge_within_tolerance(self):
        g = tiny_graph()
        key, existing = g.resolve_node(0, 0, 0.05, merge_tol=0.125)
        assert key == K(0, 0, 0)
        assert existing == 0

    def test_new_level_beyond_tolerance(self):
        g = tiny_graph()
        key, existing = g.resolve_node(0, 0, 3.0, merge_tol=0.125)
        assert key == K(0, 0, 1)
        assert existing is None

    def test_level_sequence_enforced(self):
        g = AccessGraph()
        g.add_vertex(K(0, 0, 0), (0, 0, 0))
        with pytest.raises(ValueError):
            g.add_vertex(K(0, 0, 2), (0, 0, 5.0))

    def test_stacked_floors_share_footprint_with_levels(self):
        # tau offset by half a cell so nodes land on tread centers
        scene = fixtures.two_floor_scene()
        params = GraphParams(tau=(4.125, 2.125, 0.5), step_up=0.2,
                             step_down=-0.2)
        graph, _ = build_graph(scene, params)
        levels = {}
        for key in graph.keys:
            levels.setdefault((key.i, key.j), set()).add(key.level)
        stacked = [cell for cell, lvls in levels.items() if lvls == {0, 1}]
        assert len(stacked) > 50, "upper floor should overlay the lower"
        i, j = stacked[0]
        z0 = graph.positions[graph.index_of[K(i, j, 0)]][2]
        z1 = graph.positions[graph.index_of[K(i, j, 1)]][2]
        assert abs(z1 - z0) > 2.0, "levels should sit on different floors"
