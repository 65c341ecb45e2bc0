"""Accessibility graphs for 3D environments.

Build a directed graph of human-reachable locations from a triangle mesh
by ray-cast breadth-first search, attach human-factor edge costs (slope,
cross-slope, step type, metabolic energy, visibility), and answer
multi-criteria least-cost path and heatmap queries.
"""

from .builder import (BuildReport, DEFAULT_DIRECTIONS, GraphParams,
                      build_graph, check_child, get_connection, get_nodes,
                      segment_clear)
from .costs import (CostCoefficients, ThresholdRule, apply_all,
                    apply_cross_slope, apply_energy, cross_slope,
                    energy_rate, filter_cross_slope_gate, node_score,
                    promote_attr_to_edges, set_base_costs)
from .errors import (AccessGraphError, ChildlessVertex, DuplicateEdge,
                     DuplicateName, EmptyScene, EmptyWalkableSet,
                     GraphFinalized, InvalidStart, MissingAttribute,
                     NonPositiveEdgeCost, NotFound, SceneFormatError)
from .geometry import (RayHit, Scene, TriangleMesh, build_scene, dst, inter,
                       inter_batch)
from .graph import (AccessGraph, ConnectionType, EdgeView, NodeKey, Subgraph,
                    WeightVector)
from .paths import (HeatmapResult, PathResult, count_steps, heatmap,
                    path_score, shortest_path)
from .viewshed import ViewshedConfig, viewshed, viewshed_directions

__version__ = "0.1.0"

__all__ = [
    "AccessGraph", "AccessGraphError", "BuildReport", "ChildlessVertex",
    "ConnectionType", "CostCoefficients", "DEFAULT_DIRECTIONS",
    "DuplicateEdge", "DuplicateName", "EdgeView", "EmptyScene",
    "EmptyWalkableSet", "GraphFinalized", "GraphParams", "HeatmapResult",
    "InvalidStart", "MissingAttribute", "NodeKey", "NonPositiveEdgeCost",
    "NotFound", "PathResult", "RayHit", "Scene", "SceneFormatError",
    "Subgraph", "ThresholdRule", "TriangleMesh", "ViewshedConfig",
    "WeightVector", "apply_all", "apply_cross_slope", "apply_energy",
    "build_graph", "build_scene", "check_child", "count_steps",
    "cross_slope", "dst", "energy_rate", "filter_cross_slope_gate",
    "get_connection", "get_nodes", "heatmap", "inter", "inter_batch",
    "node_score", "path_score", "promote_attr_to_edges", "segment_clear",
    "set_base_costs", "shortest_path", "viewshed", "viewshed_directions",
]
