"""Least-cost path queries and per-vertex heatmaps over a finalized graph.

The composed edge cost is a coefficient-weighted sum of the weight-vector
factors, optionally multiplied by threshold penalties on the tail vertex.
The search minimizes (cost, edge count) and, among ties, returns the
lexicographically smallest node-key sequence; identical inputs always give
identical paths.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .costs import CostCoefficients
from .errors import MissingAttribute, NonPositiveEdgeCost
from .graph import (AccessGraph, BASE_FACTORS, ConnectionType, EdgeView,
                    NodeKey, STEP_FACTOR)


@dataclass
class PathResult:
    """An ordered edge sequence with per-factor totals.

    ``score`` is the pure coefficient-weighted sum over the path;
    ``cost`` is the value minimized by the search, which additionally
    includes threshold multipliers.
    """

    vertices: list[NodeKey]
    edges: list[EdgeView]
    totals: dict[str, float]
    score: float
    cost: float
    length: float

    def __len__(self) -> int:
        return len(self.edges)


@dataclass
class HeatmapResult:
    metric: str
    values: np.ndarray  # raw per-vertex metric
    normalized: np.ndarray  # in [0, 1]; flat fields map to 0.5
    colors: np.ndarray  # (V, 3) uint8, blue (low) to red (high)
    vmin: float
    vmax: float


def _as_coefficients(cost) -> CostCoefficients:
    if isinstance(cost, CostCoefficients):
        return cost
    return CostCoefficients(rho=dict(cost))


def composed_edge_costs(graph: AccessGraph,
                        coeffs: CostCoefficients) -> np.ndarray:
    """Per-CSR-slot scalar cost: sum of rho-weighted factors, then
    threshold multipliers applied to out-edges of violating vertices."""
    csr = graph.require_finalized()
    total = np.zeros(len(csr.cols))
    for name, coeff in coeffs.rho.items():
        if coeff == 0.0:
            continue
        if name == STEP_FACTOR:
            values = (csr.step_type != int(ConnectionType.DIRECT)).astype(float)
        elif name in csr.factors:
            values = csr.factors[name]
        else:
            raise MissingAttribute(name)
        total = total + coeff * values
    if coeffs.threshold_rules:
        tails = graph.edge_tails()
        for rule in coeffs.threshold_rules:
            if rule.attr not in graph.node_attrs:
                raise MissingAttribute(rule.attr)
            attr = np.asarray(graph.node_attrs[rule.attr])
            violating = attr[tails] < rule.threshold
            total = np.where(violating, total * rule.multiplier, total)
    return total


def _edge_view_at(graph: AccessGraph, tail_id: int, pos: int) -> EdgeView:
    csr = graph.csr
    return EdgeView(graph.keys[tail_id], graph.keys[csr.cols[pos]],
                    graph.weights_at(pos))


def _factor_names(graph: AccessGraph) -> list[str]:
    names = list(BASE_FACTORS)
    names += [n for n in graph.csr.factors if n not in BASE_FACTORS]
    names.append(STEP_FACTOR)
    return names


def _totals_for(graph: AccessGraph, slots: list[int]) -> dict[str, float]:
    csr = graph.csr
    totals = {}
    for name in _factor_names(graph):
        if name == STEP_FACTOR:
            totals[name] = float(sum(
                1.0 for s in slots
                if csr.step_type[s] != int(ConnectionType.DIRECT)))
        else:
            totals[name] = float(sum(float(csr.factors[name][s])
                                     for s in slots))
    return totals


def _score_from_totals(totals: dict[str, float],
                       rho: dict[str, float]) -> float:
    return float(sum(coeff * totals.get(name, 0.0)
                     for name, coeff in rho.items()))


def shortest_path(graph: AccessGraph, start: NodeKey, goal: NodeKey,
                  cost) -> PathResult | None:
    """Cost-minimal path from start to goal, or None when unreachable.

    Raises NonPositiveEdgeCost when the composed coefficients give any
    edge a cost <= 0 (Dijkstra's precondition, and a sign the rho mix is
    meaningless). Ties are broken by fewer edges, then by lexicographic
    node-key sequence.
    """
    coeffs = _as_coefficients(cost)
    csr = graph.require_finalized()
    start_id = graph.index_of[start]
    goal_id = graph.index_of[goal]
    edge_costs = composed_edge_costs(graph, coeffs)
    if len(edge_costs) and not (edge_costs > 0).all():
        raise NonPositiveEdgeCost(
            "composed coefficients produce a non-positive edge cost")

    if start == goal:
        totals = {name: 0.0 for name in _factor_names(graph)}
        return PathResult(vertices=[start], edges=[], totals=totals,
                          score=0.0, cost=0.0, length=0.0)

    offsets = csr.offsets
    cols = csr.cols
    nv = graph.num_vertices
    inf = float("inf")
    dist = np.full(nv, inf)
    hops = np.full(nv, -1, dtype=np.int64)
    dist[start_id] = 0.0
    hops[start_id] = 0
    done = np.zeros(nv, dtype=bool)
    heap = [(0.0, 0, start_id)]
    goal_label = None
    while heap:
        c, h, u = heapq.heappop(heap)
        if done[u] or c != dist[u] or h != hops[u]:
            continue
        done[u] = True
        if u == goal_id:
            goal_label = (c, h)
            break
        for pos in range(offsets[u], offsets[u + 1]):
            v = cols[pos]
            nc = c + edge_costs[pos]
            nh = h + 1
            if nc < dist[v] or (nc == dist[v] and nh < hops[v]):
                dist[v] = nc
                hops[v] = nh
                heapq.heappush(heap, (nc, nh, int(v)))
    if goal_label is None:
        return None

    # Optimal-subpath DAG: an edge is on some optimal path iff its labels
    # telescope bitwise. Restricted to vertices that can still reach the
    # goal inside the DAG, a greedy smallest-key walk from the start is
    # the lexicographically minimal optimal path.
    tails = graph.edge_tails()
    on_dag = (dist[tails] + edge_costs == dist[cols]) & \
        (hops[tails] + 1 == hops[cols])
    reaches_goal = np.zeros(nv, dtype=bool)
    reaches_goal[goal_id] = True
    dag_order = np.argsort(cols[on_dag], kind="stable")
    dag_tails = tails[on_dag][dag_order]
    dag_heads = cols[on_dag][dag_order]
    head_offsets = np.searchsorted(dag_heads, np.arange(nv + 1))
    stack = [goal_id]
    while stack:
        v = stack.pop()
        for k in range(head_offsets[v], head_offsets[v + 1]):
            u = dag_tails[k]
            if not reaches_goal[u]:
                reaches_goal[u] = True
                stack.append(int(u))

    slots: list[int] = []
    sequence = [start]
    u = start_id
    while u != goal_id:
        best_pos = -1
        best_key = None
        for pos in range(offsets[u], offsets[u + 1]):
            v = cols[pos]
            if not on_dag[pos] or not reaches_goal[v]:
                continue
            key = graph.keys[v]
            if best_key is None or key < best_key:
                best_key = key
                best_pos = pos
        u = int(cols[best_pos])
        slots.append(best_pos)
        sequence.append(best_key)

    totals = _totals_for(graph, slots)
    views = []
    for key, pos in zip(sequence[:-1], slots):
        views.append(_edge_view_at(graph, graph.index_of[key], pos))
    return PathResult(
        vertices=sequence,
        edges=views,
        totals=totals,
        score=_score_from_totals(totals, coeffs.rho),
        cost=float(goal_label[0]),
        length=totals["distance"],
    )


def path_score(graph: AccessGraph, path: PathResult | list[EdgeView],
               rho: dict[str, float]) -> float:
    """Coefficient-weighted sum of weight vectors along a path."""
    edges = path.edges if isinstance(path, PathResult) else path
    total = 0.0
    for view in edges:
        for name, coeff in rho.items():
            try:
                total += coeff * view.weights.factor(name)
            except KeyError:
                raise MissingAttribute(name) from None
    return total


def count_steps(graph: AccessGraph,
                path: PathResult | list[EdgeView]) -> int:
    """Number of edges that require a step (anything but direct)."""
    edges = path.edges if isinstance(path, PathResult) else path
    return sum(1 for view in edges
               if view.weights.step_type != ConnectionType.DIRECT)


def _hsv_blue_red(normalized: np.ndarray) -> np.ndarray:
    """Hue sweep 240 deg (blue) down to 0 deg (red), full saturation."""
    h = (1.0 - normalized) * (240.0 / 360.0)
    i = np.floor(h * 6.0).astype(int) % 6
    f = h * 6.0 - np.floor(h * 6.0)
    one = np.ones_like(f)
    q = 1.0 - f
    lut_r = [one, q, 0 * one, 0 * one, f, one]
    lut_g = [f, one, one, q, 0 * one, 0 * one]
    lut_b = [0 * one, 0 * one, f, one, one, q]
    r = np.choose(i, lut_r)
    g = np.choose(i, lut_g)
    b = np.choose(i, lut_b)
    rgb = np.stack([r, g, b], axis=-1)
    return np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)


def node_score_field(graph: AccessGraph, rho: dict[str, float]) -> np.ndarray:
    """Aggregate score per vertex, vectorized; childless vertices get the
    empty-sum value 0."""
    csr = graph.require_finalized()
    edge_vals = np.zeros(len(csr.cols))
    for name, coeff in rho.items():
        if coeff == 0.0:
            continue
        if name == STEP_FACTOR:
            vals = (csr.step_type != int(ConnectionType.DIRECT)).astype(float)
        elif name in csr.factors:
            vals = csr.factors[name]
        else:
            raise MissingAttribute(name)
        edge_vals = edge_vals + coeff * vals
    return np.bincount(graph.edge_tails(), weights=edge_vals,
                       minlength=graph.num_vertices)


def heatmap(graph: AccessGraph, metric) -> HeatmapResult:
    """Per-vertex scalar field normalized to [0, 1] with a blue-to-red
    color ramp. ``metric`` is a node attribute name or a rho mapping that
    is aggregated per vertex."""
    if isinstance(metric, str):
        if metric not in graph.node_attrs:
            raise MissingAttribute(metric)
        values = np.asarray(graph.node_attrs[metric], dtype=np.float64)
        name = metric
    else:
        values = node_score_field(graph, dict(metric))
        name = "node_score(" + ",".join(
            f"{k}={v}" for k, v in sorted(dict(metric).items())) + ")"
    vmin = float(values.min()) if len(values) else 0.0
    vmax = float(values.max()) if len(values) else 0.0
    if vmax > vmin:
        normalized = (values - vmin) / (vmax - vmin)
    else:
        normalized = np.full_like(values, 0.5)
    return HeatmapResult(metric=name, values=values, normalized=normalized,
                         colors=_hsv_blue_red(normalized),
                         vmin=vmin, vmax=vmax)
