"""Breadth-first construction of the accessibility graph.

Starting from a seed point, each queued parent proposes one candidate per
grid direction. A candidate is resolved by casting straight down onto the
nearest surface, classified by segment casts between the two node points
(direct, step over, step up, step down), and gated by slope or step-height
limits. Accepted children become vertices and directed edges; the queue is
FIFO so identical inputs always produce identical graphs.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass

import numpy as np

from .bvh import NO_HIT
from .errors import InvalidStart
from .geometry import Scene, inter_batch
from .graph import AccessGraph, ConnectionType, NodeKey, WeightVector

EPS_LIFT = 0.01  # vertical lift for node-to-node segments, meters
EPS_Z = 1e-3  # height difference treated as "equal" for step-over, meters
_DOWN = np.array([0.0, 0.0, -1.0])

DEFAULT_DIRECTIONS: tuple[tuple[int, int], ...] = tuple(
    (i, j) for i in (-1, 0, 1) for j in (-1, 0, 1) if (i, j) != (0, 0))


@dataclass
class GraphParams:
    """User inputs controlling graph creation.

    Angles are degrees; heights and spacing are meters. ``step_down`` and
    ``slope_down`` are non-positive by convention. ``min_children`` gates a
    parent: with fewer validated children it contributes no edges, which
    carves a buffer region near obstacles. ``directions`` are integer grid
    offsets; they are iterated in row-major order for determinism.
    """

    tau: tuple[float, float, float]
    height: float = 1.7
    spacing: float = 0.25
    step_up: float = 0.3
    step_down: float = -0.3
    slope_up: float = 20.0
    slope_down: float = -20.0
    cross_slope_limit: float | None = None
    min_children: int = 0
    directions: tuple[tuple[int, int], ...] = DEFAULT_DIRECTIONS
    max_drop: float | None = None
    merge_tol: float | None = None

    def __post_init__(self):
        self.tau = tuple(float(v) for v in self.tau)
        self.directions = tuple(
            sorted((int(i), int(j)) for i, j in self.directions))
        self.validate()

    def validate(self) -> None:
        if not all(math.isfinite(v) for v in self.tau):
            raise ValueError("tau must be finite")
        if not self.spacing > 0:
            raise ValueError("spacing must be > 0")
        if not self.height > 0:
            raise ValueError("height must be > 0")
        if not (self.step_down <= 0.0 <= self.step_up):
            raise ValueError("require step_down <= 0 <= step_up")
        if not (self.slope_down <= 0.0 <= self.slope_up):
            raise ValueError("require slope_down <= 0 <= slope_up")
        if not self.directions or (0, 0) in self.directions:
            raise ValueError("directions must be non-empty and exclude (0, 0)")
        if not 0 <= self.min_children <= len(self.directions):
            raise ValueError("min_children must lie in [0, |directions|]")
        if self.max_drop is not None and not self.max_drop > 0:
            raise ValueError("max_drop must be > 0")
        if self.merge_tol is not None and not self.merge_tol > 0:
            raise ValueError("merge_tol must be > 0")

    @property
    def resolved_max_drop(self) -> float:
        return self.max_drop if self.max_drop is not None else 4.0 * self.height

    @property
    def resolved_merge_tol(self) -> float:
        return self.merge_tol if self.merge_tol is not None else self.spacing / 2.0

    def to_dict(self) -> dict:
        return {
            "tau": list(self.tau),
            "height": self.height,
            "spacing": self.spacing,
            "step_up": self.step_up,
            "step_down": self.step_down,
            "slope_up": self.slope_up,
            "slope_down": self.slope_down,
            "cross_slope_limit": self.cross_slope_limit,
            "min_children": self.min_children,
            "directions": [list(d) for d in self.directions],
            "max_drop": self.max_drop,
            "merge_tol": self.merge_tol,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GraphParams":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown parameter(s): {sorted(unknown)}")
        kwargs = dict(data)
        if "directions" in kwargs and kwargs["directions"] is not None:
            kwargs["directions"] = tuple(
                (int(i), int(j)) for i, j in kwargs["directions"])
        else:
            kwargs.pop("directions", None)
        return cls(**kwargs)


@dataclass
class BuildReport:
    vertex_count: int
    edge_count: int
    queue_peak: int
    terminated_early: bool
    frontier_snapshots: list[int] | None = None
    build_seconds: float = 0.0  # informational; kept out of exports

    def to_dict(self) -> dict:
        return {
            "vertex_count": self.vertex_count,
            "edge_count": self.edge_count,
            "queue_peak": self.queue_peak,
            "terminated_early": self.terminated_early,
            "frontier_snapshots": self.frontier_snapshots,
        }


# -- segment and gate primitives -----------------------------------------


def _segments_clear(scene: Scene, starts: np.ndarray,
                    ends: np.ndarray) -> np.ndarray:
    """True per segment when nothing blocks it strictly before its end.

    Both endpoints are lifted by EPS_LIFT so on-surface node points do not
    graze their own supporting triangles.
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=np.float64)).copy()
    ends = np.atleast_2d(np.asarray(ends, dtype=np.float64)).copy()
    starts[:, 2] += EPS_LIFT
    ends[:, 2] += EPS_LIFT
    delta = ends - starts
    length = np.sqrt(np.einsum("ij,ij->i", delta, delta))
    directions = delta / length[:, None]
    t, obj, _ = inter_batch(scene, starts, directions, length)
    return (obj == NO_HIT) | (t >= length)


def segment_clear(scene: Scene, a, b) -> bool:
    return bool(_segments_clear(scene, a, b)[0])


def _direct_gate(params: GraphParams, dz, run):
    """Slope limits expressed as height thresholds over the horizontal run."""
    lo = math.tan(math.radians(params.slope_down)) * run
    hi = math.tan(math.radians(params.slope_up)) * run
    return (lo <= dz) & (dz <= hi)


def _step_gate(params: GraphParams, ctype, dz) -> bool:
    if ctype == ConnectionType.OVER:
        return True  # |dz| <= EPS_Z by classification
    if ctype == ConnectionType.UP:
        return dz <= params.step_up
    return dz >= params.step_down


# -- the four core operations ------------------------------------------------


def get_connection(scene: Scene, params: GraphParams, p, c) -> ConnectionType:
    """Classify the movement between two on-surface node points.

    A clear lifted segment is a direct connection. Otherwise the start is
    raised by the step-up limit (ascending or equal heights) or by the
    step-down magnitude (descending) and the segment is retried; equal
    heights with an obstruction classify as a step over.
    """
    p = np.asarray(p, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if segment_clear(scene, p, c):
        return ConnectionType.DIRECT
    dz = float(c[2] - p[2])
    if abs(dz) <= EPS_Z:
        if params.step_up > 0 and segment_clear(
                scene, p + [0.0, 0.0, params.step_up], c):
            return ConnectionType.OVER
    elif dz > 0:
        if params.step_up > 0 and segment_clear(
                scene, p + [0.0, 0.0, params.step_up], c):
            return ConnectionType.UP
    else:
        if params.step_down < 0 and segment_clear(
                scene, p + [0.0, 0.0, -params.step_down], c):
            return ConnectionType.DOWN
    return ConnectionType.INVALID


def check_child(scene: Scene, params: GraphParams, parent, candidate
                ) -> tuple[ConnectionType, np.ndarray] | None:
    """Validate one candidate: downcast it onto a walkable surface, classify
    the connection from the parent, then apply the slope or step gate.

    Returns (connection type, resolved child point) or None when rejected.
    """
    parent = np.asarray(parent, dtype=np.float64)
    candidate = np.asarray(candidate, dtype=np.float64)
    t, obj, _ = inter_batch(scene, candidate, _DOWN, params.resolved_max_drop)
    if obj[0] == NO_HIT:
        return None
    if not scene.is_walkable(int(obj[0])):
        return None
    child = np.array([candidate[0], candidate[1], candidate[2] - t[0]])
    ctype = get_connection(scene, params, parent, child)
    if ctype == ConnectionType.INVALID:
        return None
    dz = float(child[2] - parent[2])
    if ctype == ConnectionType.DIRECT:
        run = float(np.hypot(child[0] - parent[0], child[1] - parent[1]))
        if not _direct_gate(params, dz, run):
            return None
    elif not _step_gate(params, ctype, dz):
        return None
    return ctype, child


def get_nodes(scene: Scene, params: GraphParams, key: NodeKey, position
              ) -> dict[tuple[int, int], tuple[ConnectionType, np.ndarray]]:
    """Validate every direction's candidate for one parent.

    Candidate grid positions are anchored to the start point's (x, y) via
    the integer cell indices, so repeated proposals of one cell are exact.
    Returns an empty mapping when fewer than ``min_children`` validate.
    """
    position = np.asarray(position, dtype=np.float64)
    results: dict[tuple[int, int], tuple[ConnectionType, np.ndarray]] = {}
    for di, dj in params.directions:
        candidate = np.array([
            params.tau[0] + (key.i + di) * params.spacing,
            params.tau[1] + (key.j + dj) * params.spacing,
            position[2] + params.height,
        ])
        checked = check_child(scene, params, position, candidate)
        if checked is not None:
            results[(di, dj)] = checked
    if len(results) < params.min_children:
        return {}
    return results


def _get_nodes_batched(scene, params, key, position, tan_lo, tan_hi):
    """Vectorized get_nodes: one downcast batch, one direct-segment batch,
    then raised retries grouped by lift amount. Decision arithmetic matches
    the scalar path exactly."""
    dirs = params.directions
    n = len(dirs)
    cells_i = key.i + np.array([d[0] for d in dirs])
    cells_j = key.j + np.array([d[1] for d in dirs])
    origins = np.empty((n, 3))
    origins[:, 0] = params.tau[0] + cells_i * params.spacing
    origins[:, 1] = params.tau[1] + cells_j * params.spacing
    origins[:, 2] = position[2] + params.height
    t, obj, _ = inter_batch(
        scene, origins, np.broadcast_to(_DOWN, (n, 3)),
        params.resolved_max_drop)
    landed = (obj != NO_HIT)
    landed[landed] &= scene.walkable[obj[landed]]
    if not landed.any():
        return {}

    children = origins.copy()
    children[:, 2] -= t
    dz = children[:, 2] - position[2]
    run = np.hypot(children[:, 0] - position[0], children[:, 1] - position[1])

    idx = np.nonzero(landed)[0]
    clear = np.zeros(n, dtype=bool)
    clear[idx] = _segments_clear(
        scene, np.broadcast_to(position, (len(idx), 3)), children[idx])

    ctype = np.full(n, int(ConnectionType.INVALID), dtype=np.int8)
    ok = np.zeros(n, dtype=bool)

    direct = landed & clear
    ctype[direct] = int(ConnectionType.DIRECT)
    ok[direct] = (tan_lo * run[direct] <= dz[direct]) & (
        dz[direct] <= tan_hi * run[direct])

    blocked = landed & ~clear
    rise = blocked & (dz > EPS_Z)
    level = blocked & (np.abs(dz) <= EPS_Z)
    fall = blocked & (dz < -EPS_Z)
    if params.step_up > 0:
        retry = np.nonzero(rise | level)[0]
        if len(retry):
            lifted = np.broadcast_to(position, (len(retry), 3)).copy()
            lifted[:, 2] += params.step_up
            passed = _segments_clear(scene, lifted, children[retry])
            for k, did_pass in zip(retry, passed):
                if not did_pass:
                    continue
                if level[k]:
                    ctype[k] = int(ConnectionType.OVER)
                    ok[k] = True
                else:
                    ctype[k] = int(ConnectionType.UP)
                    ok[k] = dz[k] <= params.step_up
    if params.step_down < 0:
        retry = np.nonzero(fall)[0]
        if len(retry):
            lifted = np.broadcast_to(position, (len(retry), 3)).copy()
            lifted[:, 2] -= params.step_down
            passed = _segments_clear(scene, lifted, children[retry])
            for k, did_pass in zip(retry, passed):
                if did_pass:
                    ctype[k] = int(ConnectionType.DOWN)
                    ok[k] = dz[k] >= params.step_down

    results = {}
    for k, (di, dj) in enumerate(dirs):
        if ok[k]:
            results[(di, dj)] = (ConnectionType(int(ctype[k])), children[k])
    if len(results) < params.min_children:
        return {}
    return results


def build_graph(scene: Scene, params: GraphParams
                ) -> tuple[AccessGraph, BuildReport]:
    """Run the breadth-first expansion from the start point.

    Raises InvalidStart when the seed downcast misses walkable geometry.
    The returned graph is not yet finalized; every stored edge carries its
    connection type, metric distance, and signed slope.
    """
    started = time.perf_counter()
    params.validate()
    tau = np.asarray(params.tau, dtype=np.float64)
    origin = tau + [0.0, 0.0, params.height]
    t, obj, _ = inter_batch(scene, origin, _DOWN, params.resolved_max_drop)
    if obj[0] == NO_HIT:
        raise InvalidStart(params.tau)
    if not scene.is_walkable(int(obj[0])):
        raise InvalidStart(params.tau, "start point is over a non-walkable object")

    graph = AccessGraph()
    seed_key = NodeKey(0, 0, 0)
    seed_pos = np.array([origin[0], origin[1], origin[2] - t[0]])
    graph.add_vertex(seed_key, seed_pos)
    graph.meta["params"] = params.to_dict()

    tan_lo = math.tan(math.radians(params.slope_down))
    tan_hi = math.tan(math.radians(params.slope_up))
    merge_tol = params.resolved_merge_tol

    queue: deque[NodeKey] = deque([seed_key])
    visited = {seed_key}
    queue_peak = 1
    frontier_snapshots = [1]
    ring_remaining = 1
    ring_next = 0

    while queue:
        parent_key = queue.popleft()
        parent_pos = graph.position(parent_key)
        children = _get_nodes_batched(
            scene, params, parent_key, parent_pos, tan_lo, tan_hi)
        for (di, dj), (ctype, child_pos) in children.items():
            ci, cj = parent_key.i + di, parent_key.j + dj
            child_key, existing = graph.resolve_node(
                ci, cj, float(child_pos[2]), merge_tol)
            if existing is None:
                graph.add_vertex(child_key, child_pos)
            head = graph.position(child_key)
            dz = float(head[2] - parent_pos[2])
            run = float(np.hypot(head[0] - parent_pos[0],
                                 head[1] - parent_pos[1]))
            weights = WeightVector(
                step_type=ctype,
                distance=float(np.linalg.norm(head - parent_pos)),
                slope=dz / run,
            )
            graph.add_edge(parent_key, child_key, weights)
            if child_key not in visited:
                visited.add(child_key)
                queue.append(child_key)
                ring_next += 1
        queue_peak = max(queue_peak, len(queue))
        ring_remaining -= 1
        if ring_remaining == 0:
            if ring_next:
                frontier_snapshots.append(ring_next)
            ring_remaining = ring_next
            ring_next = 0

    report = BuildReport(
        vertex_count=graph.num_vertices,
        edge_count=graph.num_edges,
        queue_peak=queue_peak,
        terminated_early=graph.num_vertices == 1,
        frontier_snapshots=frontier_snapshots,
        build_seconds=time.perf_counter() - started,
    )
    return graph, report
