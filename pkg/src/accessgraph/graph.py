"""Weighted digraph of reachable locations.

Vertices map to 3D node points; every edge carries a weight vector
(step type, distance, slope, cross-slope, energy, plus named extras).
A build-time adjacency map is converted once into compressed sparse row
arrays by finalize_csr(); afterwards the topology is frozen and weight
slots can be recomputed in place.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple

import numpy as np

from .errors import DuplicateEdge, GraphFinalized

BASE_FACTORS = ("distance", "slope", "cross_slope", "energy")
STEP_FACTOR = "steps"  # indicator factor: 1 for stepped edges, 0 for direct


class ConnectionType(IntEnum):
    """Movement required along an edge."""

    DIRECT = 0
    OVER = 1
    UP = 2
    DOWN = 3
    INVALID = 4


class NodeKey(NamedTuple):
    """Stable vertex identity: grid offsets from the start point plus a
    z-cluster index that separates stacked floors over one footprint."""

    i: int
    j: int
    level: int


@dataclass
class WeightVector:
    """Per-edge costs. ``extras`` holds attribute-derived factors."""

    step_type: ConnectionType
    distance: float
    slope: float
    cross_slope: float = 0.0
    energy: float = 0.0
    extras: dict[str, float] = field(default_factory=dict)

    def factor(self, name: str) -> float:
        if name == STEP_FACTOR:
            return 0.0 if self.step_type == ConnectionType.DIRECT else 1.0
        if name in BASE_FACTORS:
            return getattr(self, name)
        return self.extras[name]


@dataclass(frozen=True)
class EdgeView:
    tail: NodeKey
    head: NodeKey
    weights: WeightVector


@dataclass
class Subgraph:
    """Edge-induced subgraph of one vertex's outgoing edges."""

    parent: NodeKey
    edges: list[EdgeView]

    def __len__(self) -> int:
        return len(self.edges)


@dataclass
class CsrArrays:
    offsets: np.ndarray  # (V+1,) int64
    cols: np.ndarray  # (E,) int32 head vertex ids, insertion order per row
    step_type: np.ndarray  # (E,) uint8
    factors: dict[str, np.ndarray]  # factor name -> (E,) float64


class AccessGraph:
    """Directed graph; single-writer while building, then finalized."""

    def __init__(self):
        self.keys: list[NodeKey] = []
        self.index_of: dict[NodeKey, int] = {}
        self.node_attrs: dict[str, np.ndarray] = {}
        self.meta: dict = {}
        self.csr: CsrArrays | None = None
        self._positions: list[np.ndarray] = []
        self._cells: dict[tuple[int, int], list[int]] = {}
        self._edge_tail: list[int] = []
        self._edge_head: list[int] = []
        self._edge_step: list[int] = []
        self._edge_factors: dict[str, list[float]] = {
            name: [] for name in BASE_FACTORS}
        self._edge_extras: dict[str, list[float]] = {}
        self._edge_set: set[tuple[int, int]] = set()
        self._out: dict[int, list[int]] = {}
        self._positions_arr: np.ndarray | None = None

    # -- vertices ---------------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return len(self.keys)

    @property
    def num_edges(self) -> int:
        if self.finalized:
            return len(self.csr.cols)
        return len(self._edge_tail)

    @property
    def finalized(self) -> bool:
        return self.csr is not None

    def position(self, vertex: NodeKey | int) -> np.ndarray:
        vid = vertex if isinstance(vertex, int) else self.index_of[vertex]
        if self._positions_arr is not None:
            return self._positions_arr[vid]
        return self._positions[vid]

    @property
    def positions(self) -> np.ndarray:
        if self._positions_arr is None:
            self._positions_arr = (
                np.vstack(self._positions)
                if self._positions else np.zeros((0, 3)))
        return self._positions_arr

    def resolve_node(self, i: int, j: int, z: float,
                     merge_tol: float) -> tuple[NodeKey, int | None]:
        """Match a candidate height against the z-clusters of cell (i, j).

        Returns the merged key and existing vertex id, or a fresh key with
        the next level index when no cluster is within merge_tol.
        """
        ids = self._cells.get((i, j), ())
        for level, vid in enumerate(ids):
            if abs(float(self._positions[vid][2]) - z) < merge_tol:
                return NodeKey(i, j, level), vid
        return NodeKey(i, j, len(ids)), None

    def add_vertex(self, key: NodeKey, position) -> int:
        if self.finalized:
            raise GraphFinalized("cannot add vertices after finalize_csr")
        if key in self.index_of:
            raise ValueError(f"vertex {key} already exists")
        cell = self._cells.setdefault((key.i, key.j), [])
        if key.level != len(cell):
            raise ValueError(
                f"level {key.level} out of sequence for cell {(key.i, key.j)}")
        vid = len(self.keys)
        self.keys.append(key)
        self.index_of[key] = vid
        self._positions.append(np.asarray(position, dtype=np.float64))
        self._positions_arr = None
        cell.append(vid)
        return vid

    # -- edges ------------------------------------------------------------

    def add_edge(self, parent: NodeKey, child: NodeKey,
                 weights: WeightVector) -> None:
        if self.finalized:
            raise GraphFinalized("cannot add edges after finalize_csr")
        tail = self.index_of[parent]
        head = self.index_of[child]
        if weights.step_type == ConnectionType.INVALID:
            raise ValueError("INVALID connection cannot be stored")
        if not (weights.distance > 0.0 and np.isfinite(weights.distance)):
            raise ValueError("edge distance must be positive and finite")
        if (tail, head) in self._edge_set:
            raise DuplicateEdge(f"edge {parent} -> {child} inserted twice")
        eid = len(self._edge_tail)
        self._edge_set.add((tail, head))
        self._edge_tail.append(tail)
        self._edge_head.append(head)
        self._edge_step.append(int(weights.step_type))
        self._edge_factors["distance"].append(float(weights.distance))
        self._edge_factors["slope"].append(float(weights.slope))
        self._edge_factors["cross_slope"].append(float(weights.cross_slope))
        self._edge_factors["energy"].append(float(weights.energy))
        for name, value in weights.extras.items():
            column = self._edge_extras.setdefault(name, [0.0] * eid)
            column.append(float(value))
        for name, column in self._edge_extras.items():
            if len(column) < eid + 1:
                column.append(0.0)
        self._out.setdefault(tail, []).append(eid)

    def has_edge(self, parent: NodeKey, child: NodeKey) -> bool:
        tail = self.index_of[parent]
        head = self.index_of[child]
        if self.finalized:
            row = self.csr.cols[self.csr.offsets[tail]:self.csr.offsets[tail + 1]]
            return head in row
        return (tail, head) in self._edge_set

    def weights_at(self, pos: int) -> WeightVector:
        csr = self.csr
        extras = {name: float(arr[pos]) for name, arr in csr.factors.items()
                  if name not in BASE_FACTORS}
        return WeightVector(
            step_type=ConnectionType(int(csr.step_type[pos])),
            distance=float(csr.factors["distance"][pos]),
            slope=float(csr.factors["slope"][pos]),
            cross_slope=float(csr.factors["cross_slope"][pos]),
            energy=float(csr.factors["energy"][pos]),
            extras=extras,
        )

    def out_edges(self, vertex: NodeKey) -> list[EdgeView]:
        """Outgoing EdgeViews in per-row insertion order."""
        vid = self.index_of[vertex]
        views = []
        if self.finalized:
            csr = self.csr
            for pos in range(csr.offsets[vid], csr.offsets[vid + 1]):
                views.append(EdgeView(vertex, self.keys[csr.cols[pos]],
                                      self.weights_at(pos)))
            return views
        for eid in self._out.get(vid, ()):
            extras = {name: column[eid]
                      for name, column in self._edge_extras.items()}
            weights = WeightVector(
                step_type=ConnectionType(self._edge_step[eid]),
                distance=self._edge_factors["distance"][eid],
                slope=self._edge_factors["slope"][eid],
                cross_slope=self._edge_factors["cross_slope"][eid],
                energy=self._edge_factors["energy"][eid],
                extras=extras,
            )
            views.append(EdgeView(vertex, self.keys[self._edge_head[eid]],
                                  weights))
        return views

    def out_subgraph(self, vertex: NodeKey) -> Subgraph:
        return Subgraph(parent=vertex, edges=self.out_edges(vertex))

    def out_degree(self, vertex: NodeKey) -> int:
        vid = self.index_of[vertex]
        if self.finalized:
            return int(self.csr.offsets[vid + 1] - self.csr.offsets[vid])
        return len(self._out.get(vid, ()))

    def parents(self) -> set[NodeKey]:
        """Vertices with at least one outgoing edge, derived on demand."""
        if self.finalized:
            offs = self.csr.offsets
            return {self.keys[v] for v in range(self.num_vertices)
                    if offs[v + 1] > offs[v]}
        return {self.keys[t] for t in self._out if self._out[t]}

    def adjacency_map(self) -> dict[NodeKey, list[NodeKey]]:
        """Snapshot of the adjacency in per-row insertion order."""
        out: dict[NodeKey, list[NodeKey]] = {}
        if self.finalized:
            csr = self.csr
            for vid, key in enumerate(self.keys):
                row = csr.cols[csr.offsets[vid]:csr.offsets[vid + 1]]
                if len(row):
                    out[key] = [self.keys[h] for h in row]
            return out
        for tail, eids in self._out.items():
            if eids:
                out[self.keys[tail]] = [
                    self.keys[self._edge_head[e]] for e in eids]
        return out

    # -- finalization -----------------------------------------------------

    def finalize_csr(self) -> "AccessGraph":
        """Convert the adjacency map into CSR arrays and freeze topology."""
        if self.finalized:
            return self
        nv = self.num_vertices
        counts = np.zeros(nv, dtype=np.int64)
        for tail, eids in self._out.items():
            counts[tail] = len(eids)
        offsets = np.zeros(nv + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])

        order = np.empty(len(self._edge_tail), dtype=np.int64)
        pos = 0
        for vid in range(nv):
            for eid in self._out.get(vid, ()):
                order[pos] = eid
                pos += 1

        factors = {}
        for name in BASE_FACTORS:
            factors[name] = np.asarray(
                self._edge_factors[name], dtype=np.float64)[order]
        for name, column in self._edge_extras.items():
            factors[name] = np.asarray(column, dtype=np.float64)[order]
        cols = np.asarray(self._edge_head, dtype=np.int32)[order]
        step = np.asarray(self._edge_step, dtype=np.uint8)[order]
        offsets.setflags(write=False)
        cols.setflags(write=False)
        self.csr = CsrArrays(offsets=offsets, cols=cols, step_type=step,
                             factors=factors)
        _ = self.positions  # materialize before dropping the list form
        self._edge_tail = self._edge_head = self._edge_step = None
        self._edge_factors = self._edge_extras = None
        self._edge_set = None
        self._out = None
        self._positions = None
        return self

    def require_finalized(self) -> CsrArrays:
        if not self.finalized:
            raise GraphFinalized("operation requires finalize_csr() first")
        return self.csr

    def edge_tails(self) -> np.ndarray:
        """Tail vertex id per CSR edge slot."""
        csr = self.require_finalized()
        return np.repeat(np.arange(self.num_vertices, dtype=np.int32),
                         np.diff(csr.offsets))

    def add_edge_factor(self, name: str) -> np.ndarray:
        """Create (or fetch) a named per-edge factor array."""
        csr = self.require_finalized()
        if name not in csr.factors:
            csr.factors[name] = np.zeros(len(csr.cols), dtype=np.float64)
        return csr.factors[name]
