"""Edge cost computation: metric distance, slope, cross-slope, metabolic
energy, attribute-derived factors, and per-vertex aggregate scores.

All bulk operations run on the finalized CSR arrays and write disjoint
weight slots, so per-row parallel recomputation is bit-identical to the
sequential pass.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ChildlessVertex, MissingAttribute
from .graph import (AccessGraph, ConnectionType, NodeKey, STEP_FACTOR,
                    WeightVector)

# Metabolic rate of walking on a grade, joules per kilogram per meter,
# as a quintic in the gradient (rise over run). Highest power first.
ENERGY_COEFFS = (280.5, -58.7, -76.8, 51.9, 19.6, 2.5)
DEFAULT_ENERGY_CLAMP = 0.5  # fitted gradient range is [-0.5, 0.5]
EPS_ATTR = 1e-6  # floor for reciprocal attribute promotion


@dataclass
class ThresholdRule:
    """Multiply the composed cost of a vertex's out-edges when its
    attribute falls below the threshold (a wall-buffer style penalty)."""

    attr: str
    threshold: float
    multiplier: float

    def __post_init__(self):
        if not (self.multiplier > 0 and math.isfinite(self.multiplier)):
            raise ValueError("multiplier must be positive and finite")
        if not math.isfinite(self.threshold):
            raise ValueError("threshold must be finite")

    def to_dict(self) -> dict:
        return {"attr": self.attr, "threshold": self.threshold,
                "multiplier": self.multiplier}


@dataclass
class CostCoefficients:
    """User-defined importance per weight factor, plus threshold rules."""

    rho: dict[str, float]
    threshold_rules: list[ThresholdRule] = field(default_factory=list)
    energy_clamp: float = DEFAULT_ENERGY_CLAMP

    def __post_init__(self):
        for name, value in self.rho.items():
            if not math.isfinite(value):
                raise ValueError(f"coefficient {name!r} must be finite")

    def to_dict(self) -> dict:
        return {
            "rho": dict(self.rho),
            "threshold_rules": [r.to_dict() for r in self.threshold_rules],
            "energy": {"clamp": self.energy_clamp},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CostCoefficients":
        rules = [
            ThresholdRule(r["attr"], float(r["threshold"]),
                          float(r["multiplier"]))
            if isinstance(r, dict) else ThresholdRule(r[0], float(r[1]),
                                                      float(r[2]))
            for r in data.get("threshold_rules", [])
        ]
        clamp = data.get("energy", {}).get("clamp", DEFAULT_ENERGY_CLAMP)
        return cls(rho={k: float(v) for k, v in data.get("rho", {}).items()},
                   threshold_rules=rules, energy_clamp=float(clamp))


def energy_rate(gradient, clamp: float = DEFAULT_ENERGY_CLAMP):
    """Energy per kilogram per meter at a signed gradient.

    Gradients outside [-clamp, clamp] are evaluated at the boundary; the
    polynomial is a fit and extrapolates badly on cliffs.
    """
    s = np.clip(gradient, -clamp, clamp)
    value = np.polyval(ENERGY_COEFFS, s)
    if np.ndim(gradient) == 0:
        return float(value)
    return value


def set_base_costs(graph: AccessGraph, scene=None) -> AccessGraph:
    """Recompute metric distance and signed slope for every edge."""
    csr = graph.require_finalized()
    tails = graph.edge_tails()
    pos = graph.positions
    delta = pos[csr.cols] - pos[tails]
    csr.factors["distance"] = np.linalg.norm(delta, axis=1)
    run = np.hypot(delta[:, 0], delta[:, 1])
    csr.factors["slope"] = delta[:, 2] / run
    return graph


def _edge_cell_dirs(graph: AccessGraph) -> np.ndarray:
    """Integer (di, dj) cell offset per CSR edge slot."""
    csr = graph.require_finalized()
    keys = np.array([(k.i, k.j) for k in graph.keys], dtype=np.int64)
    tails = graph.edge_tails()
    return keys[csr.cols] - keys[tails]


def _row_cross_slopes(csr, pos, dirs, start: int, stop: int) -> np.ndarray:
    row = slice(start, stop)
    d = dirs[row]
    head_z = pos[csr.cols[row], 2]
    direct = csr.step_type[row] == int(ConnectionType.DIRECT)
    out = np.zeros(stop - start)
    for e in range(stop - start):
        ortho = (d @ d[e]) == 0
        mask = ortho & direct
        if mask.any():
            out[e] = np.abs(head_z[e] - head_z[mask]).max()
    return out


def apply_cross_slope(graph: AccessGraph, workers: int = 1) -> AccessGraph:
    """Cross-slope per edge: the largest height difference between the
    edge's head and the heads of same-tail direct edges orthogonal to it
    in the (x, y) grid; zero when no such edge exists."""
    csr = graph.require_finalized()
    pos = graph.positions
    dirs = _edge_cell_dirs(graph)
    w_c = np.zeros(len(csr.cols))

    offsets = csr.offsets
    rows = [(int(offsets[v]), int(offsets[v + 1]))
            for v in range(graph.num_vertices) if offsets[v + 1] > offsets[v]]

    def fill(chunk):
        for start, stop in chunk:
            w_c[start:stop] = _row_cross_slopes(csr, pos, dirs, start, stop)

    if workers > 1 and len(rows) > 1:
        chunks = [rows[k::workers] for k in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, chunks))
    else:
        fill(rows)
    csr.factors["cross_slope"] = w_c
    return graph


def cross_slope(graph: AccessGraph, edge: tuple[NodeKey, NodeKey]) -> float:
    """Cross-slope of a single edge identified by (tail, head) keys."""
    tail, head = edge
    csr = graph.require_finalized()
    vid = graph.index_of[tail]
    hid = graph.index_of[head]
    start, stop = int(csr.offsets[vid]), int(csr.offsets[vid + 1])
    row_heads = csr.cols[start:stop]
    matches = np.nonzero(row_heads == hid)[0]
    if len(matches) == 0:
        raise KeyError(f"no edge {tail} -> {head}")
    values = _row_cross_slopes(csr, graph.positions,
                               _edge_cell_dirs(graph), start, stop)
    return float(values[matches[0]])


def apply_energy(graph: AccessGraph,
                 clamp: float = DEFAULT_ENERGY_CLAMP) -> AccessGraph:
    """Total energy per edge: rate at the edge slope times its length.

    Slopes outside the calibrated range are clamped; the number of clamped
    edges is recorded in graph.meta["energy_clamped_edges"].
    """
    csr = graph.require_finalized()
    slope = csr.factors["slope"]
    clamped = np.clip(slope, -clamp, clamp)
    graph.meta["energy_clamped_edges"] = int((clamped != slope).sum())
    csr.factors["energy"] = np.polyval(ENERGY_COEFFS, clamped) * \
        csr.factors["distance"]
    return graph


def apply_all(graph: AccessGraph, clamp: float = DEFAULT_ENERGY_CLAMP,
              workers: int = 1) -> AccessGraph:
    """Base costs, cross-slope, and energy in the canonical order."""
    set_base_costs(graph)
    apply_cross_slope(graph, workers=workers)
    apply_energy(graph, clamp=clamp)
    return graph


def promote_attr_to_edges(graph: AccessGraph, attr_name: str,
                          mode: str = "to_node") -> AccessGraph:
    """Copy a per-vertex attribute onto edges as a named extra factor.

    Modes: ``to_node`` uses the head vertex, ``from_node`` the tail, and
    ``reciprocal`` uses 1 / head value with the value floored at EPS_ATTR.
    """
    csr = graph.require_finalized()
    if attr_name not in graph.node_attrs:
        raise MissingAttribute(attr_name)
    attr = np.asarray(graph.node_attrs[attr_name], dtype=np.float64)
    if mode == "to_node":
        values = attr[csr.cols]
    elif mode == "from_node":
        values = attr[graph.edge_tails()]
    elif mode == "reciprocal":
        values = 1.0 / np.maximum(attr[csr.cols], EPS_ATTR)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    csr.factors[attr_name] = values
    return graph


def node_score(graph: AccessGraph, vertex: NodeKey,
               rho: dict[str, float]) -> float:
    """Coefficient-weighted sum of the weight vectors of all out-edges."""
    edges = graph.out_edges(vertex)
    if not edges:
        raise ChildlessVertex(f"{vertex} has no outgoing edges")
    total = 0.0
    for view in edges:
        for name, coeff in rho.items():
            try:
                total += coeff * view.weights.factor(name)
            except KeyError:
                raise MissingAttribute(name) from None
    return total


def edge_factor_values(weights: WeightVector, names) -> list[float]:
    return [weights.factor(name) for name in names]


def filter_cross_slope_gate(graph: AccessGraph, limit_deg: float) -> int:
    """Optional hard gate: drop direct edges whose cross-slope over their
    horizontal run exceeds tan(limit). Off unless explicitly invoked.

    Returns the number of removed edges; the CSR arrays are rebuilt.
    """
    csr = graph.require_finalized()
    if "cross_slope" not in csr.factors:
        apply_cross_slope(graph)
    tails = graph.edge_tails()
    pos = graph.positions
    delta = pos[csr.cols] - pos[tails]
    run = np.hypot(delta[:, 0], delta[:, 1])
    steep = (csr.factors["cross_slope"] / run) > math.tan(math.radians(limit_deg))
    drop = steep & (csr.step_type == int(ConnectionType.DIRECT))
    if not drop.any():
        return 0
    keep = ~drop
    counts = np.bincount(tails[keep], minlength=graph.num_vertices)
    offsets = np.zeros(graph.num_vertices + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    offsets.setflags(write=False)
    cols = csr.cols[keep].copy()
    cols.setflags(write=False)
    csr.factors = {name: arr[keep] for name, arr in csr.factors.items()}
    csr.step_type = csr.step_type[keep]
    csr.cols = cols
    csr.offsets = offsets
    return int(drop.sum())
