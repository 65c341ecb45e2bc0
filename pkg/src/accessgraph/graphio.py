"""Graph persistence: canonical JSON (17-significant-digit floats), a
binary CSR container, schema validation, and content hashing.

Exports are byte-stable: dictionaries keep insertion order, floats always
format the same way, and the binary layout round-trips exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from importlib import resources

import numpy as np

from .builder import BuildReport
from .errors import SceneFormatError
from .geometry import Scene
from .graph import (AccessGraph, BASE_FACTORS, ConnectionType, CsrArrays,
                    NodeKey)

CSR_MAGIC = b"AGCSR001"
CSR_VERSION = 1


# -- canonical JSON -----------------------------------------------------------


def format_float(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError("exports may not contain NaN or infinity")
    return f"{value:.17g}"


def dumps(obj, indent: int | None = None) -> str:
    """Serialize with deterministic float formatting and key order."""
    pieces: list[str] = []
    _emit(obj, pieces, indent, 0)
    return "".join(pieces)


def _emit(obj, out: list[str], indent, depth) -> None:
    pad_in = "\n" + " " * (indent * (depth + 1)) if indent else ""
    pad_out = "\n" + " " * (indent * depth) if indent else ""
    if obj is None or isinstance(obj, bool):
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for k, (key, value) in enumerate(obj.items()):
            if not isinstance(key, str):
                raise TypeError("JSON object keys must be strings")
            if k:
                out.append(",")
            out.append(pad_in)
            out.append(json.dumps(key) + (": " if indent else ":"))
            _emit(value, out, indent, depth + 1)
        out.append(pad_out + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = obj.tolist() if isinstance(obj, np.ndarray) else list(obj)
        if not items:
            out.append("[]")
            return
        out.append("[")
        for k, value in enumerate(items):
            if k:
                out.append(",")
            out.append(pad_in)
            _emit(value, out, indent, depth + 1)
        out.append(pad_out + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


# -- graph JSON ---------------------------------------------------------------


def graph_to_doc(graph: AccessGraph, report: BuildReport | None = None) -> dict:
    csr = graph.require_finalized()
    factor_names = list(BASE_FACTORS) + [
        n for n in csr.factors if n not in BASE_FACTORS]
    attr_names = list(graph.node_attrs)
    vertices = []
    for vid, key in enumerate(graph.keys):
        pos = graph.positions[vid]
        entry = {
            "key": [key.i, key.j, key.level],
            "position": [float(pos[0]), float(pos[1]), float(pos[2])],
        }
        if attr_names:
            entry["attrs"] = {
                name: float(graph.node_attrs[name][vid])
                for name in attr_names}
        vertices.append(entry)
    tails = graph.edge_tails()
    edges = []
    for pos in range(len(csr.cols)):
        edges.append({
            "tail": int(tails[pos]),
            "head": int(csr.cols[pos]),
            "step_type": ConnectionType(int(csr.step_type[pos])).name,
            "factors": {name: float(csr.factors[name][pos])
                        for name in factor_names},
        })
    doc = {
        "format": "access-graph",
        "version": 1,
        "meta": graph.meta,
        "factor_names": factor_names,
        "attr_names": attr_names,
        "vertices": vertices,
        "edges": edges,
    }
    if report is not None:
        doc["report"] = report.to_dict()
    return doc


def export_graph_json(graph: AccessGraph,
                      report: BuildReport | None = None) -> str:
    return dumps(graph_to_doc(graph, report))


def graph_schema() -> dict:
    text = resources.files("accessgraph").joinpath(
        "schemas/graph.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_graph_doc(doc: dict) -> None:
    import jsonschema

    jsonschema.validate(instance=doc, schema=graph_schema())


def graph_from_doc(doc: dict) -> tuple[AccessGraph, BuildReport | None]:
    if doc.get("format") != "access-graph":
        raise SceneFormatError("not an access-graph document")
    graph = AccessGraph()
    for entry in doc["vertices"]:
        i, j, level = entry["key"]
        graph.add_vertex(NodeKey(int(i), int(j), int(level)),
                         np.asarray(entry["position"], dtype=np.float64))
    factor_names = doc["factor_names"]
    nv = graph.num_vertices
    ne = len(doc["edges"])
    counts = np.zeros(nv, dtype=np.int64)
    cols = np.empty(ne, dtype=np.int32)
    step = np.empty(ne, dtype=np.uint8)
    factors = {name: np.empty(ne) for name in factor_names}
    last_tail = -1
    for pos, edge in enumerate(doc["edges"]):
        tail = int(edge["tail"])
        if tail < last_tail:
            raise SceneFormatError("edges must be grouped by ascending tail")
        last_tail = tail
        counts[tail] += 1
        cols[pos] = int(edge["head"])
        step[pos] = int(ConnectionType[edge["step_type"]])
        for name in factor_names:
            factors[name][pos] = float(edge["factors"][name])
    offsets = np.zeros(nv + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    _install_csr(graph, offsets, cols, step, factors)
    for name in doc.get("attr_names", []):
        graph.node_attrs[name] = np.array(
            [float(v["attrs"][name]) for v in doc["vertices"]])
    graph.meta = doc.get("meta", {})
    report = None
    if "report" in doc:
        report = BuildReport(**doc["report"])
    return graph, report


def _install_csr(graph: AccessGraph, offsets, cols, step, factors) -> None:
    offsets = np.asarray(offsets, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int32)
    offsets.setflags(write=False)
    cols.setflags(write=False)
    graph.csr = CsrArrays(offsets=offsets, cols=cols,
                          step_type=np.asarray(step, dtype=np.uint8),
                          factors=factors)
    _ = graph.positions
    graph._edge_tail = graph._edge_head = graph._edge_step = None
    graph._edge_factors = graph._edge_extras = None
    graph._edge_set = None
    graph._out = None
    graph._positions = None


# -- binary CSR container -----------------------------------------------------


def write_csr_bytes(graph: AccessGraph) -> bytes:
    """Little-endian container: header, name tables, vertex keys and
    positions, node attributes, 64-bit row offsets, 32-bit columns, step
    types, one 64-bit float array per factor, then a canonical-JSON meta
    blob."""
    csr = graph.require_finalized()
    factor_names = list(BASE_FACTORS) + [
        n for n in csr.factors if n not in BASE_FACTORS]
    attr_names = list(graph.node_attrs)
    nv = graph.num_vertices
    ne = len(csr.cols)

    out = bytearray()
    out += CSR_MAGIC
    out += struct.pack("<IIQQII", CSR_VERSION, 0, nv, ne,
                       len(factor_names), len(attr_names))
    for name in factor_names + attr_names:
        encoded = name.encode("utf-8")
        out += struct.pack("<H", len(encoded)) + encoded

    keys = np.array([(k.i, k.j, k.level) for k in graph.keys],
                    dtype="<i4").reshape(nv, 3)
    out += keys.tobytes()
    out += graph.positions.astype("<f8").tobytes()
    for name in attr_names:
        out += np.asarray(graph.node_attrs[name], dtype="<f8").tobytes()
    out += csr.offsets.astype("<i8").tobytes()
    out += csr.cols.astype("<u4").tobytes()
    out += csr.step_type.astype("u1").tobytes()
    for name in factor_names:
        out += csr.factors[name].astype("<f8").tobytes()
    meta_blob = dumps(graph.meta).encode("utf-8")
    out += struct.pack("<I", len(meta_blob)) + meta_blob
    return bytes(out)


def read_csr_bytes(blob: bytes) -> AccessGraph:
    if blob[:8] != CSR_MAGIC:
        raise SceneFormatError("not a binary CSR graph file")
    version, _, nv, ne, n_factors, n_attrs = struct.unpack_from("<IIQQII",
                                                                blob, 8)
    if version != CSR_VERSION:
        raise SceneFormatError(f"unsupported CSR version {version}")
    cursor = 8 + struct.calcsize("<IIQQII")
    names = []
    for _ in range(n_factors + n_attrs):
        (ln,) = struct.unpack_from("<H", blob, cursor)
        cursor += 2
        names.append(blob[cursor:cursor + ln].decode("utf-8"))
        cursor += ln
    factor_names = names[:n_factors]
    attr_names = names[n_factors:]

    def take(dtype, count):
        nonlocal cursor
        arr = np.frombuffer(blob, dtype=dtype, count=count, offset=cursor)
        cursor += arr.nbytes
        return arr

    keys = take("<i4", nv * 3).reshape(nv, 3)
    positions = take("<f8", nv * 3).reshape(nv, 3).copy()
    attrs = {name: take("<f8", nv).copy() for name in attr_names}
    offsets = take("<i8", nv + 1).astype(np.int64)
    cols = take("<u4", ne).astype(np.int32)
    step = take("u1", ne).copy()
    factors = {name: take("<f8", ne).copy() for name in factor_names}
    (meta_len,) = struct.unpack_from("<I", blob, cursor)
    cursor += 4
    meta = json.loads(blob[cursor:cursor + meta_len].decode("utf-8"))

    graph = AccessGraph()
    for row, pos in zip(keys, positions):
        graph.add_vertex(NodeKey(int(row[0]), int(row[1]), int(row[2])), pos)
    _install_csr(graph, offsets, cols, step, factors)
    graph.node_attrs = attrs
    graph.meta = meta
    return graph


# -- content hashing ----------------------------------------------------------


def scene_hash(scene: Scene) -> str:
    digest = hashlib.sha256()
    for oid, mesh in enumerate(scene.objects):
        digest.update(mesh.name.encode("utf-8"))
        digest.update(scene.tag(oid).encode("utf-8"))
        digest.update(mesh.vertices.astype("<f8").tobytes())
        digest.update(mesh.faces.astype("<i4").tobytes())
    return digest.hexdigest()


def params_hash(params_dict: dict) -> str:
    return hashlib.sha256(dumps(params_dict).encode("utf-8")).hexdigest()


def graph_id_for(scene_digest: str, params_digest: str) -> str:
    return hashlib.sha256(
        (scene_digest + ":" + params_digest).encode("utf-8")).hexdigest()[:16]


# -- result documents ---------------------------------------------------------


def path_to_doc(graph: AccessGraph, path) -> dict:
    """JSON document for a PathResult: vertex keys and positions, per-edge
    factors, totals, score."""
    vertices = []
    for key in path.vertices:
        pos = graph.positions[graph.index_of[key]]
        vertices.append({"key": [key.i, key.j, key.level],
                         "position": [float(p) for p in pos]})
    edges = []
    for view in path.edges:
        w = view.weights
        edges.append({
            "tail": [view.tail.i, view.tail.j, view.tail.level],
            "head": [view.head.i, view.head.j, view.head.level],
            "step_type": w.step_type.name,
            "factors": {"distance": w.distance, "slope": w.slope,
                        "cross_slope": w.cross_slope, "energy": w.energy,
                        **w.extras},
        })
    return {
        "vertices": vertices,
        "edges": edges,
        "totals": dict(path.totals),
        "score": path.score,
        "cost": path.cost,
        "length": path.length,
        "step_count": int(path.totals.get("steps", 0.0)),
    }
