"""Content-addressed project store for scenes, graphs, and results.

Scenes hash to a digest of their geometry and labels; a graph's id is the
hash of (scene digest, parameter digest), so rebuilding with identical
inputs is a cache hit. Registry updates are atomic and lock-protected so
the HTTP service can share one store across worker threads.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

import numpy as np

from . import graphio
from .builder import BuildReport, GraphParams, build_graph
from .costs import apply_all
from .errors import DuplicateName, NotFound
from .geometry import Scene, TriangleMesh, build_scene
from .graph import AccessGraph

ENV_STORE = "SHAPE_STORE"
DEFAULT_ROOT = "shape_store"


def resolve_store_root(explicit: str | None = None) -> Path:
    return Path(explicit or os.environ.get(ENV_STORE) or DEFAULT_ROOT)


class ProjectStore:
    def __init__(self, root):
        self.root = Path(root)
        for sub in ("scenes", "graphs", "results"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self._registry_path = self.root / "registry.json"
        self._lock = threading.RLock()
        if not self._registry_path.exists():
            self._write_registry({"scenes": {}, "graphs": {}, "results": {}})
        self._graph_cache: dict[str, AccessGraph] = {}

    # -- registry ----------------------------------------------------------

    def _read_registry(self) -> dict:
        with open(self._registry_path, "r", encoding="utf-8") as fh:
            return json.load(fh)

    def _write_registry(self, registry: dict) -> None:
        tmp = self._registry_path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(registry, fh, indent=2)
        tmp.replace(self._registry_path)

    def registry(self) -> dict:
        with self._lock:
            return self._read_registry()

    # -- scenes ------------------------------------------------------------

    def add_scene(self, name: str, scene: Scene) -> str:
        digest = graphio.scene_hash(scene)
        with self._lock:
            registry = self._read_registry()
            existing = registry["scenes"].get(name)
            if existing is not None:
                if existing["id"] == digest:
                    return digest  # idempotent re-import
                raise DuplicateName(
                    f"scene name {name!r} taken by different content")
            path = self.root / "scenes" / f"{digest}.npz"
            arrays = {}
            manifest = []
            for k, mesh in enumerate(scene.objects):
                arrays[f"v{k}"] = np.asarray(mesh.vertices)
                arrays[f"f{k}"] = np.asarray(mesh.faces)
                manifest.append(mesh.name)
            np.savez(path, **arrays)
            registry["scenes"][name] = {
                "id": digest,
                "file": f"scenes/{digest}.npz",
                "objects": manifest,
                "labels": dict(scene.labels),
                "triangles": scene.triangle_count(),
                "degenerate_dropped": scene.degenerate_dropped,
            }
            self._write_registry(registry)
        return digest

    def _scene_entry(self, name: str) -> dict:
        registry = self.registry()
        entry = registry["scenes"].get(name)
        if entry is None:
            for item in registry["scenes"].values():
                if item["id"] == name:
                    entry = item
                    break
        if entry is None:
            raise NotFound(f"scene {name!r}")
        return entry

    def get_scene(self, name: str) -> Scene:
        entry = self._scene_entry(name)
        with np.load(self.root / entry["file"]) as data:
            meshes = [
                TriangleMesh(obj_name, data[f"v{k}"], data[f"f{k}"])
                for k, obj_name in enumerate(entry["objects"])]
        return build_scene(meshes, entry["labels"])

    def has_scene(self, name: str) -> bool:
        try:
            self._scene_entry(name)
            return True
        except NotFound:
            return False

    def scene_names(self) -> list[str]:
        return sorted(self.registry()["scenes"])

    # -- graphs ------------------------------------------------------------

    def graph_id(self, scene_name: str, params: GraphParams) -> str:
        entry = self._scene_entry(scene_name)
        return graphio.graph_id_for(entry["id"],
                                    graphio.params_hash(params.to_dict()))

    def has_graph(self, name_or_id: str) -> bool:
        try:
            self._graph_entry(name_or_id)
            return True
        except NotFound:
            return False

    def build_cached(self, scene_name: str, params: GraphParams,
                     graph_name: str | None = None, workers: int = 1
                     ) -> tuple[str, bool]:
        """Build (or reuse) the graph for (scene, params); returns
        (graph id, cache hit). The stored graph is finalized with all
        standard edge costs applied."""
        entry = self._scene_entry(scene_name)
        gid = graphio.graph_id_for(entry["id"],
                                   graphio.params_hash(params.to_dict()))
        with self._lock:
            registry = self._read_registry()
            known = gid in registry["graphs"]
        if known:
            if graph_name:
                self._alias_graph(gid, graph_name)
            return gid, True
        scene = self.get_scene(scene_name)
        graph, report = build_graph(scene, params)
        graph.finalize_csr()
        apply_all(graph, workers=workers)
        graph.meta["scene"] = scene_name
        graph.meta["scene_hash"] = entry["id"]
        graph.meta["params_hash"] = graphio.params_hash(params.to_dict())
        graph.meta["report"] = report.to_dict()
        self.save_graph(gid, graph, scene_name=scene_name)
        if graph_name:
            self._alias_graph(gid, graph_name)
        return gid, False

    def _alias_graph(self, gid: str, name: str) -> None:
        with self._lock:
            registry = self._read_registry()
            entry = registry["graphs"].get(gid)
            if entry is None:
                raise NotFound(f"graph {gid!r}")
            aliases = registry["graphs"].get(name)
            if aliases is not None and aliases.get("id") != gid:
                raise DuplicateName(f"graph name {name!r} taken")
            registry["graphs"][name] = {"id": gid, "alias": True}
            self._write_registry(registry)

    def save_graph(self, gid: str, graph: AccessGraph,
                   scene_name: str | None = None) -> None:
        blob = graphio.write_csr_bytes(graph)
        path = self.root / "graphs" / f"{gid}.agcsr"
        tmp = path.with_suffix(".tmp")
        tmp.write_bytes(blob)
        tmp.replace(path)
        with self._lock:
            registry = self._read_registry()
            registry["graphs"][gid] = {
                "id": gid,
                "file": f"graphs/{gid}.agcsr",
                "scene": scene_name or graph.meta.get("scene"),
                "scene_hash": graph.meta.get("scene_hash"),
                "params_hash": graph.meta.get("params_hash"),
                "vertex_count": graph.num_vertices,
                "edge_count": graph.num_edges,
            }
            self._write_registry(registry)
            self._graph_cache[gid] = graph

    def _graph_entry(self, name_or_id: str) -> dict:
        registry = self.registry()
        entry = registry["graphs"].get(name_or_id)
        if entry is not None and entry.get("alias"):
            entry = registry["graphs"].get(entry["id"])
        if entry is None:
            raise NotFound(f"graph {name_or_id!r}")
        return entry

    def resolve_graph_id(self, name_or_id: str) -> str:
        return self._graph_entry(name_or_id)["id"]

    def load_graph(self, name_or_id: str) -> AccessGraph:
        entry = self._graph_entry(name_or_id)
        gid = entry["id"]
        with self._lock:
            cached = self._graph_cache.get(gid)
        if cached is not None:
            return cached
        graph = graphio.read_csr_bytes((self.root / entry["file"]).read_bytes())
        with self._lock:
            self._graph_cache[gid] = graph
        return graph

    def graph_report(self, name_or_id: str) -> BuildReport:
        graph = self.load_graph(name_or_id)
        data = graph.meta.get("report")
        if data is None:
            raise NotFound(f"graph {name_or_id!r} has no build report")
        return BuildReport(**data)

    def graph_file(self, name_or_id: str) -> Path:
        return self.root / self._graph_entry(name_or_id)["file"]

    # -- results -----------------------------------------------------------

    def save_result(self, name: str, doc: dict) -> None:
        path = self.root / "results" / f"{name}.json"
        path.write_text(graphio.dumps(doc), encoding="utf-8")
        with self._lock:
            registry = self._read_registry()
            registry["results"][name] = {"file": f"results/{name}.json"}
            self._write_registry(registry)

    def load_result(self, name: str) -> dict:
        entry = self.registry()["results"].get(name)
        if entry is None:
            raise NotFound(f"result {name!r}")
        return json.loads((self.root / entry["file"]).read_text("utf-8"))
