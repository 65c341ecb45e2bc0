"""HTTP service exposing scene upload, graph builds, viewshed, path and
heatmap queries over a ProjectStore.

Long-running builds return 202 with a job id for polling; identical
(scene, params) submissions are content-addressed and come back as cache
hits. All JSON responses use the canonical serializer, so numbers are
byte-identical with CLI output.
"""

from __future__ import annotations

import base64
import os
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from threading import Lock

import numpy as np
from fastapi import FastAPI, Request, Response
from pydantic import BaseModel, Field

from . import graphio, meshio
from .bvh import NO_HIT
from .builder import GraphParams
from .costs import CostCoefficients, ThresholdRule
from .errors import (AccessGraphError, DuplicateName, InvalidStart,
                     MissingAttribute, NonPositiveEdgeCost, NotFound,
                     SceneFormatError)
from .geometry import build_scene, inter_batch
from .graph import NodeKey
from .paths import heatmap as compute_heatmap
from .paths import shortest_path
from .store import ProjectStore
from .viewshed import ViewshedConfig, viewshed

DEFAULT_PAGE_SIZE = 50_000


def _json(doc, status_code: int = 200) -> Response:
    return Response(graphio.dumps(doc), status_code=status_code,
                    media_type="application/json")


def _error(status: int, kind: str, detail: str, **extra) -> Response:
    return _json({"error": kind, "detail": detail, **extra},
                 status_code=status)


class SceneUpload(BaseModel):
    name: str
    obj: str | None = None
    ply_b64: str | None = None
    labels: dict[str, str] = Field(default_factory=dict)
    y_up: bool = False


class GraphRequest(BaseModel):
    scene: str
    params: dict
    name: str | None = None
    workers: int = 1


class ViewshedRequest(BaseModel):
    eye_height: float = 1.8
    ray_count: int = 2000
    azimuth_span: float = 360.0
    elevation_span: float = 40.0
    max_range: float | None = None
    seed: int = 0
    workers: int = 1


class PathRequest(BaseModel):
    start_key: tuple[int, int, int]
    goal_key: tuple[int, int, int]
    rho: dict[str, float] = Field(default_factory=lambda: {"distance": 1.0})
    threshold_rules: list[dict] = Field(default_factory=list)


@dataclass
class Job:
    id: str
    kind: str
    status: str = "queued"
    result: dict | None = None
    error: str | None = None
    error_kind: str | None = None

    def to_dict(self) -> dict:
        return {"id": self.id, "kind": self.kind, "status": self.status,
                "result": self.result, "error": self.error,
                "error_kind": self.error_kind}


class JobManager:
    """Bounded worker pool with an in-memory job table."""

    def __init__(self, max_workers: int | None = None):
        self._pool = ThreadPoolExecutor(
            max_workers=max_workers or os.cpu_count() or 2)
        self._jobs: dict[str, Job] = {}
        self._lock = Lock()

    def get(self, job_id: str) -> Job | None:
        with self._lock:
            return self._jobs.get(job_id)

    def submit(self, kind: str, fn) -> Job:
        job = Job(id=uuid.uuid4().hex[:12], kind=kind)
        with self._lock:
            self._jobs[job.id] = job

        def run():
            job.status = "running"
            try:
                job.result = fn()
                job.status = "done"
            except AccessGraphError as exc:
                job.status = "error"
                job.error = str(exc)
                job.error_kind = type(exc).__name__
            except Exception as exc:  # pragma: no cover - defensive
                job.status = "error"
                job.error = repr(exc)
                job.error_kind = "InternalError"

        self._pool.submit(run)
        return job


def _parse_metric(metric: str):
    """Heatmap metric: attribute name, or 'score:name=coeff,...'."""
    if metric.startswith("score:"):
        rho = {}
        for part in metric[len("score:"):].split(","):
            name, _, value = part.partition("=")
            if not name or not value:
                raise ValueError(f"bad metric term {part!r}")
            rho[name.strip()] = float(value)
        return rho
    return metric


def create_app(store: ProjectStore,
               max_workers: int | None = None) -> FastAPI:
    app = FastAPI(title="accessgraph", version="0.1.0")
    jobs = JobManager(max_workers=max_workers)
    pending: dict[str, str] = {}  # graph id -> in-flight job id
    pending_lock = Lock()

    @app.exception_handler(NotFound)
    async def _not_found(request: Request, exc: NotFound):
        return _error(404, "NotFound", str(exc))

    @app.exception_handler(DuplicateName)
    async def _duplicate(request: Request, exc: DuplicateName):
        return _error(409, "DuplicateName", str(exc))

    @app.exception_handler(NonPositiveEdgeCost)
    async def _bad_cost(request: Request, exc: NonPositiveEdgeCost):
        return _error(422, "NonPositiveEdgeCost", str(exc))

    @app.exception_handler(InvalidStart)
    async def _bad_start(request: Request, exc: InvalidStart):
        return _error(422, "InvalidStart", str(exc), tau=list(exc.tau))

    @app.exception_handler(MissingAttribute)
    async def _missing_attr(request: Request, exc: MissingAttribute):
        return _error(400, "MissingAttribute", str(exc))

    @app.exception_handler(SceneFormatError)
    async def _bad_scene(request: Request, exc: SceneFormatError):
        return _error(400, "SceneFormatError", str(exc))

    @app.exception_handler(ValueError)
    async def _bad_value(request: Request, exc: ValueError):
        return _error(400, "BadRequest", str(exc))

    @app.get("/health")
    def health():
        return _json({"status": "ok"})

    # -- scenes -----------------------------------------------------------

    @app.post("/scenes")
    def upload_scene(body: SceneUpload):
        if (body.obj is None) == (body.ply_b64 is None):
            return _error(400, "BadRequest",
                          "provide exactly one of obj or ply_b64")
        if body.obj is not None:
            import tempfile

            with tempfile.NamedTemporaryFile(
                    "w", suffix=".obj", delete=False) as fh:
                fh.write(body.obj)
                tmp_path = fh.name
            try:
                meshes = meshio.load_obj(tmp_path, y_up=body.y_up)
            finally:
                os.unlink(tmp_path)
        else:
            import tempfile

            raw = base64.b64decode(body.ply_b64)
            with tempfile.NamedTemporaryFile(
                    "wb", suffix=".ply", delete=False) as fh:
                fh.write(raw)
                tmp_path = fh.name
            try:
                meshes = [meshio.load_ply(tmp_path, y_up=body.y_up)]
            finally:
                os.unlink(tmp_path)
        scene = build_scene(meshes, body.labels)
        digest = store.add_scene(body.name, scene)
        return _json({
            "scene": {
                "name": body.name,
                "id": digest,
                "objects": [m.name for m in scene.objects],
                "triangles": scene.triangle_count(),
                "degenerate_dropped": scene.degenerate_dropped,
            }
        })

    @app.get("/scenes")
    def list_scenes():
        registry = store.registry()
        return _json({"scenes": [
            {"name": name, "id": entry["id"],
             "triangles": entry["triangles"]}
            for name, entry in registry["scenes"].items()]})

    @app.get("/scenes/{name}/mesh")
    def scene_mesh(name: str):
        """Single indexed triangle buffer for the viewer."""
        scene = store.get_scene(name)
        positions: list[float] = []
        indices: list[int] = []
        objects = []
        base = 0
        for mesh in scene.objects:
            positions.extend(float(v) for v in mesh.vertices.ravel())
            indices.extend(int(base + k) for k in mesh.faces.ravel())
            objects.append({"name": mesh.name,
                            "index_offset": len(indices) - mesh.faces.size,
                            "index_count": int(mesh.faces.size)})
            base += len(mesh.vertices)
        return _json({"positions": positions, "indices": indices,
                      "objects": objects})

    # -- graphs -----------------------------------------------------------

    @app.post("/graphs")
    def post_graph(body: GraphRequest):
        params = GraphParams.from_dict(body.params)
        gid = store.graph_id(body.scene, params)
        if store.has_graph(gid):
            if body.name:
                store._alias_graph(gid, body.name)
            return _json({"graph_id": gid, "cached": True})
        # Surface a bad seed immediately instead of from the job.
        scene = store.get_scene(body.scene)
        origin = np.asarray(params.tau) + [0.0, 0.0, params.height]
        t, obj, _ = inter_batch(scene, origin, np.array([0.0, 0.0, -1.0]),
                                params.resolved_max_drop)
        if obj[0] == NO_HIT:
            raise InvalidStart(params.tau)
        if not scene.is_walkable(int(obj[0])):
            raise InvalidStart(params.tau,
                               "start point is over a non-walkable object")
        with pending_lock:
            existing = pending.get(gid)
            if existing is not None:
                return _json({"job_id": existing, "graph_id": gid,
                              "cached": False}, status_code=202)

            def build():
                try:
                    graph_id, cached = store.build_cached(
                        body.scene, params, graph_name=body.name,
                        workers=body.workers)
                    graph = store.load_graph(graph_id)
                    return {"graph_id": graph_id, "cached": cached,
                            "vertex_count": graph.num_vertices,
                            "edge_count": graph.num_edges,
                            "report": graph.meta.get("report")}
                finally:
                    with pending_lock:
                        pending.pop(gid, None)

            job = jobs.submit("build", build)
            pending[gid] = job.id
        return _json({"job_id": job.id, "graph_id": gid, "cached": False},
                     status_code=202)

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise NotFound(f"job {job_id!r}")
        return _json(job.to_dict())

    @app.get("/graphs/{name}")
    def get_graph(name: str, page: int = 0,
                  page_size: int = DEFAULT_PAGE_SIZE):
        graph = store.load_graph(name)
        if page_size <= 0:
            return _error(400, "BadRequest", "page_size must be positive")
        nv = graph.num_vertices
        pages = max(1, -(-nv // page_size))
        if not 0 <= page < pages:
            return _error(400, "BadRequest", f"page must lie in [0, {pages})")
        lo = page * page_size
        hi = min(nv, lo + page_size)
        csr = graph.require_finalized()
        attr_names = list(graph.node_attrs)
        factor_names = list(csr.factors)
        vertices = []
        for vid in range(lo, hi):
            key = graph.keys[vid]
            pos = graph.positions[vid]
            entry = {"id": vid, "key": [key.i, key.j, key.level],
                     "position": [float(p) for p in pos]}
            if attr_names:
                entry["attrs"] = {a: float(graph.node_attrs[a][vid])
                                  for a in attr_names}
            vertices.append(entry)
        edges = []
        for vid in range(lo, hi):
            for pos_e in range(csr.offsets[vid], csr.offsets[vid + 1]):
                edges.append({
                    "tail": vid,
                    "head": int(csr.cols[pos_e]),
                    "step_type": graph.weights_at(pos_e).step_type.name,
                    "factors": {f: float(csr.factors[f][pos_e])
                                for f in factor_names},
                })
        return _json({
            "id": store.resolve_graph_id(name),
            "vertex_count": nv,
            "edge_count": graph.num_edges,
            "page": page, "pages": pages, "page_size": page_size,
            "factor_names": factor_names,
            "attr_names": attr_names,
            "meta": graph.meta,
            "vertices": vertices,
            "edges": edges,
        })

    @app.get("/graphs/{name}/report")
    def get_report(name: str):
        report = store.graph_report(name)
        return _json(report.to_dict())

    @app.post("/graphs/{name}/viewshed")
    def post_viewshed(name: str, body: ViewshedRequest):
        graph = store.load_graph(name)
        scene_name = graph.meta.get("scene")
        if scene_name is None:
            raise NotFound(f"graph {name!r} has no scene reference")
        scene = store.get_scene(scene_name)
        config = ViewshedConfig(
            eye_height=body.eye_height, ray_count=body.ray_count,
            azimuth_span=body.azimuth_span,
            elevation_span=body.elevation_span,
            max_range=body.max_range, seed=body.seed)
        viewshed(graph, scene, config, workers=body.workers)
        store.save_graph(store.resolve_graph_id(name), graph)
        return _json({"attrs": ["view_min", "view_max"],
                      "vertex_count": graph.num_vertices,
                      "config": graph.meta.get("viewshed")})

    @app.post("/graphs/{name}/paths")
    def post_path(name: str, body: PathRequest):
        graph = store.load_graph(name)
        start = NodeKey(*body.start_key)
        goal = NodeKey(*body.goal_key)
        for key in (start, goal):
            if key not in graph.index_of:
                raise NotFound(f"vertex {tuple(key)} not in graph")
        rules = [ThresholdRule(r["attr"], float(r["threshold"]),
                               float(r["multiplier"]))
                 for r in body.threshold_rules]
        coeffs = CostCoefficients(rho=body.rho, threshold_rules=rules)
        result = shortest_path(graph, start, goal, coeffs)
        if result is None:
            return _json({"found": False, "path": None})
        return _json({"found": True,
                      "path": graphio.path_to_doc(graph, result)})

    @app.get("/graphs/{name}/heatmap")
    def get_heatmap(name: str, metric: str = "view_max"):
        graph = store.load_graph(name)
        field_ = compute_heatmap(graph, _parse_metric(metric))
        return _json({
            "metric": field_.metric,
            "vmin": field_.vmin,
            "vmax": field_.vmax,
            "values": [float(v) for v in field_.values],
            "normalized": [float(v) for v in field_.normalized],
            "colors": [[int(c) for c in row] for row in field_.colors],
        })

    return app
