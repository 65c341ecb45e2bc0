"""Command-line front door.

Each subcommand prints one machine-readable JSON document on stdout.
Exit codes: 0 success, 1 user error, 2 internal error. The store root
comes from --store, the SHAPE_STORE environment variable, or
./shape_store.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
from pathlib import Path

from . import graphio, meshio
from .builder import GraphParams
from .costs import (CostCoefficients, apply_cross_slope, apply_energy,
                    filter_cross_slope_gate, set_base_costs)
from .errors import AccessGraphError, NotFound
from .geometry import build_scene
from .graph import NodeKey
from .paths import heatmap as compute_heatmap
from .paths import shortest_path
from .store import ProjectStore, resolve_store_root
from .viewshed import ViewshedConfig, viewshed


def _emit(doc) -> None:
    sys.stdout.write(graphio.dumps(doc) + "\n")


def _parse_key(text: str) -> NodeKey:
    parts = [int(p) for p in text.split(",")]
    if len(parts) == 2:
        parts.append(0)
    if len(parts) != 3:
        raise ValueError(f"node key must be 'i,j' or 'i,j,level': {text!r}")
    return NodeKey(*parts)


def _load_coeffs(args) -> CostCoefficients:
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            return CostCoefficients.from_dict(json.load(fh))
    rho = json.loads(args.rho) if getattr(args, "rho", None) else \
        {"distance": 1.0}
    return CostCoefficients(rho=rho)


def _import_mesh(store: ProjectStore, args) -> dict:
    labels = meshio.load_labels(args.labels) if args.labels else None
    meshes = meshio.load_meshes(args.mesh, y_up=args.y_up)
    scene = build_scene(meshes, labels)
    name = args.name or Path(args.mesh).stem
    digest = store.add_scene(name, scene)
    return {"scene": {"name": name, "id": digest,
                      "objects": [m.name for m in scene.objects],
                      "triangles": scene.triangle_count(),
                      "degenerate_dropped": scene.degenerate_dropped}}


def cmd_import(store: ProjectStore, args) -> dict:
    if args.graph:
        blob = Path(args.graph).read_bytes()
        graph = graphio.read_csr_bytes(blob)
        gid = args.name or Path(args.graph).stem
        store.save_graph(gid, graph)
        return {"graph": {"id": gid, "vertex_count": graph.num_vertices,
                          "edge_count": graph.num_edges}}
    return _import_mesh(store, args)


def _resolve_scene(store: ProjectStore, ref: str) -> str:
    """A scene argument may be a store name or a mesh file to auto-import."""
    if store.has_scene(ref):
        return ref
    path = Path(ref)
    if path.exists():
        meshes = meshio.load_meshes(path)
        name = path.stem
        store.add_scene(name, build_scene(meshes))
        return name
    raise NotFound(f"scene {ref!r}")


def cmd_build(store: ProjectStore, args) -> dict:
    scene_name = _resolve_scene(store, args.scene)
    with open(args.params, "r", encoding="utf-8") as fh:
        params = GraphParams.from_dict(json.load(fh))
    gid, cached = store.build_cached(scene_name, params,
                                     graph_name=args.out,
                                     workers=args.workers)
    graph = store.load_graph(gid)
    return {"graph_id": gid, "name": args.out, "cached": cached,
            "report": graph.meta.get("report")}


def cmd_costs(store: ProjectStore, args) -> dict:
    gid = store.resolve_graph_id(args.graph)
    graph = store.load_graph(gid)
    coeffs = _load_coeffs(args)
    set_base_costs(graph)
    apply_cross_slope(graph, workers=args.workers)
    apply_energy(graph, clamp=coeffs.energy_clamp)
    removed = 0
    if args.cross_slope_gate:
        limit = graph.meta.get("params", {}).get("cross_slope_limit")
        if limit is None:
            raise ValueError(
                "cross-slope gate requested but params.cross_slope_limit unset")
        removed = filter_cross_slope_gate(graph, float(limit))
    store.save_graph(gid, graph)
    return {"graph_id": gid,
            "energy_clamped_edges": graph.meta.get("energy_clamped_edges", 0),
            "cross_slope_gate_removed": removed}


def cmd_viewshed(store: ProjectStore, args) -> dict:
    gid = store.resolve_graph_id(args.graph)
    graph = store.load_graph(gid)
    scene = store.get_scene(graph.meta["scene"])
    config = ViewshedConfig(eye_height=args.eye, ray_count=args.rays,
                            azimuth_span=args.azimuth,
                            elevation_span=args.elevation,
                            max_range=args.max_range, seed=args.seed)
    viewshed(graph, scene, config, workers=args.workers)
    store.save_graph(gid, graph)
    return {"graph_id": gid, "attrs": ["view_min", "view_max"],
            "config": graph.meta.get("viewshed")}


def cmd_path(store: ProjectStore, args) -> dict:
    graph = store.load_graph(args.graph)
    start = _parse_key(args.start)
    goal = _parse_key(args.goal)
    for key in (start, goal):
        if key not in graph.index_of:
            raise NotFound(f"vertex {tuple(key)} not in graph")
    result = shortest_path(graph, start, goal, _load_coeffs(args))
    if result is None:
        return {"found": False, "path": None}
    doc = {"found": True, "path": graphio.path_to_doc(graph, result)}
    if args.out:
        store.save_result(args.out, doc)
    if args.obj:
        points = [graph.positions[graph.index_of[k]]
                  for k in result.vertices]
        meshio.save_path_obj(args.obj, points)
    return doc


def cmd_heatmap(store: ProjectStore, args) -> dict:
    graph = store.load_graph(args.graph)
    metric = args.metric
    if metric.startswith("score:"):
        from .service import _parse_metric

        metric = _parse_metric(metric)
    field = compute_heatmap(graph, metric)
    if args.ply:
        meshio.save_heatmap_ply(args.ply, graph.positions, field.colors)
    return {"graph_id": store.resolve_graph_id(args.graph),
            "metric": field.metric, "vmin": field.vmin, "vmax": field.vmax,
            "vertex_count": graph.num_vertices,
            "ply": args.ply}


def cmd_export(store: ProjectStore, args) -> dict:
    graph = store.load_graph(args.graph)
    out = Path(args.out)
    if args.format == "json":
        doc = graphio.graph_to_doc(graph)
        out.write_text(graphio.dumps(doc), encoding="utf-8")
    elif args.format == "csr":
        out.write_bytes(graphio.write_csr_bytes(graph))
    else:
        raise ValueError(f"unknown format {args.format!r}")
    return {"graph_id": store.resolve_graph_id(args.graph),
            "format": args.format, "file": str(out),
            "bytes": out.stat().st_size}


def cmd_serve(store: ProjectStore, args) -> dict:
    import uvicorn

    from .service import create_app

    app = create_app(store, max_workers=args.workers)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((args.host, args.port))
    host, port = sock.getsockname()[:2]
    _emit({"serving": True, "host": host, "port": port,
           "store": str(store.root)})
    sys.stdout.flush()
    config = uvicorn.Config(app, log_level="warning")
    server = uvicorn.Server(config)
    server.run(sockets=[sock])
    return {}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="accessgraph",
        description="Accessibility graphs: build, analyze, and serve.")
    parser.add_argument("--store", default=None,
                        help="project store root (or $SHAPE_STORE)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import", help="import a mesh (or graph file)")
    p.add_argument("--mesh", help="OBJ or PLY file")
    p.add_argument("--labels", help="sidecar JSON {object name -> tag}")
    p.add_argument("--y-up", action="store_true",
                   help="convert Y-up input to Z-up")
    p.add_argument("--graph", help="binary CSR graph file to import")
    p.add_argument("--name", help="store name (default: file stem)")

    p = sub.add_parser("build", help="build a graph from a scene")
    p.add_argument("--scene", required=True,
                   help="scene name in the store, or a mesh file")
    p.add_argument("--params", required=True, help="JSON parameter file")
    p.add_argument("--out", required=True, help="graph name")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("costs", help="recompute edge costs")
    p.add_argument("--graph", required=True)
    p.add_argument("--config", help="cost config JSON")
    p.add_argument("--cross-slope-gate", action="store_true",
                   help="drop direct edges above params.cross_slope_limit")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("viewshed", help="compute per-vertex view attributes")
    p.add_argument("--graph", required=True)
    p.add_argument("--rays", type=int, default=2000)
    p.add_argument("--eye", type=float, default=1.8)
    p.add_argument("--azimuth", type=float, default=360.0)
    p.add_argument("--elevation", type=float, default=40.0)
    p.add_argument("--max-range", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("path", help="least-cost path between two vertices")
    p.add_argument("--graph", required=True)
    p.add_argument("--start", required=True, help="node key 'i,j[,level]'")
    p.add_argument("--goal", required=True)
    p.add_argument("--rho", help="JSON coefficient map")
    p.add_argument("--config", help="cost config JSON (rho + rules)")
    p.add_argument("--out", help="store the result under this name")
    p.add_argument("--obj", help="write the polyline as OBJ")

    p = sub.add_parser("heatmap", help="per-vertex metric field")
    p.add_argument("--graph", required=True)
    p.add_argument("--metric", default="view_max",
                   help="attr name or 'score:name=coeff,...'")
    p.add_argument("--ply", help="write colored PLY point cloud")

    p = sub.add_parser("export", help="export a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--format", choices=("json", "csr"), default="json")
    p.add_argument("--out", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--workers", type=int, default=None)

    return parser


_COMMANDS = {
    "import": cmd_import,
    "build": cmd_build,
    "costs": cmd_costs,
    "viewshed": cmd_viewshed,
    "path": cmd_path,
    "heatmap": cmd_heatmap,
    "export": cmd_export,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    store = ProjectStore(resolve_store_root(args.store))
    try:
        doc = _COMMANDS[args.command](store, args)
    except (AccessGraphError, ValueError, OSError, json.JSONDecodeError) as exc:
        _emit({"error": type(exc).__name__, "detail": str(exc)})
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        _emit({"error": "InternalError", "detail": repr(exc)})
        return 2
    if doc:
        _emit(doc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
