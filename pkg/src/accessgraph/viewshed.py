"""Per-vertex visibility attributes from a deterministic ray fan.

Each vertex launches the same seeded Fibonacci-lattice direction set from
eye height; the shortest and longest hit distances become the ``view_min``
and ``view_max`` node attributes. Rays that miss everything contribute the
maximum range. Vertices are independent, so the work parallelizes without
affecting the result.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .geometry import Scene, inter_batch
from .graph import AccessGraph

_GOLDEN_FRAC = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class ViewshedConfig:
    eye_height: float = 1.8
    ray_count: int = 2000
    azimuth_span: float = 360.0
    elevation_span: float = 40.0  # plus/minus band, degrees
    max_range: float | None = None  # default: scene bounding-sphere diameter
    seed: int = 0

    def __post_init__(self):
        if self.ray_count <= 0:
            raise ValueError("ray_count must be positive")
        if not 0.0 < self.azimuth_span <= 360.0:
            raise ValueError("azimuth_span must lie in (0, 360]")
        if not 0.0 <= self.elevation_span <= 90.0:
            raise ValueError("elevation_span must lie in [0, 90]")
        if self.max_range is not None and not self.max_range > 0:
            raise ValueError("max_range must be positive")

    def to_dict(self) -> dict:
        return {
            "eye_height": self.eye_height,
            "ray_count": self.ray_count,
            "azimuth_span": self.azimuth_span,
            "elevation_span": self.elevation_span,
            "max_range": self.max_range,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ViewshedConfig":
        return cls(**data)


def viewshed_directions(config: ViewshedConfig) -> np.ndarray:
    """Low-discrepancy unit directions inside the azimuth/elevation band.

    Elevations are uniform in sin(elevation) (uniform solid angle within
    the band); azimuths follow the golden-ratio lattice rotated by a
    seeded offset, so a fixed seed fixes the whole fan.
    """
    n = config.ray_count
    rng = np.random.default_rng(config.seed)
    az0 = rng.uniform(0.0, 2.0 * math.pi)
    k = np.arange(n, dtype=np.float64)
    z_hi = math.sin(math.radians(config.elevation_span))
    z = -z_hi + (2.0 * z_hi) * (k + 0.5) / n
    az = az0 + math.radians(config.azimuth_span) * ((k * _GOLDEN_FRAC) % 1.0)
    cos_el = np.sqrt(1.0 - z * z)
    return np.column_stack([cos_el * np.cos(az), cos_el * np.sin(az), z])


def viewshed(graph: AccessGraph, scene: Scene,
             config: ViewshedConfig | None = None,
             workers: int = 1) -> AccessGraph:
    """Attach view_min / view_max attributes to every vertex."""
    config = config or ViewshedConfig()
    directions = viewshed_directions(config)
    if config.max_range is not None:
        max_range = float(config.max_range)
    else:
        _, radius = scene.bounding_sphere()
        max_range = 2.0 * radius
    positions = graph.positions
    nv = graph.num_vertices
    view_min = np.empty(nv)
    view_max = np.empty(nv)
    n_rays = len(directions)
    # several vertices share one traversal batch; per-ray results are
    # independent of batch composition, so grouping is free
    group = max(1, 32768 // n_rays)

    def run(vertex_ids):
        for lo in range(0, len(vertex_ids), group):
            chunk = vertex_ids[lo:lo + group]
            origins = positions[chunk] + [0.0, 0.0, config.eye_height]
            t, _, _ = inter_batch(
                scene, np.repeat(origins, n_rays, axis=0),
                np.tile(directions, (len(chunk), 1)), max_range)
            t = t.reshape(len(chunk), n_rays)
            view_min[chunk] = t.min(axis=1)
            view_max[chunk] = t.max(axis=1)

    ids = np.arange(nv)
    if workers > 1 and nv > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, [ids[k::workers] for k in range(workers)]))
    else:
        run(ids)

    graph.node_attrs["view_min"] = view_min
    graph.node_attrs["view_max"] = view_max
    graph.meta["viewshed"] = config.to_dict() | {"max_range": max_range}
    return graph
