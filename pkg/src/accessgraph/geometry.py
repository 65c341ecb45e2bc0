"""Triangle-mesh scenes and the two geometric primitives everything else
consumes: nearest ray intersection and Euclidean distance.

Coordinates are meters with +z up; gravity points along -z. A Scene is
immutable once built and safe to query from any number of threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bvh import NO_HIT, Bvh
from .errors import EmptyScene, EmptyWalkableSet, SceneFormatError

EPS_GEO = 1e-6  # geometric comparison tolerance, meters
DEGENERATE_AREA = 1e-12  # square meters; triangles at or below are dropped

TAG_WALKABLE = "walkable"
TAG_OBSTACLE = "obstacle"
TAG_SURFACE_PREFIX = "surface-class:"


@dataclass
class TriangleMesh:
    """One named object: vertex positions and a triangle index list."""

    name: str
    vertices: np.ndarray  # (n, 3) float64, meters
    faces: np.ndarray  # (m, 3) int32 indices into vertices

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int32)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise SceneFormatError(f"{self.name}: vertices must be (n, 3)")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise SceneFormatError(f"{self.name}: faces must be (m, 3)")
        if len(self.faces) and (self.faces.min() < 0
                                or self.faces.max() >= len(self.vertices)):
            raise SceneFormatError(f"{self.name}: face index out of range")
        if not np.isfinite(self.vertices).all():
            raise SceneFormatError(f"{self.name}: non-finite vertex")

    def triangle_corners(self) -> np.ndarray:
        """Triangle vertices shaped (m, 3 corners, 3 coords)."""
        return self.vertices[self.faces]


@dataclass(frozen=True)
class RayHit:
    """Nearest intersection along a ray."""

    distance: float
    point: tuple[float, float, float]
    object_id: int
    triangle_id: int


@dataclass
class Scene:
    """Immutable collection of objects with a shared BVH index.

    ``walkable`` marks which objects can carry graph nodes; untagged
    objects and surface-class tags default to walkable, ``obstacle``
    opts out.
    """

    objects: list[TriangleMesh]
    labels: dict[str, str]
    walkable: np.ndarray  # (num objects,) bool
    bvh: Bvh
    degenerate_dropped: int = 0
    _bounding_sphere: tuple[np.ndarray, float] | None = field(
        default=None, repr=False)

    def tag(self, object_id: int) -> str:
        return self.labels.get(self.objects[object_id].name, TAG_WALKABLE)

    def is_walkable(self, object_id: int) -> bool:
        return bool(self.walkable[object_id])

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.bvh.bounds

    def bounding_sphere(self) -> tuple[np.ndarray, float]:
        """Center and radius of the AABB's circumscribing sphere."""
        if self._bounding_sphere is None:
            lo, hi = self.bounds
            center = (lo + hi) / 2.0
            radius = float(np.linalg.norm(hi - lo) / 2.0)
            self._bounding_sphere = (center, radius)
        return self._bounding_sphere

    def triangle_count(self) -> int:
        return len(self.bvh.tri_v0)


def _resolve_walkable(meshes: list[TriangleMesh],
                      labels: dict[str, str]) -> np.ndarray:
    flags = np.ones(len(meshes), dtype=bool)
    for i, mesh in enumerate(meshes):
        tag = labels.get(mesh.name, TAG_WALKABLE)
        if tag == TAG_WALKABLE or tag.startswith(TAG_SURFACE_PREFIX):
            flags[i] = True
        elif tag == TAG_OBSTACLE:
            flags[i] = False
        else:
            raise SceneFormatError(f"unknown label {tag!r} for {mesh.name!r}")
    return flags


def build_scene(meshes: list[TriangleMesh],
                labels: dict[str, str] | None = None) -> Scene:
    """Assemble meshes into a queryable scene.

    Zero-area triangles are dropped (counted on the scene, not an error);
    raises EmptyScene when nothing remains and EmptyWalkableSet when the
    labels leave no object walkable.
    """
    if not meshes:
        raise EmptyScene("scene requires at least one mesh")
    labels = dict(labels or {})
    names = [m.name for m in meshes]
    if len(set(names)) != len(names):
        raise SceneFormatError("object names must be unique")
    for label_name in labels:
        if label_name not in names:
            raise SceneFormatError(f"label for unknown object {label_name!r}")
    walkable = _resolve_walkable(meshes, labels)
    if not walkable.any():
        raise EmptyWalkableSet("labels leave no walkable object")

    corner_blocks = []
    obj_ids = []
    local_ids = []
    dropped = 0
    for i, mesh in enumerate(meshes):
        corners = mesh.triangle_corners()
        if len(corners) == 0:
            continue
        e1 = corners[:, 1] - corners[:, 0]
        e2 = corners[:, 2] - corners[:, 0]
        area2 = np.linalg.norm(np.cross(e1, e2), axis=1)
        keep = area2 > 2.0 * DEGENERATE_AREA
        dropped += int((~keep).sum())
        if keep.any():
            corner_blocks.append(corners[keep])
            obj_ids.append(np.full(int(keep.sum()), i, dtype=np.int32))
            local_ids.append(np.nonzero(keep)[0].astype(np.int32))
    if not corner_blocks:
        raise EmptyScene("scene has no non-degenerate triangles")

    bvh = Bvh.build(
        np.concatenate(corner_blocks),
        np.concatenate(obj_ids),
        np.concatenate(local_ids),
    )
    for mesh in meshes:
        mesh.vertices.setflags(write=False)
        mesh.faces.setflags(write=False)
    return Scene(objects=list(meshes), labels=labels, walkable=walkable,
                 bvh=bvh, degenerate_dropped=dropped)


def dst(a, b) -> float:
    """Euclidean distance between two points."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.linalg.norm(a - b))


def inter(scene: Scene, origin, direction, max_dist: float) -> RayHit | None:
    """Nearest hit along a unit-direction ray, or None within max_dist.

    Ties on distance are broken by lowest (object_id, triangle_id).
    """
    direction = np.asarray(direction, dtype=np.float64)
    if abs(np.linalg.norm(direction) - 1.0) > EPS_GEO:
        raise ValueError("direction must be a unit vector")
    t, obj, tri = scene.bvh.intersect_batch(
        np.asarray(origin, dtype=np.float64), direction, float(max_dist))
    if obj[0] == NO_HIT:
        return None
    origin = np.asarray(origin, dtype=np.float64)
    point = origin + t[0] * direction
    return RayHit(distance=float(t[0]), point=tuple(map(float, point)),
                  object_id=int(obj[0]), triangle_id=int(tri[0]))


def inter_batch(scene: Scene, origins: np.ndarray, directions: np.ndarray,
                max_dists) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized form of inter(); misses carry object_id == NO_HIT."""
    return scene.bvh.intersect_batch(origins, directions, max_dists)
