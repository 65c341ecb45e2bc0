"""Procedural scenes used by the demo scripts and the test suite.

Everything is desk-scale and deterministic: flat floors, stairs, ramps,
a kitchen, a small multi-room interior, and synthetic terrain.
"""

from __future__ import annotations

import numpy as np

from .geometry import Scene, TriangleMesh, build_scene


# -- mesh primitives ----------------------------------------------------------


def make_quad(name: str, x0: float, y0: float, x1: float, y1: float,
              z: float = 0.0) -> TriangleMesh:
    """Axis-aligned horizontal rectangle split into two triangles."""
    vertices = np.array([
        [x0, y0, z], [x1, y0, z], [x1, y1, z], [x0, y1, z]])
    faces = np.array([[0, 1, 2], [0, 2, 3]])
    return TriangleMesh(name, vertices, faces)


def make_box(name: str, lo, hi) -> TriangleMesh:
    """Closed axis-aligned box."""
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    vertices = np.array([
        [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
        [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1]])
    faces = np.array([
        [0, 2, 1], [0, 3, 2],  # bottom
        [4, 5, 6], [4, 6, 7],  # top
        [0, 1, 5], [0, 5, 4],  # y0 side
        [2, 3, 7], [2, 7, 6],  # y1 side
        [1, 2, 6], [1, 6, 5],  # x1 side
        [3, 0, 4], [3, 4, 7],  # x0 side
    ])
    return TriangleMesh(name, vertices, faces)


def make_heightfield(name: str, x0: float, x1: float, y0: float, y1: float,
                     nx: int, ny: int, z_fn) -> TriangleMesh:
    """Regular-grid surface with z = z_fn(x, y) evaluated vectorized."""
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    gz = z_fn(gx, gy)
    vertices = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    faces = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            a = i * ny + j
            b = (i + 1) * ny + j
            faces.append([a, b, b + 1])
            faces.append([a, b + 1, a + 1])
    return TriangleMesh(name, vertices, np.array(faces))


def make_icosphere(name: str, radius: float, subdivisions: int = 3,
                   center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Icosahedron subdivided and projected onto a sphere."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [tuple(v) for v in verts]
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = np.array(verts[a]) + np.array(verts[b])
                m /= np.linalg.norm(m)
                cache[key] = len(verts)
                verts.append(tuple(m))
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    vertices = np.array(verts) * radius + np.asarray(center, dtype=np.float64)
    return TriangleMesh(name, vertices, np.array(faces))


# -- scenes -------------------------------------------------------------------


def unit_quad_scene() -> Scene:
    return build_scene([make_quad("floor", 0.0, 0.0, 1.0, 1.0)])


def flat_floor_scene(half: float = 5.1) -> Scene:
    """Open floor; with the default half-extent nodes span 10 m x 10 m."""
    return build_scene([make_quad("floor", -half, -half, half, half)])


def floor_with_hole_scene() -> Scene:
    """Floor with a 1 m square opening centered on the origin."""
    parts = [
        make_quad("floor_w", -3.0, -3.0, -0.5, 3.0),
        make_quad("floor_e", 0.5, -3.0, 3.0, 3.0),
        make_quad("floor_s", -0.5, -3.0, 0.5, -0.5),
        make_quad("floor_n", -0.5, 0.5, 0.5, 3.0),
    ]
    return build_scene(parts)


def two_box_scene() -> Scene:
    """Open floor with two labeled obstacles that shadow node placement."""
    meshes = [
        make_quad("floor", -4.1, -4.1, 4.1, 4.1),
        make_box("box_a", (-2.2, -0.8, 0.0), (-0.9, 0.8, 0.6)),
        make_box("box_b", (0.9, -2.2, 0.0), (2.2, -0.7, 0.8)),
    ]
    return build_scene(meshes, {"box_a": "obstacle", "box_b": "obstacle"})


def wall_scene(gap: bool = False) -> Scene:
    """Floor split by a tall wall; optionally with a 1 m doorway."""
    meshes = [make_quad("floor", -3.1, -3.1, 3.1, 3.1)]
    if gap:
        meshes.append(make_box("wall_w", (-3.1, -0.1, 0.0), (-0.5, 0.1, 2.2)))
        meshes.append(make_box("wall_e", (0.5, -0.1, 0.0), (3.1, 0.1, 2.2)))
    else:
        meshes.append(make_box("wall", (-3.1, -0.1, 0.0), (3.1, 0.1, 2.2)))
    return build_scene(meshes)


def stairs_scene(risers: int = 12, rise: float = 0.15, tread: float = 0.25,
                 width: float = 2.0) -> Scene:
    """Straight stair between two landings, rising along +y."""
    meshes = [make_quad("lower", -width / 2, -2.0, width / 2, 0.0)]
    for k in range(1, risers + 1):
        meshes.append(make_box(
            f"step_{k:02d}",
            (-width / 2, (k - 1) * tread, 0.0),
            (width / 2, k * tread, k * rise)))
    top_y = risers * tread
    meshes.append(make_box(
        "upper",
        (-width / 2, top_y, 0.0),
        (width / 2, top_y + 2.0, risers * rise)))
    return build_scene(meshes)


def narrow_ramp_scene(angle_deg: float = 40.0, width: float = 0.2,
                      length: float = 5.0) -> Scene:
    """A strip ramp too narrow for lateral neighbors, pitched along +y."""
    slope = np.tan(np.radians(angle_deg))
    vertices = np.array([
        [-width / 2, -length / 2, -slope * length / 2],
        [width / 2, -length / 2, -slope * length / 2],
        [width / 2, length / 2, slope * length / 2],
        [-width / 2, length / 2, slope * length / 2]])
    faces = np.array([[0, 1, 2], [0, 2, 3]])
    return build_scene([TriangleMesh("ramp", vertices, faces)])


def one_way_ramp_scene(angle_deg: float = 30.0) -> Scene:
    """Plateau, descending ramp, lower floor; one long walkable strip.

    With slope limits between the ramp pitch going down and up, edges on
    the ramp exist only in the descending direction. The default pitch is
    steep enough that even the longer diagonal runs fail a 20 degree
    ascent limit (tan 30 > sqrt(2) tan 20).
    """
    run = 2.0
    drop = run * np.tan(np.radians(angle_deg))

    def z_fn(x, y):
        t = np.clip(y / run, 0.0, 1.0)
        return drop * (1.0 - t)

    # grid step 0.1 so the grade breaks at y = 0 and y = run fall on
    # mesh lines exactly
    mesh = make_heightfield("strip", -1.1, 1.1, -3.0, 5.0, 23, 81, z_fn)
    return build_scene([mesh])


def wedge_scene(angle_deg: float = 30.0) -> Scene:
    """Flat approach that tips into a constant downhill grade at y = 0."""
    slope = np.tan(np.radians(angle_deg))

    def z_fn(x, y):
        return np.where(y > 0.0, -slope * y, 0.0)

    return build_scene(
        [make_heightfield("wedge", -2.0, 2.0, -2.0, 2.0, 17, 33, z_fn)])


def curb_scene(height: float = 0.10, width: float = 0.02) -> Scene:
    """Flat floor with a thin raised strip across it (step-over case)."""
    return build_scene([
        make_quad("floor", -2.1, -2.1, 2.1, 2.1),
        make_box("curb", (-2.1, -width / 2, 0.0), (2.1, width / 2, height)),
    ])


def blocked_drop_scene() -> Scene:
    """A bump right after the parent followed by a drop at the child: both
    the direct cast and the raised retries are blocked."""
    return build_scene([
        make_quad("upper", -2.0, -2.0, 0.125, 2.0, 0.3),
        make_box("bump", (0.13, -2.0, 0.0), (0.20, 2.0, 0.9)),
        make_quad("lower", 0.21, -2.0, 2.0, 2.0, 0.0),
    ])


def hill_scene(half: float = 2.3, amplitude: float = 0.45,
               sigma: float = 0.9) -> Scene:
    """Gaussian bump centered between the usual west/east path endpoints.

    The default shape keeps the peak gradient near 0.30 (inside default
    slope limits and the energy fit range) and the crest curvature low
    enough that node-to-node segments clear the surface.
    """

    def z_fn(x, y):
        return amplitude * np.exp(-(x ** 2 + y ** 2) / (2.0 * sigma ** 2))

    mesh = make_heightfield("terrain", -half, half, -half, half, 38, 38, z_fn)
    return build_scene([mesh])


def ramp_corner_scene(pitch: float = 0.25, ramp_len: float = 4.0,
                      flat_len: float = 4.0, width: float = 4.0) -> Scene:
    """Ramp rising along +y into a flat plateau (cross-slope study)."""

    def z_fn(x, y):
        return pitch * np.clip(y, 0.0, ramp_len)

    # grid step 0.1 keeps the ramp/plateau crease on mesh lines
    nx = int(round((width + 0.2) / 0.1)) + 1
    ny = int(round((ramp_len + flat_len + 0.2) / 0.1)) + 1
    mesh = make_heightfield(
        "ramp", -0.1, width + 0.1, -0.1, ramp_len + flat_len + 0.1,
        nx, ny, z_fn)
    return build_scene([mesh])


def uniform_ramp_scene(pitch: float = 0.1, half: float = 2.1) -> Scene:
    """Single plane pitched along +y (z = pitch * y)."""

    def z_fn(x, y):
        return pitch * y

    n = int(round(2 * half / 0.1)) + 1
    return build_scene(
        [make_heightfield("ramp", -half, half, -half, half, n, n, z_fn)])


def corridor_scene(width: float = 1.2, length: float = 10.0) -> Scene:
    """Straight corridor, open at both ends and above."""
    return build_scene([
        make_quad("floor", -width / 2, 0.0, width / 2, length),
        make_box("wall_w", (-width / 2 - 0.1, 0.0, 0.0),
                 (-width / 2, length, 2.6)),
        make_box("wall_e", (width / 2, 0.0, 0.0),
                 (width / 2 + 0.1, length, 2.6)),
    ])


def sphere_shell_scene(radius: float = 5.0, subdivisions: int = 4) -> Scene:
    return build_scene([make_icosphere("shell", radius, subdivisions)])


def kitchen_scene(island: bool = False) -> tuple[Scene, dict[str, tuple]]:
    """Kitchen floor with counter runs and appliance way-points.

    Counters are plain unlabeled boxes: they are excluded from the graph by
    geometry alone (their tops are above any step limit). Returns the scene
    and floor-level points adjacent to the sink, stove, and refrigerator.
    """
    # Floor 4.4 x 3.4; counters 0.6 deep / 0.9 high along the west and
    # south walls; refrigerator box in the north-west corner.
    meshes = [
        make_quad("floor", 0.0, 0.0, 4.4, 3.4),
        make_box("counter_w", (0.0, 0.0, 0.0), (0.6, 2.4, 0.9)),
        make_box("counter_s", (0.6, 0.0, 0.0), (4.4, 0.6, 0.9)),
        make_box("fridge", (0.0, 2.6, 0.0), (0.7, 3.4, 1.9)),
    ]
    if island:
        meshes.append(make_box("island", (1.7, 1.3, 0.0), (3.1, 2.1, 0.9)))
    points = {
        "sink": (1.0, 1.6, 0.0),     # east of the west counter run
        "stove": (2.6, 1.0, 0.0),    # north of the south counter run
        "fridge": (1.1, 3.0, 0.0),   # east of the refrigerator
    }
    return build_scene(meshes), points


def building_scene() -> tuple[Scene, dict[str, tuple]]:
    """Two rooms joined by a corridor, with door gaps; tall unlabeled walls.

    Returns the scene plus way-points in opposite rooms for path studies.
    """
    t = 0.12  # wall thickness
    h = 2.6
    meshes = [
        make_quad("floor", 0.0, 0.0, 12.0, 8.0),
        # perimeter
        make_box("wall_s", (0.0, 0.0, 0.0), (12.0, t, h)),
        make_box("wall_n", (0.0, 8.0 - t, 0.0), (12.0, 8.0, h)),
        make_box("wall_w", (0.0, t, 0.0), (t, 8.0 - t, h)),
        make_box("wall_e", (12.0 - t, t, 0.0), (12.0, 8.0 - t, h)),
        # corridor along y in [3.1, 4.9]: 1.8 m wide so a center lane
        # keeps more than 0.63 m of side clearance; doors are 1.4 m
        make_box("wall_c_s1", (0.0, 3.1, 0.0), (3.0, 3.1 + t, h)),
        make_box("wall_c_s2", (4.4, 3.1, 0.0), (12.0, 3.1 + t, h)),
        make_box("wall_c_n1", (0.0, 4.9 - t, 0.0), (7.4, 4.9, h)),
        make_box("wall_c_n2", (8.8, 4.9 - t, 0.0), (12.0, 4.9, h)),
        # room dividers
        make_box("wall_s_mid", (6.0, t, 0.0), (6.0 + t, 2.2, h)),
        make_box("wall_n_mid", (5.0, 5.8, 0.0), (5.0 + t, 8.0 - t, h)),
    ]
    points = {
        "room_sw": (1.5, 1.5, 0.0),
        "room_ne": (10.5, 6.5, 0.0),
        "corridor": (6.0, 4.0, 0.0),
    }
    return build_scene(meshes), points


def two_floor_scene() -> Scene:
    """Stacked floors joined by a straight stair (multi-level identity)."""
    rise, tread, steps = 0.15, 0.25, 20
    top = rise * steps  # 3.0 m
    meshes = [
        make_quad("lower", 0.0, 0.0, 8.0, 4.0, 0.0),
        make_quad("upper", 0.0, 0.0, 8.0, 4.0, top),
    ]
    # stair climbing +x along the south edge, starting at x = 1.0
    for k in range(1, steps):
        meshes.append(make_box(
            f"step_{k:02d}",
            (1.0 + (k - 1) * tread, 4.0, 0.0),
            (1.0 + k * tread, 5.2, k * rise)))
    meshes.append(make_box(
        "landing", (1.0 + (steps - 1) * tread, 4.0, 0.0),
        (8.0, 5.2, top)))
    return build_scene(meshes)
