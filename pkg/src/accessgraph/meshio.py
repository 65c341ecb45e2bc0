"""Mesh file I/O: Wavefront OBJ and PLY readers, OBJ writer, polyline and
colored-PLY exports.

Units are meters with +z up. Y-up inputs can be converted on load
((x, y, z) -> (x, -z, y)). Per-object labels come from a sidecar JSON map
{object name -> tag}.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import SceneFormatError
from .geometry import TriangleMesh


def _y_up_to_z_up(vertices: np.ndarray) -> np.ndarray:
    out = np.empty_like(vertices)
    out[:, 0] = vertices[:, 0]
    out[:, 1] = -vertices[:, 2]
    out[:, 2] = vertices[:, 1]
    return out


def load_labels(path) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in data.items()):
        raise SceneFormatError("labels file must map object names to tags")
    return data


def load_obj(path, y_up: bool = False) -> list[TriangleMesh]:
    """Parse an OBJ file into one mesh per 'o'/'g' group, triangulating
    polygon faces as fans. Vertices are re-indexed per object."""
    all_vertices: list[list[float]] = []
    objects: dict[str, list[list[int]]] = {}
    current_faces: list[list[int]] | None = None

    def start_object(name: str):
        nonlocal current_faces
        current_faces = objects.setdefault(name, [])

    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise SceneFormatError(f"line {lineno}: short vertex")
                all_vertices.append([float(parts[1]), float(parts[2]),
                                     float(parts[3])])
            elif tag in ("o", "g"):
                name = parts[1] if len(parts) > 1 else f"object_{len(objects)}"
                start_object(name)
            elif tag == "f":
                if current_faces is None:
                    start_object(f"object_{len(objects)}")
                idx = []
                for chunk in parts[1:]:
                    field = chunk.split("/")[0]
                    k = int(field)
                    idx.append(k - 1 if k > 0 else len(all_vertices) + k)
                if len(idx) < 3:
                    raise SceneFormatError(f"line {lineno}: face needs 3+ verts")
                for a, b in zip(idx[1:-1], idx[2:]):
                    current_faces.append([idx[0], a, b])
            # vn / vt / usemtl / mtllib / s are irrelevant here

    verts = np.asarray(all_vertices, dtype=np.float64)
    if y_up and len(verts):
        verts = _y_up_to_z_up(verts)
    meshes = []
    for name, faces in objects.items():
        if not faces:
            continue
        face_arr = np.asarray(faces, dtype=np.int64)
        used = np.unique(face_arr)
        if used.min() < 0 or used.max() >= len(verts):
            raise SceneFormatError(f"object {name!r}: face index out of range")
        remap = {int(g): l for l, g in enumerate(used)}
        local = np.vectorize(remap.__getitem__)(face_arr)
        meshes.append(TriangleMesh(name, verts[used], local))
    if not meshes:
        raise SceneFormatError(f"{path}: no faces found")
    return meshes


def save_obj(path, meshes: list[TriangleMesh]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# accessgraph scene export\n")
        base = 1
        for mesh in meshes:
            fh.write(f"o {mesh.name}\n")
            for x, y, z in mesh.vertices:
                fh.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
            for a, b, c in mesh.faces:
                fh.write(f"f {base + a} {base + b} {base + c}\n")
            base += len(mesh.vertices)


_PLY_SCALARS = {
    "char": "b", "int8": "b", "uchar": "B", "uint8": "B",
    "short": "h", "int16": "h", "ushort": "H", "uint16": "H",
    "int": "i", "int32": "i", "uint": "I", "uint32": "I",
    "float": "f", "float32": "f", "double": "d", "float64": "d",
}


def load_ply(path, y_up: bool = False) -> TriangleMesh:
    """Parse ascii or binary little-endian PLY into a single mesh named
    after the file stem. Non-position vertex properties are skipped."""
    path = Path(path)
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"ply":
            raise SceneFormatError(f"{path}: not a PLY file")
        fmt = None
        elements: list[tuple[str, int, list]] = []
        while True:
            line = fh.readline()
            if not line:
                raise SceneFormatError(f"{path}: unexpected end of header")
            words = line.decode("ascii", "replace").strip().split()
            if not words or words[0] == "comment":
                continue
            if words[0] == "format":
                fmt = words[1]
            elif words[0] == "element":
                elements.append((words[1], int(words[2]), []))
            elif words[0] == "property":
                if not elements:
                    raise SceneFormatError(f"{path}: property before element")
                elements[-1][2].append(words[1:])
            elif words[0] == "end_header":
                break
        if fmt not in ("ascii", "binary_little_endian"):
            raise SceneFormatError(f"{path}: unsupported format {fmt!r}")

        vertices = None
        faces: list[list[int]] = []
        for name, count, props in elements:
            if name == "vertex":
                vertices = _read_ply_vertices(fh, fmt, count, props, path)
            elif name == "face":
                faces = _read_ply_faces(fh, fmt, count, props, path)
            else:
                _skip_ply_element(fh, fmt, count, props, path)
    if vertices is None or not faces:
        raise SceneFormatError(f"{path}: missing vertex or face data")
    if y_up:
        vertices = _y_up_to_z_up(vertices)
    tri = []
    for poly in faces:
        for a, b in zip(poly[1:-1], poly[2:]):
            tri.append([poly[0], a, b])
    return TriangleMesh(path.stem, vertices, np.asarray(tri, dtype=np.int64))


def _read_ply_vertices(fh, fmt, count, props, path):
    names = []
    codes = []
    for p in props:
        if p[0] == "list":
            raise SceneFormatError(f"{path}: list property on vertices")
        names.append(p[1])
        codes.append(_PLY_SCALARS[p[0]])
    for axis in ("x", "y", "z"):
        if axis not in names:
            raise SceneFormatError(f"{path}: vertex missing {axis}")
    ix, iy, iz = names.index("x"), names.index("y"), names.index("z")
    out = np.empty((count, 3), dtype=np.float64)
    if fmt == "ascii":
        for k in range(count):
            fields = fh.readline().split()
            out[k] = [float(fields[ix]), float(fields[iy]), float(fields[iz])]
    else:
        rec = struct.Struct("<" + "".join(codes))
        raw = fh.read(rec.size * count)
        for k in range(count):
            values = rec.unpack_from(raw, k * rec.size)
            out[k] = [values[ix], values[iy], values[iz]]
    return out


def _read_ply_faces(fh, fmt, count, props, path):
    if not props or props[0][0] != "list":
        raise SceneFormatError(f"{path}: face element must be a list property")
    count_code = _PLY_SCALARS[props[0][1]]
    index_code = _PLY_SCALARS[props[0][2]]
    faces = []
    if fmt == "ascii":
        for _ in range(count):
            fields = fh.readline().split()
            n = int(fields[0])
            faces.append([int(v) for v in fields[1:1 + n]])
    else:
        count_st = struct.Struct("<" + count_code)
        for _ in range(count):
            n = count_st.unpack(fh.read(count_st.size))[0]
            idx_st = struct.Struct(f"<{n}{index_code}")
            faces.append(list(idx_st.unpack(fh.read(idx_st.size))))
    return faces


def _skip_ply_element(fh, fmt, count, props, path):
    if fmt == "ascii":
        for _ in range(count):
            fh.readline()
        return
    if any(p[0] == "list" for p in props):
        raise SceneFormatError(f"{path}: cannot skip binary list element")
    rec = struct.Struct("<" + "".join(_PLY_SCALARS[p[0]] for p in props))
    fh.read(rec.size * count)


def load_meshes(path, y_up: bool = False) -> list[TriangleMesh]:
    """Dispatch on extension: .obj or .ply."""
    suffix = Path(path).suffix.lower()
    if suffix == ".obj":
        return load_obj(path, y_up=y_up)
    if suffix == ".ply":
        return [load_ply(path, y_up=y_up)]
    raise SceneFormatError(f"unsupported mesh format {suffix!r}")


def save_heatmap_ply(path, positions: np.ndarray, colors: np.ndarray) -> None:
    """Binary PLY point cloud with uchar RGB per vertex."""
    positions = np.asarray(positions, dtype=np.float32)
    colors = np.asarray(colors, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"ply\nformat binary_little_endian 1.0\n")
        fh.write(f"element vertex {len(positions)}\n".encode())
        fh.write(b"property float x\nproperty float y\nproperty float z\n")
        fh.write(b"property uchar red\nproperty uchar green\n"
                 b"property uchar blue\nend_header\n")
        rec = struct.Struct("<fffBBB")
        for (x, y, z), (r, g, b) in zip(positions, colors):
            fh.write(rec.pack(x, y, z, r, g, b))


def save_path_obj(path, points: np.ndarray, lift: float = 0.02) -> None:
    """Polyline OBJ for a path; slightly lifted so it renders above the
    supporting surface."""
    points = np.asarray(points, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("o path\n")
        for x, y, z in points:
            fh.write(f"v {x:.17g} {y:.17g} {z + lift:.17g}\n")
        if len(points) >= 2:
            fh.write("l " + " ".join(str(k + 1)
                                     for k in range(len(points))) + "\n")
