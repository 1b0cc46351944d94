"""3D car model ingestion and catalog management.

Model frame convention: x right, y up, z forward, meters.  parse_obj
normalizes every mesh so the wheels touch y = 0 and the vertex centroid
sits at x = z = 0; placement can then drop a model onto the ground plane
without per-model offsets.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .errors import EmptyMesh, IndexOutOfRange, MalformedRecord, OffPlanePose

if TYPE_CHECKING:
    from .placement import PoseSample

CATEGORIES = ("suv", "sedan", "hatchback", "station-wagon", "mini-van", "van", "other")

ROUGHNESS_FLAGS = ("mirror", "diffuse-only")


@dataclass
class TriangleMesh:
    """Indexed triangle mesh with per-corner normals."""

    vertices: np.ndarray  # (V, 3) float64
    normals: np.ndarray  # (N, 3) float64, unit
    tri_vertices: np.ndarray  # (T, 3) int32 indices into vertices
    tri_normals: np.ndarray  # (T, 3) int32 indices into normals

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        self.tri_vertices = np.asarray(self.tri_vertices, dtype=np.int32).reshape(-1, 3)
        self.tri_normals = np.asarray(self.tri_normals, dtype=np.int32).reshape(-1, 3)
        if len(self.tri_vertices) == 0 or len(self.vertices) == 0:
            raise EmptyMesh("mesh has no geometry")
        if self.tri_vertices.min() < 0 or self.tri_vertices.max() >= len(self.vertices):
            raise ValueError("triangle vertex index out of range")
        if self.tri_normals.min() < 0 or self.tri_normals.max() >= len(self.normals):
            raise ValueError("triangle normal index out of range")
        lengths = np.linalg.norm(self.normals, axis=1)
        if np.any(np.abs(lengths - 1.0) > 1e-6):
            raise ValueError("normals must be unit length")

    @property
    def triangle_count(self) -> int:
        return len(self.tri_vertices)

    def bounds(self):
        """(min, max) corners of the axis-aligned bounding box, model frame."""
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


@dataclass
class CarModel:
    mesh: TriangleMesh
    category: str
    name: str

    def __post_init__(self):
        self.category = str(self.category).lower()
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}, expected one of {CATEGORIES}")


@dataclass
class Material:
    """Shading inputs: linear-space body color plus one specular lobe."""

    base_color: np.ndarray  # (3,) linear RGB in [0, 1]
    specular_weight: float = 1.0
    roughness_flag: str = "mirror"

    def __post_init__(self):
        self.base_color = np.asarray(self.base_color, dtype=np.float64).reshape(3)
        if np.any(self.base_color < 0) or np.any(self.base_color > 1):
            raise ValueError(f"base_color out of [0,1]: {self.base_color}")
        if not 0 <= self.specular_weight <= 1:
            raise ValueError(f"specular_weight out of [0,1]: {self.specular_weight}")
        if self.roughness_flag not in ROUGHNESS_FLAGS:
            raise ValueError(f"roughness_flag must be one of {ROUGHNESS_FLAGS}")


@dataclass
class Catalog:
    models: list
    palette: np.ndarray  # (P, 3) linear RGB

    def __post_init__(self):
        if len(self.models) == 0:
            raise ValueError("catalog needs at least one model")
        self.palette = np.asarray(self.palette, dtype=np.float64).reshape(-1, 3)
        if len(self.palette) == 0:
            raise ValueError("catalog needs at least one palette color")
        if self.palette.min() < 0 or self.palette.max() > 1:
            raise ValueError("palette colors must be linear RGB in [0, 1]")


def _parse_floats(parts, n, line_no):
    if len(parts) < n:
        raise MalformedRecord(line_no, f"expected {n} values, got {len(parts)}")
    try:
        return [float(p) for p in parts[:n]]
    except ValueError as exc:
        raise MalformedRecord(line_no, str(exc)) from None


def _resolve_index(raw: str, count: int, line_no: int) -> int:
    """1-based (or negative relative) OBJ index to 0-based."""
    try:
        idx = int(raw)
    except ValueError:
        raise MalformedRecord(line_no, f"bad index {raw!r}") from None
    if idx == 0:
        raise IndexOutOfRange(line_no, "OBJ indices are 1-based, got 0")
    resolved = count + idx if idx < 0 else idx - 1
    if not 0 <= resolved < count:
        raise IndexOutOfRange(line_no, f"index {idx} outside 1..{count}")
    return resolved


def parse_obj(text) -> TriangleMesh:
    """Parse the v / vn / f subset of Wavefront OBJ into a normalized mesh.

    Faces with more than three corners are fan-triangulated.  Faces
    without normal indices get a computed per-face normal.  The mesh is
    translated so min y = 0 and the vertex centroid has x = z = 0.
    """
    if hasattr(text, "read"):
        text = text.read()

    vertices: list = []
    normals: list = []
    faces = []  # (line_no, [(v_idx, n_idx or None), ...])

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        cmd = parts[0]
        if cmd == "v":
            vertices.append(_parse_floats(parts[1:], 3, line_no))
        elif cmd == "vn":
            n = np.array(_parse_floats(parts[1:], 3, line_no))
            length = np.linalg.norm(n)
            if length < 1e-12:
                raise MalformedRecord(line_no, "zero-length normal")
            normals.append(n / length)
        elif cmd == "f":
            if len(parts) < 4:
                raise MalformedRecord(line_no, "face needs at least 3 vertices")
            corners = []
            for token in parts[1:]:
                fields = token.split("/")
                v_idx = _resolve_index(fields[0], len(vertices), line_no)
                n_idx = None
                if len(fields) >= 3 and fields[2]:
                    n_idx = _resolve_index(fields[2], len(normals), line_no)
                corners.append((v_idx, n_idx))
            faces.append((line_no, corners))
        # other record types (vt, o, g, s, usemtl, ...) are ignored

    if not vertices or not faces:
        raise EmptyMesh("no vertices or faces found")

    verts = np.asarray(vertices, dtype=np.float64)
    norm_list = [np.asarray(n) for n in normals]
    tri_v = []
    tri_n = []

    for line_no, corners in faces:
        has_normals = all(n_idx is not None for _, n_idx in corners)
        face_normal_idx = None
        if not has_normals:
            a, b, c = (verts[corners[i][0]] for i in range(3))
            fn = np.cross(b - a, c - a)
            length = np.linalg.norm(fn)
            fn = fn / length if length > 1e-12 else np.array([0.0, 1.0, 0.0])
            norm_list.append(fn)
            face_normal_idx = len(norm_list) - 1
        for i in range(1, len(corners) - 1):
            fan = (corners[0], corners[i], corners[i + 1])
            tri_v.append([c[0] for c in fan])
            if has_normals:
                tri_n.append([c[1] for c in fan])
            else:
                tri_n.append([face_normal_idx] * 3)

    # normalize: ground contact at y = 0, centroid over the origin
    centroid = verts.mean(axis=0)
    verts = verts - np.array([centroid[0], verts[:, 1].min(), centroid[2]])

    return TriangleMesh(
        vertices=verts,
        normals=np.asarray(norm_list),
        tri_vertices=np.asarray(tri_v, dtype=np.int32),
        tri_normals=np.asarray(tri_n, dtype=np.int32),
    )


def serialize_obj(mesh: TriangleMesh) -> str:
    """Inverse of parse_obj (round-trips exactly via repr floats)."""
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
    for n in mesh.normals:
        lines.append(f"vn {float(n[0])!r} {float(n[1])!r} {float(n[2])!r}")
    for tv, tn in zip(mesh.tri_vertices, mesh.tri_normals):
        lines.append(
            "f " + " ".join(f"{tv[i] + 1}//{tn[i] + 1}" for i in range(3))
        )
    return "\n".join(lines) + "\n"


def load_catalog(path) -> Catalog:
    """Load a catalog manifest: {"models": [{"path", "category", "name"?}], "palette": [[r,g,b],...]}.

    Model paths are resolved relative to the manifest file.
    """
    path = Path(path)
    spec = json.loads(path.read_text())
    models = []
    for entry in spec["models"]:
        obj_path = Path(entry["path"])
        if not obj_path.is_absolute():
            obj_path = path.parent / obj_path
        mesh = parse_obj(obj_path.read_text())
        models.append(
            CarModel(
                mesh=mesh,
                category=entry["category"],
                name=entry.get("name", obj_path.stem),
            )
        )
    return Catalog(models=models, palette=np.asarray(spec["palette"], dtype=np.float64))


def catalog_sample(catalog: Catalog, rng: np.random.Generator):
    """Draw (model, material) uniformly: model index first, then body color."""
    model = catalog.models[int(rng.integers(len(catalog.models)))]
    color = catalog.palette[int(rng.integers(len(catalog.palette)))]
    return model, Material(base_color=color.copy())


@dataclass(frozen=True)
class OrientedRect:
    """Convex quad in ground-plane (x, z) coordinates, counter-clockwise."""

    corners: np.ndarray  # (4, 2)

    def axes(self) -> np.ndarray:
        e = np.array([self.corners[1] - self.corners[0], self.corners[2] - self.corners[1]])
        lengths = np.linalg.norm(e, axis=1, keepdims=True)
        return e / np.maximum(lengths, 1e-12)

    def intersects(self, other: "OrientedRect") -> bool:
        """Separating-axis test for two oriented rectangles."""
        for axis in np.vstack([self.axes(), other.axes()]):
            a = self.corners @ axis
            b = other.corners @ axis
            if a.max() < b.min() or b.max() < a.min():
                return False
        return True


def footprint(model: CarModel, pose: "PoseSample") -> OrientedRect:
    """Ground rectangle of a model under an on-plane pose.

    The model-frame (x, z) bounding box is rotated by the pose yaw and
    translated to the pose's ground position.
    """
    if pose.kind != "on_plane":
        raise OffPlanePose("footprints are defined for on-plane poses only")
    lo, hi = model.mesh.bounds()
    corners = np.array(
        [
            [lo[0], lo[2]],
            [hi[0], lo[2]],
            [hi[0], hi[2]],
            [lo[0], hi[2]],
        ]
    )
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    rot = np.array([[c, -s], [s, c]])
    center = np.array([pose.position[0], pose.position[2]])
    return OrientedRect(corners=corners @ rot.T + center)
