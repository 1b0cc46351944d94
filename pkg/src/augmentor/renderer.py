"""Ray-traced car rendering under image-based lighting.

Single-bounce shading: cosine-weighted diffuse environment gathering
plus one mirror specular lobe with a Schlick fresnel (F0 = 0.04).
Output is a premultiplied linear RGBA layer with depth, instance ids,
a ground shadow factor, and per-instance isolated coverage used later
for visibility bookkeeping.

Determinism: every pixel owns counter-based RNG streams keyed by
(seed, image_index, x, y, purpose), so results are bit-identical for
any tiling or thread count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .bvh import Bvh, FlatBvh, build_flat
from .envmap import EnvironmentMap
from .errors import DuplicateInstanceId, NonUnitDirection
from .geometry import GroundPlane
from .placement import pose_transform
from .rng import MASK64, seeded_pixel_rng  # noqa: F401  (re-exported op)


@dataclass
class SceneInstance:
    model: object  # CarModel
    material: object  # Material
    pose: object  # PoseSample
    instance_id: int

    def __post_init__(self):
        if self.instance_id <= 0:
            raise ValueError("instance_id must be a positive integer")


@dataclass
class RenderSettings:
    samples_per_pixel: int = 4
    diffuse_env_samples: int = 64
    shadow_samples: int = 32
    enable_shadows: bool = True
    rng_seed: int = 0
    max_shadow: float = 0.6

    def __post_init__(self):
        for name in ("samples_per_pixel", "diffuse_env_samples", "shadow_samples"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 <= self.max_shadow <= 1.0:
            raise ValueError("max_shadow must be in [0, 1]")


@dataclass
class RenderLayer:
    color: np.ndarray  # (H, W, 4) premultiplied linear RGBA
    depth: np.ndarray  # (H, W) camera-space z, +inf where no hit
    instance_ids: np.ndarray  # (H, W) int32, 0 = none
    shadow_alpha: np.ndarray  # (H, W) ground darkening in [0, 1]
    # per-instance coverage as if each car were rendered alone; row k
    # corresponds to instance_order[k]
    isolated_alpha: Optional[np.ndarray] = None  # (K, H, W)
    instance_order: list = field(default_factory=list)

    @property
    def alpha(self) -> np.ndarray:
        return self.color[:, :, 3]

    @property
    def shape(self):
        return self.depth.shape

    def validate(self):
        """Check the buffer consistency invariants; raises on violation."""
        alpha = self.alpha
        hit = alpha > 0
        if not np.array_equal(hit, self.instance_ids != 0):
            raise ValueError("alpha support and instance id support differ")
        if not np.array_equal(hit, np.isfinite(self.depth)):
            raise ValueError("alpha support and finite depth support differ")
        if np.any(self.color[:, :, :3] > alpha[:, :, None] + 1e-9):
            raise ValueError("color not premultiplied (channel exceeds alpha)")
        if np.any(self.shadow_alpha[hit] > 0):
            raise ValueError("shadow_alpha overlaps car silhouettes")
        if self.shadow_alpha.min() < 0 or self.shadow_alpha.max() > 1:
            raise ValueError("shadow_alpha out of [0, 1]")


@dataclass
class Hit:
    instance_id: int
    t: float
    point: np.ndarray
    normal: np.ndarray
    triangle: int


def empty_layer(height: int, width: int) -> RenderLayer:
    return RenderLayer(
        color=np.zeros((height, width, 4)),
        depth=np.full((height, width), np.inf),
        instance_ids=np.zeros((height, width), dtype=np.int32),
        shadow_alpha=np.zeros((height, width)),
        isolated_alpha=np.zeros((0, height, width)),
        instance_order=[],
    )


def _check_unique_ids(instances):
    ids = [inst.instance_id for inst in instances]
    if len(set(ids)) != len(ids):
        raise DuplicateInstanceId(f"instance ids not unique: {sorted(ids)}")


def _world_triangles(instance, plane: GroundPlane):
    mesh = instance.model.mesh
    r, t = pose_transform(instance.pose, plane)
    verts = mesh.vertices @ r.T + t
    norms = mesh.normals @ r.T
    tv = verts[mesh.tri_vertices]
    tn = norms[mesh.tri_normals]
    return np.ascontiguousarray(tv), np.ascontiguousarray(tn)


def build_bvh(instances, plane: GroundPlane) -> Bvh:
    """World-space acceleration structure over all instances."""
    _check_unique_ids(instances)
    ordered = sorted(instances, key=lambda i: i.instance_id)
    tv_parts, tn_parts, inst_parts, local_parts = [], [], [], []
    for inst in ordered:
        tv, tn = _world_triangles(inst, plane)
        tv_parts.append(tv)
        tn_parts.append(tn)
        inst_parts.append(np.full(len(tv), inst.instance_id, dtype=np.int32))
        local_parts.append(np.arange(len(tv), dtype=np.int32))
    if tv_parts:
        tv = np.concatenate(tv_parts)
        tn = np.concatenate(tn_parts)
        tri_instance = np.concatenate(inst_parts)
        tri_local = np.concatenate(local_parts)
    else:
        tv = np.zeros((0, 3, 3))
        tn = np.zeros((0, 3, 3))
        tri_instance = np.zeros(0, dtype=np.int32)
        tri_local = np.zeros(0, dtype=np.int32)
    return Bvh(flat=build_flat(tv), tri_verts=tv, tri_normals=tn,
               tri_instance=tri_instance, tri_local=tri_local)


def _row_index(bvh: Bvh) -> np.ndarray:
    """Rank of each triangle's instance id (ids ascending -> rows 0..K-1)."""
    unique = np.unique(bvh.tri_instance)
    return np.searchsorted(unique, bvh.tri_instance).astype(np.int32)


def trace(origin, direction, bvh: Bvh) -> Optional[Hit]:
    """Nearest intersection along a ray, or None.

    Coincident hits (t within 1e-12) resolve to the lowest instance id,
    then the lowest triangle index.
    """
    o = np.asarray(origin, dtype=np.float64).reshape(3)
    d = np.asarray(direction, dtype=np.float64).reshape(3)
    norm = np.linalg.norm(d)
    if abs(norm - 1.0) > 1e-6:
        raise NonUnitDirection(f"|dir| = {norm}")
    f = bvh.flat
    t_row = _row_index(bvh)
    gidx, t, u, v = kernels.trace_one(
        f.nodes_min, f.nodes_max, f.left, f.right, f.start, f.count, f.prims,
        bvh.tri_verts, t_row, bvh.tri_local,
        o[0], o[1], o[2], d[0], d[1], d[2],
    )
    if gidx < 0:
        return None
    n = _shading_normal(bvh.tri_normals[gidx], u, v, d)
    return Hit(
        instance_id=int(bvh.tri_instance[gidx]),
        t=float(t),
        point=o + t * d,
        normal=n,
        triangle=int(bvh.tri_local[gidx]),
    )


def _shading_normal(corners: np.ndarray, u: float, v: float, d: np.ndarray) -> np.ndarray:
    n = (1.0 - u - v) * corners[0] + u * corners[1] + v * corners[2]
    length = np.linalg.norm(n)
    n = corners[0] if length < 1e-12 else n / length
    if float(n @ d) > 0.0:
        n = -n
    return n


def _pack_instance_bvhs(tv_parts):
    """Concatenate per-instance trees with absolute node/prim indices."""
    nmin, nmax, left, right, start, count, prims, node_off = [], [], [], [], [], [], [], [0]
    tri_base = 0
    prim_base = 0
    for tv in tv_parts:
        f = build_flat(tv)
        node_base = node_off[-1]
        nmin.append(f.nodes_min)
        nmax.append(f.nodes_max)
        left.append(np.where(f.left >= 0, f.left + node_base, -1).astype(np.int32))
        right.append(np.where(f.right >= 0, f.right + node_base, -1).astype(np.int32))
        start.append((f.start + prim_base).astype(np.int32))
        count.append(f.count)
        prims.append((f.prims + tri_base).astype(np.int32))
        node_off.append(node_base + f.node_count)
        tri_base += len(tv)
        prim_base += len(f.prims)
    return (
        np.concatenate(nmin),
        np.concatenate(nmax),
        np.concatenate(left),
        np.concatenate(right),
        np.concatenate(start).astype(np.int32),
        np.concatenate(count),
        np.concatenate(prims),
        np.asarray(node_off[:-1], dtype=np.int32),
    )


def render_layer(instances, rig, env: EnvironmentMap, settings: RenderSettings,
                 image_index: int = 0) -> RenderLayer:
    """Render all instances through the rig's pinhole camera.

    rig provides .intrinsics (CameraIntrinsics) and .plane (GroundPlane).
    """
    k = rig.intrinsics
    plane = rig.plane
    _check_unique_ids(instances)
    if not instances:
        return empty_layer(k.height, k.width)

    ordered = sorted(instances, key=lambda i: i.instance_id)
    tv_parts, tn_parts = [], []
    for inst in ordered:
        tv, tn = _world_triangles(inst, plane)
        tv_parts.append(tv)
        tn_parts.append(tn)
    tv = np.concatenate(tv_parts)
    tn = np.concatenate(tn_parts)
    t_row = np.concatenate(
        [np.full(len(p), i, dtype=np.int32) for i, p in enumerate(tv_parts)]
    )
    t_local = np.concatenate([np.arange(len(p), dtype=np.int32) for p in tv_parts])
    g = build_flat(tv)
    (i_nmin, i_nmax, i_left, i_right, i_start, i_count, i_prims,
     i_node_off) = _pack_instance_bvhs(tv_parts)

    n_rows = len(ordered)
    mat_color = np.stack([inst.material.base_color for inst in ordered])
    mat_spec = np.array([inst.material.specular_weight for inst in ordered])
    mat_mirror = np.array(
        [1 if inst.material.roughness_flag == "mirror" else 0 for inst in ordered],
        dtype=np.uint8,
    )

    if env.pixels is None:
        env_pix = np.zeros((1, 2, 3))
        env_is_const = True
    else:
        env_pix = np.ascontiguousarray(env.pixels)
        env_is_const = False
    env_const = np.ascontiguousarray(env.constant_radiance)

    height, width = k.height, k.width
    color = np.zeros((height, width, 4))
    depth = np.full((height, width), np.inf)
    ids_row = np.zeros((height, width), dtype=np.int32)
    shadow = np.zeros((height, width))
    iso_counts = np.zeros((n_rows, height, width), dtype=np.int32)

    kernels.render_kernel(
        k.focal_x, k.focal_y, k.center_x, k.center_y, width, height,
        g.nodes_min, g.nodes_max, g.left, g.right, g.start, g.count, g.prims,
        tv, tn, t_row, t_local,
        n_rows, i_nmin, i_nmax, i_left, i_right, i_start, i_count, i_prims,
        i_node_off,
        mat_color, mat_spec, mat_mirror,
        env_pix, env_const, env_is_const,
        plane.normal[0], plane.normal[1], plane.normal[2], plane.offset,
        settings.samples_per_pixel, settings.diffuse_env_samples,
        settings.shadow_samples, settings.enable_shadows, settings.max_shadow,
        np.uint64(settings.rng_seed & MASK64), np.uint64(image_index),
        color, depth, ids_row, shadow, iso_counts,
    )

    id_of_row = np.array([inst.instance_id for inst in ordered], dtype=np.int32)
    ids = np.zeros((height, width), dtype=np.int32)
    nonzero = ids_row > 0
    ids[nonzero] = id_of_row[ids_row[nonzero] - 1]

    return RenderLayer(
        color=color,
        depth=depth,
        instance_ids=ids,
        shadow_alpha=shadow,
        isolated_alpha=iso_counts / settings.samples_per_pixel,
        instance_order=[int(i) for i in id_of_row],
    )
