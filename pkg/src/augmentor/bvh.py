"""Bounding volume hierarchy over world-space triangles.

Median-split builder on triangle centroids, flattened into parallel
arrays so the numba kernels can traverse it without objects.  A leaf
stores (start, count) into the prims permutation; internal nodes store
child ids and count 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF_SIZE = 4


@dataclass
class FlatBvh:
    nodes_min: np.ndarray  # (N, 3)
    nodes_max: np.ndarray  # (N, 3)
    left: np.ndarray  # (N,) int32, -1 for leaves
    right: np.ndarray  # (N,) int32
    start: np.ndarray  # (N,) int32 offset into prims (leaves)
    count: np.ndarray  # (N,) int32 leaf triangle count, 0 for internal
    prims: np.ndarray  # (T,) int32 permutation of triangle indices

    @property
    def node_count(self) -> int:
        return len(self.left)


def build_flat(tri_verts: np.ndarray) -> FlatBvh:
    """Build the flat tree for (T, 3, 3) world triangles."""
    tv = np.asarray(tri_verts, dtype=np.float64)
    n_tris = len(tv)
    if n_tris == 0:
        empty_i = np.zeros(0, dtype=np.int32)
        empty_f = np.zeros((0, 3), dtype=np.float64)
        return FlatBvh(empty_f, empty_f.copy(), empty_i, empty_i.copy(),
                       empty_i.copy(), empty_i.copy(), empty_i.copy())

    tri_min = tv.min(axis=1)
    tri_max = tv.max(axis=1)
    centroids = tv.mean(axis=1)

    nodes_min, nodes_max = [], []
    left, right, start, count = [], [], [], []
    prims = []

    def new_node(idx):
        nodes_min.append(tri_min[idx].min(axis=0))
        nodes_max.append(tri_max[idx].max(axis=0))
        left.append(-1)
        right.append(-1)
        start.append(0)
        count.append(0)
        return len(left) - 1

    def build(idx) -> int:
        node = new_node(idx)
        if len(idx) <= LEAF_SIZE:
            start[node] = len(prims)
            count[node] = len(idx)
            prims.extend(sorted(idx.tolist()))
            return node
        extent = centroids[idx].max(axis=0) - centroids[idx].min(axis=0)
        axis = int(np.argmax(extent))
        order = idx[np.argsort(centroids[idx, axis], kind="stable")]
        mid = len(order) // 2
        left[node] = build(order[:mid])
        right[node] = build(order[mid:])
        return node

    build(np.arange(n_tris))

    return FlatBvh(
        nodes_min=np.asarray(nodes_min),
        nodes_max=np.asarray(nodes_max),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        start=np.asarray(start, dtype=np.int32),
        count=np.asarray(count, dtype=np.int32),
        prims=np.asarray(prims, dtype=np.int32),
    )


@dataclass
class Bvh:
    """Scene acceleration structure plus the world-space triangle soup.

    tri_instance holds the owning instance id of each triangle and
    tri_local its index within that instance's mesh; together they form
    the tie-break key for coincident hits.
    """

    flat: FlatBvh
    tri_verts: np.ndarray  # (T, 3, 3)
    tri_normals: np.ndarray  # (T, 3, 3) per-corner world normals
    tri_instance: np.ndarray  # (T,) int32
    tri_local: np.ndarray  # (T,) int32

    @property
    def triangle_count(self) -> int:
        return len(self.tri_verts)
