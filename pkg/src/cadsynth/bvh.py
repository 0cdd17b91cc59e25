"""Axis-aligned BVH over world-space triangles.

Median split on the longest centroid axis with a stable sort, so the tree
is a deterministic function of the triangle soup. Node boxes are padded by
a scene-relative epsilon: the traversal slab test may round, and a padded
box can never cull a triangle whose true intersection lies on the box
boundary. Correctness (not construction policy) is pinned by the
brute-force all-triangles oracle in the test suite.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

LEAF_SIZE = 4
STACK_DEPTH = 128  # traversal stack entries; ample for median-split trees


@dataclass
class Bvh:
    """Flattened tree in depth-first layout: node i's left child is i + 1;
    node_right holds the right child index, or -1 for leaves. A leaf spans
    prim_index[node_start : node_start + node_count] (original triangle ids).
    """

    node_mins: np.ndarray  # (n, 3) float64
    node_maxs: np.ndarray  # (n, 3) float64
    node_right: np.ndarray  # (n,) int32
    node_start: np.ndarray  # (n,) int32
    node_count: np.ndarray  # (n,) int32
    prim_index: np.ndarray  # (t,) int32

    @property
    def n_nodes(self) -> int:
        return int(self.node_right.shape[0])


def build_bvh(v0: np.ndarray, v1: np.ndarray, v2: np.ndarray, leaf_size: int = LEAF_SIZE) -> Bvh:
    n_tris = v0.shape[0]
    if n_tris == 0:
        raise ValueError("cannot build a BVH over zero triangles")

    tri_mins = np.minimum(np.minimum(v0, v1), v2)
    tri_maxs = np.maximum(np.maximum(v0, v1), v2)
    centroids = (tri_mins + tri_maxs) * 0.5

    scene_diag = float(np.max(tri_maxs.max(axis=0) - tri_mins.min(axis=0)))
    pad = 1e-8 * max(scene_diag, 1.0) + 1e-12

    order = np.arange(n_tris, dtype=np.int64)
    node_mins: list[np.ndarray] = []
    node_maxs: list[np.ndarray] = []
    node_right: list[int] = []
    node_start: list[int] = []
    node_count: list[int] = []

    def build(lo: int, hi: int) -> int:
        idx = len(node_right)
        span = order[lo:hi]
        node_mins.append(tri_mins[span].min(axis=0) - pad)
        node_maxs.append(tri_maxs[span].max(axis=0) + pad)
        node_right.append(-1)
        node_start.append(lo)
        node_count.append(hi - lo)

        count = hi - lo
        if count <= leaf_size:
            return idx
        cmins = centroids[span].min(axis=0)
        cmaxs = centroids[span].max(axis=0)
        axis = int(np.argmax(cmaxs - cmins))
        if cmaxs[axis] - cmins[axis] <= 0.0:
            return idx  # all centroids coincide; keep as a fat leaf
        local = np.argsort(centroids[span, axis], kind="stable")
        order[lo:hi] = span[local]
        mid = lo + count // 2

        node_start[idx] = -1
        node_count[idx] = 0
        build(lo, mid)
        node_right[idx] = build(mid, hi)
        return idx

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 100 + 4 * int(np.ceil(np.log2(n_tris + 1))) * 64))
    try:
        build(0, n_tris)
    finally:
        sys.setrecursionlimit(old_limit)

    return Bvh(
        node_mins=np.ascontiguousarray(np.array(node_mins, dtype=np.float64)),
        node_maxs=np.ascontiguousarray(np.array(node_maxs, dtype=np.float64)),
        node_right=np.array(node_right, dtype=np.int32),
        node_start=np.array(node_start, dtype=np.int32),
        node_count=np.array(node_count, dtype=np.int32),
        prim_index=order.astype(np.int32),
    )
