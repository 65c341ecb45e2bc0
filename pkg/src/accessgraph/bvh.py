"""Bounding volume hierarchy over triangle soups with batched ray queries.

The tree is flattened into numpy arrays at build time and never mutated
afterwards, so any number of threads may traverse it concurrently. Queries
are vectorized over rays: traversal keeps a stack of (node, active-ray
subset) pairs and runs the slab and triangle tests as array operations.
Results are independent of batch composition because every per-ray update
is an elementwise lexicographic minimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LEAF_SIZE = 8
# Sentinel ids ordered after every real (object, triangle) pair so the
# lexicographic (t, object, triangle) minimum also encodes "no hit yet".
NO_HIT = np.int32(2**31 - 1)
_DET_EPS = 1e-12
_BARY_EPS = 1e-12


@dataclass
class Bvh:
    """Immutable median-split BVH over pre-flattened triangles."""

    tri_v0: np.ndarray  # (m, 3) first vertex of each triangle
    tri_e1: np.ndarray  # (m, 3) v1 - v0
    tri_e2: np.ndarray  # (m, 3) v2 - v0
    tri_norm_len: np.ndarray  # (m,) |e1 x e2|, twice the triangle area
    tri_obj: np.ndarray  # (m,) owning object index
    tri_local: np.ndarray  # (m,) triangle index within the owning object
    node_min: np.ndarray = field(repr=False, default=None)
    node_max: np.ndarray = field(repr=False, default=None)
    node_left: np.ndarray = field(repr=False, default=None)  # -1 for leaves
    node_right: np.ndarray = field(repr=False, default=None)
    node_start: np.ndarray = field(repr=False, default=None)
    node_count: np.ndarray = field(repr=False, default=None)

    @classmethod
    def build(cls, vertices_per_tri: np.ndarray, tri_obj: np.ndarray,
              tri_local: np.ndarray) -> "Bvh":
        """Build from triangle vertices shaped (m, 3, 3)."""
        tris = np.asarray(vertices_per_tri, dtype=np.float64)
        v0 = tris[:, 0, :]
        e1 = tris[:, 1, :] - v0
        e2 = tris[:, 2, :] - v0
        norm_len = np.linalg.norm(np.cross(e1, e2), axis=1)
        bvh = cls(
            tri_v0=v0, tri_e1=e1, tri_e2=e2, tri_norm_len=norm_len,
            tri_obj=np.asarray(tri_obj, dtype=np.int32),
            tri_local=np.asarray(tri_local, dtype=np.int32),
        )
        bvh._build_nodes(tris)
        bvh._reorder_triangles()
        for arr in (bvh.tri_v0, bvh.tri_e1, bvh.tri_e2, bvh.tri_norm_len,
                    bvh.tri_obj, bvh.tri_local, bvh.node_min, bvh.node_max,
                    bvh.node_left, bvh.node_right, bvh.node_start,
                    bvh.node_count):
            arr.setflags(write=False)
        return bvh

    def _build_nodes(self, tris: np.ndarray) -> None:
        m = len(tris)
        tri_min = tris.min(axis=1)
        tri_max = tris.max(axis=1)
        centroids = tris.mean(axis=1)

        mins, maxs, lefts, rights, starts, counts = [], [], [], [], [], []
        self._order = np.empty(m, dtype=np.int64)
        cursor = 0

        # Iterative build; each stack entry owns a contiguous slice of the
        # final triangle order. Children are allocated after their parent,
        # patched in on a second visit.
        stack = [(np.arange(m, dtype=np.int64), -1, False)]
        while stack:
            idx, parent, is_right = stack.pop()
            node_id = len(mins)
            mins.append(tri_min[idx].min(axis=0))
            maxs.append(tri_max[idx].max(axis=0))
            if parent >= 0:
                if is_right:
                    rights[parent] = node_id
                else:
                    lefts[parent] = node_id
            if len(idx) <= LEAF_SIZE:
                # Leaf triangles sorted by (object, triangle) so argmin over
                # equal hit distances lands on the tie-rule winner.
                key = np.lexsort((self.tri_local[idx], self.tri_obj[idx]))
                idx = idx[key]
                lefts.append(-1)
                rights.append(-1)
                starts.append(cursor)
                counts.append(len(idx))
                self._order[cursor:cursor + len(idx)] = idx
                cursor += len(idx)
                continue
            cent = centroids[idx]
            axis = int(np.argmax(cent.max(axis=0) - cent.min(axis=0)))
            key = np.lexsort((self.tri_local[idx], self.tri_obj[idx],
                              cent[:, axis]))
            idx = idx[key]
            half = len(idx) // 2
            lefts.append(-2)  # patched when the child is allocated
            rights.append(-2)
            starts.append(0)
            counts.append(0)
            stack.append((idx[half:], node_id, True))
            stack.append((idx[:half], node_id, False))

        self.node_min = np.asarray(mins, dtype=np.float64)
        self.node_max = np.asarray(maxs, dtype=np.float64)
        self.node_left = np.asarray(lefts, dtype=np.int32)
        self.node_right = np.asarray(rights, dtype=np.int32)
        self.node_start = np.asarray(starts, dtype=np.int64)
        self.node_count = np.asarray(counts, dtype=np.int64)

    def _reorder_triangles(self) -> None:
        order = self._order
        del self._order
        self.tri_v0 = self.tri_v0[order].copy()
        self.tri_e1 = self.tri_e1[order].copy()
        self.tri_e2 = self.tri_e2[order].copy()
        self.tri_norm_len = self.tri_norm_len[order].copy()
        self.tri_obj = self.tri_obj[order].copy()
        self.tri_local = self.tri_local[order].copy()

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.node_min[0], self.node_max[0]

    def intersect_batch(
        self,
        origins: np.ndarray,
        directions: np.ndarray,
        max_dists: np.ndarray | float,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Nearest hit per ray within max distance.

        Returns (t, object_id, triangle_id) arrays; misses carry
        object_id == triangle_id == NO_HIT and t == max_dist. Ties on t are
        broken by lowest (object_id, triangle_id).
        """
        origins = np.atleast_2d(np.asarray(origins, dtype=np.float64))
        directions = np.atleast_2d(np.asarray(directions, dtype=np.float64))
        n = len(origins)
        max_dists = np.broadcast_to(
            np.asarray(max_dists, dtype=np.float64), (n,)).copy()

        best_t = max_dists.copy()
        best_obj = np.full(n, NO_HIT, dtype=np.int32)
        best_tri = np.full(n, NO_HIT, dtype=np.int32)

        with np.errstate(divide="ignore"):
            inv_dir = 1.0 / directions
        parallel = directions == 0.0

        stack = [(0, np.arange(n, dtype=np.int64))]
        while stack:
            node, rays = stack.pop()
            o = origins[rays]
            inv = inv_dir[rays]
            bmin = self.node_min[node]
            bmax = self.node_max[node]
            with np.errstate(invalid="ignore"):
                t1 = (bmin - o) * inv
                t2 = (bmax - o) * inv
            lo = np.fmin(t1, t2)
            hi = np.fmax(t1, t2)
            par = parallel[rays]
            if par.any():
                # An axis-parallel ray constrains nothing when its origin
                # sits inside the slab (boundaries inclusive) and can never
                # hit otherwise; 0 * inf would turn this into NaN.
                inside = (o >= bmin) & (o <= bmax)
                lo = np.where(par, np.where(inside, -np.inf, np.inf), lo)
                hi = np.where(par, np.where(inside, np.inf, -np.inf), hi)
            tnear = np.fmax(np.fmax(lo[:, 0], lo[:, 1]), lo[:, 2])
            tfar = np.fmin(np.fmin(hi[:, 0], hi[:, 1]), hi[:, 2])
            alive = (tnear <= tfar) & (tfar >= 0.0) & (tnear <= best_t[rays])
            rays = rays[alive]
            if rays.size == 0:
                continue
            left = self.node_left[node]
            if left >= 0:
                stack.append((self.node_right[node], rays))
                stack.append((left, rays))
                continue
            start = self.node_start[node]
            count = self.node_count[node]
            self._leaf_hits(rays, origins, directions, start, count,
                            best_t, best_obj, best_tri)
        return best_t, best_obj, best_tri

    def _leaf_hits(self, rays, origins, directions, start, count,
                   best_t, best_obj, best_tri) -> None:
        sl = slice(start, start + count)
        v0 = self.tri_v0[sl]
        e1 = self.tri_e1[sl]
        e2 = self.tri_e2[sl]
        d = directions[rays][:, None, :]  # (r, 1, 3)
        o = origins[rays][:, None, :]

        # Moeller-Trumbore, broadcast over (rays, leaf triangles).
        pvec = np.cross(d, e2[None, :, :])
        det = np.einsum("tk,rtk->rt", e1, pvec)
        near_parallel = np.abs(det) <= _DET_EPS * self.tri_norm_len[sl]
        with np.errstate(divide="ignore", invalid="ignore"):
            inv_det = 1.0 / det
            tvec = o - v0[None, :, :]
            u = np.einsum("rtk,rtk->rt", tvec, pvec) * inv_det
            qvec = np.cross(tvec, e1[None, :, :])
            v = np.einsum("rtk,rtk->rt", d, qvec) * inv_det
            t = np.einsum("tk,rtk->rt", e2, qvec) * inv_det
            valid = (
                ~near_parallel
                & (u >= -_BARY_EPS) & (v >= -_BARY_EPS)
                & (u + v <= 1.0 + _BARY_EPS)
                & (t >= 0.0)
            )
        t = np.where(valid, t, np.inf)
        pick = np.argmin(t, axis=1)  # ties -> lowest (object, triangle)
        r = np.arange(len(rays))
        cand_t = t[r, pick]
        cand_obj = self.tri_obj[sl][pick]
        cand_tri = self.tri_local[sl][pick]

        cur_t = best_t[rays]
        cur_obj = best_obj[rays]
        cur_tri = best_tri[rays]
        better = np.isfinite(cand_t) & (
            (cand_t < cur_t)
            | ((cand_t == cur_t)
               & ((cand_obj < cur_obj)
                  | ((cand_obj == cur_obj) & (cand_tri < cur_tri))))
        )
        upd = rays[better]
        best_t[upd] = cand_t[better]
        best_obj[upd] = cand_obj[better]
        best_tri[upd] = cand_tri[better]
