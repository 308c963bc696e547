"""Adaptive quadtree over 2D point sets and the dual-tree interaction pass.

Cells are stored structure-of-arrays in BFS level order, so children of any
cell occupy a contiguous index range, parents always precede children, and a
reversed sweep visits children before parents.  Each cell owns a contiguous
slice of the permuted body array; leaf slices tile [0, N) in index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError

_SQRT2 = math.sqrt(2.0)


@dataclass
class Quadtree:
    points: np.ndarray        # original (N, 2)
    perm: np.ndarray          # sorted_points = points[perm]
    sorted_points: np.ndarray
    centers: np.ndarray       # (ncells, 2)
    half_widths: np.ndarray
    levels: np.ndarray
    parents: np.ndarray
    child_lo: np.ndarray      # -1 for leaves
    child_hi: np.ndarray
    body_lo: np.ndarray       # slice of perm owned by each cell
    body_hi: np.ndarray
    leaf_ids: np.ndarray      # leaf cell indices ordered by body_lo

    @property
    def ncells(self):
        return self.centers.shape[0]

    @property
    def nbodies(self):
        return self.points.shape[0]

    def is_leaf(self, c):
        return self.child_lo[c] < 0

    def children(self, c):
        return range(self.child_lo[c], self.child_hi[c])

    def radius(self, c):
        # circumscribed radius of the square cell
        return self.half_widths[c] * _SQRT2


def build_quadtree(points, ncrit=64, max_level=24):
    """Split cells with more than ncrit bodies until every leaf fits.

    Empty quadrants are dropped.  A cell that still exceeds ncrit at
    max_level holds (numerically) coincident points that no split can
    separate; that raises DegenerateError.
    """
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must have shape (N, 2)")
    n = pts.shape[0]
    if n == 0:
        raise ValueError("cannot build a tree over zero points")
    if ncrit < 1:
        raise ValueError("ncrit must be >= 1")

    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    root_c = (lo + hi) / 2
    half = float(np.max(hi - lo)) / 2
    half = half * (1 + 1e-6) if half > 0 else 1e-6

    order = np.arange(n)
    centers = [root_c]
    hws = [half]
    levels = [0]
    parents = [-1]
    child_lo = [-1]
    child_hi = [-1]
    body_lo = [0]
    body_hi = [n]

    head = 0
    while head < len(centers):
        blo, bhi = body_lo[head], body_hi[head]
        if bhi - blo <= ncrit:
            head += 1
            continue
        if levels[head] >= max_level:
            raise DegenerateError(
                f"{bhi - blo} coincident points exceed ncrit={ncrit} "
                f"at max refinement level {max_level}")
        cx, cy = centers[head]
        hw = hws[head] / 2
        idx = order[blo:bhi]
        px, py = pts[idx, 0], pts[idx, 1]
        code = ((py >= cy).astype(np.int8) << 1) | (px >= cx).astype(np.int8)
        parts = [idx[code == q] for q in range(4)]
        order[blo:bhi] = np.concatenate(parts)
        child_lo[head] = len(centers)
        off = blo
        for q in range(4):
            cnt = parts[q].size
            if cnt == 0:
                continue
            ox = hw if (q & 1) else -hw
            oy = hw if (q & 2) else -hw
            centers.append(np.array([cx + ox, cy + oy]))
            hws.append(hw)
            levels.append(levels[head] + 1)
            parents.append(head)
            child_lo.append(-1)
            child_hi.append(-1)
            body_lo.append(off)
            body_hi.append(off + cnt)
            off += cnt
        child_hi[head] = len(centers)
        head += 1

    child_lo = np.asarray(child_lo)
    leaf_ids = np.flatnonzero(child_lo < 0)
    body_lo = np.asarray(body_lo)
    leaf_ids = leaf_ids[np.argsort(body_lo[leaf_ids], kind="stable")]
    return Quadtree(
        points=pts,
        perm=order,
        sorted_points=pts[order],
        centers=np.vstack(centers),
        half_widths=np.asarray(hws),
        levels=np.asarray(levels),
        parents=np.asarray(parents),
        child_lo=child_lo,
        child_hi=np.asarray(child_hi),
        body_lo=body_lo,
        body_hi=np.asarray(body_hi),
        leaf_ids=leaf_ids,
    )


def dual_traversal(src, tgt, theta=0.5):
    """Partition source-cell x target-cell space into far and near pairs.

    A pair is far (admissible for expansion translation) when the center
    distance exceeds (r_src + r_tgt) / theta with r the circumscribed cell
    radius.  Otherwise the larger cell is split (ties split the source);
    leaf-leaf pairs that stay inadmissible become near (direct) pairs.
    Every (source body, target body) combination lands in exactly one pair.
    """
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    far_s, far_t, near_s, near_t = [], [], [], []
    stack = [(0, 0)]
    while stack:
        s, t = stack.pop()
        dx = src.centers[s, 0] - tgt.centers[t, 0]
        dy = src.centers[s, 1] - tgt.centers[t, 1]
        dist = math.hypot(dx, dy)
        if dist * theta > src.radius(s) + tgt.radius(t):
            far_s.append(s)
            far_t.append(t)
            continue
        s_leaf = src.is_leaf(s)
        t_leaf = tgt.is_leaf(t)
        if s_leaf and t_leaf:
            near_s.append(s)
            near_t.append(t)
        elif t_leaf or (not s_leaf and src.half_widths[s] >= tgt.half_widths[t]):
            for c in src.children(s):
                stack.append((c, t))
        else:
            for c in tgt.children(t):
                stack.append((s, c))
    return (np.asarray(far_s, dtype=np.int64), np.asarray(far_t, dtype=np.int64),
            np.asarray(near_s, dtype=np.int64), np.asarray(near_t, dtype=np.int64))
