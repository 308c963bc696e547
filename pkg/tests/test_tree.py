"""Quadtree construction invariants and dual-traversal coverage."""

import numpy as np
import pytest

from helmprec.errors import DegenerateError
from helmprec.tree import build_quadtree, dual_traversal


def _random_points(n, seed, box=1.0):
    rng = np.random.default_rng(seed)
    return box * rng.random((n, 2))


def test_leaves_tile_body_range():
    pts = _random_points(700, 3)
    tr = build_quadtree(pts, ncrit=20)
    assert sorted(tr.perm.tolist()) == list(range(700))
    cursor = 0
    for c in tr.leaf_ids:
        assert tr.body_lo[c] == cursor
        cursor = tr.body_hi[c]
        assert tr.body_hi[c] - tr.body_lo[c] <= 20
    assert cursor == 700
    assert np.allclose(tr.sorted_points, pts[tr.perm])


def test_cells_nest_geometrically():
    pts = _random_points(600, 11)
    tr = build_quadtree(pts, ncrit=16)
    for c in range(1, tr.ncells):
        p = tr.parents[c]
        assert tr.levels[c] == tr.levels[p] + 1
        assert tr.half_widths[c] == pytest.approx(tr.half_widths[p] / 2)
        off = tr.centers[c] - tr.centers[p]
        assert np.allclose(np.abs(off), tr.half_widths[c])
    # bodies stay inside their cell box
    for c in tr.leaf_ids:
        sl = tr.sorted_points[tr.body_lo[c]:tr.body_hi[c]]
        assert np.all(np.abs(sl - tr.centers[c]) <= tr.half_widths[c] * (1 + 1e-12))


def test_parent_body_ranges_cover_children():
    pts = _random_points(500, 7)
    tr = build_quadtree(pts, ncrit=10)
    for c in range(tr.ncells):
        if tr.is_leaf(c):
            continue
        kids = list(tr.children(c))
        assert tr.body_lo[kids[0]] == tr.body_lo[c]
        assert tr.body_hi[kids[-1]] == tr.body_hi[c]
        for a, b in zip(kids[:-1], kids[1:]):
            assert tr.body_hi[a] == tr.body_lo[b]


def test_deterministic_build():
    pts = _random_points(300, 5)
    a = build_quadtree(pts, ncrit=12)
    b = build_quadtree(pts, ncrit=12)
    assert np.array_equal(a.perm, b.perm)
    assert np.array_equal(a.centers, b.centers)


def test_single_point_and_validation():
    tr = build_quadtree(np.array([[0.4, 0.2]]))
    assert tr.ncells == 1
    assert tr.is_leaf(0)
    with pytest.raises(ValueError):
        build_quadtree(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        build_quadtree(np.zeros((5, 3)))


def test_coincident_points_raise():
    pts = np.tile([[0.25, 0.75]], (70, 1))
    with pytest.raises(DegenerateError):
        build_quadtree(pts, ncrit=64)


def _coverage(src_tree, tgt_tree, pairs):
    far_s, far_t, near_s, near_t = pairs
    total = 0
    for s, t in zip(far_s, far_t):
        total += (src_tree.body_hi[s] - src_tree.body_lo[s]) * \
                 (tgt_tree.body_hi[t] - tgt_tree.body_lo[t])
    for s, t in zip(near_s, near_t):
        total += (src_tree.body_hi[s] - src_tree.body_lo[s]) * \
                 (tgt_tree.body_hi[t] - tgt_tree.body_lo[t])
    return total


def test_traversal_covers_all_pairs_self():
    pts = _random_points(800, 2)
    tr = build_quadtree(pts, ncrit=30)
    pairs = dual_traversal(tr, tr, theta=0.5)
    assert _coverage(tr, tr, pairs) == 800 * 800


def test_traversal_covers_all_pairs_two_trees():
    src = build_quadtree(_random_points(500, 21), ncrit=25)
    tgt = build_quadtree(_random_points(350, 22, box=0.5) + 0.25, ncrit=25)
    pairs = dual_traversal(src, tgt, theta=0.6)
    assert _coverage(src, tgt, pairs) == 500 * 350


def test_far_pairs_satisfy_mac_near_pairs_are_leaves():
    pts = _random_points(600, 9)
    tr = build_quadtree(pts, ncrit=20)
    theta = 0.5
    far_s, far_t, near_s, near_t = dual_traversal(tr, tr, theta=theta)
    assert far_s.size > 0 and near_s.size > 0
    for s, t in zip(far_s, far_t):
        d = np.linalg.norm(tr.centers[s] - tr.centers[t])
        assert d * theta > tr.radius(s) + tr.radius(t)
    for s, t in zip(near_s, near_t):
        assert tr.is_leaf(s) and tr.is_leaf(t)


def test_theta_validation():
    tr = build_quadtree(_random_points(50, 1))
    with pytest.raises(ValueError):
        dual_traversal(tr, tr, theta=0.0)
    with pytest.raises(ValueError):
        dual_traversal(tr, tr, theta=1.5)
