"""Exact k-nearest-neighbor search over small point sets.

Results are totally ordered by (squared distance, point index), and every
implementation computes squared distances with the same float64 arithmetic,
so the accelerated indexes agree with brute force bit for bit — including
tie-breaks. That exactness is what keeps interpolation weights reproducible
across index choices.
"""

from __future__ import annotations

import bisect

import numpy as np

__all__ = ["brute_force_knn", "KDTree", "SortedLine", "build_knn_index"]

_LEAF_SIZE = 8


def _as_points(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError(f"expected a nonempty (n, d) point array, got {pts.shape}")
    return pts


def _row_d2(pts: np.ndarray, q: np.ndarray) -> np.ndarray:
    # Canonical squared distance; all implementations must route through
    # this exact expression.
    diff = pts - q
    return (diff * diff).sum(axis=1)


def brute_force_knn(
    points: np.ndarray, query: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Reference implementation: order all points by (d^2, index), take k."""
    pts = _as_points(points)
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    if q.shape[0] != pts.shape[1]:
        raise ValueError("query dimension mismatch")
    d2 = _row_d2(pts, q)
    order = np.lexsort((np.arange(d2.shape[0]), d2))[: min(k, d2.shape[0])]
    return order.astype(np.int64), d2[order]


class KDTree:
    """Median-split tree over the widest-extent axis, leaves of <= 8 points.

    Internal nodes keep the boundary coordinates on both sides of the split
    so the far subtree is pruned only when no point in it can beat (or tie)
    the current k-th best squared distance.
    """

    def __init__(self, points: np.ndarray):
        self.points = _as_points(points)
        self.dim = self.points.shape[1]
        self._root = self._build(np.arange(self.points.shape[0], dtype=np.int64))

    def _build(self, idx: np.ndarray):
        if idx.shape[0] <= _LEAF_SIZE:
            return ("leaf", idx)
        sub = self.points[idx]
        axis = int(np.argmax(sub.max(axis=0) - sub.min(axis=0)))
        order = np.argsort(sub[:, axis], kind="stable")
        mid = idx.shape[0] // 2
        left, right = idx[order[:mid]], idx[order[mid:]]
        lmax = float(sub[order[mid - 1], axis])
        rmin = float(sub[order[mid], axis])
        if lmax == rmin and sub[:, axis].min() == sub[:, axis].max():
            # Degenerate spread on every axis; no split can make progress.
            return ("leaf", idx)
        return ("split", axis, lmax, rmin, self._build(left), self._build(right))

    def query(self, query: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        q = np.asarray(query, dtype=np.float64).reshape(-1)
        if q.shape[0] != self.dim:
            raise ValueError("query dimension mismatch")
        k = min(k, self.points.shape[0])
        best: list[tuple[float, int]] = []  # sorted by (d2, index), worst last

        def visit(node) -> None:
            if node[0] == "leaf":
                idx = node[1]
                d2 = _row_d2(self.points[idx], q)
                for j in range(idx.shape[0]):
                    cand = (float(d2[j]), int(idx[j]))
                    if len(best) < k:
                        bisect.insort(best, cand)
                    elif cand < best[-1]:
                        bisect.insort(best, cand)
                        best.pop()
                return
            _, axis, lmax, rmin, left, right = node
            qa = float(q[axis])
            near, far, bound = (
                (left, right, rmin - qa) if qa < rmin else (right, left, qa - lmax)
            )
            visit(near)
            gap = max(bound, 0.0)
            if len(best) < k or gap * gap <= best[-1][0]:
                visit(far)

        visit(self._root)
        return (
            np.array([i for _, i in best], dtype=np.int64),
            np.array([d for d, _ in best], dtype=np.float64),
        )


class SortedLine:
    """1-D index: points kept in sorted order, queried by expanding a window
    outward from the insertion point until both frontiers are provably past
    the k-th best squared distance."""

    def __init__(self, points: np.ndarray):
        self.points = _as_points(points)
        if self.points.shape[1] != 1:
            raise ValueError("SortedLine indexes 1-D points only")
        self.dim = 1
        self.order = np.argsort(self.points[:, 0], kind="stable").astype(np.int64)
        self.sorted_vals = self.points[self.order, 0]

    def query(self, query: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        q = np.asarray(query, dtype=np.float64).reshape(-1)
        if q.shape[0] != 1:
            raise ValueError("query dimension mismatch")
        n = self.sorted_vals.shape[0]
        k = min(k, n)
        pos = int(np.searchsorted(self.sorted_vals, q[0]))
        lo, hi = pos - 1, pos  # next candidates on each side
        cand: list[tuple[float, int]] = []

        def d2_at(sorted_pos: int) -> float:
            row = self.points[self.order[sorted_pos] : self.order[sorted_pos] + 1]
            return float(_row_d2(row, q)[0])

        kth = np.inf
        while lo >= 0 or hi < n:
            lo_d2 = d2_at(lo) if lo >= 0 else np.inf
            hi_d2 = d2_at(hi) if hi < n else np.inf
            # Moving outward never decreases distance, so once both
            # frontiers exceed the k-th best the window is complete.
            if len(cand) >= k and lo_d2 > kth and hi_d2 > kth:
                break
            if lo_d2 <= hi_d2:
                cand.append((lo_d2, int(self.order[lo])))
                lo -= 1
            else:
                cand.append((hi_d2, int(self.order[hi])))
                hi += 1
            if len(cand) >= k:
                kth = sorted(cand)[k - 1][0]
        cand.sort()
        cand = cand[:k]
        return (
            np.array([i for _, i in cand], dtype=np.int64),
            np.array([d for d, _ in cand], dtype=np.float64),
        )


def build_knn_index(points: np.ndarray):
    """Sorted line for 1-D spaces, KD-tree otherwise."""
    pts = _as_points(points)
    return SortedLine(pts) if pts.shape[1] == 1 else KDTree(pts)
