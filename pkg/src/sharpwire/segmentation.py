"""Split the corner-free skeleton into per-curve point clusters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _components
from scipy.spatial import cKDTree

from .core import NoCurvesError


@dataclass(frozen=True)
class CurveCluster:
    id: int
    member_indices: np.ndarray
    positions: np.ndarray
    distances: np.ndarray

    def __len__(self):
        return len(self.member_indices)


def remove_corner_points(skeleton, clusters):
    """Skeleton indices not claimed by any corner cluster, in order."""
    keep = np.ones(len(skeleton), dtype=bool)
    for c in clusters:
        keep[c.member_indices] = False
    remaining = np.flatnonzero(keep)
    if len(remaining) == 0:
        raise NoCurvesError("corner clusters cover the whole skeleton")
    return remaining


def build_proximity_graph(positions, connect_radius):
    """Symmetric sparse adjacency with an edge for every pair of distinct
    points at most ``connect_radius`` apart."""
    if not connect_radius > 0:
        raise ValueError("connect_radius must be positive")
    pts = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    n = len(pts)
    pairs = cKDTree(pts).query_pairs(connect_radius * (1 + 1e-9), output_type="ndarray")
    if len(pairs):
        gap = np.linalg.norm(pts[pairs[:, 0]] - pts[pairs[:, 1]], axis=1)
        pairs = pairs[gap <= connect_radius]
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]]) if len(pairs) else np.zeros(0, int)
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]]) if len(pairs) else np.zeros(0, int)
    return sp.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                         shape=(n, n))


def connected_components(graph, min_size=3):
    """Vertex sets of the connected components, ordered by smallest member.

    Components smaller than ``min_size`` are dropped as noise.
    Returns a list of index arrays.
    """
    n = graph.shape[0]
    if n == 0:
        return []
    n_comp, labels = _components(graph, directed=False)
    order = np.argsort(labels, kind="stable")
    bounds = np.flatnonzero(np.diff(labels[order])) + 1
    groups = np.split(order, bounds)
    groups.sort(key=lambda g: g[0])
    return [g for g in groups if len(g) >= min_size]


def segment_curves(skeleton, remaining, connect_radius, min_size=3):
    """Cluster the remaining skeleton points into curves.

    ``remaining`` are skeleton indices (see :func:`remove_corner_points`).
    """
    remaining = np.asarray(remaining, dtype=np.intp)
    pos = skeleton.positions[remaining]
    graph = build_proximity_graph(pos, connect_radius)
    groups = connected_components(graph, min_size=min_size)
    if not groups:
        raise NoCurvesError("no curve cluster survived segmentation")
    out = []
    for k, g in enumerate(groups):
        idx = remaining[g]
        out.append(CurveCluster(k, idx, skeleton.positions[idx],
                                skeleton.distances[idx]))
    return out
