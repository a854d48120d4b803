"""Corner detection on the sharp skeleton.

Ball neighborhoods around farthest-point-sampled centers are labeled
corner-like when the middle explained-variance ratio of their PCA exceeds a
threshold. Per-point cornerness weights then reward points with small
predicted distance inside corner-like balls and penalize large-distance
points inside curve-like balls. High-weight points are grouped and each
group is grown to the skeleton points inside its bounding box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .core import (NoSharpFeaturesError, PointIndex, SharpSkeleton,
                   farthest_point_sampling)
from .segmentation import build_proximity_graph


@dataclass(frozen=True)
class NeighborhoodLabel:
    center_index: int
    member_indices: np.ndarray
    sigma: np.ndarray
    is_corner: bool


@dataclass(frozen=True)
class CornerCluster:
    member_indices: np.ndarray
    bbox_min: np.ndarray
    bbox_max: np.ndarray
    center: np.ndarray
    seed_indices: np.ndarray = None


def extract_skeleton(cloud, t_dist):
    """Points whose predicted distance is at most ``t_dist``."""
    if not t_dist > 0:
        raise ValueError("t_dist must be positive")
    idx = np.flatnonzero(cloud.distances <= t_dist)
    if len(idx) == 0:
        raise NoSharpFeaturesError(
            f"no point has predicted distance <= {t_dist:g}")
    return SharpSkeleton(idx, cloud.points[idx], cloud.distances[idx])


def explained_variance(positions):
    """Ascending explained-variance ratios of a point set's covariance."""
    pts = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    centered = pts - pts.mean(axis=0)
    w = np.linalg.eigvalsh(centered.T @ centered)
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total <= 0:
        return np.array([0.0, 0.0, 1.0])
    return w / total


def classify_neighborhoods(skeleton, fps_ratio, r_corner, t_variance):
    """Label ball neighborhoods around FPS centers as corner or curve.

    Balls with fewer than three members are always curve-like.
    """
    if not 0 < fps_ratio <= 1:
        raise ValueError("fps_ratio must be in (0, 1]")
    if not r_corner > 0:
        raise ValueError("r_corner must be positive")
    pos = skeleton.positions
    count = max(1, int(np.ceil(fps_ratio * len(pos))))
    centers = farthest_point_sampling(pos, count)
    index = PointIndex(pos)
    labels = []
    for c in centers:
        members = index.radius(pos[c], r_corner)
        sigma = explained_variance(pos[members])
        corner = len(members) >= 3 and sigma[1] > t_variance
        labels.append(NeighborhoodLabel(int(c), members, sigma, bool(corner)))
    return labels


def cornerness_weights(skeleton, labels):
    """Accumulate cornerness over all labeled neighborhoods.

    Distances are min-max normalized within each neighborhood; a
    neighborhood with constant distances contributes 0 to the normalized
    value of all its members.
    """
    d = skeleton.distances
    w = np.zeros(len(d))
    for lab in labels:
        m = lab.member_indices
        if len(m) == 0:
            continue
        dm = d[m]
        lo, hi = dm.min(), dm.max()
        phi = (dm - lo) / (hi - lo) if hi > lo else np.zeros(len(m))
        if lab.is_corner:
            np.add.at(w, m, 1.0 - phi)
        else:
            np.add.at(w, m, -phi)
    return w


def detect_corner_clusters(skeleton, weights, t_corner, merge_radius, margin=0.0,
                           group_radius=None, min_half_width=0.0):
    """Group high-weight points into corner clusters.

    Candidates (weight above ``t_corner``) are linked when within
    ``merge_radius``. Groups whose seed centroids lie within
    ``group_radius`` are then merged (seeds of one corner often sit on
    different arms, further apart than ``merge_radius``). Each group's
    bounding box, widened to at least ``min_half_width`` around the seed
    centroid and then grown by ``margin`` on every side, claims every
    skeleton point inside it.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if len(weights) != len(skeleton):
        raise ValueError("one weight per skeleton point required")
    cand = np.flatnonzero(weights > t_corner)
    if len(cand) == 0:
        return []
    pos = skeleton.positions
    graph = build_proximity_graph(pos[cand], merge_radius)
    _, comp = connected_components(graph, directed=False)
    groups = [cand[comp == g] for g in np.unique(comp)]
    if group_radius is not None:
        groups = _merge_close_groups(pos, groups, group_radius)
    groups.sort(key=lambda g: g.min())
    clusters = []
    for seeds in groups:
        mid = pos[seeds].mean(axis=0)
        lo = np.minimum(pos[seeds].min(axis=0), mid - min_half_width) - margin
        hi = np.maximum(pos[seeds].max(axis=0), mid + min_half_width) + margin
        inside = np.flatnonzero(np.all((pos >= lo) & (pos <= hi), axis=1))
        clusters.append(CornerCluster(inside, lo, hi, pos[inside].mean(axis=0),
                                      seeds))
    return clusters


def _merge_close_groups(pos, groups, radius):
    groups = [np.sort(g) for g in groups]
    while len(groups) > 1:
        cent = np.array([pos[g].mean(axis=0) for g in groups])
        gap = np.linalg.norm(cent[:, None] - cent[None], axis=2)
        np.fill_diagonal(gap, np.inf)
        i, j = np.unravel_index(np.argmin(gap), gap.shape)
        if gap[i, j] > radius:
            break
        i, j = min(i, j), max(i, j)
        groups[i] = np.union1d(groups[i], groups[j])
        del groups[j]
    return groups
