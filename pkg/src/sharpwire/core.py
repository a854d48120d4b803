"""Shared types, spatial queries and XYZD point-cloud I/O.

Positions are float64 arrays of shape ``(N, 3)``. Inputs are assumed to be
normalized to roughly unit scale so that distance estimates live in ``[0, 1]``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree


class SharpwireError(Exception):
    """Base class for all errors raised by this package."""


class PointCloudParseError(SharpwireError):
    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


class ValidationError(SharpwireError, ValueError):
    pass


class TooSmallError(SharpwireError, ValueError):
    pass


class PipelineFailure(SharpwireError):
    """A shape-level failure; counts toward the fail rate."""

    exit_code = 10


class NoSharpFeaturesError(PipelineFailure):
    exit_code = 3


class NoCurvesError(PipelineFailure):
    exit_code = 4


def _freeze(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PointCloudField:
    """Points with per-point distance-to-feature estimates.

    Parameters
    ----------
    points : (N, 3) array
    distances : (N,) array
        Estimated distance to the closest sharp feature, in ``[0, 1]``.
    sampling_distance_r : float
        Average nearest-neighbor spacing of the cloud. All pipeline
        thresholds are expressed as multiples of it.
    """

    points: np.ndarray
    distances: np.ndarray
    sampling_distance_r: float

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64).reshape(-1, 3)
        d = np.array(self.distances, dtype=np.float64).reshape(-1)
        if len(pts) < 1:
            raise TooSmallError("point cloud is empty")
        if len(pts) != len(d):
            raise ValidationError(f"{len(pts)} points but {len(d)} distances")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("non-finite point coordinates")
        bad = np.flatnonzero(~((d >= 0.0) & (d <= 1.0)))
        if len(bad):
            raise ValidationError(
                f"distance {d[bad[0]]!r} at point {bad[0]} outside [0, 1]")
        if not self.sampling_distance_r > 0:
            raise ValidationError("sampling_distance_r must be positive")
        object.__setattr__(self, "points", _freeze(pts))
        object.__setattr__(self, "distances", _freeze(d))
        object.__setattr__(self, "sampling_distance_r",
                           float(self.sampling_distance_r))

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class SharpSkeleton:
    """Subset of a cloud lying close to sharp features."""

    parent_indices: np.ndarray
    positions: np.ndarray
    distances: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "parent_indices", _freeze(
            np.asarray(self.parent_indices, dtype=np.intp).reshape(-1)))
        object.__setattr__(self, "positions", _freeze(
            np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)))
        object.__setattr__(self, "distances", _freeze(
            np.asarray(self.distances, dtype=np.float64).reshape(-1)))

    def __len__(self):
        return len(self.parent_indices)


@dataclass
class Wireframe:
    """Corner points plus parametric curves.

    ``curves`` holds :class:`sharpwire.splines.BSplineCurve` instances.
    """

    corners: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    curves: list = field(default_factory=list)

    def __post_init__(self):
        self.corners = np.asarray(self.corners, dtype=np.float64).reshape(-1, 3)

    @property
    def is_empty(self):
        return len(self.curves) == 0

    def check_endpoints(self, tol=1e-6):
        """Return indices of open curves whose ends are not on a corner."""
        bad = []
        for k, curve in enumerate(self.curves):
            if curve.closed:
                continue
            ends = np.array([curve.control_points[0], curve.control_points[-1]])
            if len(self.corners) == 0:
                bad.append(k)
                continue
            gaps = np.linalg.norm(ends[:, None, :] - self.corners[None], axis=2)
            if np.any(gaps.min(axis=1) > tol):
                bad.append(k)
        return bad


# -- spatial queries ---------------------------------------------------------

class PointIndex:
    """KD-tree over a fixed point set; safe to query from several threads."""

    def __init__(self, positions):
        self.positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        self.tree = cKDTree(self.positions)

    def radius(self, center, radius):
        """Indices within ``radius`` of ``center`` (inclusive), sorted."""
        if not radius > 0:
            raise ValueError("radius must be positive")
        center = np.asarray(center, dtype=np.float64)
        # pad the tree query, then apply the exact inclusive test
        cand = self.tree.query_ball_point(center, radius * (1 + 1e-9) + 1e-300)
        cand = np.asarray(sorted(cand), dtype=np.intp)
        if len(cand) == 0:
            return cand
        dist = np.linalg.norm(self.positions[cand] - center, axis=1)
        return cand[dist <= radius]

    def nearest(self, query, k=1):
        return self.tree.query(np.asarray(query, dtype=np.float64), k=k)


def radius_query(positions, center, radius, index=None):
    """Indices of ``positions`` within ``radius`` of ``center``, inclusive.

    Pass a prebuilt :class:`PointIndex` as ``index`` to avoid rebuilding the
    tree for repeated queries.
    """
    if index is None:
        index = PointIndex(positions)
    return index.radius(center, radius)


def farthest_point_sampling(positions, count):
    """Greedy farthest point sampling seeded at index 0.

    Each new pick maximizes the minimum distance to the points already
    picked. Ties go to the lowest index.
    """
    pts = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    n = len(pts)
    count = int(count)
    if not 1 <= count <= n:
        raise ValueError(f"count must be in [1, {n}], got {count}")
    picked = np.empty(count, dtype=np.intp)
    picked[0] = 0
    mind = np.linalg.norm(pts - pts[0], axis=1)
    mind[0] = -1.0
    for k in range(1, count):
        nxt = int(np.argmax(mind))
        picked[k] = nxt
        mind = np.minimum(mind, np.linalg.norm(pts - pts[nxt], axis=1))
        mind[nxt] = -1.0
    return picked


def mean_nearest_neighbor_distance(positions):
    pts = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    if len(pts) < 2:
        raise TooSmallError("need at least 2 points to estimate spacing")
    dist, _ = cKDTree(pts).query(pts, k=2)
    return float(np.mean(dist[:, 1]))


# -- XYZD text format ----------------------------------------------------------

_HEADER = re.compile(r"^#\s*r\s*=\s*(\S+)\s*$")


def load_point_cloud(path, min_points=1):
    """Read an XYZD text file.

    The optional first line ``# r=<float>`` gives the sampling distance;
    without it the mean nearest-neighbor distance is used. Other ``#`` lines
    and blank lines are ignored.
    """
    path = Path(path)
    r = None
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                m = _HEADER.match(s)
                if m:
                    try:
                        r = float(m.group(1))
                    except ValueError:
                        raise PointCloudParseError(path, lineno,
                                                   f"bad r header {s!r}") from None
                continue
            parts = s.split()
            if len(parts) != 4:
                raise PointCloudParseError(
                    path, lineno, f"expected 4 columns, got {len(parts)}")
            try:
                rows.append([float(v) for v in parts])
            except ValueError:
                raise PointCloudParseError(path, lineno,
                                           f"cannot parse {s!r}") from None
    if len(rows) < max(min_points, 1):
        raise TooSmallError(
            f"{path}: {len(rows)} points, need at least {max(min_points, 1)}")
    data = np.array(rows, dtype=np.float64)
    d = data[:, 3]
    bad = np.flatnonzero(~((d >= 0.0) & (d <= 1.0)))
    if len(bad):
        raise ValidationError(
            f"{path}: distance {d[bad[0]]!r} on data row {bad[0] + 1} outside [0, 1]")
    if r is None:
        r = mean_nearest_neighbor_distance(data[:, :3])
    return PointCloudField(data[:, :3], d, r)


def save_point_cloud(path, cloud, write_r=True):
    """Write ``cloud`` as XYZD text with 9 significant digits."""
    lines = []
    if write_r:
        lines.append(f"# r={cloud.sampling_distance_r:.9g}")
    for p, d in zip(cloud.points, cloud.distances):
        lines.append(f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g} {d:.9g}")
    Path(path).write_text("\n".join(lines) + "\n")


def save_xyzd(path, positions, values, r=None):
    """Dump arbitrary per-point scalars in XYZD layout (debug output)."""
    lines = [] if r is None else [f"# r={r:.9g}"]
    for p, v in zip(np.asarray(positions).reshape(-1, 3), np.ravel(values)):
        lines.append(f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g} {v:.9g}")
    Path(path).write_text("\n".join(lines) + "\n")
