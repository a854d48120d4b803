"""Polyline fitting per curve cluster and global node-position refinement.

Each curve cluster gets a polyline: two endpoints for open curves, a
triangle for closed ones, refined by inserting the point whose predicted
distance disagrees most with its distance to the polyline. Polylines and
corner centers are then stitched into a single graph whose node positions
are optimized against the distance field.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import PointIndex, farthest_point_sampling

log = logging.getLogger(__name__)

CLOSED = "closed"

CORNER_CENTER = "corner-center"
INTERIOR = "polyline-interior"
ENDPOINT = "endpoint"


@dataclass
class Polyline:
    nodes: np.ndarray
    closed: bool = False
    source_cluster: int = -1
    info: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=np.float64).reshape(-1, 3)
        need = 3 if self.closed else 2
        if len(self.nodes) < need:
            raise ValueError(f"polyline needs at least {need} nodes")

    def segments(self):
        """Index pairs of consecutive nodes, wrapping for closed polylines."""
        k = len(self.nodes)
        a = np.arange(k if self.closed else k - 1)
        return np.stack([a, (a + 1) % k], axis=1)


@dataclass
class TopologicalGraph:
    nodes: np.ndarray
    edges: np.ndarray
    node_kind: list
    info: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=np.float64).reshape(-1, 3)
        self.edges = np.asarray(self.edges, dtype=np.intp).reshape(-1, 2)
        self.node_kind = list(self.node_kind)

    def degree(self):
        return np.bincount(self.edges.ravel(), minlength=len(self.nodes))

    def neighbors(self):
        adj = [[] for _ in range(len(self.nodes))]
        for k, (a, b) in enumerate(self.edges):
            adj[a].append((b, k))
            adj[b].append((a, k))
        return adj

    def with_nodes(self, nodes):
        return TopologicalGraph(nodes, self.edges.copy(), self.node_kind)

    def to_dict(self):
        return {
            "nodes": self.nodes.tolist(),
            "edges": self.edges.tolist(),
            "node_kind": self.node_kind,
        }


@dataclass(frozen=True)
class GraphProjection:
    edge_index: int
    foot_point: np.ndarray
    residual: float
    param: float = 0.0


# -- projections ----------------------------------------------------------------

def project_onto_segments(points, seg_a, seg_b, chunk=4096):
    """Closest point on every segment for every point.

    Returns ``(s, dist)``, both of shape ``(n_points, n_segments)``, with
    ``s`` the clamped barycentric parameter along ``seg_a -> seg_b``.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    d = seg_b - seg_a
    dd = np.einsum("ij,ij->i", d, d)
    safe = np.where(dd > 0, dd, 1.0)
    s_all = np.empty((len(points), len(seg_a)))
    dist_all = np.empty_like(s_all)
    for lo in range(0, len(points), chunk):
        p = points[lo:lo + chunk, None, :]
        w = p - seg_a[None]
        s = np.clip(np.einsum("ijk,jk->ij", w, d) / safe, 0.0, 1.0)
        s[:, dd == 0] = 0.0
        foot = seg_a[None] + s[..., None] * d[None]
        s_all[lo:lo + chunk] = s
        dist_all[lo:lo + chunk] = np.linalg.norm(p - foot, axis=2)
    return s_all, dist_all


def nearest_edges(points, nodes, edges):
    """Nearest edge, clamped parameter and distance for each point.

    Ties resolve to the lower edge index.
    """
    a = nodes[edges[:, 0]]
    b = nodes[edges[:, 1]]
    s, dist = project_onto_segments(points, a, b)
    k = np.argmin(dist, axis=1)
    rows = np.arange(len(k))
    return k, s[rows, k], dist[rows, k]


def project_to_graph(point, graph, distance=0.0):
    """Project one point onto the nearest edge of ``graph``."""
    if len(graph.edges) == 0:
        raise ValueError("graph has no edges")
    p = np.asarray(point, dtype=np.float64).reshape(1, 3)
    k, s, dist = nearest_edges(p, graph.nodes, graph.edges)
    a, b = graph.nodes[graph.edges[k[0]]]
    foot = a + s[0] * (b - a)
    return GraphProjection(int(k[0]), foot, abs(float(distance) - float(dist[0])),
                           float(s[0]))


def graph_objective(graph, positions, distances):
    """Sum of squared differences between predicted and actual distances
    to the nearest graph edge, evaluated by direct summation."""
    if len(positions) == 0:
        return 0.0
    _, _, dist = nearest_edges(positions, graph.nodes, graph.edges)
    return float(np.sum((distances - dist) ** 2))


# -- endpoints ------------------------------------------------------------------

def _principal_axis(pts):
    c = pts - pts.mean(axis=0)
    w, v = np.linalg.eigh(c.T @ c)
    axis = v[:, -1]
    # deterministic sign: largest-magnitude component positive
    if axis[np.argmax(np.abs(axis))] < 0:
        axis = -axis
    return axis, w


def embedding_scores(positions, local_radius=None):
    """Signed ordering score of every point along the curve direction.

    For each query point the points of its local set are projected onto the
    set's principal axis; the score is the mean of ``sign(tau_j - tau_q)``.
    Points at the ends of a curve score close to +1 or -1, interior points
    close to 0. With ``local_radius=None`` the whole cluster is one local set.
    """
    pts = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    n = len(pts)
    g_axis, g_w = _principal_axis(pts)
    if g_w[-1] <= 1e-24:
        raise ValueError("degenerate cluster: zero variance")
    if local_radius is None:
        tau = pts @ g_axis
        srt = np.sort(tau)
        greater = n - np.searchsorted(srt, tau, side="right")
        less = np.searchsorted(srt, tau, side="left")
        return (greater - less) / n

    index = PointIndex(pts)
    scores = np.zeros(n)
    for i in range(n):
        members = index.radius(pts[i], local_radius)
        local = pts[members]
        if len(local) < 2:
            continue
        axis, w = _principal_axis(local)
        if w[-1] <= 1e-24:
            continue
        if axis @ g_axis < 0:
            axis = -axis
        tau = local @ axis
        # reuse the query's own projection so its self term is exactly zero
        own = tau[np.searchsorted(members, i)]
        scores[i] = np.mean(np.sign(tau - own))
    return scores


def detect_endpoints(positions, v_open_threshold=0.6, local_radius=None):
    """Return ``(i, j)`` endpoint indices, or :data:`CLOSED`.

    Raises ``ValueError`` for clusters with fewer than 3 points or no spread.
    """
    pts = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    if len(pts) < 3:
        raise ValueError("endpoint detection needs at least 3 points")
    v = embedding_scores(pts, local_radius)
    mag = np.abs(v)
    if mag.max() < v_open_threshold:
        return CLOSED
    first = int(np.argmax(mag))
    far = np.linalg.norm(pts - pts[first], axis=1)
    if local_radius is None:
        eligible = np.sign(v) != np.sign(v[first])
    else:
        eligible = (far > 2 * local_radius) | (np.sign(v) != np.sign(v[first]))
    eligible[first] = False
    if not eligible.any():
        second = int(np.argmax(far))
    else:
        second = int(np.argmax(np.where(eligible, mag, -1.0)))
    return (first, second) if v[first] >= v[second] else (second, first)


def init_open_polyline(positions, ends, source_cluster=-1):
    pts = np.asarray(positions, dtype=np.float64)
    return Polyline(pts[list(ends)], closed=False, source_cluster=source_cluster)


def init_closed_polyline(positions, source_cluster=-1):
    """Triangle through three farthest-point samples of the cluster."""
    pts = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    if len(pts) < 3:
        raise ValueError("closed polyline needs at least 3 points")
    idx = farthest_point_sampling(pts, 3)
    return Polyline(pts[idx], closed=True, source_cluster=source_cluster)


# -- subdivision ----------------------------------------------------------------

def split_residuals(polyline, positions, distances):
    """Per point: min over segments of ``|d - dist(p, segment)|`` and the
    segment realizing it."""
    seg = polyline.segments()
    a = polyline.nodes[seg[:, 0]]
    b = polyline.nodes[seg[:, 1]]
    _, dist = project_onto_segments(positions, a, b)
    res = np.abs(distances[:, None] - dist)
    best = np.argmin(res, axis=1)
    return res[np.arange(len(best)), best], best


def subdivide_polyline(polyline, positions, distances, t_split, max_depth=24):
    """Insert worst-fitting cluster points as nodes until every residual is
    at most ``t_split``.

    ``info["max_residuals"]`` records the maximum residual before each round
    and after the last one. A split that would raise the maximum residual is
    undone and refinement stops (``info["stalled"]``); hitting ``max_depth``
    sets ``info["depth_limited"]``.
    """
    pts = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    d = np.asarray(distances, dtype=np.float64).reshape(-1)
    nodes = polyline.nodes.copy()
    current = Polyline(nodes, polyline.closed, polyline.source_cluster)
    res, seg_of = split_residuals(current, pts, d)
    history = [float(res.max())]
    info = {"max_residuals": history, "depth_limited": False, "stalled": False,
            "splits": 0}
    depth = 0
    while history[-1] > t_split:
        if depth >= max_depth:
            info["depth_limited"] = True
            warnings.warn("subdivision stopped at max_depth", RuntimeWarning,
                          stacklevel=2)
            break
        worst = int(np.argmax(res))
        seg = int(seg_of[worst])
        new_nodes = np.insert(current.nodes, seg + 1, pts[worst], axis=0)
        if np.min(np.linalg.norm(current.nodes - pts[worst], axis=1)) <= 1e-12:
            info["stalled"] = True
            break
        trial = Polyline(new_nodes, current.closed, current.source_cluster)
        t_res, t_seg = split_residuals(trial, pts, d)
        if t_res.max() > history[-1]:
            info["stalled"] = True
            break
        current, res, seg_of = trial, t_res, t_seg
        history.append(float(res.max()))
        info["splits"] += 1
        depth += 1
    current.info = info
    return current


# -- graph assembly ----------------------------------------------------------------

def assemble_graph(polylines, corner_centers, attach_radius, merge_tol=1e-9):
    """Join polylines and corner centers into one graph.

    Open polyline ends connect to the nearest corner center within
    ``attach_radius``; otherwise they stay dangling.
    """
    corner_centers = np.asarray(corner_centers, dtype=np.float64).reshape(-1, 3)
    nodes = []
    kinds = []
    edges = []

    def add(p, kind):
        for k, q in enumerate(nodes):
            if np.linalg.norm(q - p) <= merge_tol:
                if kind == CORNER_CENTER:
                    kinds[k] = CORNER_CENTER
                return k
        nodes.append(np.asarray(p, dtype=np.float64))
        kinds.append(kind)
        return len(nodes) - 1

    def link(a, b):
        if a != b and (a, b) not in seen and (b, a) not in seen:
            seen.add((a, b))
            edges.append((a, b))

    seen = set()
    corner_ids = [add(c, CORNER_CENTER) for c in corner_centers]
    for pl in polylines:
        ids = []
        last = len(pl.nodes) - 1
        for j, p in enumerate(pl.nodes):
            kind = ENDPOINT if (not pl.closed and j in (0, last)) else INTERIOR
            ids.append(add(p, kind))
        for a, b in pl.segments():
            link(ids[a], ids[b])
        if pl.closed or not corner_ids:
            continue
        for end in (ids[0], ids[-1]):
            gaps = np.linalg.norm(corner_centers - nodes[end], axis=1)
            c = int(np.argmin(gaps))
            if gaps[c] <= attach_radius:
                link(end, corner_ids[c])
    if not nodes:
        return TopologicalGraph(np.zeros((0, 3)), np.zeros((0, 2), int), [])
    return TopologicalGraph(np.array(nodes), np.array(edges, dtype=np.intp)
                            .reshape(-1, 2), kinds)


# -- node optimization ------------------------------------------------------------

def _residual_jacobian(nodes, edges, positions, distances):
    k, s, dist = nearest_edges(positions, nodes, edges)
    a = nodes[edges[k, 0]]
    b = nodes[edges[k, 1]]
    foot = a + s[:, None] * (b - a)
    diff = positions - foot
    unit = np.zeros_like(diff)
    ok = dist > 1e-12
    unit[ok] = diff[ok] / dist[ok, None]
    res = distances - dist
    n = len(positions)
    rows = np.repeat(np.arange(n), 6)
    cols = np.concatenate([
        3 * edges[k, 0][:, None] + np.arange(3),
        3 * edges[k, 1][:, None] + np.arange(3)], axis=1).ravel()
    vals = np.concatenate([(1 - s)[:, None] * unit, s[:, None] * unit],
                          axis=1).ravel()
    jac = sp.csr_matrix((vals, (rows, cols)), shape=(n, 3 * len(nodes)))
    return res, jac


def optimize_node_positions(graph, positions, distances, iters=50, step_tol=1e-7,
                            damping=1e-3, max_halvings=12, max_displacement=None,
                            callback=None):
    """Minimize the squared mismatch between predicted distances and
    distances to the nearest graph edge over the node positions.

    Alternates between freezing each point's nearest edge and foot
    parameter and taking a damped Gauss-Newton step on the node positions.
    A step is accepted only if the objective, recomputed with fresh
    projections, does not increase; otherwise it is halved. The objective
    after every accepted iteration is stored in ``info["objective"]``.

    With an exact field the objective is flat along degenerate directions
    (a node sliding along the line of its edge), so nodes can drift
    arbitrarily far. ``max_displacement`` confines every node to a ball of
    that radius around its starting position.

    ``callback``, if given, is called with a copy of the node array at the
    start and after every accepted step.
    """
    pts = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    d = np.asarray(distances, dtype=np.float64).reshape(-1)
    nodes = graph.nodes.copy()
    start = graph.nodes
    edges = graph.edges
    out = graph.with_nodes(nodes)
    if len(edges) == 0 or len(pts) == 0:
        out.info = {"objective": [0.0], "iterations": 0, "skipped_nodes": 0}
        return out
    f = graph_objective(out, pts, d)
    history = [f]
    if callback is not None:
        callback(nodes.copy())
    skipped = 0
    it = 0
    for it in range(1, iters + 1):
        res, jac = _residual_jacobian(nodes, edges, pts, d)
        jtj = (jac.T @ jac).toarray()
        g = jac.T @ res
        diag = np.diag(jtj).copy()
        empty = diag <= 1e-14
        skipped = int(np.count_nonzero(empty.reshape(-1, 3).all(axis=1)))
        diag[empty] = 1.0
        lhs = jtj + damping * np.diag(diag)
        lhs[empty, :] = 0.0
        lhs[:, empty] = 0.0
        lhs[empty, empty] = 1.0
        g = np.where(empty, 0.0, g)
        try:
            step = -np.linalg.solve(lhs, g)
        except np.linalg.LinAlgError:
            warnings.warn("singular normal system in node optimization",
                          RuntimeWarning, stacklevel=2)
            break
        step = step.reshape(-1, 3)
        accepted = False
        for _ in range(max_halvings):
            trial = nodes + step
            if max_displacement is not None:
                trial = _clamp_to_balls(trial, start, max_displacement)
            f_trial = graph_objective(graph.with_nodes(trial), pts, d)
            if np.isfinite(f_trial) and f_trial <= f:
                accepted = True
                break
            step = step / 2
        if not accepted:
            break
        move = float(np.max(np.linalg.norm(trial - nodes, axis=1)))
        nodes = trial
        f = f_trial
        history.append(f)
        if callback is not None:
            callback(nodes.copy())
        if move < step_tol:
            break
    out = graph.with_nodes(nodes)
    out.info = {"objective": history, "iterations": it, "skipped_nodes": skipped}
    return out


def _clamp_to_balls(x, centers, radius):
    off = x - centers
    norm = np.linalg.norm(off, axis=1)
    scale = np.minimum(1.0, radius / np.maximum(norm, 1e-300))
    return centers + off * scale[:, None]


def reconcile_corners(graph):
    """Nodes whose degree differs from two."""
    deg = graph.degree()
    return np.flatnonzero(deg != 2)
