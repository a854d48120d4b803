"""B-spline curves fitted along corner-to-corner paths of the graph.

Open curves use clamped knot vectors so the curve interpolates its first
and last control points; pinning those two points is then exactly the
endpoint constraint. Closed curves use a periodic knot layout whose first
``degree`` control points repeat at the tail, which makes position and
tangent continuous across the seam by construction.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import SharpwireError, Wireframe
from .topograph import nearest_edges


class DomainError(SharpwireError, ValueError):
    pass


class WireframeFormatError(SharpwireError, ValueError):
    pass


@dataclass
class BSplineCurve:
    degree: int
    knots: np.ndarray
    control_points: np.ndarray
    closed: bool = False
    info: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.degree = int(self.degree)
        self.knots = np.asarray(self.knots, dtype=np.float64).reshape(-1)
        self.control_points = np.asarray(self.control_points,
                                         dtype=np.float64).reshape(-1, 3)
        p = self.degree
        if p < 0:
            raise ValueError("degree must be non-negative")
        if len(self.control_points) != len(self.knots) - p - 1:
            raise ValueError(
                f"{len(self.control_points)} control points do not match "
                f"{len(self.knots)} knots at degree {p}")
        if np.any(np.diff(self.knots) < 0):
            raise ValueError("knot vector must be nondecreasing")
        if not self.domain[1] > self.domain[0]:
            raise ValueError("empty parameter domain")

    @property
    def domain(self):
        p = self.degree
        return float(self.knots[p]), float(self.knots[len(self.knots) - p - 1])

    @property
    def n_spans(self):
        lo, hi = self.domain
        k = self.knots
        return int(np.count_nonzero(np.diff(k[(k >= lo) & (k <= hi)]) > 0))

    def _prepare(self, u):
        u = np.atleast_1d(np.asarray(u, dtype=np.float64))
        lo, hi = self.domain
        if self.closed:
            return lo + np.mod(u - lo, hi - lo)
        tol = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(u < lo - tol) or np.any(u > hi + tol):
            raise DomainError(f"parameter outside domain [{lo}, {hi}]")
        return np.clip(u, lo, hi)

    def basis(self, u):
        """Dense basis matrix of shape ``(len(u), n_control_points)``."""
        return basis_matrix(self.knots, self.degree, self._prepare(u))

    def evaluate(self, u):
        scalar = np.ndim(u) == 0
        pts = _combine(self.knots, self.degree, self._prepare(u), self.control_points)
        return pts[0] if scalar else pts

    __call__ = evaluate

    def derivative_curve(self):
        p = self.degree
        if p == 0:
            return BSplineCurve(0, self.knots[1:-1],
                                np.zeros((len(self.knots) - 2, 3)), self.closed)
        t = self.knots
        c = self.control_points
        denom = t[p + 1:p + len(c)] - t[1:len(c)]
        safe = np.where(denom > 0, denom, 1.0)
        q = p * (c[1:] - c[:-1]) / safe[:, None]
        q[denom <= 0] = 0.0
        return BSplineCurve(p - 1, t[1:-1], q, self.closed)

    def derivative(self, u, order=1):
        uu = self._prepare(u)
        curve = self
        for _ in range(order):
            curve = curve.derivative_curve()
        out = _combine(curve.knots, curve.degree, uu, curve.control_points)
        return out[0] if np.ndim(u) == 0 else out

    def to_dict(self):
        return {
            "closed": bool(self.closed),
            "degree": self.degree,
            "knots": self.knots.tolist(),
            "control_points": self.control_points.tolist(),
        }

    @classmethod
    def from_dict(cls, obj):
        try:
            return cls(int(obj["degree"]), obj["knots"], obj["control_points"],
                       bool(obj["closed"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise WireframeFormatError(f"bad curve record: {exc}") from None


def seam_mismatch(curve):
    """Position and first-derivative gaps between the two domain ends.

    Both ends are evaluated directly, without the parameter wrapping that
    closed curves apply in :meth:`BSplineCurve.evaluate`.
    """
    ends = np.array(curve.domain)
    pos = _combine(curve.knots, curve.degree, ends, curve.control_points)
    der = curve.derivative_curve()
    tan = _combine(der.knots, der.degree, ends, der.control_points)
    return (float(np.linalg.norm(pos[1] - pos[0])),
            float(np.linalg.norm(tan[1] - tan[0])))


def basis_values(knots, degree, u):
    """Nonzero Cox-de Boor basis values, vectorized over ``u``.

    Returns ``(span, vals)``: basis function ``span - degree + k`` at
    ``u[i]`` equals ``vals[i, k]``. ``u`` must already lie inside the
    spline domain.
    """
    t = np.asarray(knots, dtype=np.float64)
    p = int(degree)
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    n = len(t) - p - 1
    span = np.searchsorted(t, u, side="right") - 1
    span = np.clip(span, p, n - 1)
    # at the right end of the domain fall back to the last nonempty span
    while True:
        empty = t[span + 1] <= t[span]
        if not empty.any():
            break
        span = np.where(empty, span - 1, span)
    m = len(u)
    vals = np.zeros((m, p + 1))
    vals[:, 0] = 1.0
    left = np.zeros((m, p + 1))
    right = np.zeros((m, p + 1))
    for j in range(1, p + 1):
        left[:, j] = u - t[span + 1 - j]
        right[:, j] = t[span + j] - u
        saved = np.zeros(m)
        for r in range(j):
            temp = vals[:, r] / (right[:, r + 1] + left[:, j - r])
            vals[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        vals[:, j] = saved
    return span, vals


def basis_matrix(knots, degree, u):
    """Dense basis matrix of shape ``(len(u), n_control_points)``."""
    p = int(degree)
    span, vals = basis_values(knots, p, u)
    out = np.zeros((len(span), len(knots) - p - 1))
    rows = np.arange(len(span))[:, None]
    out[rows, span[:, None] - p + np.arange(p + 1)] = vals
    return out


def _combine(knots, degree, u, ctrl):
    span, vals = basis_values(knots, degree, u)
    idx = span[:, None] - degree + np.arange(degree + 1)
    return np.einsum("ik,ikj->ij", vals, ctrl[idx])


def clamped_knots(start, end, interior, degree):
    interior = np.asarray(interior, dtype=np.float64).reshape(-1)
    return np.concatenate([np.full(degree + 1, start), interior,
                           np.full(degree + 1, end)])


def periodic_knots(breaks, degree):
    """Knot vector for a closed curve with the given break points.

    ``breaks`` runs from the seam parameter to seam + period.
    """
    b = np.asarray(breaks, dtype=np.float64).reshape(-1)
    period = b[-1] - b[0]
    gaps = np.diff(b)
    m = len(gaps)
    pre = b[0] - np.cumsum(gaps[::-1][np.arange(degree) % m])[::-1]
    post = b[-1] + np.cumsum(gaps[np.arange(degree) % m])
    knots = np.concatenate([pre, b, post])
    assert abs(knots[degree + m] - knots[degree] - period) < 1e-9 * max(1, period)
    return knots


def fold_periodic(basis, n_unique):
    """Sum basis columns of wrapped control points onto their originals."""
    out = basis[:, :n_unique].copy()
    extra = basis[:, n_unique:]
    for j in range(extra.shape[1]):
        out[:, j % n_unique] += extra[:, j]
    return out


def unfold_periodic(unique, degree):
    return np.concatenate([unique, unique[np.arange(degree) % len(unique)]])


# -- paths -----------------------------------------------------------------------

@dataclass
class CurvePath:
    node_indices: list
    closed: bool
    edge_indices: list
    nodes: np.ndarray = None
    knots_t: np.ndarray = None
    assigned_points: np.ndarray = None
    params_u: np.ndarray = None
    points: np.ndarray = None
    distances: np.ndarray = None


class PathPartitionError(SharpwireError):
    pass


def partition_into_paths(graph, corners):
    """Split the edges of ``graph`` into corner-to-corner chains.

    Every non-corner node is expected to have degree two, so walking from a
    corner along degree-2 nodes always ends at another corner. Cycles that
    contain no corner become closed paths starting at their lowest node.
    """
    adj = graph.neighbors()
    is_corner = np.zeros(len(graph.nodes), dtype=bool)
    is_corner[np.asarray(corners, dtype=np.intp)] = True
    used = np.zeros(len(graph.edges), dtype=bool)
    paths = []

    def walk(start, first_nb, first_edge, stop_at):
        seq = [start]
        edge_seq = [first_edge]
        used[first_edge] = True
        cur = first_nb
        while True:
            seq.append(cur)
            if stop_at(cur):
                return seq, edge_seq
            nxt = [(m, k) for m, k in adj[cur] if not used[k]]
            if len(nxt) != 1:
                raise PathPartitionError(
                    f"node {cur} has {len(nxt)} unused edges inside a chain")
            m, k = nxt[0]
            used[k] = True
            edge_seq.append(k)
            cur = m

    for c in sorted(int(c) for c in np.flatnonzero(is_corner)):
        for nb, e in sorted(adj[c]):
            if used[e]:
                continue
            seq, eseq = walk(c, nb, e, lambda v: bool(is_corner[v]))
            paths.append(CurvePath(seq, False, eseq))
    for v in range(len(graph.nodes)):
        free = [(m, k) for m, k in sorted(adj[v]) if not used[k]]
        if not free:
            continue
        if is_corner[v]:
            raise PathPartitionError(f"corner {v} left with unused edges")
        nb, e = free[0]
        seq, eseq = walk(v, nb, e, lambda u: u == v)
        paths.append(CurvePath(seq[:-1], True, eseq))
    return paths


def parameterize_path(path, graph, positions, distances, nearest=None):
    """Attach skeleton points to ``path`` and compute arc-length parameters.

    ``nearest`` may hold precomputed ``(edge, param)`` arrays from
    :func:`sharpwire.topograph.nearest_edges` for all ``positions``.
    Returns ``None`` when no point is nearest to this path.
    """
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    distances = np.asarray(distances, dtype=np.float64).reshape(-1)
    if nearest is None:
        k, s, _ = nearest_edges(positions, graph.nodes, graph.edges)
    else:
        k, s = nearest
    seq = list(path.node_indices)
    if path.closed:
        seq = seq + [seq[0]]
    pos = graph.nodes[seq]
    seg_len = np.linalg.norm(np.diff(pos, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    slot = {int(e): j for j, e in enumerate(path.edge_indices)}
    members = np.flatnonzero(np.isin(k, list(slot)))
    if len(members) == 0:
        warnings.warn("path with no assigned points dropped", RuntimeWarning,
                      stacklevel=2)
        return None
    u = np.empty(len(members))
    for out_i, i in enumerate(members):
        j = slot[int(k[i])]
        forward = graph.edges[k[i], 0] == seq[j]
        frac = s[i] if forward else 1.0 - s[i]
        u[out_i] = cum[j] + frac * seg_len[j]
    order = np.argsort(u, kind="stable")
    # collapse coincident nodes so the knot list stays strictly increasing
    keep = [0]
    for j in range(1, len(cum)):
        if cum[j] - cum[keep[-1]] > 1e-12:
            keep.append(j)
        elif j == len(cum) - 1:
            keep[-1] = j
    if len(keep) < 2:
        warnings.warn("degenerate zero-length path dropped", RuntimeWarning,
                      stacklevel=2)
        return None
    return CurvePath(
        node_indices=path.node_indices, closed=path.closed,
        edge_indices=path.edge_indices,
        nodes=pos[keep], knots_t=cum[keep],
        assigned_points=members[order], params_u=u[order],
        points=positions[members[order]], distances=distances[members[order]])


# -- fitting ---------------------------------------------------------------------

def _spans_covered(knots, u):
    uniq = np.unique(knots)
    counts, _ = np.histogram(u, bins=uniq)
    return counts


def _thin_open(interior, start, end, degree, u, n_free_max):
    interior = list(interior)
    while True:
        if len(interior) + degree - 1 > n_free_max and interior:
            interior.pop(len(interior) // 2)
            continue
        knots = clamped_knots(start, end, interior, degree)
        counts = _spans_covered(knots, u)
        empty = np.flatnonzero(counts == 0)
        if len(empty) == 0 or not interior:
            return interior
        j = int(empty[0])
        # span j is bounded by unique knots j and j+1; drop an interior one
        drop = j if j >= 1 else 0
        interior.pop(min(drop, len(interior) - 1))


def _thin_closed(breaks, u, n_max):
    breaks = list(breaks)
    while True:
        if len(breaks) - 1 > n_max and len(breaks) > 2:
            breaks.pop(len(breaks) // 2)
            continue
        counts, _ = np.histogram(u, bins=np.asarray(breaks))
        empty = np.flatnonzero(counts == 0)
        if len(empty) == 0 or len(breaks) <= 2:
            return breaks
        j = int(empty[0])
        breaks.pop(j + 1 if j + 1 < len(breaks) - 1 else j)


def _segment_fallback(path):
    a, b = path.nodes[0], path.nodes[-1]
    t0, t1 = path.knots_t[0], path.knots_t[-1]
    curve = BSplineCurve(1, [t0, t0, t1, t1], [a, b], closed=False)
    curve.info.update(degraded=True, fallback="segment")
    return curve


def fit_spline(path, degree=3):
    """Least-squares B-spline through the path's assigned points.

    Open curves interpolate the first and last path nodes. The degree is
    lowered while the system is rank deficient; an open path that cannot be
    fitted at all becomes a straight segment flagged as degraded.
    """
    u = path.params_u
    pts = path.points
    t = path.knots_t
    for p in range(int(degree), 0, -1):
        if path.closed:
            breaks = _thin_closed(t, u, len(u))
            m = len(breaks) - 1
            if m < p + 1:
                continue
            knots = periodic_knots(breaks, p)
            full = basis_matrix(knots, p, u)
            a = fold_periodic(full, m)
            sol, _, rank, _ = np.linalg.lstsq(a, pts, rcond=None)
            if rank < m:
                continue
            curve = BSplineCurve(p, knots, unfold_periodic(sol, p), closed=True)
        else:
            interior = _thin_open(t[1:-1], t[0], t[-1], p, u, len(u))
            knots = clamped_knots(t[0], t[-1], interior, p)
            full = basis_matrix(knots, p, u)
            ends = np.array([path.nodes[0], path.nodes[-1]])
            n = full.shape[1]
            ctrl = np.empty((n, 3))
            ctrl[0], ctrl[-1] = ends
            if n > 2:
                rhs = pts - full[:, [0, -1]] @ ends
                sol, _, rank, _ = np.linalg.lstsq(full[:, 1:-1], rhs, rcond=None)
                if rank < n - 2:
                    continue
                ctrl[1:-1] = sol
            curve = BSplineCurve(p, knots, ctrl, closed=False)
        curve.info["degraded"] = False
        return curve
    if path.closed:
        raise SharpwireError("closed path has too few points for any spline")
    return _segment_fallback(path)


def spline_objective(curve, points, distances, params):
    gamma = curve.evaluate(params)
    return float(np.sum((distances - np.linalg.norm(points - gamma, axis=1)) ** 2))


def optimize_control_points(curve, path, iters=50, damping=1e-3, step_tol=1e-9,
                            max_halvings=12, callback=None):
    """Shape the spline so its distance to each assigned point matches the
    predicted distance, with the point parameters held fixed.

    Open curves keep their end control points fixed. Closed curves optimize
    the unique control points and rebuild the periodic tail. Steps that
    raise the objective are halved; a non-finite objective reverts the
    curve and marks it degraded. ``info["objective"]`` lists the objective
    after every accepted step. ``callback``, if given, receives the full
    control point array at the start and after every accepted step.
    """
    pts = path.points
    d = path.distances
    p = curve.degree
    full = curve.basis(path.params_u)
    ctrl = curve.control_points.copy()
    if curve.closed:
        m = len(ctrl) - p
        a = fold_periodic(full, m)
        free = ctrl[:m].copy()

        def rebuild(x):
            return unfold_periodic(x, p)

        const = np.zeros_like(pts)
    else:
        a = full[:, 1:-1]
        free = ctrl[1:-1].copy()
        ends = ctrl[[0, -1]]
        const = full[:, [0, -1]] @ ends

        def rebuild(x):
            return np.concatenate([ends[:1], x, ends[1:]])

    def objective(x):
        gamma = a @ x + const
        return float(np.sum((d - np.linalg.norm(pts - gamma, axis=1)) ** 2))

    f = objective(free)
    history = [f]
    if callback is not None:
        callback(rebuild(free))
    out = BSplineCurve(p, curve.knots, ctrl, curve.closed)
    out.info.update(curve.info)
    if free.size == 0 or not np.isfinite(f):
        out.info.update(objective=history, degraded=bool(curve.info.get("degraded"))
                        or not np.isfinite(f))
        return out
    nf = free.shape[0]
    try:
        for _ in range(iters):
            gamma = a @ free + const
            diff = pts - gamma
            dist = np.linalg.norm(diff, axis=1)
            unit = np.zeros_like(diff)
            ok = dist > 1e-12
            unit[ok] = diff[ok] / dist[ok, None]
            res = d - dist
            # d res_j / d x_k = a_jk * unit_j
            jac = (a[:, :, None] * unit[:, None, :]).reshape(len(pts), 3 * nf)
            jtj = jac.T @ jac
            g = jac.T @ res
            diag = np.diag(jtj).copy()
            diag[diag <= 1e-14] = 1.0
            step = -np.linalg.solve(jtj + damping * np.diag(diag), g)
            step = step.reshape(nf, 3)
            accepted = False
            for _ in range(max_halvings):
                trial = free + step
                f_trial = objective(trial)
                if not np.isfinite(f_trial):
                    raise FloatingPointError("non-finite spline objective")
                if f_trial <= f:
                    accepted = True
                    break
                step = step / 2
            if not accepted:
                break
            free, f = trial, f_trial
            history.append(f)
            if callback is not None:
                callback(rebuild(free))
            if np.max(np.linalg.norm(step, axis=1)) < step_tol:
                break
    except (np.linalg.LinAlgError, FloatingPointError):
        warnings.warn("spline optimization reverted", RuntimeWarning, stacklevel=2)
        out.info.update(objective=history[:1], degraded=True, reverted=True)
        return out
    out = BSplineCurve(p, curve.knots, rebuild(free), curve.closed)
    out.info.update(curve.info)
    out.info["objective"] = history
    return out


# -- sampling and I/O ---------------------------------------------------------------

def sample_curve(curve, spacing, min_closed=3):
    """Points spaced about ``spacing`` apart by arc length.

    Arc length is tabulated on a dense parameter grid and inverted by
    linear interpolation. Open curves include both endpoints. Closed curves
    get at least ``min_closed`` samples and do not repeat the seam point.
    """
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    lo, hi = curve.domain
    s = np.linspace(lo, hi, max(1024, 64 * max(curve.n_spans, 1)) + 1)
    dense = curve.evaluate(s)
    cum = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(dense, axis=0),
                                                          axis=1))])
    length = cum[-1]
    if curve.closed:
        n = max(min_closed, int(round(length / spacing)))
        targets = np.linspace(0.0, length, n + 1)[:-1]
    else:
        n = max(1, int(round(length / spacing)))
        targets = np.linspace(0.0, length, n + 1)
    params = np.interp(targets, cum, s)
    if not curve.closed:
        params[0], params[-1] = lo, hi
    return curve.evaluate(params)


def wireframe_to_dict(wireframe):
    return {
        "corners": np.asarray(wireframe.corners).tolist(),
        "curves": [c.to_dict() for c in wireframe.curves],
    }


def wireframe_from_dict(obj):
    if not isinstance(obj, dict) or "corners" not in obj or "curves" not in obj:
        raise WireframeFormatError("expected an object with 'corners' and 'curves'")
    try:
        corners = np.asarray(obj["corners"], dtype=np.float64).reshape(-1, 3)
    except (TypeError, ValueError) as exc:
        raise WireframeFormatError(f"bad corners: {exc}") from None
    if not isinstance(obj["curves"], list):
        raise WireframeFormatError("'curves' must be a list")
    return Wireframe(corners, [BSplineCurve.from_dict(c) for c in obj["curves"]])


def save_wireframe(path, wireframe):
    Path(path).write_text(json.dumps(wireframe_to_dict(wireframe), indent=1) + "\n")


def load_wireframe(path):
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise WireframeFormatError(f"{path}: {exc}") from None
    return wireframe_from_dict(obj)


def export_obj(path, wireframe, spacing):
    """Write each curve as an OBJ polyline (``l`` element)."""
    lines = ["# sharpwire wireframe"]
    base = 1
    for curve in wireframe.curves:
        pts = sample_curve(curve, spacing)
        lines += [f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in pts]
        idx = list(range(base, base + len(pts)))
        if curve.closed:
            idx.append(base)
        lines.append("l " + " ".join(map(str, idx)))
        base += len(pts)
    Path(path).write_text("\n".join(lines) + "\n")
