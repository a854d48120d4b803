"""Synthetic CAD-like shapes with exact distance-to-feature fields.

A shape is a set of primitive feature curves (segments, circular arcs,
full circles, cubic Bezier curves), the corners where they meet, and the
surface patches that carry the sampled points. The distance field of a
sampled cloud is the exact Euclidean distance to the nearest feature
curve, which makes these shapes usable as ground truth for the whole
extraction pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import PointCloudField, Wireframe
from .splines import BSplineCurve, CurvePath, fit_spline

SEGMENT = "segment"
ARC = "circular-arc"
CIRCLE = "full-circle"
BEZIER = "cubic-bezier"

TWO_PI = 2.0 * np.pi


def _unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def _frame(axis, ref=None):
    n = _unit(axis)
    if ref is None:
        ref = [1.0, 0.0, 0.0] if abs(n[0]) < 0.9 else [0.0, 1.0, 0.0]
    e1 = np.asarray(ref, dtype=np.float64)
    e1 = _unit(e1 - (e1 @ n) * n)
    return n, e1, np.cross(n, e1)


@dataclass
class PrimitiveCurve:
    """One analytic feature curve.

    ``params`` by kind:

    * segment: ``a``, ``b``
    * circular-arc / full-circle: ``center``, ``radius``, ``normal``,
      ``ref`` (direction of angle 0), and for arcs ``start``/``stop`` angles
      with ``0 < stop - start < 2*pi``
    * cubic-bezier: ``ctrl``, four control points
    """

    kind: str
    params: dict

    def __post_init__(self):
        p = self.params
        if self.kind == SEGMENT:
            p["a"] = np.asarray(p["a"], dtype=np.float64)
            p["b"] = np.asarray(p["b"], dtype=np.float64)
            if np.linalg.norm(p["b"] - p["a"]) <= 1e-9:
                raise ValueError("degenerate segment")
        elif self.kind in (ARC, CIRCLE):
            if not p["radius"] > 1e-9:
                raise ValueError("radius must be positive")
            n, e1, e2 = _frame(p["normal"], p.get("ref"))
            p["center"] = np.asarray(p["center"], dtype=np.float64)
            p["normal"], p["e1"], p["e2"] = n, e1, e2
            if self.kind == ARC:
                span = p["stop"] - p["start"]
                if not 0.0 < span < TWO_PI:
                    raise ValueError("arc angle range must lie in (0, 2*pi)")
            else:
                p["start"], p["stop"] = 0.0, TWO_PI
        elif self.kind == BEZIER:
            p["ctrl"] = np.asarray(p["ctrl"], dtype=np.float64).reshape(4, 3)
            if self.length <= 1e-9:
                raise ValueError("degenerate Bezier curve")
        else:
            raise ValueError(f"unknown curve kind {self.kind!r}")

    @property
    def closed(self):
        return self.kind == CIRCLE

    def evaluate(self, t):
        """Points at normalized parameters ``t`` in ``[0, 1]``."""
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))[:, None]
        p = self.params
        if self.kind == SEGMENT:
            return p["a"] + t * (p["b"] - p["a"])
        if self.kind in (ARC, CIRCLE):
            ang = p["start"] + t * (p["stop"] - p["start"])
            return p["center"] + p["radius"] * (np.cos(ang) * p["e1"]
                                                + np.sin(ang) * p["e2"])
        c = p["ctrl"]
        s = 1.0 - t
        return (s ** 3 * c[0] + 3 * s * s * t * c[1] + 3 * s * t * t * c[2]
                + t ** 3 * c[3])

    @property
    def endpoints(self):
        if self.closed:
            return np.zeros((0, 3))
        return self.evaluate([0.0, 1.0])

    @property
    def length(self):
        p = self.params
        if self.kind == SEGMENT:
            return float(np.linalg.norm(p["b"] - p["a"]))
        if self.kind in (ARC, CIRCLE):
            return float(p["radius"] * (p["stop"] - p["start"]))
        pts = self.evaluate(np.linspace(0, 1, 4097))
        return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))

    def distance(self, points):
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if self.kind == SEGMENT:
            return _segment_distance(pts, self.params["a"], self.params["b"])
        if self.kind in (ARC, CIRCLE):
            return _arc_distance(pts, self.params, self.kind == CIRCLE)
        return _bezier_distance(pts, self.params["ctrl"])

    def to_bspline(self, spans_per_turn=256):
        """B-spline form: exact for segments and Bezier curves, a dense
        cubic least-squares fit for circles and arcs."""
        p = self.params
        if self.kind == SEGMENT:
            length = self.length
            return BSplineCurve(1, [0, 0, length, length], [p["a"], p["b"]])
        if self.kind == BEZIER:
            return BSplineCurve(3, [0, 0, 0, 0, 1, 1, 1, 1], p["ctrl"])
        span = p["stop"] - p["start"]
        n_spans = max(8, int(np.ceil(spans_per_turn * span / TWO_PI)))
        length = self.length
        breaks = np.linspace(0.0, length, n_spans + 1)
        u = np.linspace(0.0, length, 16 * n_spans + 1)
        if self.closed:
            u = u[:-1]
        pts = self.evaluate(u / length)
        path = CurvePath(node_indices=[], closed=self.closed, edge_indices=[],
                         nodes=self.evaluate([0.0, 1.0]), knots_t=breaks,
                         params_u=u, points=pts, distances=np.zeros(len(u)))
        return fit_spline(path, degree=3)


def _segment_distance(pts, a, b):
    d = b - a
    s = np.clip((pts - a) @ d / (d @ d), 0.0, 1.0)
    return np.linalg.norm(pts - (a + s[:, None] * d), axis=1)


def _arc_distance(pts, p, full):
    rel = pts - p["center"]
    h = rel @ p["normal"]
    x = rel @ p["e1"]
    y = rel @ p["e2"]
    rho = np.hypot(x, y)
    radial = np.sqrt((rho - p["radius"]) ** 2 + h ** 2)
    if full:
        return radial
    ang = np.mod(np.arctan2(y, x) - p["start"], TWO_PI)
    inside = (ang <= p["stop"] - p["start"]) & (rho > 0)
    ends = np.stack([
        p["center"] + p["radius"] * (np.cos(a) * p["e1"] + np.sin(a) * p["e2"])
        for a in (p["start"], p["stop"])])
    end_d = np.min(np.linalg.norm(pts[:, None, :] - ends[None], axis=2), axis=1)
    return np.where(inside, np.minimum(radial, end_d), end_d)


def _bezier_split(ctrl, t0, t1):
    """Control points of the piece of a cubic Bezier on ``[t0, t1]``."""
    def blossom(a, b, c):
        pts = ctrl.copy()
        for tt in (a, b, c):
            pts = (1 - tt) * pts[:-1] + tt * pts[1:]
        return pts[0]
    return np.array([blossom(t0, t0, t0), blossom(t0, t0, t1),
                     blossom(t0, t1, t1), blossom(t1, t1, t1)])


def _bezier_distance(pts, ctrl, n_pieces=64, iters=64):
    """Distance to a cubic Bezier by subdivision with bounding-box pruning.

    The curve is split into pieces; a piece survives when the distance to
    the bounding box of its control polygon (a lower bound, since the piece
    lies in its convex hull) does not exceed the best sampled distance.
    Surviving pieces are refined by golden-section search on the parameter.
    """
    edges = np.linspace(0.0, 1.0, n_pieces + 1)
    pieces = np.array([_bezier_split(ctrl, edges[k], edges[k + 1])
                       for k in range(n_pieces)])
    lo = pieces.min(axis=1)
    hi = pieces.max(axis=1)
    curve = PrimitiveCurve(BEZIER, {"ctrl": ctrl})
    best = np.full(len(pts), np.inf)
    chunk = 2048
    for start in range(0, len(pts), chunk):
        p = pts[start:start + chunk]
        samples = curve.evaluate(np.linspace(0, 1, 8 * n_pieces + 1))
        upper = np.min(np.linalg.norm(p[:, None, :] - samples[None], axis=2), axis=1)
        gap = np.maximum(lo[None] - p[:, None, :], 0) + np.maximum(
            p[:, None, :] - hi[None], 0)
        lower = np.linalg.norm(gap, axis=2)
        pi_, ki = np.nonzero(lower <= upper[:, None] + 1e-15)
        a = edges[ki].copy()
        b = edges[ki + 1].copy()
        q = p[pi_]
        g = (np.sqrt(5.0) - 1.0) / 2.0

        def dist_at(t):
            return np.linalg.norm(curve.evaluate(t) - q, axis=1)

        for _ in range(iters):
            c = b - g * (b - a)
            d = a + g * (b - a)
            left = dist_at(c) < dist_at(d)
            b = np.where(left, d, b)
            a = np.where(left, a, c)
        mid = 0.5 * (a + b)
        cand = np.minimum(dist_at(mid),
                          np.minimum(dist_at(edges[ki]), dist_at(edges[ki + 1])))
        local = np.full(len(p), np.inf)
        np.minimum.at(local, pi_, cand)
        best[start:start + chunk] = np.minimum(local, upper)
    return best


# -- surface patches ----------------------------------------------------------------

def _inside_polygon(xy, poly):
    """Even-odd rule point-in-polygon test, vectorized over points."""
    x, y = xy[:, 0], xy[:, 1]
    inside = np.zeros(len(xy), dtype=bool)
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        crosses = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < xc)
    return inside


def _jittered_grid(lo, hi, r, jitter, rng):
    offset = rng.uniform(0, r, size=2)
    xs = np.arange(lo[0] - r + offset[0], hi[0] + r, r)
    ys = np.arange(lo[1] - r + offset[1], hi[1] + r, r)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    return pts + rng.uniform(-jitter * r, jitter * r, size=pts.shape)


@dataclass
class PlanarPatch:
    """Planar region: ``origin + x*e1 + y*e2`` for ``(x, y)`` inside the
    outline polygon (or outline circle) and outside every hole."""

    origin: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    outline: np.ndarray = None
    circle: tuple = None
    holes: list = field(default_factory=list)

    def contains2d(self, xy):
        if self.outline is not None:
            ok = _inside_polygon(xy, np.asarray(self.outline, dtype=np.float64))
        else:
            c, rad = self.circle
            ok = np.linalg.norm(xy - np.asarray(c), axis=1) <= rad
        for hole in self.holes:
            if isinstance(hole, tuple):
                c, rad = hole
                ok &= np.linalg.norm(xy - np.asarray(c), axis=1) > rad
            else:
                ok &= ~_inside_polygon(xy, np.asarray(hole, dtype=np.float64))
        return ok

    def bounds2d(self):
        if self.outline is not None:
            o = np.asarray(self.outline, dtype=np.float64)
            return o.min(axis=0), o.max(axis=0)
        c, rad = self.circle
        return np.asarray(c) - rad, np.asarray(c) + rad

    def sample(self, r, jitter, rng):
        lo, hi = self.bounds2d()
        xy = _jittered_grid(lo, hi, r, jitter, rng)
        xy = xy[self.contains2d(xy)]
        return (np.asarray(self.origin, dtype=np.float64)
                + xy[:, :1] * np.asarray(self.e1) + xy[:, 1:] * np.asarray(self.e2))

    @property
    def area(self):
        lo, hi = self.bounds2d()
        g = np.stack(np.meshgrid(np.linspace(lo[0], hi[0], 400),
                                 np.linspace(lo[1], hi[1], 400)), -1).reshape(-1, 2)
        return float(np.mean(self.contains2d(g)) * np.prod(hi - lo))


@dataclass
class CylinderPatch:
    """Lateral surface of a right circular cylinder."""

    base: np.ndarray
    axis: np.ndarray
    radius: float
    height: float

    def sample(self, r, jitter, rng):
        n, e1, e2 = _frame(self.axis)
        circ = TWO_PI * self.radius
        n_around = max(3, int(round(circ / r)))
        step = circ / n_around
        s = (np.arange(n_around) + rng.uniform(0, 1)) * step
        h = np.arange(rng.uniform(0, r), self.height, r)
        gs, gh = np.meshgrid(s, h, indexing="ij")
        gs = gs.ravel() + rng.uniform(-jitter * step, jitter * step, gs.size)
        gh = gh.ravel() + rng.uniform(-jitter * r, jitter * r, gh.size)
        keep = (gh >= 0) & (gh <= self.height)
        ang = gs[keep] / self.radius
        return (np.asarray(self.base, dtype=np.float64)
                + self.radius * (np.cos(ang)[:, None] * e1 + np.sin(ang)[:, None] * e2)
                + gh[keep][:, None] * n)

    @property
    def area(self):
        return TWO_PI * self.radius * self.height


@dataclass
class SyntheticShape:
    name: str
    corners: np.ndarray
    curves: list
    patches: list
    noise_sigma: float = 0.0

    def distance(self, points):
        """Exact distance to the nearest feature curve, clipped to [0, 1]."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        d = np.full(len(pts), np.inf)
        for c in self.curves:
            d = np.minimum(d, c.distance(pts))
        return np.clip(d, 0.0, 1.0)

    def wireframe(self):
        return Wireframe(self.corners.copy(), [c.to_bspline() for c in self.curves])

    @property
    def n_open(self):
        return sum(not c.closed for c in self.curves)

    @property
    def n_closed(self):
        return sum(c.closed for c in self.curves)


def exact_distance(point, shape):
    """Distance from ``point`` (one point or an ``(N, 3)`` array) to the
    nearest feature curve of ``shape``."""
    pts = np.asarray(point, dtype=np.float64)
    d = shape.distance(pts.reshape(-1, 3))
    return float(d[0]) if pts.ndim == 1 else d


def sample_field(shape, r, noise_sigma=0.0, seed=0, jitter=0.25):
    """Sample the shape's surface patches at average spacing ``r``.

    Points come from jittered grids (blue-noise-like), optional isotropic
    Gaussian noise is added, and distances are computed at the final
    positions so the field is exact for the emitted cloud.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    rng = np.random.default_rng(seed)
    pts = np.concatenate([p.sample(r, jitter, rng) for p in shape.patches])
    if noise_sigma > 0:
        pts = pts + rng.normal(0.0, noise_sigma, size=pts.shape)
    return PointCloudField(pts, shape.distance(pts), r)


# -- presets ---------------------------------------------------------------------

def _seg(a, b):
    return PrimitiveCurve(SEGMENT, {"a": a, "b": b})


def _circle(center, radius, normal=(0, 0, 1)):
    return PrimitiveCurve(CIRCLE, {"center": center, "radius": radius,
                                   "normal": normal})


def _rect(origin, e1, e2, w, h, holes=()):
    return PlanarPatch(np.asarray(origin, float), np.asarray(e1, float),
                       np.asarray(e2, float),
                       outline=np.array([[0, 0], [w, 0], [w, h], [0, h]], float),
                       holes=list(holes))


def _prism(base_poly, z0, z1, top_holes=(), top=True, bottom=True):
    """Extrude a convex-or-not xy polygon between heights z0 and z1."""
    poly = np.asarray(base_poly, dtype=np.float64)
    k = len(poly)
    lo = np.array([[x, y, z0] for x, y in poly])
    hi = np.array([[x, y, z1] for x, y in poly])
    curves = []
    patches = []
    for i in range(k):
        j = (i + 1) % k
        if bottom:
            curves.append(_seg(lo[i], lo[j]))
        if top:
            curves.append(_seg(hi[i], hi[j]))
        curves.append(_seg(lo[i], hi[i]))
        edge = lo[j] - lo[i]
        width = np.linalg.norm(edge)
        patches.append(_rect(lo[i], edge / width, [0, 0, 1], width, z1 - z0))
    xy = (np.zeros(3), np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    if bottom:
        patches.append(PlanarPatch(np.array([0, 0, z0]), xy[1], xy[2], outline=poly))
    if top:
        patches.append(PlanarPatch(np.array([0, 0, z1]), xy[1], xy[2], outline=poly,
                                   holes=list(top_holes)))
    corners = np.concatenate([lo, hi])
    return corners, curves, patches


def _box(x0, x1, y0, y1, z0, z1, **kw):
    return _prism([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], z0, z1, **kw)


def preset_cube(size=1.0):
    if not size > 0:
        raise ValueError("size must be positive")
    o = 0.5 - size / 2
    return _box(o, o + size, o, o + size, o, o + size)


def preset_box(sx=0.9, sy=0.6, sz=0.4):
    if min(sx, sy, sz) <= 0:
        raise ValueError("box dimensions must be positive")
    return _box(0.5 - sx / 2, 0.5 + sx / 2, 0.5 - sy / 2, 0.5 + sy / 2,
                0.5 - sz / 2, 0.5 + sz / 2)


def preset_l_bracket(leg=0.9, thickness=0.3, depth=0.8):
    if not 0 < thickness < leg or depth <= 0:
        raise ValueError("invalid L-bracket dimensions")
    t, a = thickness, leg
    section = np.array([[0, 0], [a, 0], [a, t], [t, t], [t, a], [0, a]], float)
    section += (1 - a) / 2
    y0, y1 = 0.5 - depth / 2, 0.5 + depth / 2
    # extrude along y: map section (u, v) -> (x=u, y, z=v)
    k = len(section)
    front = np.array([[u, y0, v] for u, v in section])
    back = np.array([[u, y1, v] for u, v in section])
    curves, patches = [], []
    for i in range(k):
        j = (i + 1) % k
        curves += [_seg(front[i], front[j]), _seg(back[i], back[j]),
                   _seg(front[i], back[i])]
        edge = front[j] - front[i]
        w = np.linalg.norm(edge)
        patches.append(_rect(front[i], edge / w, [0, 1, 0], w, depth))
    for y in (y0, y1):
        patches.append(PlanarPatch(np.array([0, y, 0.0]), np.array([1.0, 0, 0]),
                                   np.array([0, 0, 1.0]), outline=section))
    return np.concatenate([front, back]), curves, patches


def preset_closed_ring(radius=0.35, height=0.35, z=0.7):
    if radius <= 0 or height <= 0:
        raise ValueError("invalid ring dimensions")
    c = np.array([0.5, 0.5, z])
    curves = [_circle(c, radius)]
    patches = [
        PlanarPatch(c, np.array([1.0, 0, 0]), np.array([0, 1.0, 0]),
                    circle=((0.0, 0.0), radius)),
        CylinderPatch(c - [0, 0, height], np.array([0, 0, 1.0]), radius, height),
    ]
    return np.zeros((0, 3)), curves, patches


def preset_prism(z0=0.2, z1=0.8):
    tri = [[0.1, 0.1], [0.9, 0.1], [0.5, 0.85]]
    return _prism(tri, z0, z1)


def preset_hex_prism(radius=0.4, z0=0.2, z1=0.8):
    if radius <= 0 or z1 <= z0:
        raise ValueError("invalid hex prism dimensions")
    ang = np.arange(6) * np.pi / 3
    hexagon = np.stack([0.5 + radius * np.cos(ang), 0.5 + radius * np.sin(ang)], 1)
    return _prism(hexagon, z0, z1)


def preset_box_with_boss(boss_radius=0.2, boss_height=0.3):
    if boss_radius <= 0 or boss_radius >= 0.4 or boss_height <= 0:
        raise ValueError("invalid boss dimensions")
    z_top = 0.5
    corners, curves, patches = _box(0.1, 0.9, 0.1, 0.9, 0.1, z_top,
                                    top_holes=[((0.5, 0.5), boss_radius)])
    c0 = np.array([0.5, 0.5, z_top])
    c1 = c0 + [0, 0, boss_height]
    curves += [_circle(c0, boss_radius), _circle(c1, boss_radius)]
    patches += [
        CylinderPatch(c0, np.array([0, 0, 1.0]), boss_radius, boss_height),
        PlanarPatch(c1, np.array([1.0, 0, 0]), np.array([0, 1.0, 0]),
                    circle=((0.0, 0.0), boss_radius)),
    ]
    return corners, curves, patches


def preset_bezier_ridge_plate():
    corners, curves, patches = _box(0.05, 0.95, 0.05, 0.95, 0.25, 0.55)
    ctrl = np.array([[0.25, 0.25, 0.55], [0.45, 0.85, 0.55],
                     [0.6, 0.15, 0.55], [0.75, 0.7, 0.55]])
    curves.append(PrimitiveCurve(BEZIER, {"ctrl": ctrl}))
    corners = np.concatenate([corners, ctrl[[0, 3]]])
    return corners, curves, patches


def preset_pyramid(base=0.8, height=0.65):
    if base <= 0 or height <= 0:
        raise ValueError("invalid pyramid dimensions")
    lo, hi = 0.5 - base / 2, 0.5 + base / 2
    z0 = 0.1
    b = np.array([[lo, lo, z0], [hi, lo, z0], [hi, hi, z0], [lo, hi, z0]])
    apex = np.array([0.5, 0.5, z0 + height])
    curves = [_seg(b[i], b[(i + 1) % 4]) for i in range(4)]
    curves += [_seg(b[i], apex) for i in range(4)]
    patches = [PlanarPatch(np.array([0, 0, z0]), np.array([1.0, 0, 0]),
                           np.array([0, 1.0, 0]), outline=b[:, :2])]
    for i in range(4):
        p0, p1 = b[i], b[(i + 1) % 4]
        e1 = _unit(p1 - p0)
        mid = (p0 + p1) / 2
        e2 = _unit(apex - mid)
        w = np.linalg.norm(p1 - p0)
        tri = np.array([[0, 0], [w, 0], [(apex - p0) @ e1, (apex - p0) @ e2]])
        patches.append(PlanarPatch(p0, e1, e2, outline=tri))
    return np.concatenate([b, apex[None]]), curves, patches


def preset_stepped_block():
    corners, curves, patches = _box(0.1, 0.9, 0.1, 0.9, 0.1, 0.4, top_holes=[
        np.array([[0.3, 0.3], [0.7, 0.3], [0.7, 0.7], [0.3, 0.7]])])
    c2, cv2, p2 = _box(0.3, 0.7, 0.3, 0.7, 0.4, 0.7, bottom=False)
    # the upper block's bottom outline is a concave feature on the lower top
    ring = np.array([[0.3, 0.3, 0.4], [0.7, 0.3, 0.4], [0.7, 0.7, 0.4],
                     [0.3, 0.7, 0.4]])
    cv2 += [_seg(ring[i], ring[(i + 1) % 4]) for i in range(4)]
    return np.concatenate([corners, c2]), curves + cv2, patches + p2


def preset_cylinder(radius=0.3, z0=0.2, z1=0.8):
    if radius <= 0 or z1 <= z0:
        raise ValueError("invalid cylinder dimensions")
    c0 = np.array([0.5, 0.5, z0])
    c1 = np.array([0.5, 0.5, z1])
    xy = (np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    curves = [_circle(c0, radius), _circle(c1, radius)]
    patches = [CylinderPatch(c0, np.array([0, 0, 1.0]), radius, z1 - z0),
               PlanarPatch(c0, *xy, circle=((0.0, 0.0), radius)),
               PlanarPatch(c1, *xy, circle=((0.0, 0.0), radius))]
    return np.zeros((0, 3)), curves, patches


PRESETS = {
    "cube": preset_cube,
    "box": preset_box,
    "L-bracket": preset_l_bracket,
    "closed-ring": preset_closed_ring,
    "fillet-free-prism": preset_prism,
    "hex-prism": preset_hex_prism,
    "box-with-cylindrical-boss": preset_box_with_boss,
    "bezier-ridge-plate": preset_bezier_ridge_plate,
    "pyramid": preset_pyramid,
    "stepped-block": preset_stepped_block,
    "cylinder": preset_cylinder,
}


def make_shape(preset, noise_sigma=0.0, **params):
    """Build a named preset; keyword arguments go to the preset builder."""
    try:
        builder = PRESETS[preset]
    except KeyError:
        raise ValueError(f"unknown preset {preset!r}; choose from "
                         f"{', '.join(sorted(PRESETS))}") from None
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    corners, curves, patches = builder(**params)
    return SyntheticShape(preset, np.asarray(corners, float).reshape(-1, 3),
                          curves, patches, noise_sigma)
