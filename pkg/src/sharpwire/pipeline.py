"""End-to-end wireframe extraction.

:func:`extract` chains the stages: skeleton, corner clusters, curve
clusters, per-cluster polylines, graph assembly and node optimization,
path partition, spline fitting and spline optimization. All thresholds are
multiples of the cloud's sampling distance ``r``.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import corners as _corners
from . import segmentation as _seg
from . import splines as _spl
from . import topograph as _topo
from .core import PipelineFailure, Wireframe

log = logging.getLogger(__name__)


class EmptyWireframeError(PipelineFailure):
    """Every curve was dropped before the output stage."""

    exit_code = 5


@dataclass
class PipelineConfig:
    """Pipeline parameters. Multipliers scale the sampling distance ``r``.

    ``r=None`` takes ``r`` from the cloud. ``seed`` is recorded for
    provenance; no stage draws random numbers.
    """

    r: float | None = None
    t_dist_mult: float = 1.5
    r_corner_mult: float = 4.0
    t_variance: float = 0.3
    t_corner: float = 1.5
    fps_ratio: float = 1.0
    corner_margin_mult: float = 2.0
    corner_half_width_mult: float = 2.0
    corner_group_mult: float = 8.0
    connect_radius_mult: float = 1.5
    min_cluster_size: int = 3
    t_split_mult: float = 4.0
    max_depth: int = 24
    v_open_threshold: float = 0.6
    attach_radius_mult: float = 12.0
    spline_degree: int = 3
    graph_iters: int = 50
    graph_step_tol: float = 1e-7
    node_move_mult: float = 2.0
    spline_iters: int = 50
    spline_step_tol: float = 1e-9
    damping: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        for f in fields(self):
            if f.name.endswith("_mult") and not getattr(self, f.name) > 0:
                raise ValueError(f"{f.name} must be positive")
        if self.r is not None and not self.r > 0:
            raise ValueError("r must be positive")
        if not 0 < self.fps_ratio <= 1:
            raise ValueError("fps_ratio must be in (0, 1]")
        if self.spline_degree not in (1, 2, 3):
            raise ValueError("spline_degree must be 1, 2 or 3")
        if self.min_cluster_size < 1 or self.max_depth < 0:
            raise ValueError("min_cluster_size >= 1 and max_depth >= 0 required")
        if self.graph_iters < 0 or self.spline_iters < 0:
            raise ValueError("iteration caps must be non-negative")

    @classmethod
    def from_mapping(cls, values):
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**values)

    def to_dict(self):
        return asdict(self)


@dataclass
class ExtractionResult:
    wireframe: Wireframe
    manifest: dict
    graph: _topo.TopologicalGraph = None
    skeleton: object = None
    corner_clusters: list = field(default_factory=list)
    curve_clusters: list = field(default_factory=list)
    polylines: list = field(default_factory=list)
    initial_graph: _topo.TopologicalGraph = None
    paths: list = field(default_factory=list)


class _Timer:
    def __init__(self):
        self.stages = {}

    def __call__(self, name):
        timer = self

        class _Ctx:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.stages[name] = time.perf_counter() - self.t0

        return _Ctx()


def extract(cloud, config=None):
    """Extract a wireframe from a point cloud with distance estimates.

    Parameters
    ----------
    cloud : PointCloudField
    config : PipelineConfig, optional

    Returns
    -------
    ExtractionResult
        The wireframe plus a manifest of stage timings, counts and flags.

    Raises
    ------
    NoSharpFeaturesError, NoCurvesError, EmptyWireframeError
        Shape-level failures, each with its own ``exit_code``.
    """
    cfg = config or PipelineConfig()
    r = cfg.r if cfg.r is not None else cloud.sampling_distance_r
    r_corner = cfg.r_corner_mult * r
    timer = _Timer()
    counts = {"points": len(cloud)}
    flags = {"skipped_clusters": 0, "depth_limited": 0, "stalled": 0,
             "dropped_paths": 0, "degraded_curves": 0, "isolated_corners": 0}

    with timer("skeleton"):
        skel = _corners.extract_skeleton(cloud, cfg.t_dist_mult * r)
    counts["skeleton"] = len(skel)

    with timer("corners"):
        labels = _corners.classify_neighborhoods(skel, cfg.fps_ratio, r_corner,
                                                 cfg.t_variance)
        weights = _corners.cornerness_weights(skel, labels)
        clusters = _corners.detect_corner_clusters(
            skel, weights, cfg.t_corner, r_corner,
            margin=cfg.corner_margin_mult * r,
            group_radius=cfg.corner_group_mult * r,
            min_half_width=cfg.corner_half_width_mult * r)
    claimed = np.zeros(len(skel), dtype=bool)
    for c in clusters:
        claimed[c.member_indices] = True
    counts["neighborhoods"] = len(labels)
    counts["corner_neighborhoods"] = sum(lab.is_corner for lab in labels)
    counts["corner_clusters"] = len(clusters)
    counts["corner_members"] = int(claimed.sum())

    with timer("segmentation"):
        remaining = _seg.remove_corner_points(skel, clusters)
        curve_clusters = _seg.segment_curves(skel, remaining,
                                             cfg.connect_radius_mult * r,
                                             cfg.min_cluster_size)
    counts["curve_clusters"] = len(curve_clusters)
    counts["curve_members"] = int(sum(len(c) for c in curve_clusters))
    counts["discarded_points"] = (counts["skeleton"] - counts["corner_members"]
                                  - counts["curve_members"])

    with timer("polylines"):
        polylines = []
        for cc in curve_clusters:
            try:
                ends = _topo.detect_endpoints(cc.positions, cfg.v_open_threshold,
                                              local_radius=r_corner)
            except ValueError:
                flags["skipped_clusters"] += 1
                continue
            if ends == _topo.CLOSED:
                pl = _topo.init_closed_polyline(cc.positions, cc.id)
            else:
                pl = _topo.init_open_polyline(cc.positions, ends, cc.id)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                pl = _topo.subdivide_polyline(pl, cc.positions, cc.distances,
                                              cfg.t_split_mult * r, cfg.max_depth)
            flags["depth_limited"] += bool(pl.info["depth_limited"])
            flags["stalled"] += bool(pl.info["stalled"])
            polylines.append(pl)
    counts["polylines"] = len(polylines)
    counts["closed_polylines"] = sum(p.closed for p in polylines)
    if not polylines:
        raise EmptyWireframeError("no curve cluster yielded a polyline")

    with timer("graph"):
        centers = np.array([c.center for c in clusters]).reshape(-1, 3)
        graph = _topo.assemble_graph(polylines, centers,
                                     cfg.attach_radius_mult * r)
        initial_graph = graph
        graph = _topo.optimize_node_positions(
            graph, skel.positions, skel.distances, iters=cfg.graph_iters,
            step_tol=cfg.graph_step_tol, damping=cfg.damping,
            max_displacement=cfg.node_move_mult * r)
        deg = graph.degree()
        is_corner = np.zeros(len(graph.nodes), dtype=bool)
        is_corner[_topo.reconcile_corners(graph)] = True
        is_corner |= np.array([k == _topo.CORNER_CENTER for k in graph.node_kind])
        flags["isolated_corners"] = int(np.count_nonzero(is_corner & (deg == 0)))
        is_corner &= deg > 0
    counts["graph_nodes"] = len(graph.nodes)
    counts["graph_edges"] = len(graph.edges)
    counts["graph_corners"] = int(is_corner.sum())

    with timer("splines"):
        corner_ids = np.flatnonzero(is_corner)
        paths = _spl.partition_into_paths(graph, corner_ids)
        k, s, _ = _topo.nearest_edges(skel.positions, graph.nodes, graph.edges)
        curves = []
        fitted_paths = []
        used_corners = set()
        for path in paths:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                full = _spl.parameterize_path(path, graph, skel.positions,
                                              skel.distances, nearest=(k, s))
            if full is None:
                flags["dropped_paths"] += 1
                continue
            curve = _spl.fit_spline(full, cfg.spline_degree)
            curve = _spl.optimize_control_points(
                curve, full, iters=cfg.spline_iters, damping=cfg.damping,
                step_tol=cfg.spline_step_tol)
            flags["degraded_curves"] += bool(curve.info.get("degraded"))
            curves.append(curve)
            fitted_paths.append(full)
            if not path.closed:
                used_corners.update((path.node_indices[0], path.node_indices[-1]))
    counts["paths"] = len(paths)
    counts["curves"] = len(curves)
    counts["closed_curves"] = sum(c.closed for c in curves)
    if not curves:
        raise EmptyWireframeError("every path was dropped")

    corner_pos = graph.nodes[sorted(used_corners)]
    wire = Wireframe(corner_pos, curves)
    counts["corners"] = len(corner_pos)
    manifest = {
        "config": cfg.to_dict(),
        "r": float(r),
        "counts": counts,
        "flags": flags,
        "timings": timer.stages,
        "graph_objective": graph.info["objective"],
        "spline_objectives": [c.info.get("objective", []) for c in curves],
    }
    log.info("extracted %d curves, %d corners", len(curves), len(corner_pos))
    return ExtractionResult(wire, manifest, graph, skel, clusters, curve_clusters,
                            polylines, initial_graph, fitted_paths)
