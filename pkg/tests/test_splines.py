import json
import warnings
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import BSpline

from sharpwire.core import Wireframe
from sharpwire.splines import (BSplineCurve, CurvePath, DomainError,
                               WireframeFormatError, basis_matrix, clamped_knots,
                               export_obj, fit_spline, load_wireframe,
                               optimize_control_points, parameterize_path,
                               partition_into_paths, periodic_knots, sample_curve,
                               save_wireframe, seam_mismatch, spline_objective,
                               unfold_periodic, wireframe_from_dict)
from sharpwire.topograph import TopologicalGraph, reconcile_corners

knot_gaps = st.lists(st.floats(0.05, 2.0), min_size=1, max_size=6)


def random_clamped(rng, degree, n_spans):
    interior = np.sort(rng.uniform(0, 1, n_spans - 1))
    knots = clamped_knots(0.0, 1.0, interior, degree)
    ctrl = rng.normal(size=(len(knots) - degree - 1, 3))
    return BSplineCurve(degree, knots, ctrl)


def graph(nodes, edges):
    return TopologicalGraph(nodes, edges, ["x"] * len(nodes))


def open_path(points, nodes):
    """CurvePath for points on a polyline given by ``nodes`` (chain order)."""
    n = len(nodes)
    g = graph(nodes, [[i, i + 1] for i in range(n - 1)])
    (path,) = partition_into_paths(g, reconcile_corners(g))
    return parameterize_path(path, g, points, np.zeros(len(points))), g


# -- evaluation ---------------------------------------------------------------------

def test_clamped_curve_interpolates_end_control_points(rng):
    c = random_clamped(rng, 3, 4)
    np.testing.assert_allclose(c(0.0), c.control_points[0], atol=1e-15)
    np.testing.assert_allclose(c(1.0), c.control_points[-1], atol=1e-15)


def test_constant_control_points_give_constant_curve(rng):
    c = random_clamped(rng, 3, 5)
    c = BSplineCurve(3, c.knots, np.tile([0.3, -2.0, 5.0], (len(c.control_points), 1)))
    np.testing.assert_allclose(c(np.linspace(0, 1, 50)),
                               np.tile([0.3, -2.0, 5.0], (50, 1)), atol=1e-14)


def test_single_span_matches_bernstein(rng):
    ctrl = rng.normal(size=(4, 3))
    c = BSplineCurve(3, [0, 0, 0, 0, 1, 1, 1, 1], ctrl)
    u = np.linspace(0, 1, 33)
    bern = sum(comb(3, k) * (u ** k * (1 - u) ** (3 - k))[:, None] * ctrl[k]
               for k in range(4))
    np.testing.assert_allclose(c(u), bern, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.integers(1, 6), st.integers(0, 10 ** 6))
def test_matches_scipy_and_partition_of_unity(degree, n_spans, seed):
    rng = np.random.default_rng(seed)
    c = random_clamped(rng, degree, n_spans)
    u = np.linspace(0, 1, 57)
    ref = BSpline(c.knots, c.control_points, degree)
    np.testing.assert_allclose(c(u[:-1]), ref(u[:-1]), atol=1e-12)
    np.testing.assert_allclose(basis_matrix(c.knots, degree, u).sum(1), 1.0,
                               atol=1e-12)
    if degree >= 1:
        np.testing.assert_allclose(c.derivative(u[:-1]), ref.derivative()(u[:-1]),
                                   atol=1e-9)


def test_open_curve_domain_error(rng):
    c = random_clamped(rng, 3, 2)
    with pytest.raises(DomainError):
        c(1.5)
    with pytest.raises(DomainError):
        c(-0.1)


def test_closed_curve_wraps_and_is_seamless(rng):
    breaks = np.cumsum(np.concatenate([[0], rng.uniform(0.2, 1, 6)]))
    c = BSplineCurve(3, periodic_knots(breaks, 3),
                     unfold_periodic(rng.normal(size=(6, 3)), 3), closed=True)
    lo, hi = c.domain
    np.testing.assert_allclose(c(lo + 0.3), c(hi + 0.3), atol=1e-12)
    pos, tan = seam_mismatch(c)
    assert pos <= 1e-12 and tan <= 1e-12


def test_constructor_validation():
    with pytest.raises(ValueError):
        BSplineCurve(3, [0, 0, 0, 0, 1, 1, 1, 1], np.zeros((3, 3)))
    with pytest.raises(ValueError):
        BSplineCurve(1, [0, 1, 0.5, 1], np.zeros((2, 3)))


# -- partition ----------------------------------------------------------------------

def test_cycle_gives_one_closed_path():
    g = graph(np.eye(3) * 0 + np.arange(3)[:, None], [[0, 1], [1, 2], [2, 0]])
    (p,) = partition_into_paths(g, [])
    assert p.closed and sorted(p.edge_indices) == [0, 1, 2]


def test_path_graph_gives_one_open_path():
    g = graph(np.arange(12).reshape(4, 3), [[0, 1], [1, 2], [2, 3]])
    (p,) = partition_into_paths(g, reconcile_corners(g))
    assert not p.closed and p.node_indices == [0, 1, 2, 3]


def test_edges_partitioned_exactly_once(suite):
    for name, (_, _, result) in suite.items():
        g = result.graph
        corners = np.flatnonzero(g.degree() != 2)
        kinds = [i for i, k in enumerate(g.node_kind) if k == "corner-center"]
        corners = np.union1d(corners, [i for i in kinds if g.degree()[i] > 0])
        paths = partition_into_paths(g, corners.astype(int))
        used = sorted(e for p in paths for e in p.edge_indices)
        assert used == list(range(len(g.edges))), name
        for p in paths:
            if not p.closed:
                assert p.node_indices[0] in corners and p.node_indices[-1] in corners
                assert not set(p.node_indices[1:-1]) & set(corners.tolist())


def test_cube_partitions_into_twelve_corner_paths(suite):
    _, _, result = suite["cube"]
    g = result.graph
    paths = partition_into_paths(g, reconcile_corners(g))
    assert len(paths) == 12
    deg = g.degree()
    assert all(deg[p.node_indices[0]] == 3 and deg[p.node_indices[-1]] == 3
               for p in paths)


# -- parameterization ----------------------------------------------------------------

def test_midpoint_parameter():
    pts = np.array([[1.5, 0.1, 0]])
    path, _ = open_path(pts, np.array([[0, 0, 0], [3, 0, 0]], float))
    assert path.params_u.tolist() == [1.5]


def test_knots_are_cumulative_lengths():
    nodes = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0]], float)
    path, _ = open_path(np.array([[0.5, 0, 0]]), nodes)
    assert path.knots_t.tolist() == [0.0, 1.0, 2.0]


def test_quarter_arc_parameters_follow_the_arc(rng):
    ang = rng.uniform(0, np.pi / 2, 80)
    pts = np.stack([np.cos(ang), np.sin(ang), 0 * ang], 1)
    a = np.linspace(0, np.pi / 2, 5)
    nodes = np.stack([np.cos(a), np.sin(a), 0 * a], 1)
    path, _ = open_path(pts, nodes)
    along = ang[path.assigned_points]
    assert np.all(np.diff(along) > 0)
    assert np.all(np.diff(path.params_u) >= 0)
    assert path.params_u[0] >= path.knots_t[0]
    assert path.params_u[-1] <= path.knots_t[-1]


def test_path_without_points_is_dropped():
    g = graph(np.array([[0, 0, 0], [1, 0, 0], [5, 0, 0], [6, 0, 0]], float),
              [[0, 1], [2, 3]])
    paths = partition_into_paths(g, reconcile_corners(g))
    pts = np.array([[0.5, 0.1, 0]])
    with pytest.warns(RuntimeWarning):
        assert parameterize_path(paths[1], g, pts, np.zeros(1)) is None


# -- fitting ------------------------------------------------------------------------

def test_collinear_fit_stays_on_line(rng):
    x = np.sort(rng.uniform(0, 2, 60))
    pts = np.stack([x, 2 * x, -x], 1)
    nodes = np.array([[0, 0, 0], [0.7, 1.4, -0.7], [2, 4, -2]], float)
    path, _ = open_path(pts, nodes)
    curve = fit_spline(path)
    s = curve(np.linspace(*curve.domain, 200))
    direction = np.array([1, 2, -1]) / np.sqrt(6)
    off = s - np.outer(s @ direction, direction)
    assert np.abs(off).max() <= 1e-9


def test_four_points_single_cubic_span_interpolates(rng):
    u = np.array([0.0, 0.3, 0.7, 1.0])
    ctrl = rng.normal(size=(4, 3))
    truth = BSplineCurve(3, [0, 0, 0, 0, 1, 1, 1, 1], ctrl)
    pts = truth(u)
    path = CurvePath([0, 1], False, [0], nodes=pts[[0, -1]],
                     knots_t=np.array([0.0, 1.0]), params_u=u, points=pts,
                     distances=np.zeros(4))
    curve = fit_spline(path)
    assert curve.degree == 3
    np.testing.assert_allclose(curve(u), pts, atol=1e-12)


def test_quarter_arc_fit_accuracy():
    ang = np.linspace(0, np.pi / 2, 100)
    pts = np.stack([np.cos(ang), np.sin(ang), 0 * ang], 1)
    a = np.linspace(0, np.pi / 2, 5)
    nodes = np.stack([np.cos(a), np.sin(a), 0 * a], 1)
    path, _ = open_path(pts, nodes)
    curve = fit_spline(path)
    s = curve(np.linspace(*curve.domain, 2000))
    assert np.abs(np.linalg.norm(s[:, :2], axis=1) - 1).max() < 1e-3


def test_degree_drops_when_points_are_scarce():
    pts = np.array([[0.5, 0.01, 0]])
    path, _ = open_path(pts, np.array([[0, 0, 0], [1.5, 0, 0]], float))
    curve = fit_spline(path, degree=3)
    assert curve.degree < 3
    np.testing.assert_allclose(curve(curve.domain[0]), [0, 0, 0])
    np.testing.assert_allclose(curve(curve.domain[1]), [1.5, 0, 0])


# -- control point optimization ----------------------------------------------------------

def edge_path(rng, offset):
    x = np.sort(rng.uniform(0, 1, 200))
    off = rng.normal(size=(200, 2)) * 0.02
    pts = np.stack([x, off[:, 0], off[:, 1]], 1)
    d = np.hypot(off[:, 0], off[:, 1])
    nodes = np.array([[0, offset, 0], [0.5, offset, 0], [1, offset, 0]])
    g = graph(nodes, [[0, 1], [1, 2]])
    (path,) = partition_into_paths(g, reconcile_corners(g))
    return parameterize_path(path, g, pts, d)


def test_exact_spline_is_a_fixed_point(rng):
    path = edge_path(rng, 0.0)
    curve = fit_spline(path)
    # project the fit onto the true line to get an exact start
    ctrl = curve.control_points.copy()
    ctrl[:, 1:] = 0.0
    exact = BSplineCurve(curve.degree, curve.knots, ctrl)
    out = optimize_control_points(exact, path)
    assert out.info["objective"][0] == pytest.approx(0.0, abs=1e-20)
    np.testing.assert_allclose(out.control_points, ctrl, atol=1e-9)


def test_offset_spline_objective_decreases(rng):
    path = edge_path(rng, 0.04)
    curve = fit_spline(path)
    shifted = BSplineCurve(curve.degree, curve.knots,
                           curve.control_points + [0, 0.04, 0])
    before = spline_objective(shifted, path.points, path.distances, path.params_u)
    out = optimize_control_points(shifted, path)
    after = spline_objective(out, path.points, path.distances, path.params_u)
    assert after < before
    hist = out.info["objective"]
    assert hist[0] == pytest.approx(before)
    assert all(b <= a for a, b in zip(hist, hist[1:]))
    np.testing.assert_array_equal(out.control_points[[0, -1]],
                                  shifted.control_points[[0, -1]])


def test_closed_circle_seam_after_optimization(rng):
    ang = np.sort(rng.uniform(0, 2 * np.pi, 300))
    pts = np.stack([np.cos(ang), np.sin(ang), 0 * ang], 1)
    a = 2 * np.pi * np.arange(8) / 8
    nodes = np.stack([np.cos(a), np.sin(a), 0 * a], 1)
    g = graph(nodes, [[i, (i + 1) % 8] for i in range(8)])
    (path,) = partition_into_paths(g, [])
    path = parameterize_path(path, g, pts, np.zeros(300))
    curve = optimize_control_points(fit_spline(path), path)
    assert curve.closed
    pos, tan = seam_mismatch(curve)
    assert pos <= 1e-9 and tan <= 1e-9


def test_non_finite_objective_reverts(rng):
    path = edge_path(rng, 0.0)
    curve = fit_spline(path)
    path.distances[3] = np.inf
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        out = optimize_control_points(curve, path)
    assert out.info["degraded"]
    np.testing.assert_array_equal(out.control_points, curve.control_points)


# -- sampling and I/O ---------------------------------------------------------------

def test_segment_sampling_example():
    seg = BSplineCurve(1, [0, 0, 1, 1], [[0, 0, 0], [1, 0, 0]])
    s = sample_curve(seg, 0.25)
    np.testing.assert_allclose(s[:, 0], [0, 0.25, 0.5, 0.75, 1.0], atol=1e-9)


def test_closed_sampling_has_minimum_count(rng):
    breaks = np.linspace(0, 1, 7)
    c = BSplineCurve(3, periodic_knots(breaks, 3),
                     unfold_periodic(rng.normal(size=(6, 3)), 3), closed=True)
    assert len(sample_curve(c, 1e6)) == 3


def test_sample_spacing_within_tolerance(rng):
    c = random_clamped(rng, 3, 5)
    s = sample_curve(c, 0.05)
    gaps = np.linalg.norm(np.diff(s, axis=0), axis=1)
    assert gaps.min() >= 0.5 * 0.05 and gaps.max() <= 1.5 * 0.05


def test_wireframe_json_round_trip(tmp_path, rng):
    wire = Wireframe([[0, 0, 0]], [random_clamped(rng, 3, 3),
                                   random_clamped(rng, 1, 2)])
    f = tmp_path / "w.json"
    save_wireframe(f, wire)
    back = load_wireframe(f)
    assert len(back.curves) == 2
    for a, b in zip(wire.curves, back.curves):
        assert a.degree == b.degree and a.closed == b.closed
        np.testing.assert_array_equal(a.knots, b.knots)
        np.testing.assert_array_equal(a.control_points, b.control_points)
    obj = json.loads(f.read_text())
    assert set(obj) == {"corners", "curves"}
    assert set(obj["curves"][0]) == {"closed", "degree", "knots", "control_points"}


def test_wireframe_format_errors(tmp_path):
    with pytest.raises(WireframeFormatError):
        wireframe_from_dict({"corners": []})
    with pytest.raises(WireframeFormatError):
        wireframe_from_dict({"corners": [], "curves": [{"degree": 3}]})
    f = tmp_path / "bad.json"
    f.write_text("{not json")
    with pytest.raises(WireframeFormatError):
        load_wireframe(f)


def test_obj_export_has_one_polyline_per_curve(tmp_path, rng):
    wire = Wireframe(curves=[random_clamped(rng, 3, 3) for _ in range(4)])
    f = tmp_path / "w.obj"
    export_obj(f, wire, 0.05)
    lines = f.read_text().splitlines()
    assert sum(line.startswith("l ") for line in lines) == 4
    n_v = sum(line.startswith("v ") for line in lines)
    assert n_v == sum(len(sample_curve(c, 0.05)) for c in wire.curves)
