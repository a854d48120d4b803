import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sharpwire.core import NoCurvesError, SharpSkeleton
from sharpwire.corners import CornerCluster
from sharpwire.segmentation import (build_proximity_graph, connected_components,
                                    remove_corner_points, segment_curves)


def line(n, y=0.0):
    return np.array([[x, y, 0] for x in range(n)], float)


def skeleton_of(pts):
    return SharpSkeleton(np.arange(len(pts)), pts, np.zeros(len(pts)))


def cluster(members):
    m = np.asarray(members)
    return CornerCluster(m, np.zeros(3), np.zeros(3), np.zeros(3), m)


def test_remove_without_clusters_is_identity():
    sk = skeleton_of(line(5))
    assert remove_corner_points(sk, []).tolist() == list(range(5))


def test_remove_everything_raises():
    sk = skeleton_of(line(4))
    with pytest.raises(NoCurvesError):
        remove_corner_points(sk, [cluster([0, 1]), cluster([2, 3])])


def test_remove_keeps_order():
    sk = skeleton_of(line(6))
    assert remove_corner_points(sk, [cluster([4, 1])]).tolist() == [0, 2, 3, 5]


def test_far_pair_has_no_edge():
    g = build_proximity_graph([[0, 0, 0], [2, 0, 0]], 1.0)
    assert g.nnz == 0


def test_unit_line_is_path_graph():
    g = build_proximity_graph(line(5), 1.0).toarray()
    want = np.eye(5, k=1) + np.eye(5, k=-1)
    assert np.array_equal(g != 0, want != 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 80), st.floats(0.05, 0.6), st.integers(0, 10 ** 6))
def test_proximity_graph_matches_brute_force(n, radius, seed):
    pts = np.random.default_rng(seed).uniform(size=(n, 3))
    got = build_proximity_graph(pts, radius).toarray() != 0
    gaps = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    want = gaps <= radius
    np.fill_diagonal(want, False)
    assert np.array_equal(got, want)


def test_components_examples():
    assert len(connected_components(build_proximity_graph(line(5), 1.0))) == 1
    two = np.concatenate([line(5), line(5, y=10)])
    comps = connected_components(build_proximity_graph(two, 1.0))
    assert [c.tolist() for c in comps] == [[0, 1, 2, 3, 4], [5, 6, 7, 8, 9]]


def test_small_components_dropped():
    pts = np.concatenate([line(5), [[0, 50, 0], [1, 50, 0]]])
    comps = connected_components(build_proximity_graph(pts, 1.0))
    assert len(comps) == 1


def test_no_surviving_component_raises():
    sk = skeleton_of(np.array([[0, 0, 0], [10, 0, 0]], float))
    with pytest.raises(NoCurvesError):
        segment_curves(sk, [0, 1], 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 80), st.integers(0, 10 ** 6))
def test_components_partition_the_survivors(n, seed):
    pts = np.random.default_rng(seed).uniform(size=(n, 3))
    comps = connected_components(build_proximity_graph(pts, 0.2), min_size=1)
    flat = np.concatenate(comps)
    assert sorted(flat.tolist()) == list(range(n))
    assert [c[0] for c in comps] == sorted(c[0] for c in comps)
    assert all(c[0] == c.min() for c in comps)


def test_component_ids_independent_of_point_order(rng):
    pts = rng.uniform(size=(60, 3))
    base = connected_components(build_proximity_graph(pts, 0.2), min_size=1)
    perm = rng.permutation(60)
    other = connected_components(build_proximity_graph(pts[perm], 0.2), min_size=1)
    as_sets = sorted(sorted(perm[c].tolist()) for c in other)
    assert as_sets == sorted(sorted(c.tolist()) for c in base)


def test_cube_segments_into_twelve_curves(suite):
    shape, _, result = suite["cube"]
    assert len(result.curve_clusters) == 12
    assert shape.n_open + shape.n_closed == 12


def test_curve_clusters_avoid_corner_members(suite):
    _, _, result = suite["L-bracket"]
    corner = set()
    for c in result.corner_clusters:
        corner.update(c.member_indices.tolist())
    for cc in result.curve_clusters:
        assert corner.isdisjoint(cc.member_indices.tolist())


def test_cluster_count_matches_truth_on_clean_presets(suite):
    for name, (shape, _, result) in suite.items():
        assert len(result.curve_clusters) == len(shape.curves), name
