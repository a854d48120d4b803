import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from sharpwire.core import Wireframe
from sharpwire.metrics import (EvaluationReport, chamfer_distance, evaluate,
                               format_table, hausdorff_distance, sample_wireframe,
                               summarize)
from sharpwire.splines import BSplineCurve
from sharpwire.synthgen import make_shape


def brute(x, y):
    d = np.sqrt(((x[:, None, :] - y[None, :, :]) ** 2).sum(-1))
    a, b = d.min(1), d.min(0)
    return 0.5 * (a.mean() + b.mean()), max(a.max(), b.max())


point_sets = st.integers(1, 60).flatmap(
    lambda n: st.lists(st.tuples(*[st.floats(-10, 10)] * 3), min_size=n, max_size=n))


def test_examples():
    o, e = [[0, 0, 0]], [[1, 0, 0]]
    two = [[0, 0, 0], [2, 0, 0]]
    assert chamfer_distance(o, e) == 1.0
    assert chamfer_distance(two, o) == 0.5
    assert hausdorff_distance(two, o) == 2.0


def test_zero_on_identical_sets(rng):
    x = rng.normal(size=(200, 3))
    assert chamfer_distance(x, x) == 0.0
    assert hausdorff_distance(x, x) == 0.0


@settings(max_examples=60, deadline=None)
@given(point_sets, point_sets)
def test_matches_brute_force(x, y):
    x, y = np.array(x, float), np.array(y, float)
    cd, hd = brute(x, y)
    assert chamfer_distance(x, y) == pytest.approx(cd, abs=1e-12)
    assert hausdorff_distance(x, y) == pytest.approx(hd, abs=1e-12)
    assert chamfer_distance(x, y) <= hausdorff_distance(x, y) + 1e-15
    assert hausdorff_distance(x, y) == hausdorff_distance(y, x)
    assert chamfer_distance(x, y) == pytest.approx(chamfer_distance(y, x), abs=1e-12)


def test_rigid_motion_invariance(rng):
    x, y = rng.uniform(-1, 1, (300, 3)), rng.uniform(-1, 1, (250, 3))
    rot = Rotation.random(random_state=3).as_matrix()
    shift = rng.normal(size=3) * 5
    x2, y2 = x @ rot.T + shift, y @ rot.T + shift
    assert abs(chamfer_distance(x, y) - chamfer_distance(x2, y2)) <= 1e-9
    assert abs(hausdorff_distance(x, y) - hausdorff_distance(x2, y2)) <= 1e-9


def test_empty_set_raises():
    with pytest.raises(ValueError):
        chamfer_distance(np.zeros((0, 3)), [[0, 0, 0]])
    with pytest.raises(ValueError):
        hausdorff_distance([[0, 0, 0]], [])


def test_sample_empty_wireframe():
    assert sample_wireframe(Wireframe(), 0.1).shape == (0, 3)
    with pytest.raises(ValueError):
        sample_wireframe(Wireframe(), 0.0)


def test_unit_circle_samples_lie_on_circle():
    shape = make_shape("closed-ring", radius=1.0, z=0.0)
    truth = shape.wireframe()
    pts = sample_wireframe(truth, 0.1)
    center = shape.curves[0].params["center"]
    assert np.abs(np.linalg.norm(pts - center, axis=1) - 1.0).max() <= 1e-9


def test_identical_wireframes_evaluate_near_zero():
    truth = make_shape("cube").wireframe()
    rep = evaluate(truth, truth, 0.01)
    assert not rep.failed
    assert rep.chamfer <= 0.005 and rep.hausdorff <= 0.005
    assert rep.n_curves_predicted == rep.n_curves_truth == 12


def test_empty_prediction_fails():
    truth = make_shape("cube").wireframe()
    rep = evaluate(Wireframe(), truth, 0.01)
    assert rep.failed and rep.chamfer is None and rep.hausdorff is None


def test_empty_truth_raises():
    with pytest.raises(ValueError):
        evaluate(make_shape("cube").wireframe(), Wireframe(), 0.01)


def test_missing_curve_shows_in_hausdorff():
    truth = make_shape("cube").wireframe()
    partial = Wireframe(truth.corners, truth.curves[1:])
    rep = evaluate(partial, truth, 0.01)
    assert rep.hausdorff > 0.3 and rep.chamfer < rep.hausdorff


def test_cube_extraction_within_four_r(suite):
    shape, _, result = suite["cube"]
    rep = evaluate(result.wireframe, shape.wireframe(), 0.01)
    assert rep.chamfer <= 4 * 0.02


def test_degraded_curves_counted():
    seg = BSplineCurve(1, [0, 0, 1, 1], [[0, 0, 0], [1, 0, 0]])
    seg.info["degraded"] = True
    rep = evaluate(Wireframe(curves=[seg]), Wireframe(curves=[seg]), 0.1)
    assert rep.degraded_curves == 1


def test_summary_and_table():
    ok = EvaluationReport(0.01, 0.03, 12, 12, False, 0, 0.01)
    ok2 = EvaluationReport(0.03, 0.05, 11, 12, False, 1, 0.01)
    bad = EvaluationReport(None, None, 0, 1, True, 0, 0.01)
    s = summarize([ok, ok2, bad])
    assert s["n_failed"] == 1 and s["fail_percent"] == pytest.approx(100 / 3)
    assert s["mean_chamfer"] == pytest.approx(0.02)
    assert s["mean_hausdorff"] == pytest.approx(0.04)
    table = format_table([("a", ok), ("b", ok2), ("c", bad)])
    lines = table.splitlines()
    assert len({len(line) for line in lines if line.startswith("-")}) == 1
    assert lines[-1].split() == ["sharpwire", "0.0200", "0.0400", "33%"]
    assert json.loads(ok.to_json())["chamfer"] == 0.01
