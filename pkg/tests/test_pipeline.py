import json

import numpy as np
import pytest

from sharpwire import splines
from sharpwire.core import NoSharpFeaturesError, PointCloudField
from sharpwire.pipeline import PipelineConfig, extract
from sharpwire.synthgen import make_shape, sample_field

R = 0.02


def wire_json(result):
    return json.dumps(splines.wireframe_to_dict(result.wireframe), sort_keys=True)


def test_config_defaults_and_validation():
    cfg = PipelineConfig()
    assert cfg.t_dist_mult == 1.5 and cfg.r_corner_mult == 4.0
    assert cfg.t_variance == 0.3 and cfg.t_corner == 1.5
    with pytest.raises(ValueError):
        PipelineConfig(t_dist_mult=0)
    with pytest.raises(ValueError):
        PipelineConfig(spline_degree=5)
    with pytest.raises(ValueError):
        PipelineConfig(fps_ratio=1.5)
    with pytest.raises(ValueError):
        PipelineConfig.from_mapping({"bogus": 1})
    assert PipelineConfig.from_mapping(cfg.to_dict()) == cfg


def test_extraction_is_deterministic(suite):
    shape, cloud, first = suite["cube"]
    again = extract(cloud)
    assert wire_json(again) == wire_json(first)


def test_manifest_counts_reconcile(suite):
    for name, (_, _, result) in suite.items():
        c = result.manifest["counts"]
        assert c["skeleton"] == (c["corner_members"] + c["curve_members"]
                                 + c["discarded_points"]), name
        assert c["discarded_points"] >= 0
        assert c["curves"] == len(result.wireframe.curves)
        assert c["corners"] == len(result.wireframe.corners)
        json.dumps(result.manifest)


def test_suite_topology_matches_truth(suite):
    for name, (shape, _, result) in suite.items():
        wire = result.wireframe
        assert len(wire.curves) == len(shape.curves), name
        assert sum(c.closed for c in wire.curves) == shape.n_closed, name


def test_open_curves_meet_corners(suite):
    for name, (_, _, result) in suite.items():
        corners = result.wireframe.corners
        for c in result.wireframe.curves:
            if c.closed:
                pos, tan = splines.seam_mismatch(c)
                assert pos <= 1e-9 and tan <= 1e-9, name
            else:
                for end in c(np.array(c.domain)):
                    assert np.linalg.norm(corners - end, axis=1).min() <= 1e-6, name


def test_no_sharp_features():
    pts = np.random.default_rng(0).uniform(0, 1, (500, 3))
    with pytest.raises(NoSharpFeaturesError) as info:
        extract(PointCloudField(pts, np.ones(500), R))
    assert info.value.exit_code == 3


def test_explicit_r_overrides_cloud():
    shape = make_shape("closed-ring")
    cloud = sample_field(shape, R)
    result = extract(cloud, PipelineConfig(r=R))
    assert result.manifest["r"] == R
    assert len(result.wireframe.curves) == 1 and result.wireframe.curves[0].closed
