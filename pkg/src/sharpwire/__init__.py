"""Parametric wireframe extraction from point clouds with per-point
distance-to-feature estimates."""

from .core import (NoCurvesError, NoSharpFeaturesError, PipelineFailure,
                   PointCloudField, SharpwireError, Wireframe, load_point_cloud,
                   save_point_cloud)
from .metrics import chamfer_distance, evaluate, hausdorff_distance
from .pipeline import EmptyWireframeError, PipelineConfig, extract
from .splines import BSplineCurve, load_wireframe, save_wireframe
from .synthgen import PRESETS, make_shape, sample_field

__version__ = "0.1.0"

__all__ = [
    "BSplineCurve", "EmptyWireframeError", "NoCurvesError", "NoSharpFeaturesError",
    "PRESETS", "PipelineConfig", "PipelineFailure", "PointCloudField",
    "SharpwireError", "Wireframe", "chamfer_distance", "evaluate", "extract",
    "hausdorff_distance", "load_point_cloud", "load_wireframe", "make_shape",
    "sample_field", "save_point_cloud", "save_wireframe",
]
