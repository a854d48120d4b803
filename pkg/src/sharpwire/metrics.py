"""Distances between wireframes.

Wireframes are compared by sampling every curve at a fixed arc-length
spacing and measuring the two point sets with symmetric Chamfer and
Hausdorff distances.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree

from .splines import sample_curve


@dataclass(frozen=True)
class EvaluationReport:
    chamfer: float | None
    hausdorff: float | None
    n_curves_predicted: int
    n_curves_truth: int
    failed: bool
    degraded_curves: int
    sample_spacing: float

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)


def _as_points(x, name):
    pts = np.asarray(x, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError(f"{name} is empty")
    return pts


def directed_distances(x, y):
    """Distance from every point of ``x`` to its nearest point in ``y``."""
    x = _as_points(x, "X")
    y = _as_points(y, "Y")
    d, _ = cKDTree(y).query(x)
    return d


def chamfer_distance(x, y):
    """Mean of the two directed mean nearest-neighbor distances."""
    return float(0.5 * (directed_distances(x, y).mean()
                        + directed_distances(y, x).mean()))


def hausdorff_distance(x, y):
    """Largest nearest-neighbor distance in either direction."""
    return float(max(directed_distances(x, y).max(), directed_distances(y, x).max()))


def sample_wireframe(wireframe, spacing):
    """Concatenated arc-length samples of all curves; ``(0, 3)`` if empty."""
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    parts = [sample_curve(c, spacing) for c in wireframe.curves]
    if not parts:
        return np.zeros((0, 3))
    return np.concatenate(parts)


def evaluate(predicted, truth, spacing):
    """Compare a predicted wireframe against ground truth.

    An empty prediction counts as a failure and leaves both distances unset.
    """
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    if truth.is_empty:
        raise ValueError("truth wireframe has no curves")
    degraded = sum(bool(c.info.get("degraded")) for c in predicted.curves)
    common = dict(n_curves_predicted=len(predicted.curves),
                  n_curves_truth=len(truth.curves), degraded_curves=degraded,
                  sample_spacing=float(spacing))
    if predicted.is_empty:
        return EvaluationReport(None, None, failed=True, **common)
    xs = sample_wireframe(predicted, spacing)
    ys = sample_wireframe(truth, spacing)
    return EvaluationReport(float(chamfer_distance(xs, ys)),
                            float(hausdorff_distance(xs, ys)), failed=False, **common)


def summarize(reports):
    """Mean CD and HD over successes plus the failure percentage."""
    ok = [r for r in reports if not r.failed]
    n = len(reports)
    return {
        "n_shapes": n,
        "n_failed": n - len(ok),
        "fail_percent": 100.0 * (n - len(ok)) / n if n else 0.0,
        "mean_chamfer": float(np.mean([r.chamfer for r in ok])) if ok else None,
        "mean_hausdorff": float(np.mean([r.hausdorff for r in ok])) if ok else None,
    }


def format_table(rows, method="sharpwire"):
    """Aligned text table with one row per ``(name, report)`` pair and a
    summary row."""
    def num(v):
        return "-" if v is None else f"{v:.4f}"

    reports = [r for _, r in rows]
    summary = summarize(reports)
    body = [("shape", "CD", "HD", "curves", "fail")]
    for name, r in rows:
        body.append((name, num(r.chamfer), num(r.hausdorff),
                     f"{r.n_curves_predicted}/{r.n_curves_truth}",
                     "yes" if r.failed else "no"))
    body.append((method, num(summary["mean_chamfer"]),
                 num(summary["mean_hausdorff"]), "",
                 f"{summary['fail_percent']:.0f}%"))
    widths = [max(len(row[i]) for row in body) for i in range(5)]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                       for i, (c, w) in enumerate(zip(row, widths))).rstrip()
             for row in body]
    lines.insert(1, "-" * len(lines[0]))
    lines.insert(len(lines) - 1, "-" * len(lines[0]))
    return "\n".join(lines)
