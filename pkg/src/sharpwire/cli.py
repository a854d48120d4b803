"""Command-line entry point: ``sharpwire {extract,evaluate,synth,export}``.

Exit codes: 0 success, 2 usage or argument error, 3 no sharp features,
4 no curves, 5 empty wireframe, 6 unreadable or malformed input,
10 any other shape-level failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .core import (PipelineFailure, PointCloudParseError, SharpwireError,
                   TooSmallError, ValidationError, Wireframe, load_point_cloud,
                   save_point_cloud, save_xyzd)
from .metrics import evaluate, format_table, sample_wireframe, summarize
from .pipeline import PipelineConfig, extract
from .splines import (WireframeFormatError, export_obj, load_wireframe,
                      save_wireframe)
from .synthgen import PRESETS, make_shape, sample_field

log = logging.getLogger("sharpwire")

EXIT_USAGE = 2
EXIT_INPUT = 6
THREADS_ENV = "SHARPWIRE_THREADS"


class UsageError(Exception):
    pass


def thread_count():
    """Worker count from ``SHARPWIRE_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


# -- configuration ------------------------------------------------------------------

def _config_fields():
    return list(fields(PipelineConfig))


def load_config(path=None, overrides=None):
    """Build a :class:`PipelineConfig` from an optional TOML file and flag
    overrides; overrides win. Keys may sit at top level or in a
    ``[pipeline]`` table."""
    values = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        values.update(data.get("pipeline", data))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return PipelineConfig.from_mapping(values)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad configuration: {exc}") from None


def _add_config_flags(parser):
    group = parser.add_argument_group("pipeline parameters")
    for f in _config_fields():
        kind = int if f.type in ("int", int) else float
        group.add_argument("--" + f.name.replace("_", "-"), dest="cfg_" + f.name,
                           type=kind, default=None, metavar=kind.__name__.upper())


def _overrides(args):
    return {f.name: getattr(args, "cfg_" + f.name) for f in _config_fields()}


# -- subcommands --------------------------------------------------------------------

def cmd_extract(args):
    cfg = load_config(args.config, _overrides(args))
    cloud = load_point_cloud(args.input, min_points=4)
    out = Path(args.output)
    manifest_path = Path(args.manifest) if args.manifest else out.with_suffix(
        ".manifest.json")
    manifest = {"input": str(args.input), "config": cfg.to_dict()}
    try:
        result = extract(cloud, cfg)
    except PipelineFailure as exc:
        manifest.update(failed=True, fail_class=type(exc).__name__, message=str(exc))
        manifest_path.write_text(json.dumps(manifest, indent=1) + "\n")
        raise
    save_wireframe(out, result.wireframe)
    manifest.update(result.manifest, failed=False)
    manifest_path.write_text(json.dumps(manifest, indent=1) + "\n")
    c = result.manifest["counts"]
    print(f"{out}: {c['corners']} corners, {c['curves']} curves "
          f"({c['closed_curves']} closed)")
    return 0


def _evaluate_pair(pred_path, truth_path, spacing):
    truth = load_wireframe(truth_path)
    if pred_path is None or not Path(pred_path).exists():
        return evaluate(Wireframe(), truth, spacing)
    return evaluate(load_wireframe(pred_path), truth, spacing)


def _spacing(args):
    if not args.spacing > 0:
        raise UsageError("--spacing must be positive")
    return args.spacing


def cmd_evaluate(args):
    if args.batch:
        return _evaluate_batch(args)
    if args.predicted is None or args.truth is None:
        raise UsageError("evaluate needs PREDICTED and TRUTH, or --batch DIR")
    spacing = _spacing(args)
    report = _evaluate_pair(args.predicted, args.truth, spacing)
    table = format_table([(Path(args.predicted).stem, report)])
    if args.output:
        Path(args.output).write_text(report.to_json() + "\n")
        Path(args.output).with_suffix(".txt").write_text(table + "\n")
    print(table)
    return 0


def _evaluate_batch(args):
    root = Path(args.batch)
    if not root.is_dir():
        raise UsageError(f"{root} is not a directory")
    pred_dir = Path(args.pred_dir) if args.pred_dir else root
    truths = sorted(root.glob("*.truth.json"))
    if not truths:
        raise UsageError(f"no *.truth.json files in {root}")
    spacing = _spacing(args)
    names = [t.name[:-len(".truth.json")] for t in truths]
    preds = [pred_dir / f"{n}.json" for n in names]
    workers = thread_count()
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            reports = list(pool.map(_evaluate_pair, preds, truths,
                                    [spacing] * len(names)))
    else:
        reports = [_evaluate_pair(p, t, spacing) for p, t in zip(preds, truths)]
    rows = list(zip(names, reports))
    table = format_table(rows)
    payload = {"shapes": {n: r.to_dict() for n, r in rows},
               "summary": summarize(reports)}
    if args.output:
        Path(args.output).write_text(json.dumps(payload, indent=1) + "\n")
        Path(args.output).with_suffix(".txt").write_text(table + "\n")
    print(table)
    return 0


def cmd_synth(args):
    if args.preset not in PRESETS:
        raise UsageError(f"unknown preset {args.preset!r}; choose from "
                         f"{', '.join(sorted(PRESETS))}")
    if not args.r > 0 or args.noise < 0:
        raise UsageError("--r must be positive and --noise non-negative")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    shape = make_shape(args.preset, noise_sigma=args.noise)
    cloud = sample_field(shape, args.r, noise_sigma=args.noise, seed=args.seed)
    cloud_path = out / f"{args.preset}.xyzd"
    truth_path = out / f"{args.preset}.truth.json"
    save_point_cloud(cloud_path, cloud)
    save_wireframe(truth_path, shape.wireframe())
    print(f"{cloud_path}: {len(cloud)} points; {truth_path}: "
          f"{len(shape.corners)} corners, {len(shape.curves)} curves")
    return 0


def cmd_export(args):
    if not args.spacing > 0:
        raise UsageError("--spacing must be positive")
    wire = load_wireframe(args.wireframe)
    if args.format == "obj":
        export_obj(args.out, wire, args.spacing)
    else:
        pts = sample_wireframe(wire, args.spacing)
        save_xyzd(args.out, pts, np.zeros(len(pts)), r=args.spacing)
    print(f"wrote {args.out}")
    return 0


# -- parser -------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="sharpwire",
        description="Parametric wireframes from point clouds with "
                    "distance-to-feature estimates.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="point cloud to wireframe JSON")
    p.add_argument("input", help="XYZD point cloud")
    p.add_argument("-o", "--output", required=True, help="wireframe JSON path")
    p.add_argument("--manifest", help="run manifest path "
                   "(default: OUTPUT with .manifest.json suffix)")
    p.add_argument("-c", "--config", help="TOML file with pipeline parameters")
    _add_config_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("evaluate", help="compare wireframes (CD, HD)")
    p.add_argument("predicted", nargs="?")
    p.add_argument("truth", nargs="?")
    p.add_argument("--batch", metavar="DIR",
                   help="evaluate every NAME.truth.json in DIR against NAME.json")
    p.add_argument("--pred-dir", help="where batch mode looks for NAME.json")
    p.add_argument("--spacing", type=float, default=0.01,
                   help="sampling spacing (default 0.01, half of r = 0.02)")
    p.add_argument("-o", "--output", help="report JSON path; a .txt table is "
                   "written next to it")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="synthetic cloud plus ground truth")
    p.add_argument("preset", help="one of: " + ", ".join(PRESETS))
    p.add_argument("--r", type=float, default=0.02, help="sampling distance")
    p.add_argument("--noise", type=float, default=0.0,
                   help="position noise standard deviation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("export", help="sample a wireframe to OBJ or XYZD")
    p.add_argument("wireframe")
    p.add_argument("--format", choices=["obj", "xyzd-samples"], default="obj")
    p.add_argument("--spacing", type=float, default=0.01)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sharpwire: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PipelineFailure as exc:
        print(f"sharpwire: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (PointCloudParseError, WireframeFormatError, ValidationError,
            TooSmallError, tomllib.TOMLDecodeError, OSError) as exc:
        print(f"sharpwire: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SharpwireError as exc:
        print(f"sharpwire: error: {exc}", file=sys.stderr)
        return PipelineFailure.exit_code


if __name__ == "__main__":
    sys.exit(main())
