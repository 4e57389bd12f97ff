"""
FoMO command line.

Subcommands:
    curate         Drop static objects from an annotation file
    gen-synth      Generate a synthetic dataset
    run            Run the pipeline (config file plus flag overrides)
    eval           Score a detections CSV against curated annotations
    bench-bgs      Extraction latency per background subtraction method
    bench-compose  Composition latency against object count
    sweep          Replication sweep (inference reduction against accuracy)

Exit codes: 0 on success, 1 on a pipeline or data error, 2 on invalid
configuration or arguments.

Examples:
    python -m cli gen-synth --out data/synth --frames 500
    python -m cli run --data-root data/synth --replicate 8 --policy elastic:8 --extract-source gt
    python -m cli eval --detections runs/detections.csv --annotations data/synth/synth/annotations.txt
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

import pandas as pd
from pydantic import ValidationError

from config.settings import get_settings
from src.backmap.translate import read_scene_detections
from src.bgs.models import BgsConfig, BgsMethod
from src.core.errors import ConfigurationError, FomoError
from src.dataio.annotations import ParseStats, curate_annotations, parse_annotations, write_annotations
from src.evaluation.report import evaluate
from src.pipeline.bench import bench_bgs, bench_compose
from src.pipeline.config import load_run_config
from src.pipeline.experiments import replication_sweep
from src.pipeline.metrics import start_metrics_server
from src.pipeline.runner import replica_id, run
from src.pipeline.synthetic import SyntheticSpec, gen_synthetic, iter_frames
from src.utils.logging import configure_logging, get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

# Flag destination -> dotted RunConfig key
RUN_OVERRIDES = {
    "data_root": "data_root",
    "streams": "streams",
    "replicate": "replicate",
    "max_frames": "max_frames",
    "skip": "dataset.skip",
    "warmup": "dataset.warmup",
    "min_frames": "dataset.min_frames",
    "bgs_method": "bgs.method",
    "mog_engine": "bgs.mog_engine",
    "min_area": "extract.min_area",
    "merge_iou": "extract.merge_iou",
    "extract_source": "extract.source",
    "policy": "composer.policy",
    "border": "composer.border",
    "input_side": "composer.input_side",
    "detector": "detector.kind",
    "endpoint": "detector.endpoint",
    "timeout": "detector.timeout_s",
    "jitter": "detector.oracle.jitter_px",
    "drop_rate": "detector.oracle.drop_rate",
    "spurious_rate": "detector.oracle.spurious_rate",
    "seed": "detector.oracle.rng_seed",
    "iou_threshold": "evaluation.iou_threshold",
    "schedule": "schedule",
    "workers": "workers",
    "output_dir": "output_dir",
    "dump_masks": "dump_masks",
    "dump_crops": "dump_crops",
    "dump_composites": "dump_composites",
}


def _int_list(text: str) -> List[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    """Flags shared by run and sweep; unset flags leave the config untouched."""
    parser.add_argument("-c", "--config", help="Flat key = value config file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="Any dotted config key, e.g. --set bgs.ptp_window=30 (repeatable)")

    data = parser.add_argument_group("input")
    data.add_argument("--data-root", help="Dataset root (<root>/<stream_id>/frames)")
    data.add_argument("--streams", help="Comma-separated stream ids (default: all)")
    data.add_argument("--replicate", type=int, help="Copies of every stream")
    data.add_argument("--max-frames", type=int, help="Decoded frames per stream")
    data.add_argument("--skip", type=int, help="Process every skip-th frame")
    data.add_argument("--warmup", type=int, help="Frames excluded from evaluation")
    data.add_argument("--min-frames", type=int, help="Shorter sequences are excluded")
    data.add_argument("--no-curate", dest="curate", action="store_false", default=None,
                      help="Keep static objects in the ground truth")

    stages = parser.add_argument_group("stages")
    stages.add_argument("--bgs-method", choices=[m.value for m in BgsMethod])
    stages.add_argument("--mog-engine", choices=["reference", "opencv"])
    stages.add_argument("--min-area", type=int, help="Smallest box area kept (px^2)")
    stages.add_argument("--merge-iou", type=float, help="Merge boxes overlapping above this IoU")
    stages.add_argument("--extract-source", choices=["bgs", "gt"])
    stages.add_argument("--policy", help="downscale:<factor> or elastic:<n>")
    stages.add_argument("--border", type=int, help="Blank margin around each crop (px)")
    stages.add_argument("--input-side", type=int, help="Detector input side (px)")
    stages.add_argument("--detector", choices=["oracle", "remote"])
    stages.add_argument("--endpoint", help="host:port of a remote detection server")
    stages.add_argument("--timeout", type=float, help="Remote request timeout (s)")
    stages.add_argument("--jitter", type=float, help="Oracle box jitter (px)")
    stages.add_argument("--drop-rate", type=float, help="Oracle miss probability")
    stages.add_argument("--spurious-rate", type=float, help="Oracle false box probability")
    stages.add_argument("--seed", type=int, help="Oracle perturbation seed")
    stages.add_argument("--iou-threshold", type=float, help="Minimum IoU for a true positive")

    execution = parser.add_argument_group("execution")
    execution.add_argument("--baseline", action="store_true", default=None,
                           help="Send full frames to the detector")
    execution.add_argument("--schedule", choices=["tick", "free"])
    execution.add_argument("--workers", type=int, help="Lane threads (0 = one per stream)")

    outputs = parser.add_argument_group("outputs")
    outputs.add_argument("--output-dir", help="Directory for detections, report and timings")
    outputs.add_argument("--dump-masks", help="Directory for foreground masks")
    outputs.add_argument("--dump-crops", help="Directory for crops")
    outputs.add_argument("--dump-composites", help="Directory for composites and their JSON sidecars")


def run_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Dotted config overrides from parsed flags (unset flags omitted).

    Raises:
        ConfigurationError: On a malformed --set value
    """
    overrides: Dict[str, Any] = {}
    for dest, key in RUN_OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "curate", None) is not None:
        overrides["curate"] = args.curate
    if getattr(args, "baseline", None):
        overrides["baseline"] = True
    for item in getattr(args, "set", []):
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    return overrides


def cmd_curate(args: argparse.Namespace) -> int:
    stats = ParseStats()
    annotations = parse_annotations(args.annotations, stream_id=args.stream_id, stats=stats)
    kept = curate_annotations(annotations, lookback=args.lookback, static_fraction=args.static_fraction)
    out = write_annotations(args.out, kept)
    print(f"{len(kept)}/{len(annotations)} annotations kept, {stats.warnings} lines skipped -> {out}")
    return EXIT_OK


def cmd_gen_synth(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        streams=args.streams, stream_prefix=args.prefix, frames=args.frames,
        width=args.width, height=args.height, objects=args.objects,
        min_size=args.min_size, max_size=args.max_size, target_occupancy=args.occupancy,
        min_speed=args.min_speed, max_speed=args.max_speed,
        static_distractors=args.static, lanes=not args.no_lanes, noise=args.noise, seed=args.seed,
    )
    root = gen_synthetic(spec, args.out)
    print(f"Generated {spec.streams} stream(s) of {spec.frames} frames under {root}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    config = load_run_config(args.config, run_overrides(args))
    if config.data_root is None:
        raise ConfigurationError("data_root is required (--data-root, config file or FOMO_DATA_ROOT)")
    result = run(config)
    print(result.report.to_table())
    for name, path in result.paths.items():
        print(f"{name}: {path}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    detections = read_scene_detections(args.detections)
    annotations = []
    for path in args.annotations:
        parsed = parse_annotations(path, stats=ParseStats())
        if not args.no_curate:
            parsed = curate_annotations(parsed, lookback=args.lookback, static_fraction=args.static_fraction)
        annotations.extend(parsed)
    if args.replicate > 1:
        annotations = [
            a.model_copy(update={"stream_id": replica_id(a.stream_id, k, args.replicate)})
            for k in range(args.replicate) for a in annotations
        ]

    frames = None
    if args.warmup or args.skip > 1:
        keys = {d.frame_key for d in detections} | {a.frame_key for a in annotations}
        frames = {(s, i) for s, i in keys if i >= args.warmup and i % args.skip == 0}
    report = evaluate(detections, annotations, frames=frames, iou_threshold=args.iou_threshold)
    print(report.to_table())
    if args.report:
        Path(args.report).parent.mkdir(parents=True, exist_ok=True)
        Path(args.report).write_bytes(report.to_json())
        print(f"report: {args.report}")
    return EXIT_OK


def _write_table(table: pd.DataFrame, out: Optional[str]) -> None:
    print(table.to_string(index=False))
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(out, index=False)
        print(f"table: {out}")


def cmd_bench_bgs(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(width=args.width, height=args.height, frames=args.frames,
                         objects=args.objects, seed=args.seed)
    frames = [pixels for _, pixels, _ in iter_frames(spec, "bench", spec.seed)]
    config = BgsConfig(mog_engine=args.mog_engine)
    methods = [BgsMethod(m) for m in args.methods] if args.methods else None
    table = bench_bgs(config, frames, methods=methods, min_area=args.min_area, frame_step=args.frame_step)
    _write_table(table, args.out)
    return EXIT_OK


def cmd_bench_compose(args: argparse.Namespace) -> int:
    table = bench_compose(
        object_counts=args.counts, min_side=args.min_side, max_side=args.max_side,
        repeats=args.repeats, border=args.border, seed=args.seed,
    )
    summary = table.groupby("objects", as_index=False).agg(
        canvas_side=("canvas_side", "mean"),
        used_side=("used_side", "mean"),
        area_lower_bound=("area_lower_bound", "mean"),
        compose_ms=("compose_ms", "mean"),
    )
    _write_table(summary, args.out)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_run_config(args.config, run_overrides(args))
    if config.data_root is None:
        raise ConfigurationError("data_root is required (--data-root, config file or FOMO_DATA_ROOT)")
    table = replication_sweep(config, counts=args.counts, match_policy=not args.keep_policy)
    _write_table(table, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fomo", description="Focus-on-moving-objects video analytics pipeline")
    parser.add_argument("--log-level", help="Override FOMO_LOG_LEVEL")
    parser.add_argument("--log-format", choices=["json", "text"], help="Override FOMO_LOG_JSON_FORMAT")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curate", help="Drop static objects from an annotation file")
    p.add_argument("annotations", help="8-column annotation file")
    p.add_argument("-o", "--out", required=True, help="Curated annotation file")
    p.add_argument("--stream-id", help="Stream id (default: parent directory name)")
    p.add_argument("--lookback", type=int, default=10)
    p.add_argument("--static-fraction", type=float, default=0.9)
    p.set_defaults(handler=cmd_curate)

    p = sub.add_parser("gen-synth", help="Generate a synthetic dataset")
    p.add_argument("-o", "--out", required=True, help="Dataset root")
    p.add_argument("--streams", type=int, default=1)
    p.add_argument("--prefix", default="synth", help="Stream id prefix")
    p.add_argument("--frames", type=int, default=500)
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--objects", type=int, default=6)
    p.add_argument("--min-size", type=int, default=30)
    p.add_argument("--max-size", type=int, default=70)
    p.add_argument("--occupancy", type=float, help="Target moving-object area fraction")
    p.add_argument("--min-speed", type=int, default=2)
    p.add_argument("--max-speed", type=int, default=6)
    p.add_argument("--static", type=int, default=0, help="Static distractor objects")
    p.add_argument("--no-lanes", action="store_true", help="Let objects move freely and overlap")
    p.add_argument("--noise", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_gen_synth)

    p = sub.add_parser("run", help="Run the pipeline")
    _add_run_arguments(p)
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("eval", help="Score a detections CSV against annotations")
    p.add_argument("--detections", required=True, help="Detections CSV written by run")
    p.add_argument("--annotations", required=True, nargs="+", help="Annotation file(s)")
    p.add_argument("--no-curate", action="store_true", help="Annotations are already curated")
    p.add_argument("--lookback", type=int, default=10)
    p.add_argument("--static-fraction", type=float, default=0.9)
    p.add_argument("--replicate", type=int, default=1, help="Replicas the run used")
    p.add_argument("--warmup", type=int, default=0, help="Ignore frames below this index")
    p.add_argument("--skip", type=int, default=1, help="Only frames whose index is a multiple of skip")
    p.add_argument("--iou-threshold", type=float, default=0.3)
    p.add_argument("--report", help="Write the report JSON here")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("bench-bgs", help="Extraction latency per background subtraction method")
    p.add_argument("--width", type=int, default=1280)
    p.add_argument("--height", type=int, default=720)
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--objects", type=int, default=6)
    p.add_argument("--methods", nargs="+", choices=[m.value for m in BgsMethod])
    p.add_argument("--mog-engine", choices=["reference", "opencv"], default="opencv")
    p.add_argument("--min-area", type=int, default=400)
    p.add_argument("--frame-step", type=int, default=10, help="Frame index increment per frame")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", help="CSV output")
    p.set_defaults(handler=cmd_bench_bgs)

    p = sub.add_parser("bench-compose", help="Composition latency against object count")
    p.add_argument("--counts", type=_int_list, default=[1, 2, 4, 8, 16, 32, 64, 100])
    p.add_argument("--min-side", type=int, default=20)
    p.add_argument("--max-side", type=int, default=120)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--border", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", help="CSV output")
    p.set_defaults(handler=cmd_bench_compose)

    p = sub.add_parser("sweep", help="Replication sweep")
    _add_run_arguments(p)
    p.add_argument("--counts", type=_int_list, default=[1, 2, 4, 8], help="Replicate counts")
    p.add_argument("--keep-policy", action="store_true", help="Do not switch to elastic:<k> per count")
    p.add_argument("-o", "--out", help="CSV output")
    p.set_defaults(handler=cmd_sweep)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    settings = get_settings()
    level = args.log_level or settings.logging.level
    json_format = settings.logging.json_format if args.log_format is None else args.log_format == "json"
    configure_logging(level, json_format)
    if settings.metrics.enabled:
        start_metrics_server(settings.metrics.port)

    try:
        return args.handler(args)
    except (ConfigurationError, ValidationError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FomoError as e:
        logger.error(f"{args.command} failed: {e}", extra={'event_type': 'command_failed', 'command': args.command})
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
