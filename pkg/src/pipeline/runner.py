"""
Pipeline orchestration.

Per stream lane: decode -> background subtraction -> extraction. A single
consumer composes crops from all lanes, resizes each composite to the
detector input, detects and maps detections back to their scenes.

Two schedules are available:

- ``tick``: every lane processes its next frame concurrently, crops are
  enqueued in stream order, then the composer emits compositions while the
  policy's grouping is complete. Outputs are reproducible byte for byte.
- ``free``: one producer thread per lane and a composer thread that builds
  the next composite once the detector is idle and the policy's grouping is
  complete (or the lanes are exhausted). Composites reach the detector
  through a one-slot queue.
"""

import contextvars
import queue
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

import pandas as pd

from ..backmap.translate import BackmapStats, SceneDetection, translate, write_scene_detections
from ..bgs.subtractor import BackgroundSubtractor, MaskDumper, create_subtractor
from ..composer.composer import Composer, CompositeDumper, resize_to_input
from ..composer.models import CompositeFrame, Elastic
from ..core.errors import FomoError
from ..dataio.annotations import curate_annotations, index_by_frame, parse_annotations, ParseStats
from ..dataio.frames import load_sequence
from ..dataio.models import Annotation, BoundingBox, FrameRecord
from ..dataio.sequences import SequenceInfo, discover_sequences, select_sequences
from ..detector.base import Detector
from ..detector.factory import create_detector
from ..detector.models import DetectorError, MissingMetadataError
from ..evaluation.accounting import RunLog, inference_accounting
from ..evaluation.metrics import PixelScore, pixel_precision_recall
from ..evaluation.report import EvalReport, evaluate, summarize_latency
from ..extract.components import connected_components, filter_and_merge
from ..extract.crops import ArrivalCounter, CropDumper, crop_annotations, crop_objects
from ..extract.models import CropStats, ObjectCrop
from ..utils.logging import RunContext, get_logger
from . import metrics
from .config import RunConfig
from .timings import StageTimings

logger = get_logger(__name__)

REPLICA_SEPARATOR = "~"
DETECTIONS_FILE = "detections.csv"
REPORT_FILE = "report.json"
TIMINGS_FILE = "timings.csv"


class PipelineError(FomoError):
    """Fatal run error, naming the stream and frame where it happened."""

    def __init__(self, message: str, stream_id: Optional[str] = None, frame_index: Optional[int] = None):
        self.stream_id = stream_id
        self.frame_index = frame_index
        where = ""
        if stream_id is not None:
            where = f" [stream {stream_id}" + (f", frame {frame_index}]" if frame_index is not None else "]")
        super().__init__(f"{message}{where}")


@dataclass
class StreamSource:
    """One (possibly replicated) stream of the run."""
    stream_id: str
    info: SequenceInfo
    annotations: List[Annotation]


@dataclass
class LaneOutput:
    """What a lane produced for one frame."""
    frame: FrameRecord
    evaluated: bool
    boxes: List[BoundingBox] = field(default_factory=list)
    annotations: Optional[List[Annotation]] = None


@dataclass
class RunResult:
    detections: List[SceneDetection]
    report: EvalReport
    timings: pd.DataFrame
    run_log: RunLog
    paths: Dict[str, Path] = field(default_factory=dict)


def replica_id(stream_id: str, replica: int, replicate: int) -> str:
    return stream_id if replicate == 1 else f"{stream_id}{REPLICA_SEPARATOR}{replica}"


def load_sources(config: RunConfig) -> List[StreamSource]:
    """Discover, select, curate and replicate the run's streams.

    Raises:
        PipelineError: If no data root is set or no sequence qualifies
    """
    if not config.data_root:
        raise PipelineError("data_root is not set")
    sequences = discover_sequences(config.data_root)
    if config.streams:
        wanted = set(config.streams)
        missing = wanted - {s.stream_id for s in sequences}
        if missing:
            raise PipelineError(f"Streams not found under {config.data_root}: {sorted(missing)}")
        sequences = [s for s in sequences if s.stream_id in wanted]
    selected = select_sequences(sequences, config.dataset.min_frames, config.dataset.warmup)
    if not selected:
        raise PipelineError(f"No sequence under {config.data_root} has >= {config.dataset.min_frames} frames")

    sources = []
    for seq in selected:
        info = seq.info
        annotations: List[Annotation] = []
        if info.annotations_path is not None:
            annotations = parse_annotations(info.annotations_path, stream_id=info.stream_id, stats=ParseStats())
            if config.curate:
                annotations = curate_annotations(
                    annotations, config.dataset.lookback, config.dataset.static_fraction
                )
        for k in range(config.replicate):
            sid = replica_id(info.stream_id, k, config.replicate)
            replica_annotations = annotations if sid == info.stream_id else [
                a.model_copy(update={"stream_id": sid}) for a in annotations
            ]
            sources.append(StreamSource(stream_id=sid, info=info, annotations=replica_annotations))
    return sources


class StreamLane:
    """Decode, background subtraction and extraction for one stream."""

    def __init__(
        self,
        source: StreamSource,
        config: RunConfig,
        timings: StageTimings,
        mask_dumper: Optional[MaskDumper] = None,
    ):
        self.source = source
        self.stream_id = source.stream_id
        self.config = config
        self.timings = timings
        self.mask_dumper = mask_dumper
        self.ground_truth = index_by_frame(source.annotations)
        self.subtractor: Optional[BackgroundSubtractor] = None
        if not config.baseline and config.extract.source == "bgs":
            self.subtractor = create_subtractor(config.bgs)
        self.pixel_score = PixelScore()
        self.zero_extraction_frames = 0
        self.crop_stats = CropStats()
        self.frame_size: Optional[Tuple[int, int]] = None
        self._frames = self._decode()

    def _decode(self) -> Iterator[FrameRecord]:
        frames = load_sequence(self.source.info.frames_dir, skip=self.config.dataset.skip, stream_id=self.stream_id)
        for count, frame in enumerate(frames):
            if self.config.max_frames is not None and count >= self.config.max_frames:
                return
            yield frame

    def step(self) -> Optional[LaneOutput]:
        """Process the next frame; None when the stream is exhausted."""
        frame = None
        try:
            with self.timings.timed("decode", stream_id=self.stream_id):
                frame = next(self._frames, None)
            if frame is None:
                return None
            return self._process(frame)
        except FomoError as e:
            index = frame.frame_index if frame is not None else None
            raise PipelineError(str(e), self.stream_id, index) from e

    def _process(self, frame: FrameRecord) -> LaneOutput:
        index = frame.frame_index
        self.frame_size = frame.pixels.size
        evaluated = index >= self.config.dataset.warmup
        output = LaneOutput(frame=frame, evaluated=evaluated)
        if self.config.baseline:
            return output

        if self.config.extract.source == "gt":
            if evaluated:
                output.annotations = self.ground_truth.get(frame.key, [])
                output.boxes = [a.box for a in output.annotations]
            return output

        with self.timings.timed("bgs", stream_id=self.stream_id, frame_index=index):
            mask = self.subtractor.apply(frame.pixels, index, extract=evaluated)
        if not evaluated:
            return output
        with self.timings.timed("extract", stream_id=self.stream_id, frame_index=index):
            if mask is not None:
                output.boxes = filter_and_merge(
                    connected_components(mask), self.config.extract.min_area, self.config.extract.merge_iou
                )
        if mask is not None and self.mask_dumper is not None:
            self.mask_dumper.dump(self.stream_id, index, mask)

        gt_boxes = [a.box for a in self.ground_truth.get(frame.key, [])]
        score = pixel_precision_recall(output.boxes, gt_boxes, frame.pixels.size)
        self.pixel_score = self.pixel_score + score
        if score.zero_extraction:
            self.zero_extraction_frames += 1
        return output

    def cut(self, output: LaneOutput, counter: ArrivalCounter) -> List[ObjectCrop]:
        if output.annotations is not None:
            return crop_annotations(output.frame.pixels, output.annotations, counter, self.crop_stats)
        return crop_objects(
            output.frame.pixels, output.boxes, self.stream_id, output.frame.frame_index,
            counter, self.crop_stats,
        )


class Pipeline:
    """One run of the pipeline over a RunConfig."""

    def __init__(self, config: RunConfig, detector: Optional[Detector] = None):
        self.config = config
        self.timings = StageTimings()
        self.run_log = RunLog()
        self.counter = ArrivalCounter()
        self.backmap_stats = BackmapStats()
        self.detections: List[SceneDetection] = []
        self.drain_compositions = 0
        self.sources = load_sources(config)

        ground_truth = index_by_frame(a for s in self.sources for a in s.annotations)
        self.ground_truth = ground_truth
        self.detector = detector or create_detector(config.detector, config.composer.input_side, ground_truth)

        mask_dumper = MaskDumper(config.dump_masks) if config.dump_masks else None
        self.crop_dumper = CropDumper(config.dump_crops) if config.dump_crops else None
        self.lanes = [StreamLane(s, config, self.timings, mask_dumper) for s in self.sources]
        self.composer = Composer(
            policy=config.composer.build_policy(),
            border=config.composer.border,
            pool_capacity=config.composer.pool_capacity,
            step=config.composer.canvas_step,
        )
        self.composite_dumper = CompositeDumper(config.dump_composites) if config.dump_composites else None
        self._policy_label = config.policy_label()
        self._consume_lock = threading.Lock()

    # Producer side

    def _accept(self, lane: StreamLane, output: LaneOutput) -> List[ObjectCrop]:
        if not output.evaluated:
            return []
        self.run_log.record_frame(output.frame.key)
        metrics.frames_processed.labels(stream_id=lane.stream_id).inc()
        if self.config.baseline:
            return []
        crops = lane.cut(output, self.counter)
        if crops:
            metrics.crops_extracted.labels(stream_id=lane.stream_id).inc(len(crops))
        if self.crop_dumper is not None:
            for crop in crops:
                self.crop_dumper.dump(crop)
        return crops

    def _enqueue(self, crops: List[ObjectCrop]) -> None:
        if crops:
            dropped = self.composer.enqueue(crops)
            if dropped:
                metrics.crops_dropped.inc(dropped)

    # Consumer side

    def _compose(self) -> Optional[CompositeFrame]:
        start = time.perf_counter()
        composite = self.composer.compose()
        if composite is not None:
            self.timings.add("compose", time.perf_counter() - start, composition_id=composite.composition_id)
            metrics.compositions_total.labels(policy=self._policy_label).inc()
        return composite

    def consume(self, composite: CompositeFrame) -> List[SceneDetection]:
        """Resize, detect and map back one composite."""
        with self._consume_lock:
            cid = composite.composition_id
            with self.timings.timed("resize", composition_id=cid):
                model_input = resize_to_input(composite, self.config.composer.input_side)
            if self.composite_dumper is not None:
                self.composite_dumper.dump(composite)
            self.run_log.record_call(cid, composite.frame_keys(), len(composite.placements))
            metrics.detector_calls.inc()
            try:
                with self.timings.timed("detect", composition_id=cid):
                    detections = self.detector.detect(model_input, composite)
            except MissingMetadataError as e:
                raise PipelineError(f"Composite {cid} lacks placement metadata: {e}") from e
            except DetectorError as e:
                metrics.detector_failures.labels(error_type=type(e).__name__).inc()
                logger.warning(
                    f"Detection failed for composite {cid}: {e}",
                    extra={'event_type': 'detector_failure', 'composition_id': cid, 'error_type': type(e).__name__}
                )
                return []
            with self.timings.timed("backmap", composition_id=cid):
                scene = translate(
                    detections, composite, composite.scale_factor, self.config.detector.min_overlap,
                    self.backmap_stats,
                )
            self.detections.extend(scene)
            return scene

    # Schedules

    def _run_tick(self) -> None:
        workers = self.config.workers or len(self.lanes)
        active = list(self.lanes)
        context = contextvars.copy_context()
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="lane") as pool:
            while active:
                outputs = list(pool.map(lambda lane: context.copy().run(lane.step), active))
                still_active = []
                for lane, output in zip(active, outputs):
                    if output is None:
                        continue
                    still_active.append(lane)
                    crops = self._accept(lane, output)
                    if self.config.baseline and output.evaluated:
                        self.consume(self.composer.compose_full_frame(output.frame))
                    self._enqueue(crops)
                active = still_active
                while not self.config.baseline and self.composer.ready():
                    composite = self._compose()
                    if composite is None:
                        break
                    self.consume(composite)
        self._drain()

    def _drain(self) -> None:
        while len(self.composer.pool) > 0:
            composite = self._compose()
            if composite is None:
                break
            self.drain_compositions += 1
            self.consume(composite)

    def _run_free(self) -> None:
        slot: "queue.Queue[Optional[CompositeFrame]]" = queue.Queue(maxsize=1)
        producers_done = threading.Event()
        detector_idle = threading.Event()
        detector_idle.set()
        failures: List[BaseException] = []

        def produce(lane: StreamLane) -> None:
            try:
                while not failures:
                    output = lane.step()
                    if output is None:
                        return
                    crops = self._accept(lane, output)
                    if self.config.baseline and output.evaluated:
                        slot.put(self.composer.compose_full_frame(output.frame))
                    self._enqueue(crops)
            except BaseException as e:  # surfaced by the main thread
                failures.append(e)

        def compose_loop() -> None:
            try:
                while not failures:
                    # At most one composite in flight; compose only once the detector is done with it
                    if not detector_idle.wait(timeout=0.05):
                        continue
                    draining = producers_done.is_set()
                    ready = self.composer.ready()
                    if not ready and not draining:
                        self.composer.pool.wait_for_crops(timeout=0.05, more_than=len(self.composer.pool))
                        continue
                    detector_idle.clear()
                    composite = self._compose()
                    if composite is None:
                        detector_idle.set()
                        if draining:
                            break
                        continue
                    if not ready:
                        self.drain_compositions += 1
                    slot.put(composite)
            except BaseException as e:
                failures.append(e)
            finally:
                slot.put(None)

        context = contextvars.copy_context()
        producers = [
            threading.Thread(
                target=context.copy().run, args=(produce, lane), name=f"lane-{lane.stream_id}", daemon=True
            )
            for lane in self.lanes
        ]
        composer_thread = threading.Thread(
            target=context.copy().run, args=(compose_loop,), name="composer", daemon=True
        )
        for t in producers:
            t.start()
        composer_thread.start()

        def watch() -> None:
            for t in producers:
                t.join()
            producers_done.set()
        threading.Thread(target=watch, name="lane-watch", daemon=True).start()

        try:
            while True:
                composite = slot.get()
                if composite is None:
                    break
                try:
                    self.consume(composite)
                finally:
                    detector_idle.set()
        except BaseException as e:
            failures.append(e)
            raise
        composer_thread.join()
        if failures:
            error = failures[0]
            if isinstance(error, PipelineError):
                raise error
            raise PipelineError(f"Lane failed: {error}") from error

    # Entry point

    def run(self) -> RunResult:
        with RunContext() as run_id:
            logger.info(
                f"Starting run over {len(self.lanes)} streams",
                extra={
                    'event_type': 'run_started',
                    'streams': [lane.stream_id for lane in self.lanes],
                    'policy': self._policy_label,
                    'schedule': self.config.schedule,
                    'bgs_method': self.config.bgs.method.value,
                }
            )
            try:
                self.detector.open()
            except DetectorError as e:
                raise PipelineError(f"Detector unavailable: {e}") from e
            try:
                if self.config.schedule == "free":
                    self._run_free()
                else:
                    self._run_tick()
            finally:
                self.detector.close()

            result = self._finish()
            logger.info(
                "Run finished",
                extra={
                    'event_type': 'run_finished',
                    'run_id': run_id,
                    'inferences': result.report.inference_count,
                    'reduction_factor': result.report.reduction_factor,
                    'mean_ap': result.report.mean_ap,
                }
            )
            return result

    def _finish(self) -> RunResult:
        annotations = [a for s in self.sources for a in s.annotations]
        report = evaluate(
            self.detections, annotations, self.run_log.frames_processed, self.config.evaluation.iou_threshold
        )
        report.apply_accounting(inference_accounting(self.run_log))

        if not self.config.baseline and self.config.extract.source == "bgs":
            pixel_total = PixelScore()
            for lane in self.lanes:
                pixel_total = pixel_total + lane.pixel_score
            report.apply_pixel_score(pixel_total, sum(lane.zero_extraction_frames for lane in self.lanes))

        timings = self.timings.to_frame()
        report.latency = summarize_latency(timings)
        for stage, seconds in zip(timings["stage"], timings["seconds"]):
            metrics.stage_latency.labels(stage=stage).observe(seconds)

        stats = self.composer.stats
        report.counters = {
            "crops_extracted": sum(lane.crop_stats.crops for lane in self.lanes),
            "crops_skipped_empty": sum(lane.crop_stats.skipped_empty for lane in self.lanes),
            "crops_placed": stats.crops_placed,
            "crops_dropped": stats.crops_dropped,
            "compositions": stats.compositions,
            "drain_compositions": self.drain_compositions,
            "oversized_compositions": stats.oversized,
            "detections": len(self.detections),
            "detections_discarded": self.backmap_stats.discarded,
        }
        report.detector_failures = dict(self.detector.stats.failures)
        if isinstance(self.composer.policy, Elastic) and self.drain_compositions:
            report.notes.append(
                f"{self.drain_compositions} drain compositions may hold fewer than "
                f"{self.composer.policy.max_frames} frames"
            )

        result = RunResult(detections=self.detections, report=report, timings=timings, run_log=self.run_log)
        if self.config.output_dir:
            result.paths = write_outputs(result, self.config.output_dir, self.timings)
        return result


def write_outputs(result: RunResult, output_dir, timings: Optional[StageTimings] = None) -> Dict[str, Path]:
    """Detections CSV, report JSON and timings CSV under output_dir."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "detections": write_scene_detections(out / DETECTIONS_FILE, result.detections),
        "report": out / REPORT_FILE,
    }
    paths["report"].write_bytes(result.report.to_json())
    if timings is not None:
        paths["timings"] = timings.write_csv(out / TIMINGS_FILE)
    logger.info(f"Wrote run outputs to {out}", extra={'event_type': 'outputs_written', 'output_dir': str(out)})
    return paths


def run(config: RunConfig, detector: Optional[Detector] = None) -> RunResult:
    """Run the pipeline: detections, evaluation report and stage timings."""
    return Pipeline(config, detector).run()
