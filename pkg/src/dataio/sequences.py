"""
Dataset layout discovery, sequence selection and scene occupancy.

Layout:

    <root>/<stream_id>/frames/NNNNNN.<png|ppm>
    <root>/<stream_id>/annotations.txt
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from ..utils.logging import get_logger
from .annotations import index_by_frame
from .frames import DatasetError, list_frame_files
from .models import Annotation

logger = get_logger(__name__)

FRAMES_DIR = "frames"
ANNOTATIONS_FILE = "annotations.txt"


@dataclass(frozen=True)
class SequenceInfo:
    """One stream's sequence on disk."""
    stream_id: str
    frames_dir: Path
    annotations_path: Optional[Path]
    frame_count: int


@dataclass(frozen=True)
class SelectedSequence:
    """A sequence kept for evaluation; frames before eval_start only feed the background model."""
    info: SequenceInfo
    eval_start: int

    @property
    def evaluated_frames(self) -> range:
        return range(self.eval_start, self.info.frame_count)


def describe_sequence(stream_dir: Union[str, Path]) -> SequenceInfo:
    """Describe `<root>/<stream_id>` from its frames directory and annotation file."""
    stream_dir = Path(stream_dir)
    frames_dir = stream_dir / FRAMES_DIR
    annotations_path = stream_dir / ANNOTATIONS_FILE
    return SequenceInfo(
        stream_id=stream_dir.name,
        frames_dir=frames_dir,
        annotations_path=annotations_path if annotations_path.is_file() else None,
        frame_count=len(list_frame_files(frames_dir)),
    )


def discover_sequences(root: Union[str, Path]) -> List[SequenceInfo]:
    """All sequences under a dataset root, sorted by stream_id.

    Raises:
        DatasetError: If the root directory is missing
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"Dataset root not found: {root}")
    return [
        describe_sequence(child)
        for child in sorted(root.iterdir())
        if (child / FRAMES_DIR).is_dir()
    ]


def select_sequences(
    sequences: Iterable[SequenceInfo],
    min_frames: int = 1000,
    warmup: int = 250,
) -> List[SelectedSequence]:
    """Keep sequences with at least min_frames frames; evaluation starts after warmup.

    Args:
        sequences: Candidate sequences
        min_frames: Minimum frame count to keep a sequence
        warmup: Leading frames excluded from evaluation

    Returns:
        Kept sequences (possibly empty)
    """
    selected = []
    for info in sequences:
        if info.frame_count < min_frames:
            logger.info(
                f"Excluding sequence {info.stream_id}: {info.frame_count} frames < {min_frames}",
                extra={'event_type': 'sequence_excluded', 'stream_id': info.stream_id}
            )
            continue
        selected.append(SelectedSequence(info=info, eval_start=warmup))
    return selected


def evaluated_frames(frame_indices: Iterable[int], warmup: int) -> List[int]:
    """Frame indices that count for evaluation."""
    return [i for i in frame_indices if i >= warmup]


def scene_occupancy(
    annotations: Iterable[Annotation],
    frame_width: int,
    frame_height: int,
) -> Tuple[float, Dict[Tuple[str, int], float]]:
    """Fraction of the frame covered by annotated objects.

    Overlapping boxes are counted once (pixel-set union).

    Returns:
        (mean over annotated frames, per-frame fraction keyed by (stream_id, frame_index))
    """
    frame_area = frame_width * frame_height
    per_frame: Dict[Tuple[str, int], float] = {}
    for key, frame_annotations in index_by_frame(annotations).items():
        covered = np.zeros((frame_height, frame_width), dtype=bool)
        for a in frame_annotations:
            covered[a.box.y:a.box.bottom, a.box.x:a.box.right] = True
        per_frame[key] = float(covered.sum()) / frame_area
    mean = float(np.mean(list(per_frame.values()))) if per_frame else 0.0
    return mean, per_frame
