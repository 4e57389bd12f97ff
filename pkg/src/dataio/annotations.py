"""
Annotation files: parsing, writing and static-object curation.

Files follow the VIRAT objects layout, one box per line:

    object_id duration frame_index left top width height class_code

class_code 1..5 maps to person, car, vehicle, object, bike.
"""

from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import pandas as pd

from ..core.errors import ConfigurationError
from ..utils.logging import get_logger
from .frames import DatasetError
from .models import Annotation, BoundingBox, CLASS_CODES, CODE_BY_CLASS

logger = get_logger(__name__)

COLUMNS = ["object_id", "duration", "frame_index", "left", "top", "width", "height", "class_code"]


class AnnotationError(DatasetError):
    """Malformed annotation file."""

    def __init__(self, path: Path, line: int, reason: str):
        self.path = Path(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {reason}")


@dataclass
class ParseStats:
    """Counts of annotation lines skipped while parsing."""
    skipped_unknown_class: int = 0
    skipped_bad_geometry: int = 0

    @property
    def warnings(self) -> int:
        return self.skipped_unknown_class + self.skipped_bad_geometry


def _default_stream_id(path: Path) -> str:
    # <root>/<stream_id>/annotations.txt -> stream_id
    return path.parent.name or path.stem


def _first_wide_line(path: Path) -> Tuple[int, int]:
    """Line number and field count of the first line with too many fields."""
    with path.open("r", encoding="utf-8") as f:
        for number, text in enumerate(f, start=1):
            count = len(text.split())
            if count > len(COLUMNS):
                return number, count
    return 0, len(COLUMNS)


def parse_annotations(
    file_path: Union[str, Path],
    stream_id: Optional[str] = None,
    stats: Optional[ParseStats] = None,
) -> List[Annotation]:
    """Parse an 8-column annotation file.

    Lines with an unknown class code, or a non-positive width/height, are
    skipped and counted in `stats`. Boxes starting left of / above the frame
    origin are clipped to it.

    Args:
        file_path: Annotation file
        stream_id: Stream the annotations belong to (default: parent directory name)
        stats: Optional counter object updated in place

    Returns:
        One Annotation per accepted line, in file order

    Raises:
        DatasetError: If the file does not exist
        AnnotationError: If a field is not an integer (reports the line number)
    """
    path = Path(file_path)
    if not path.is_file():
        raise DatasetError(f"Annotation file not found: {path}")
    stats = stats if stats is not None else ParseStats()
    stream_id = stream_id or _default_stream_id(path)

    try:
        df = pd.read_csv(
            path, sep=r"\s+", header=None, names=COLUMNS, dtype=str,
            skip_blank_lines=False, index_col=False,
        )
    except pd.errors.EmptyDataError:
        return []
    except pd.errors.ParserError as e:
        line, count = _first_wide_line(path)
        raise AnnotationError(path, line, f"expected {len(COLUMNS)} columns, found {count}") from e

    # Row position + 1 is the line number because blank lines are kept as all-NaN rows
    df.index = pd.RangeIndex(1, len(df) + 1)
    df = df.dropna(how="all")

    for column in COLUMNS:
        is_int = df[column].fillna("").str.fullmatch(r"[+-]?\d+")
        if not is_int.all():
            line = int(is_int.idxmin())
            raise AnnotationError(path, line, f"field '{column}' is not an integer: {df.at[line, column]!r}")

    values = df.astype(int)
    annotations: List[Annotation] = []
    for row in values.itertuples():
        label = CLASS_CODES.get(row.class_code)
        if label is None:
            stats.skipped_unknown_class += 1
            continue

        left, top, width, height = row.left, row.top, row.width, row.height
        # Clip boxes that start outside the frame origin
        if left < 0:
            width += left
            left = 0
        if top < 0:
            height += top
            top = 0
        if width < 1 or height < 1 or row.frame_index < 0:
            stats.skipped_bad_geometry += 1
            continue

        annotations.append(Annotation(
            stream_id=stream_id,
            frame_index=row.frame_index,
            object_id=row.object_id,
            class_label=label,
            box=BoundingBox(x=left, y=top, w=width, h=height),
            duration=row.duration,
        ))

    if stats.warnings:
        logger.warning(
            f"Skipped {stats.warnings} annotation lines in {path}",
            extra={
                'event_type': 'annotation_lines_skipped',
                'unknown_class': stats.skipped_unknown_class,
                'bad_geometry': stats.skipped_bad_geometry,
            }
        )
    return annotations


def write_annotations(file_path: Union[str, Path], annotations: Iterable[Annotation]) -> Path:
    """Write annotations in the same 8-column format."""
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [
        (a.object_id, a.duration, a.frame_index, a.box.x, a.box.y, a.box.w, a.box.h, CODE_BY_CLASS[a.class_label])
        for a in annotations
    ]
    pd.DataFrame(rows, columns=COLUMNS).to_csv(path, sep=" ", header=False, index=False)
    return path


def curate_annotations(
    annotations: List[Annotation],
    lookback: int = 10,
    static_fraction: float = 0.9,
) -> List[Annotation]:
    """Drop objects that stay static for most of a sequence.

    An annotated frame of an object is static when the object's box equals
    its box `lookback` frames earlier. Only frames with an annotation
    `lookback` frames earlier are comparable. An object with at least two
    comparable frames, of which a share >= static_fraction are static, is
    removed from the sequence entirely. Curation is idempotent.

    Args:
        annotations: Annotations of one or more sequences
        lookback: Frames between compared boxes
        static_fraction: Static share at which an object is removed

    Returns:
        Kept annotations in input order

    Raises:
        ConfigurationError: If lookback <= 0 or static_fraction is outside (0, 1]
    """
    if lookback <= 0:
        raise ConfigurationError("lookback must be positive")
    if not 0.0 < static_fraction <= 1.0:
        raise ConfigurationError("static_fraction must be in (0, 1]")

    # Per sequence and object: frame_index -> box
    tracks: Dict[Tuple[str, int], Dict[int, Tuple[int, int, int, int]]] = defaultdict(dict)
    for a in annotations:
        tracks[(a.stream_id, a.object_id)][a.frame_index] = a.box.as_tuple()

    removed = set()
    for key, boxes in tracks.items():
        comparable = 0
        static = 0
        for frame_index, box in boxes.items():
            previous = boxes.get(frame_index - lookback)
            if previous is None:
                continue
            comparable += 1
            if previous == box:
                static += 1
        if comparable >= 2 and static / comparable >= static_fraction:
            removed.add(key)

    if removed:
        logger.info(
            f"Curation removed {len(removed)} static objects",
            extra={'event_type': 'static_objects_removed', 'objects': sorted(f"{s}:{o}" for s, o in removed)}
        )
    return [a for a in annotations if (a.stream_id, a.object_id) not in removed]


def index_by_frame(annotations: Iterable[Annotation]) -> Dict[Tuple[str, int], List[Annotation]]:
    """Group annotations by (stream_id, frame_index)."""
    index: Dict[Tuple[str, int], List[Annotation]] = defaultdict(list)
    for a in annotations:
        index[a.frame_key].append(a)
    return dict(index)
