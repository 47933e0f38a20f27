"""Multi-source dataset ingestion, label harmonization, and splitting.

Sources arrive in the normalized-center annotation layout: one text file
per image with ``class_id cx cy w h`` lines, a per-source ``classes.txt``
naming raw labels by index, and an ``images/`` directory. Raw labels are
mapped onto the binary vocabulary through a fixed global table; anything
outside the table is an error, never silently dropped.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from PIL import Image

from .errors import EmptyDataset, UnknownLabel, UnreadableSource
from .rng import shuffled
from .types import BBox, CHEATING, NOT_CHEATING, ClassLabel

# Global mapping table: raw source labels -> binary class. Matching is
# exact after trimming surrounding whitespace; case variants are listed
# explicitly, so case remains significant.
_CHEATING_RAW = ("cheating", "Cheating", "Mobile", "phone", "cheating-paper")
_NOT_CHEATING_RAW = (
    "normal",
    "Normal",
    "Hand-Normalmove",
    "Not Cheating",
    "not-cheating",
    "no_cheating",
    "Non-Cheating",
    "non-cheating",
    "person",
)
LABEL_MAP: Dict[str, ClassLabel] = {
    **{raw: CHEATING for raw in _CHEATING_RAW},
    **{raw: NOT_CHEATING for raw in _NOT_CHEATING_RAW},
}

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp", ".webp")


def map_label(raw: str) -> ClassLabel:
    """Map a raw source label onto the binary vocabulary.

    Raises UnknownLabel for any string outside the global table.
    """
    key = raw.strip()
    try:
        return LABEL_MAP[key]
    except KeyError:
        raise UnknownLabel(raw) from None


@dataclass(frozen=True)
class SourceAnnotation:
    """One raw annotation: normalized center-format box plus raw label."""

    image_path: str
    raw_label: str
    bbox_norm: Tuple[float, float, float, float]  # (cx, cy, w, h), each in [0, 1]
    source_name: str


@dataclass(frozen=True)
class HarmonizedRecord:
    image_path: str
    bbox: BBox
    label: ClassLabel
    source_name: str


@dataclass(frozen=True)
class ValidationResult:
    """Outcome of bbox validation: a box, a warning, or a box + warning."""

    bbox: Optional[BBox]
    warning: Optional[str]  # "invalid_bbox" | "clamped" | None
    reason: str = ""

    @property
    def valid(self) -> bool:
        return self.bbox is not None


def validate_bbox(ann: SourceAnnotation, img_w: int, img_h: int) -> ValidationResult:
    """Denormalize and validate one annotation box.

    Valid boxes need w > 0, h > 0, every normalized component in [0, 1],
    and a non-empty intersection with the image. Boxes that poke outside
    are clamped and flagged; degenerate ones are excluded with a warning.
    Warnings are data for the ingest report, not failures.
    """
    cx, cy, w, h = ann.bbox_norm
    components = (cx, cy, w, h)
    if any(not _finite01(c) for c in components):
        return ValidationResult(None, "invalid_bbox", f"component outside [0,1]: {components}")
    if w <= 0.0 or h <= 0.0:
        return ValidationResult(None, "invalid_bbox", f"non-positive size: w={w}, h={h}")
    x1 = (cx - w / 2.0) * img_w
    y1 = (cy - h / 2.0) * img_h
    x2 = (cx + w / 2.0) * img_w
    y2 = (cy + h / 2.0) * img_h
    cx1, cy1 = max(x1, 0.0), max(y1, 0.0)
    cx2, cy2 = min(x2, float(img_w)), min(y2, float(img_h))
    if cx2 <= cx1 or cy2 <= cy1:
        return ValidationResult(None, "invalid_bbox", "box does not intersect image")
    box = BBox(cx1, cy1, cx2, cy2)
    if (cx1, cy1, cx2, cy2) != (x1, y1, x2, y2):
        return ValidationResult(box, "clamped", "box extended past image bounds")
    return ValidationResult(box, None)


def _finite01(c: float) -> bool:
    return c == c and 0.0 <= c <= 1.0  # NaN-safe


@dataclass(frozen=True)
class SplitAssignment:
    train: List[HarmonizedRecord]
    val: List[HarmonizedRecord]
    test: List[HarmonizedRecord]
    seed: int


def split_indices(n: int, seed: int) -> Tuple[List[int], List[int], List[int]]:
    """Shuffled index partition with sizes floor(0.8 N), floor(0.1 N), rest.

    Sizes use integer arithmetic so every N lands exactly on the
    floor/remainder rule.
    """
    if n == 0:
        raise EmptyDataset("cannot split zero records")
    order = shuffled(list(range(n)), seed)
    n_train = (n * 8) // 10
    n_val = n // 10
    return (
        order[:n_train],
        order[n_train : n_train + n_val],
        order[n_train + n_val :],
    )


def split(records: Sequence[HarmonizedRecord], seed: int) -> SplitAssignment:
    """Deterministic shuffle + 80/10/10 contiguous slicing."""
    idx_train, idx_val, idx_test = split_indices(len(records), seed)
    return SplitAssignment(
        train=[records[i] for i in idx_train],
        val=[records[i] for i in idx_val],
        test=[records[i] for i in idx_test],
        seed=seed,
    )


@dataclass
class IngestReport:
    """Bookkeeping for one harmonization run."""

    per_source: Counter = field(default_factory=Counter)
    per_class: Counter = field(default_factory=Counter)
    warnings: Counter = field(default_factory=Counter)
    unreadable_sources: List[Tuple[str, str]] = field(default_factory=list)
    n_records: int = 0

    def to_dict(self) -> Dict:
        return {
            "n_records": self.n_records,
            "per_source": dict(self.per_source),
            "per_class": dict(self.per_class),
            "warnings": dict(self.warnings),
            "unreadable_sources": [
                {"source": s, "error": e} for s, e in self.unreadable_sources
            ],
        }


def harmonize(sources: Sequence[str]) -> Tuple[List[HarmonizedRecord], IngestReport]:
    """Ingest every source, harmonize labels, validate boxes, de-duplicate.

    An unreadable source is recorded in the report and skipped; it never
    aborts the other sources. Duplicates are detected by image content
    hash + box + label, so the same sample aggregated twice across
    sources collapses to one record.
    """
    report = IngestReport()
    records: List[HarmonizedRecord] = []
    seen: set = set()
    for source in sources:
        root = Path(source)
        try:
            annotations = list(_load_source(root))
        except UnreadableSource as exc:
            report.unreadable_sources.append((str(source), str(exc)))
            continue
        for ann, img_w, img_h, content_hash in annotations:
            try:
                label = map_label(ann.raw_label)
            except UnknownLabel:
                report.warnings["unknown_label"] += 1
                continue
            result = validate_bbox(ann, img_w, img_h)
            if result.warning:
                report.warnings[result.warning] += 1
            if not result.valid:
                continue
            key = (content_hash, result.bbox.as_tuple(), label.id)
            if key in seen:
                report.warnings["duplicate_removed"] += 1
                continue
            seen.add(key)
            records.append(
                HarmonizedRecord(
                    image_path=ann.image_path,
                    bbox=result.bbox,
                    label=label,
                    source_name=ann.source_name,
                )
            )
            report.per_source[ann.source_name] += 1
            report.per_class[label.name] += 1
    report.n_records = len(records)
    return records, report


def _load_source(root: Path):
    """Yield (annotation, img_w, img_h, content_hash) for one source."""
    if not root.is_dir():
        raise UnreadableSource(f"{root} is not a directory")
    classes_file = root / "classes.txt"
    if not classes_file.is_file():
        raise UnreadableSource(f"{root} lacks classes.txt annotation index")
    class_names = [line.strip() for line in classes_file.read_text().splitlines() if line.strip()]
    labels_dir = root / "labels"
    images_dir = root / "images"
    if not labels_dir.is_dir() or not images_dir.is_dir():
        raise UnreadableSource(f"{root} lacks labels/ or images/ directory")
    source_name = root.name
    for label_file in sorted(labels_dir.glob("*.txt")):
        image_path = _find_image(images_dir, label_file.stem)
        if image_path is None:
            continue  # orphan annotation; nothing to crop from
        content = image_path.read_bytes()
        content_hash = hashlib.sha256(content).hexdigest()
        with Image.open(image_path) as im:
            img_w, img_h = im.size
        for line in label_file.read_text().splitlines():
            parts = line.split()
            if not parts:
                continue
            idx = int(parts[0])
            raw_label = class_names[idx] if 0 <= idx < len(class_names) else f"<class {idx}>"
            bbox_norm = tuple(float(p) for p in parts[1:5])
            yield (
                SourceAnnotation(
                    image_path=str(image_path),
                    raw_label=raw_label,
                    bbox_norm=bbox_norm,
                    source_name=source_name,
                ),
                img_w,
                img_h,
                content_hash,
            )


def _find_image(images_dir: Path, stem: str) -> Optional[Path]:
    for ext in IMAGE_EXTENSIONS:
        candidate = images_dir / f"{stem}{ext}"
        if candidate.is_file():
            return candidate
    return None


# --- manifest serialization ---------------------------------------------------


def record_to_dict(record: HarmonizedRecord) -> Dict:
    return {
        "image_path": record.image_path,
        "x1": record.bbox.x1,
        "y1": record.bbox.y1,
        "x2": record.bbox.x2,
        "y2": record.bbox.y2,
        "label_id": record.label.id,
        "label_name": record.label.name,
        "source": record.source_name,
    }


def record_from_dict(row: Dict) -> HarmonizedRecord:
    return HarmonizedRecord(
        image_path=row["image_path"],
        bbox=BBox(float(row["x1"]), float(row["y1"]), float(row["x2"]), float(row["y2"])),
        label=ClassLabel.from_id(int(row["label_id"])),
        source_name=row.get("source", ""),
    )


def write_manifest(records: Iterable[HarmonizedRecord], path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_dict(record), sort_keys=True) + "\n")
            n += 1
    return n


def read_manifest(path) -> List[HarmonizedRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(record_from_dict(json.loads(line)))
    return records
