"""Detector output interchange: one JSON object per line.

Each line looks like

    {"image": "img_000003", "class": "target",
     "bbox": [119, 64, 208, 151], "score": 0.97}

with the bbox in the same half-open pixel convention used internally
(NOT the 1-based inclusive VOC convention). Parse errors carry the
1-based line number so a detector author can find the bad record.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .boxes import BBox
from .errors import MalformedDetections


@dataclass(frozen=True)
class Detection:
    image: str          # image stem, no directory, no extension
    class_name: str
    bbox: BBox
    score: float


def _fail(line_no: int, msg: str) -> None:
    raise MalformedDetections(f"line {line_no}: {msg}")


def parse_detections(data: str) -> list[Detection]:
    detections: list[Detection] = []
    for line_no, raw in enumerate(data.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            _fail(line_no, f"invalid JSON ({exc.msg})")
        if not isinstance(record, dict):
            _fail(line_no, "record is not a JSON object")
        for key in ("image", "class", "bbox", "score"):
            if key not in record:
                _fail(line_no, f"missing key {key!r}")
        unknown = set(record) - {"image", "class", "bbox", "score"}
        if unknown:
            _fail(line_no, f"unknown keys {sorted(unknown)}")
        image = record["image"]
        class_name = record["class"]
        if not isinstance(image, str) or not image:
            _fail(line_no, "image must be a non-empty string")
        if not isinstance(class_name, str) or not class_name:
            _fail(line_no, "class must be a non-empty string")
        bbox = record["bbox"]
        if (not isinstance(bbox, list) or len(bbox) != 4
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox)):
            _fail(line_no, "bbox must be a list of four numbers")
        xmin, ymin, xmax, ymax = bbox
        if not all(math.isfinite(v) for v in (xmin, ymin, xmax, ymax)):
            _fail(line_no, "bbox coordinates must be finite")
        if xmin >= xmax or ymin >= ymax:
            _fail(line_no, f"degenerate bbox {bbox}")
        score = record["score"]
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            _fail(line_no, "score must be a number")
        if not (math.isfinite(score) and 0.0 <= score <= 1.0):
            _fail(line_no, f"score {score} outside [0, 1]")
        detections.append(Detection(image=image, class_name=class_name,
                                    bbox=BBox(xmin, ymin, xmax, ymax), score=float(score)))
    return detections


def load_detections(path) -> list[Detection]:
    with open(path, encoding="utf-8") as fh:
        return parse_detections(fh.read())


def format_detections(detections: list[Detection]) -> str:
    lines = []
    for det in detections:
        record = {
            "image": det.image,
            "class": det.class_name,
            "bbox": list(det.bbox.as_tuple()),
            "score": det.score,
        }
        lines.append(json.dumps(record, separators=(", ", ": ")))
    return "".join(line + "\n" for line in lines)


def save_detections(detections: list[Detection], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_detections(detections))
