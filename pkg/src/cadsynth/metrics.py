"""Detection metrics: IoU, greedy matching, P/R/F1, PR curves, AP.

Matching follows the usual single-class protocol: detections are gated by
a confidence threshold (strictly greater), processed in descending score
order (ties keep input order), and each claims the unmatched ground-truth
box of highest IoU provided that IoU strictly exceeds the IoU threshold.
Unclaimed accepted detections are false positives; unclaimed ground truth
are false negatives.

Precision and recall are undefined (None) when their denominators are
zero -- substituting 0 or 1 silently would distort aggregation across
sweep samples, so callers must handle the flag.

PR curves sweep the acceptance cutoff across every distinct score, with
the matching computed once over the full descending ordering and tallies
prefix-accumulated. AP integrates the curve with all-point interpolation
(max precision at recall >= r), the post-2010 VOC convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .boxes import BBox
from .detections import Detection
from .errors import MalformedAnnotation, MissingImageAnnotation
from .voc import Annotation, parse_voc_xml


@dataclass(frozen=True)
class EvalConfig:
    conf_threshold: float = 0.9
    iou_threshold: float = 0.5

    def validate(self) -> None:
        if not 0.0 <= self.conf_threshold <= 1.0:
            raise ValueError(f"conf_threshold {self.conf_threshold} outside [0, 1]")
        if not 0.0 <= self.iou_threshold <= 1.0:
            raise ValueError(f"iou_threshold {self.iou_threshold} outside [0, 1]")


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two half-open boxes.

    Intersection and union are each computed exactly before the single
    final division, so integer boxes give the correctly rounded float.
    """
    ix = min(a.xmax, b.xmax) - max(a.xmin, b.xmin)
    iy = min(a.ymax, b.ymax) - max(a.ymin, b.ymin)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union


@dataclass(frozen=True)
class DetVerdict:
    """Outcome for one input detection: 'tp', 'fp', or 'rejected' (below conf)."""

    kind: str
    gt_index: Optional[int] = None


@dataclass(frozen=True)
class MatchResult:
    tp: int
    fp: int
    fn: int
    verdicts: tuple[DetVerdict, ...] = field(default_factory=tuple)


def match_detections(detections: Sequence[Detection], gts: Sequence[BBox],
                     config: EvalConfig) -> MatchResult:
    """Match one image's detections against its ground-truth boxes."""
    config.validate()
    order = [i for i in range(len(detections)) if detections[i].score > config.conf_threshold]
    order.sort(key=lambda i: -detections[i].score)  # stable: ties keep input order

    matched = [False] * len(gts)
    verdicts: list[DetVerdict] = [DetVerdict("rejected")] * len(detections)
    tp = 0
    for det_index in order:
        best_iou = config.iou_threshold
        best_gt = -1
        for gt_index, gt in enumerate(gts):
            if matched[gt_index]:
                continue
            value = iou(detections[det_index].bbox, gt)
            if value > best_iou:  # strict gate; equal IoU keeps the lower gt index
                best_iou = value
                best_gt = gt_index
        if best_gt >= 0:
            matched[best_gt] = True
            tp += 1
            verdicts[det_index] = DetVerdict("tp", best_gt)
        else:
            verdicts[det_index] = DetVerdict("fp")
    fp = len(order) - tp
    fn = len(gts) - tp
    return MatchResult(tp=tp, fp=fp, fn=fn, verdicts=tuple(verdicts))


def precision(result: MatchResult) -> Optional[float]:
    denom = result.tp + result.fp
    return None if denom == 0 else result.tp / denom


def recall(result: MatchResult) -> Optional[float]:
    denom = result.tp + result.fn
    return None if denom == 0 else result.tp / denom


def f1(p: Optional[float], r: Optional[float]) -> Optional[float]:
    if p is None or r is None:
        return None
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


@dataclass(frozen=True)
class PRCurve:
    """(recall, precision) step points at each distinct score cutoff, descending."""

    points: tuple[tuple[float, float], ...]
    thresholds: tuple[float, ...]
    n_gt: int


def pr_curve(detections: Sequence[Detection], gts_by_image: dict[str, list[BBox]],
             iou_threshold: float) -> PRCurve:
    n_gt = sum(len(v) for v in gts_by_image.values())
    if n_gt == 0:
        return PRCurve(points=(), thresholds=(), n_gt=0)

    order = sorted(range(len(detections)), key=lambda i: -detections[i].score)
    matched = {image: [False] * len(boxes) for image, boxes in gts_by_image.items()}
    is_tp: list[bool] = []
    for det_index in order:
        det = detections[det_index]
        gts = gts_by_image.get(det.image, [])
        flags = matched.get(det.image, [])
        best_iou = iou_threshold
        best_gt = -1
        for gt_index, gt in enumerate(gts):
            if flags[gt_index]:
                continue
            value = iou(det.bbox, gt)
            if value > best_iou:
                best_iou = value
                best_gt = gt_index
        if best_gt >= 0:
            flags[best_gt] = True
            is_tp.append(True)
        else:
            is_tp.append(False)

    points: list[tuple[float, float]] = []
    thresholds: list[float] = []
    cum_tp = 0
    for rank, det_index in enumerate(order):
        cum_tp += is_tp[rank]
        score = detections[det_index].score
        next_score = detections[order[rank + 1]].score if rank + 1 < len(order) else None
        if score != next_score:  # close the prefix at each distinct score
            points.append((cum_tp / n_gt, cum_tp / (rank + 1)))
            thresholds.append(score)
    return PRCurve(points=tuple(points), thresholds=tuple(thresholds), n_gt=n_gt)


def average_precision(curve: PRCurve) -> float:
    if not curve.points:
        return 0.0
    n = len(curve.points)
    best_after = [0.0] * n
    running = 0.0
    for i in range(n - 1, -1, -1):
        running = max(running, curve.points[i][1])
        best_after[i] = running
    total = 0.0
    prev_recall = 0.0
    for i in range(n):
        r = curve.points[i][0]
        total += (r - prev_recall) * best_after[i]
        prev_recall = r
    return total


@dataclass(frozen=True)
class ClassReport:
    class_name: str
    tp: int
    fp: int
    fn: int
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    ap: float
    n_gt: int
    n_detections: int
    curve: PRCurve

    def to_dict(self) -> dict:
        return {
            "class": self.class_name,
            "tp": self.tp, "fp": self.fp, "fn": self.fn,
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "ap": self.ap, "n_gt": self.n_gt, "n_detections": self.n_detections,
        }


@dataclass(frozen=True)
class EvalReport:
    classes: tuple[ClassReport, ...]
    tp: int
    fp: int
    fn: int
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    mean_ap: float
    n_images: int

    def to_dict(self) -> dict:
        return {
            "n_images": self.n_images,
            "tp": self.tp, "fp": self.fp, "fn": self.fn,
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "mean_ap": self.mean_ap,
            "classes": [c.to_dict() for c in self.classes],
        }


def find_annotation_dir(gt_dir: Path) -> Path:
    gt_dir = Path(gt_dir)
    sub = gt_dir / "annotations"
    return sub if sub.is_dir() else gt_dir


def load_ground_truth(gt_dir: Path) -> dict[str, Annotation]:
    """Map image stem -> annotation for every XML under gt_dir (or gt_dir/annotations)."""
    ann_dir = find_annotation_dir(gt_dir)
    files = sorted(ann_dir.glob("*.xml"))
    if not files:
        raise MalformedAnnotation(f"no annotation XML files found under {ann_dir}")
    annotations: dict[str, Annotation] = {}
    for path in files:
        try:
            annotations[path.stem] = parse_voc_xml(path.read_bytes())
        except MalformedAnnotation as exc:
            raise MalformedAnnotation(f"{path.name}: {exc}") from None
    return annotations


def evaluate_detections(annotations: dict[str, Annotation],
                        detections: Sequence[Detection],
                        config: EvalConfig) -> EvalReport:
    config.validate()
    for det in detections:
        if det.image not in annotations:
            raise MissingImageAnnotation(
                f"detections reference image {det.image!r} with no annotation")

    class_names = sorted({obj.name for ann in annotations.values() for obj in ann.objects}
                         | {det.class_name for det in detections})
    reports = []
    total_tp = total_fp = total_fn = 0
    for class_name in class_names:
        gts_by_image = {
            stem: [obj.bbox for obj in ann.objects if obj.name == class_name]
            for stem, ann in annotations.items()
        }
        dets_by_image: dict[str, list[Detection]] = {stem: [] for stem in annotations}
        class_dets = [d for d in detections if d.class_name == class_name]
        for det in class_dets:
            dets_by_image[det.image].append(det)

        tp = fp = fn = 0
        for stem in annotations:
            result = match_detections(dets_by_image[stem], gts_by_image[stem], config)
            tp += result.tp
            fp += result.fp
            fn += result.fn
        curve = pr_curve(class_dets, gts_by_image, config.iou_threshold)
        result = MatchResult(tp=tp, fp=fp, fn=fn)
        p, r = precision(result), recall(result)
        reports.append(ClassReport(
            class_name=class_name, tp=tp, fp=fp, fn=fn,
            precision=p, recall=r, f1=f1(p, r),
            ap=average_precision(curve),
            n_gt=sum(len(v) for v in gts_by_image.values()),
            n_detections=len(class_dets), curve=curve,
        ))
        total_tp += tp
        total_fp += fp
        total_fn += fn

    overall = MatchResult(tp=total_tp, fp=total_fp, fn=total_fn)
    p, r = precision(overall), recall(overall)
    with_gt = [c.ap for c in reports if c.n_gt > 0]
    mean_ap = sum(with_gt) / len(with_gt) if with_gt else 0.0
    return EvalReport(classes=tuple(reports), tp=total_tp, fp=total_fp, fn=total_fn,
                      precision=p, recall=r, f1=f1(p, r), mean_ap=mean_ap,
                      n_images=len(annotations))


def evaluate_dataset(gt_dir: Path, detections: Sequence[Detection],
                     config: EvalConfig) -> EvalReport:
    return evaluate_detections(load_ground_truth(gt_dir), detections, config)
