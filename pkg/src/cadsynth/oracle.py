"""Built-in reference detectors for exercising the sweep harness.

Both read the *test* ground-truth annotations and emit detections in the
JSONL interchange format, standing in for a trained model so the
generate->detect->evaluate loop can be tested end to end:

  echo   re-emits every ground-truth box with score 1.0, so evaluation
         against the same annotations scores perfectly.
  noisy  drops each box independently with probability drop_rate and
         shifts the kept ones by a uniform integer jitter, modeling a
         detector with known recall and (at jitter 0) perfect precision.

They run as subprocesses through `cadsynth detect-oracle`, same as any
external detector command.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .detections import Detection
from .errors import ConfigError
from .metrics import load_ground_truth


def echo_detections(test_gt: Path) -> list[Detection]:
    annotations = load_ground_truth(Path(test_gt))
    detections = []
    for stem in sorted(annotations):
        for obj in annotations[stem].objects:
            detections.append(Detection(image=stem, class_name=obj.name,
                                        bbox=obj.bbox, score=1.0))
    return detections


def noisy_detections(test_gt: Path, drop_rate: float, jitter: int,
                     seed: int) -> list[Detection]:
    if not 0.0 <= drop_rate < 1.0:
        raise ConfigError(f"drop_rate {drop_rate} outside [0, 1)")
    if jitter < 0:
        raise ConfigError(f"jitter {jitter} must be >= 0")
    annotations = load_ground_truth(Path(test_gt))
    rng = np.random.default_rng(seed & ((1 << 64) - 1))
    detections = []
    for stem in sorted(annotations):
        ann = annotations[stem]
        for obj in ann.objects:
            if rng.random() < drop_rate:
                continue
            bbox = obj.bbox
            if jitter > 0:
                dx = int(rng.integers(-jitter, jitter + 1))
                dy = int(rng.integers(-jitter, jitter + 1))
                xmin = min(max(bbox.xmin + dx, 0), ann.width - 1)
                ymin = min(max(bbox.ymin + dy, 0), ann.height - 1)
                xmax = max(min(bbox.xmax + dx, ann.width), xmin + 1)
                ymax = max(min(bbox.ymax + dy, ann.height), ymin + 1)
                bbox = type(bbox)(xmin, ymin, xmax, ymax)
            detections.append(Detection(image=stem, class_name=obj.name,
                                        bbox=bbox, score=1.0))
    return detections


def oracle_command(mode: str, drop_rate: float = 0.3, jitter: int = 0) -> str:
    """Detector command template for a built-in oracle.

    Contains the contractual {dataset_dir} and {detections_out} placeholders
    plus the oracle extras {test_gt} and {seed}.
    """
    if mode == "echo":
        return ("{python} -m cadsynth detect-oracle --mode echo "
                "--dataset {dataset_dir} --test-gt {test_gt} --out {detections_out}")
    if mode == "noisy":
        return ("{python} -m cadsynth detect-oracle --mode noisy "
                f"--drop-rate {drop_rate} --jitter {jitter} "
                "--seed {seed} --dataset {dataset_dir} --test-gt {test_gt} "
                "--out {detections_out}")
    raise ConfigError(f"unknown oracle mode {mode!r}")
