"""Hyperparameter sweep harness: expand a grid over GenConfig fields, run
repeated generate -> detect -> evaluate trials, aggregate mean/std reports.

The detector is an external command template, run as a child process. It
is expected to consume the generated dataset (training in a real setup),
produce detections for the fixed test image set, and write them to
{detections_out} in the JSONL interchange format. Required placeholders:

    {dataset_dir}     path of the freshly generated dataset
    {detections_out}  path the detector must write

Optional placeholders: {test_gt} (test annotation dir), {seed} (the
trial's derived seed), {python} (the current interpreter). The built-in
echo/noisy oracles from the oracle module use all of them.

Each trial (config, sample_index) derives its generation seed by hashing
the canonical config JSON with the sample index, so a trial regenerates
the identical dataset no matter the sweep order or a resume. Completed
trials persist as per-trial JSON files and are skipped on re-run; failed
trials are recorded and the sweep continues.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import shlex
import shutil
import string
import subprocess
import sys
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Callable, Optional

from .assets import AssetLibrary, load_asset_library
from .dataset import generate_dataset
from .detections import parse_detections
from .errors import (ConfigError, DataError, DetectorFailure, GenerationFailure,
                     UnknownParameter)
from .metrics import EvalConfig, evaluate_detections, f1 as f1_of, load_ground_truth
from .scene import GenConfig

TABLE_COLUMNS = ("resolution", "cam_poses", "n_scenes", "n_images", "n_distractors")
REQUIRED_PLACEHOLDERS = ("dataset_dir", "detections_out")
KNOWN_PLACEHOLDERS = ("dataset_dir", "detections_out", "test_gt", "seed", "python")


@dataclass(frozen=True)
class SweepConfig:
    base: GenConfig
    grid: dict[str, list] = field(default_factory=dict)
    n_samples: int = 10
    detector: str = ""
    eval: EvalConfig = field(default_factory=EvalConfig)
    test_gt: str = ""
    assets: str = "demo"
    keep_datasets: bool = False

    def validate(self) -> None:
        known = set(GenConfig.field_names())
        for key in self.grid:
            if key not in known:
                raise UnknownParameter(f"grid key {key!r} is not a GenConfig field")
            if not isinstance(self.grid[key], list) or not self.grid[key]:
                raise ConfigError(f"grid entry {key!r} must be a non-empty list")
        if self.n_samples < 1:
            raise ConfigError(f"n_samples must be >= 1, got {self.n_samples}")
        if not self.detector:
            raise ConfigError("detector command template is empty")
        names = {name for _, name, _, _ in string.Formatter().parse(self.detector)
                 if name is not None}
        for required in REQUIRED_PLACEHOLDERS:
            if required not in names:
                raise ConfigError(
                    f"detector template is missing the {{{required}}} placeholder")
        unknown = names - set(KNOWN_PLACEHOLDERS)
        if unknown:
            raise ConfigError(f"detector template has unknown placeholders {sorted(unknown)}")
        if not self.test_gt:
            raise ConfigError("test_gt annotation directory is required")
        self.eval.validate()

    @classmethod
    def from_dict(cls, raw: dict) -> "SweepConfig":
        if not isinstance(raw, dict):
            raise ConfigError("sweep config must be a JSON object")
        known = {"base", "grid", "n_samples", "detector", "eval", "test_gt",
                 "assets", "keep_datasets"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown sweep config keys {sorted(unknown)}")
        base = GenConfig.from_dict(raw.get("base", {}))
        eval_raw = raw.get("eval", {})
        if not isinstance(eval_raw, dict):
            raise ConfigError("sweep 'eval' must be an object")
        unknown_eval = set(eval_raw) - {"conf_threshold", "iou_threshold"}
        if unknown_eval:
            raise ConfigError(f"unknown eval keys {sorted(unknown_eval)}")
        cfg = cls(
            base=base,
            grid=dict(raw.get("grid", {})),
            n_samples=int(raw.get("n_samples", 10)),
            detector=str(raw.get("detector", "")),
            eval=EvalConfig(
                conf_threshold=float(eval_raw.get("conf_threshold", 0.9)),
                iou_threshold=float(eval_raw.get("iou_threshold", 0.5)),
            ),
            test_gt=str(raw.get("test_gt", "")),
            assets=str(raw.get("assets", "demo")),
            keep_datasets=bool(raw.get("keep_datasets", False)),
        )
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "SweepConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"sweep config line {exc.lineno}: {exc.msg}") from None
        return cls.from_dict(raw)


def expand_grid(sweep: SweepConfig) -> list[GenConfig]:
    """Cartesian product of grid values over the base config, keys in
    lexicographic order, values in listed order."""
    sweep.validate()
    keys = sorted(sweep.grid)
    if not keys:
        return [sweep.base]
    configs = []
    for combo in product(*(sweep.grid[key] for key in keys)):
        raw = sweep.base.to_dict()
        raw.pop("n_images", None)
        raw.update(dict(zip(keys, combo)))
        configs.append(GenConfig.from_dict(raw))
    return configs


def trial_seed(config: GenConfig, sample_index: int) -> int:
    """Seed derived from (config, sample_index): stable across sweep order."""
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(f"{canonical}|{sample_index}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class TrialResult:
    sample_index: int
    seed: int
    status: str                       # "ok" | "failed"
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None
    generation_time: float = 0.0
    error: str = ""
    detector_exit_code: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "sample_index": self.sample_index, "seed": self.seed, "status": self.status,
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "generation_time": self.generation_time, "error": self.error,
            "detector_exit_code": self.detector_exit_code,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "TrialResult":
        return cls(sample_index=raw["sample_index"], seed=raw["seed"], status=raw["status"],
                   precision=raw.get("precision"), recall=raw.get("recall"),
                   f1=raw.get("f1"), generation_time=raw.get("generation_time", 0.0),
                   error=raw.get("error", ""),
                   detector_exit_code=raw.get("detector_exit_code"))


def _load_assets(spec: str, config: GenConfig) -> AssetLibrary:
    if spec == "demo":
        from .demo import demo_library
        return demo_library(target_scale=config.target_scale,
                            distractor_scale=config.distractor_scale)
    return load_asset_library(Path(spec), target_scale=config.target_scale,
                              distractor_scale=config.distractor_scale)


def run_trial(config: GenConfig, sample_index: int, detector: str, eval_config: EvalConfig,
              test_gt: Path, assets: AssetLibrary, trial_dir: Path,
              keep_dataset: bool = True) -> TrialResult:
    """One generate -> detect -> evaluate cycle.

    Raises DetectorFailure / GenerationFailure / DataError; the sweep loop
    converts those into recorded failed trials.
    """
    trial_dir = Path(trial_dir)
    trial_dir.mkdir(parents=True, exist_ok=True)
    dataset_dir = trial_dir / "dataset"
    detections_out = trial_dir / "detections.jsonl"
    if dataset_dir.exists():
        shutil.rmtree(dataset_dir)

    seed = trial_seed(config, sample_index)
    manifest = generate_dataset(config.with_seed(seed), assets, dataset_dir)

    command = detector.format(
        dataset_dir=str(dataset_dir),
        detections_out=str(detections_out),
        test_gt=str(test_gt),
        seed=str(seed),
        python=sys.executable,
    )
    try:
        proc = subprocess.run(shlex.split(command), capture_output=True, text=True)
    except OSError as exc:
        raise DetectorFailure(f"cannot launch detector: {exc}") from None
    finally:
        if not keep_dataset:
            shutil.rmtree(dataset_dir, ignore_errors=True)
    if proc.returncode != 0:
        tail = proc.stderr.strip().splitlines()[-3:]
        raise DetectorFailure(
            f"detector exited {proc.returncode}: {' / '.join(tail) or 'no stderr'}",
            exit_code=proc.returncode)
    if not detections_out.is_file():
        raise DetectorFailure(f"detector wrote no output file {detections_out}")
    try:
        detections = parse_detections(detections_out.read_text(encoding="utf-8"))
    except DataError as exc:
        raise DetectorFailure(f"detector output malformed: {exc}") from None

    report = evaluate_detections(load_ground_truth(test_gt), detections, eval_config)
    return TrialResult(
        sample_index=sample_index, seed=seed, status="ok",
        precision=report.precision, recall=report.recall,
        f1=f1_of(report.precision, report.recall),
        generation_time=manifest.generation_time_seconds,
    )


@dataclass(frozen=True)
class Aggregate:
    mean: Optional[float]
    std: Optional[float]
    n: int
    n_undefined: int = 0

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std, "n": self.n,
                "n_undefined": self.n_undefined}


def aggregate(samples: list[Optional[float]]) -> Aggregate:
    """Mean and sample standard deviation (n-1 denominator; 0 when n = 1).

    None entries (undefined metrics) are excluded from the moments and
    counted separately rather than silently treated as 0.
    """
    defined = [v for v in samples if v is not None]
    n_undefined = len(samples) - len(defined)
    if not defined:
        return Aggregate(mean=None, std=None, n=0, n_undefined=n_undefined)
    n = len(defined)
    mean = sum(defined) / n
    if n == 1:
        return Aggregate(mean=mean, std=0.0, n=1, n_undefined=n_undefined)
    var = sum((v - mean) ** 2 for v in defined) / (n - 1)
    return Aggregate(mean=mean, std=var ** 0.5, n=n, n_undefined=n_undefined)


@dataclass(frozen=True)
class RunReport:
    combo_index: int
    config: GenConfig
    trials: tuple[TrialResult, ...]
    precision: Aggregate
    recall: Aggregate
    f1: Aggregate
    generation_time: Aggregate
    n_failed: int

    @property
    def status(self) -> str:
        if self.n_failed == len(self.trials):
            return "failed"
        return "ok" if self.n_failed == 0 else "partial"

    def to_dict(self) -> dict:
        return {
            "combo_index": self.combo_index,
            "config": self.config.to_dict(),
            "status": self.status,
            "n_failed": self.n_failed,
            "precision": self.precision.to_dict(),
            "recall": self.recall.to_dict(),
            "f1": self.f1.to_dict(),
            "generation_time": self.generation_time.to_dict(),
            "trials": [t.to_dict() for t in self.trials],
        }


def build_run_report(combo_index: int, config: GenConfig,
                     trials: list[TrialResult]) -> RunReport:
    ok = [t for t in trials if t.status == "ok"]
    return RunReport(
        combo_index=combo_index, config=config, trials=tuple(trials),
        precision=aggregate([t.precision for t in ok]),
        recall=aggregate([t.recall for t in ok]),
        f1=aggregate([t.f1 for t in ok]),
        generation_time=aggregate([t.generation_time for t in ok]),
        n_failed=len(trials) - len(ok),
    )


def _fmt_pct(value: Optional[float]) -> str:
    return "" if value is None else f"{100.0 * value:.2f}"


def _fmt_sec(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.2f}"


def summary_rows(reports: list[RunReport], extra_keys: list[str]) -> list[dict]:
    """One row per combination with the standard summary columns, ranked by
    mean F1 (descending; ties and all-failed combos keep config order)."""
    def rank_key(report: RunReport):
        f1_mean = report.f1.mean
        return (-(f1_mean if f1_mean is not None else float("-inf")), report.combo_index)

    rows = []
    for rank, report in enumerate(sorted(reports, key=rank_key), start=1):
        cfg = report.config
        row = {
            "rank": rank,
            "combo": report.combo_index,
            "status": report.status,
            "resolution": f"{cfg.resolution[0]}x{cfg.resolution[1]}",
            "cam_poses": cfg.cam_poses,
            "n_scenes": cfg.n_scenes,
            "n_images": cfg.n_images,
            "n_distractors": cfg.n_distractors,
        }
        for key in extra_keys:
            row[f"param_{key}"] = json.dumps(getattr(cfg, key))
        row.update({
            "generation_time": _fmt_sec(report.generation_time.mean),
            "n_samples": len(report.trials),
            "precision_avg": _fmt_pct(report.precision.mean),
            "precision_std": _fmt_pct(report.precision.std),
            "recall_avg": _fmt_pct(report.recall.mean),
            "recall_std": _fmt_pct(report.recall.std),
            "f1_avg": _fmt_pct(report.f1.mean),
            "f1_std": _fmt_pct(report.f1.std),
        })
        rows.append(row)
    return rows


def summary_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def sweep_run(sweep: SweepConfig, out_dir: Path,
              progress: Optional[Callable[[str], None]] = None) -> dict:
    """Run (or resume) every trial of every grid combination.

    Returns the summary dict that is also persisted as summary.json; the
    per-combination reports land in combo_*/report.json and the ranked
    CSV in summary.csv.
    """
    sweep.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    test_gt = Path(sweep.test_gt)
    configs = expand_grid(sweep)
    extra_keys = sorted(set(sweep.grid) - set(TABLE_COLUMNS) - {"resolution"})

    reports: list[RunReport] = []
    for combo_index, config in enumerate(configs):
        combo_dir = out_dir / f"combo_{combo_index:03d}"
        combo_dir.mkdir(exist_ok=True)
        assets = _load_assets(sweep.assets, config)
        trials: list[TrialResult] = []
        for sample_index in range(sweep.n_samples):
            trial_path = combo_dir / f"trial_{sample_index:02d}.json"
            if trial_path.is_file():
                trials.append(TrialResult.from_dict(
                    json.loads(trial_path.read_text(encoding="utf-8"))))
                continue
            try:
                trial = run_trial(config, sample_index, sweep.detector, sweep.eval,
                                  test_gt, assets, combo_dir / f"trial_{sample_index:02d}",
                                  keep_dataset=sweep.keep_datasets)
            except (DetectorFailure, GenerationFailure, DataError) as exc:
                trial = TrialResult(
                    sample_index=sample_index, seed=trial_seed(config, sample_index),
                    status="failed", error=f"{type(exc).__name__}: {exc}",
                    detector_exit_code=getattr(exc, "exit_code", None),
                )
            trial_path.write_text(json.dumps(trial.to_dict(), indent=2) + "\n",
                                  encoding="utf-8")
            trials.append(trial)
            if progress is not None:
                label = (f"combo {combo_index + 1}/{len(configs)} "
                         f"sample {sample_index + 1}/{sweep.n_samples}: {trial.status}")
                if trial.status == "ok" and trial.f1 is not None:
                    label += f" f1={trial.f1:.4f}"
                progress(label)

        report = build_run_report(combo_index, config, trials)
        (combo_dir / "report.json").write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        reports.append(report)

    rows = summary_rows(reports, extra_keys)
    ranked = [row["combo"] for row in rows]
    summary = {
        "n_combinations": len(configs),
        "n_samples": sweep.n_samples,
        "ranking": ranked,
        "best": ranked[0] if ranked else None,
        "worst": ranked[-1] if ranked else None,
        "rows": rows,
        "reports": [r.to_dict() for r in reports],
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out_dir / "summary.csv").write_text(summary_csv(rows), encoding="utf-8")
    return summary


__all__ = [
    "SweepConfig", "TrialResult", "Aggregate", "RunReport",
    "expand_grid", "trial_seed", "run_trial", "aggregate", "build_run_report",
    "summary_rows", "summary_csv", "sweep_run",
    "TABLE_COLUMNS", "REQUIRED_PLACEHOLDERS", "KNOWN_PLACEHOLDERS",
]
