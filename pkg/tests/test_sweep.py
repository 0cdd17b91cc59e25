import json
import statistics

import pytest

from cadsynth.errors import (ConfigError, DetectorFailure, UnknownParameter)
from cadsynth.metrics import EvalConfig
from cadsynth.oracle import oracle_command
from cadsynth.scene import GenConfig
from cadsynth.sweep import (SweepConfig, aggregate, expand_grid, run_trial,
                            sweep_run, trial_seed)

SMALL = dict(resolution=(96, 72), n_scenes=1, cam_poses=2, n_distractors=3)


@pytest.fixture(scope="module")
def test_gt(small_dataset):
    out, config, manifest = small_dataset
    return out / "annotations"


def _sweep(test_gt, **overrides) -> SweepConfig:
    kwargs = dict(base=GenConfig(**SMALL), grid={}, n_samples=2,
                  detector=oracle_command("echo"), eval=EvalConfig(),
                  test_gt=str(test_gt), assets="demo")
    kwargs.update(overrides)
    return SweepConfig(**kwargs)


# ---------------------------------------------------------------------------
# grid expansion and seeds


def test_expand_grid_order(test_gt):
    sweep = _sweep(test_gt, grid={"n_scenes": [1, 2], "cam_poses": [3, 1]})
    configs = expand_grid(sweep)
    # keys sorted lexicographically: cam_poses varies slowest
    assert [(c.cam_poses, c.n_scenes) for c in configs] == [(3, 1), (3, 2), (1, 1), (1, 2)]
    for c in configs:
        assert c.n_distractors == SMALL["n_distractors"]


def test_expand_grid_empty(test_gt):
    sweep = _sweep(test_gt)
    assert expand_grid(sweep) == [sweep.base]


def test_grid_unknown_key(test_gt):
    with pytest.raises(UnknownParameter, match="n_secnes"):
        _sweep(test_gt, grid={"n_secnes": [1]}).validate()


def test_grid_value_must_be_list(test_gt):
    with pytest.raises(ConfigError):
        _sweep(test_gt, grid={"n_scenes": 3}).validate()
    with pytest.raises(ConfigError):
        _sweep(test_gt, grid={"n_scenes": []}).validate()


def test_table_best_case_image_count():
    config = GenConfig(resolution=(960, 540), cam_poses=5, n_scenes=20,
                       n_distractors=20)
    assert config.n_images == 100


def test_trial_seed_stable():
    config = GenConfig(**SMALL)
    assert trial_seed(config, 0) == trial_seed(config, 0)
    assert trial_seed(config, 0) != trial_seed(config, 1)
    assert trial_seed(config, 0) != trial_seed(config.with_seed(99), 0)
    assert 0 <= trial_seed(config, 3) < 2 ** 64


# ---------------------------------------------------------------------------
# config validation


def test_detector_template_validation(test_gt):
    with pytest.raises(ConfigError, match="empty"):
        _sweep(test_gt, detector="").validate()
    with pytest.raises(ConfigError, match="detections_out"):
        _sweep(test_gt, detector="run.sh {dataset_dir}").validate()
    with pytest.raises(ConfigError, match="unknown placeholders"):
        _sweep(test_gt, detector="run.sh {dataset_dir} {detections_out} {modle}").validate()
    with pytest.raises(ConfigError, match="test_gt"):
        _sweep("", n_samples=1).validate()


def test_sweep_from_dict(test_gt):
    raw = {
        "base": {"resolution": [96, 72], "n_scenes": 1, "cam_poses": 1},
        "grid": {"n_distractors": [1, 2]},
        "n_samples": 3,
        "detector": oracle_command("echo"),
        "test_gt": str(test_gt),
    }
    sweep = SweepConfig.from_dict(raw)
    assert sweep.n_samples == 3
    assert sweep.base.resolution == (96, 72)
    assert len(expand_grid(sweep)) == 2
    raw["surprise"] = 1
    with pytest.raises(ConfigError, match="surprise"):
        SweepConfig.from_dict(raw)
    with pytest.raises(ConfigError, match="line"):
        SweepConfig.from_json('{"base": {},\n  nope\n}')


# ---------------------------------------------------------------------------
# aggregation


def test_aggregate_two_samples():
    agg = aggregate([0.8, 0.9])
    assert agg.mean == pytest.approx(0.85)
    assert agg.std == pytest.approx(statistics.stdev([0.8, 0.9]), abs=1e-12)
    assert agg.n == 2 and agg.n_undefined == 0


def test_aggregate_single_and_none():
    assert aggregate([0.7]).std == 0.0
    agg = aggregate([None, 0.5, None])
    assert agg.mean == 0.5 and agg.n == 1 and agg.n_undefined == 2
    empty = aggregate([None, None])
    assert empty.mean is None and empty.std is None and empty.n_undefined == 2


# ---------------------------------------------------------------------------
# run_trial


def test_run_trial_echo(test_gt, library, tmp_path):
    config = GenConfig(**SMALL)
    result = run_trial(config, 0, oracle_command("echo"), EvalConfig(),
                       test_gt, library, tmp_path / "t0", keep_dataset=True)
    assert result.status == "ok"
    assert result.precision == 1.0 and result.recall == 1.0 and result.f1 == 1.0
    assert result.seed == trial_seed(config, 0)
    assert result.generation_time > 0.0
    assert (tmp_path / "t0" / "dataset" / "manifest.json").is_file()
    assert (tmp_path / "t0" / "detections.jsonl").is_file()


def test_run_trial_discards_dataset(test_gt, library, tmp_path):
    result = run_trial(GenConfig(**SMALL), 0, oracle_command("echo"), EvalConfig(),
                       test_gt, library, tmp_path / "t0", keep_dataset=False)
    assert result.status == "ok"
    assert not (tmp_path / "t0" / "dataset").exists()


def test_run_trial_detector_exit_code(test_gt, library, tmp_path):
    template = '{python} -c "import sys; sys.exit(3)" {dataset_dir} {detections_out}'
    with pytest.raises(DetectorFailure) as info:
        run_trial(GenConfig(**SMALL), 0, template, EvalConfig(), test_gt,
                  library, tmp_path / "t1")
    assert info.value.exit_code == 3
    assert "exited 3" in str(info.value)


def test_run_trial_missing_output(test_gt, library, tmp_path):
    template = '{python} -c "pass" {dataset_dir} {detections_out}'
    with pytest.raises(DetectorFailure, match="no output"):
        run_trial(GenConfig(**SMALL), 0, template, EvalConfig(), test_gt,
                  library, tmp_path / "t2")


def test_run_trial_malformed_output(test_gt, library, tmp_path):
    template = ('{python} -c "import sys; open(sys.argv[1], \'w\').write(\'junk\')" '
                '{detections_out} {dataset_dir}')
    with pytest.raises(DetectorFailure, match="malformed"):
        run_trial(GenConfig(**SMALL), 0, template, EvalConfig(), test_gt,
                  library, tmp_path / "t3")


# ---------------------------------------------------------------------------
# sweep_run


def test_sweep_run_echo(test_gt, tmp_path):
    sweep = _sweep(test_gt, grid={"n_distractors": [2, 3]}, n_samples=2)
    summary = sweep_run(sweep, tmp_path)
    assert summary["n_combinations"] == 2
    assert summary["ranking"] == [0, 1]  # F1 tie resolves to config order
    assert summary["best"] == 0 and summary["worst"] == 1
    for row in summary["rows"]:
        assert row["status"] == "ok"
        assert row["f1_avg"] == "100.00"
        assert row["f1_std"] == "0.00"
        assert row["n_samples"] == 2
        assert row["resolution"] == "96x72"
    csv_text = (tmp_path / "summary.csv").read_text()
    header = csv_text.splitlines()[0].split(",")
    assert header[:9] == ["rank", "combo", "status", "resolution", "cam_poses",
                          "n_scenes", "n_images", "n_distractors", "generation_time"]
    assert "param_n_distractors" not in header  # standard column, not an extra
    assert (tmp_path / "combo_000" / "report.json").is_file()
    assert (tmp_path / "summary.json").is_file()


def test_sweep_run_resumes(test_gt, tmp_path):
    sweep = _sweep(test_gt, n_samples=2)
    sweep_run(sweep, tmp_path)
    trial_path = tmp_path / "combo_000" / "trial_00.json"
    doc = json.loads(trial_path.read_text())
    doc["f1"] = 0.123
    trial_path.write_text(json.dumps(doc))
    summary = sweep_run(sweep, tmp_path)
    trials = summary["reports"][0]["trials"]
    assert trials[0]["f1"] == 0.123  # resumed from disk, not re-run
    assert trials[1]["f1"] == 1.0


def test_sweep_extra_param_column(test_gt, tmp_path):
    sweep = _sweep(test_gt, grid={"visibility_min": [0.05]}, n_samples=1)
    summary = sweep_run(sweep, tmp_path)
    assert summary["rows"][0]["param_visibility_min"] == "0.05"


def test_sweep_failed_combo_isolated(test_gt, tmp_path):
    sweep = _sweep(test_gt, grid={"target_scale": [1.0, 1000.0]}, n_samples=1)
    summary = sweep_run(sweep, tmp_path)
    rows = {row["combo"]: row for row in summary["rows"]}
    assert rows[0]["status"] == "ok"
    assert rows[1]["status"] == "failed"
    assert rows[1]["f1_avg"] == ""
    assert summary["ranking"] == [0, 1]  # failed combos sink to the bottom
    failed = summary["reports"][1]["trials"][0]
    assert failed["status"] == "failed"
    assert "GenerationFailure" in failed["error"]
