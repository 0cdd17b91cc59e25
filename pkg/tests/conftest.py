import pytest

from cadsynth.dataset import generate_dataset
from cadsynth.demo import demo_library
from cadsynth.scene import GenConfig

# (criterion number, description, passed) recorded by tests/test_acceptance.py
ACCEPTANCE_RESULTS: list[tuple[int, str, bool]] = []


def record_criterion(number: int, description: str, passed: bool) -> None:
    ACCEPTANCE_RESULTS.append((number, description, passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, passed in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status} criterion {number}: {description}")


@pytest.fixture(scope="session")
def library():
    return demo_library()


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory, library):
    """A small rendered dataset shared by IO/metrics/CLI tests."""
    out = tmp_path_factory.mktemp("smallds")
    config = GenConfig(resolution=(160, 120), n_scenes=3, cam_poses=2,
                       n_distractors=6, seed=42)
    manifest = generate_dataset(config, library, out)
    return out, config, manifest
