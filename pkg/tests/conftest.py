import json
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from scenes import FIXTURES  # noqa: E402
from urbandensity import cli  # noqa: E402
from urbandensity.pipeline import PipelineConfig, run_pipeline  # noqa: E402

# (criterion, passed, detail) rows filled in by test_acceptance
ACCEPTANCE = []


def write_pair(spec, out):
    out.mkdir(parents=True, exist_ok=True)
    (out / "spec.json").write_text(json.dumps(spec.to_dict()))
    assert cli.main(["synth", "--spec", str(out / "spec.json"), "--out", str(out)]) == 0
    return out / "optical.png", out / "sar.png"


class FixtureRun:
    """A fixture scene on disk, analyzed once in-process and twice via the CLI."""

    def __init__(self, name, spec, root):
        self.name, self.spec = name, spec
        self.optical, self.sar = write_pair(spec, root / name)
        t0 = time.perf_counter()
        self.result = run_pipeline(PipelineConfig(optical=str(self.optical), sar=str(self.sar)))
        self.seconds = time.perf_counter() - t0
        self.reports = []
        for i in (1, 2):
            out = root / name / f"run{i}"
            code = cli.main(["analyze", "--optical", str(self.optical), "--sar", str(self.sar),
                             "--out", str(out)])
            assert code == 0
            self.reports.append((out / "report.json").read_bytes())
        self.out_dir = root / name / "run1"


@pytest.fixture(scope="session")
def fixture_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("fixtures")
    return {name: FixtureRun(name, spec, root) for name, spec in FIXTURES.items()}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {detail}")
