"""Study figure rendering: files, determinism, and content sanity."""

import pytest

from preplace.figures import render_study_figures
from preplace.grid import GridSpec
from preplace.harness import run_study
from preplace.sim import OraclePredictor


@pytest.fixture(scope="module")
def report():
    return run_study(
        cells=[(0, 0), (4, 9)],
        trials_per_cell=3,
        predictor=OraclePredictor(GridSpec()),
        seed=2,
    )


def test_expected_files(report, tmp_path):
    paths = render_study_figures(report, tmp_path)
    assert [p.name for p in paths] == [
        "response_time.png",
        "start_to_grab.png",
        "placement_error.png",
    ]
    for p in paths:
        assert p.exists()
        assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
        assert p.stat().st_size > 1000

def test_byte_identical_rerun(report, tmp_path):
    d1, d2 = tmp_path / "one", tmp_path / "two"
    d1.mkdir(), d2.mkdir()
    first = render_study_figures(report, d1)
    second = render_study_figures(report, d2)
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()


def test_single_mode_report_renders(tmp_path):
    rep = run_study([(2, 2)], 3, modes=("reactive",), seed=1)
    paths = render_study_figures(rep, tmp_path)
    assert all(p.exists() for p in paths)


def test_creates_out_dir(report, tmp_path):
    out = tmp_path / "nested" / "figs"
    paths = render_study_figures(report, out)
    assert out.is_dir() and all(p.parent == out for p in paths)
