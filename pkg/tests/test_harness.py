"""Dataset round-trips, rank-test oracle checks, and study bookkeeping."""

import collections
import csv
import json
import math

import numpy as np
import pytest

from preplace.grid import GridSpec
from preplace.harness import (
    ROW_FIELDS,
    DatasetRecord,
    IoFailure,
    StudyReport,
    TooFewSamples,
    export_report,
    gen_dataset,
    load_dataset,
    run_study,
    significance,
    to_training_sequences,
)
from preplace.sim import (
    MODES,
    PREEMPTIVE,
    REACTIVE,
    OraclePredictor,
    SimConfig,
    TrialConfig,
)


def brute_force_p(a, b):
    """Independent rank-test oracle: pairwise U count, Counter-based ties."""
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    n1, n2 = len(a), len(b)
    u1 = 0.0
    for x in a:
        for y in b:
            if x > y:
                u1 += 1.0
            elif x == y:
                u1 += 0.5
    n = n1 + n2
    mu = n1 * n2 / 2.0
    tie = sum(c**3 - c for c in collections.Counter(a + b).values())
    var = n1 * n2 / 12.0 * ((n + 1) - tie / (n * (n - 1)))
    if var <= 0:
        return 1.0
    z = (u1 - mu) / math.sqrt(var)
    return math.erfc(abs(z) / math.sqrt(2.0))


class TestSignificance:
    def test_hand_case(self):
        assert significance([1, 2, 3], [101, 102, 103]) == pytest.approx(
            0.049535, abs=1e-6
        )

    def test_matches_brute_force_random(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n1 = int(rng.integers(2, 12))
            n2 = int(rng.integers(2, 12))
            # coarse values so ties actually occur
            a = rng.integers(0, 6, size=n1).astype(float)
            b = rng.integers(0, 6, size=n2).astype(float)
            got = significance(a, b)
            want = brute_force_p(a, b)
            assert got == pytest.approx(want, abs=1e-12), (a, b)

    def test_matches_brute_force_continuous(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            a = rng.normal(size=int(rng.integers(2, 20)))
            b = rng.normal(loc=0.5, size=int(rng.integers(2, 20)))
            assert significance(a, b) == pytest.approx(
                brute_force_p(a, b), abs=1e-12
            )

    def test_symmetric(self):
        a, b = [1.0, 4.0, 2.0, 8.0], [3.0, 3.0, 9.0]
        assert significance(a, b) == pytest.approx(significance(b, a), abs=1e-15)

    def test_all_identical_returns_one(self):
        assert significance([2.0, 2.0, 2.0], [2.0, 2.0]) == 1.0

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamples):
            significance([1.0], [2.0, 3.0])
        with pytest.raises(TooFewSamples):
            significance([1.0, 2.0], [3.0])

    def test_clear_separation_small_p(self):
        p = significance(np.arange(10.0), np.arange(10.0) + 100.0)
        assert p < 0.001


class TestDataset:
    def test_gen_is_byte_identical(self, tmp_path, grid):
        cfg = SimConfig()
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        gen_dataset(6, grid, cfg, seed=9, path=p1)
        gen_dataset(6, grid, cfg, seed=9, path=p2)
        assert p1.read_bytes() == p2.read_bytes()
        gen_dataset(6, grid, cfg, seed=10, path=p2)
        assert p1.read_bytes() != p2.read_bytes()

    def test_round_trip_exact(self, tmp_path, grid):
        path = tmp_path / "d.jsonl"
        written = gen_dataset(4, grid, SimConfig(), seed=3, path=path)
        loaded = load_dataset(path)
        assert [r.id for r in loaded] == [r.id for r in written]
        for w, l in zip(written, loaded):
            assert l.grid == w.grid
            tw, tl = w.trajectory, l.trajectory
            assert tl.target_cell == tw.target_cell
            assert np.array_equal(tl.target_point, tw.target_point)
            assert tl.release_time == tw.release_time
            assert len(tl.frames) == len(tw.frames)
            for fw, fl in zip(tw.frames, tl.frames):
                assert fl.t == fw.t
                assert np.array_equal(fl.palm, fw.palm)
                assert np.array_equal(fl.elbow, fw.elbow)
                assert np.array_equal(fl.shoulder, fw.shoulder)
                assert np.array_equal(fl.head_pos, fw.head_pos)
                assert np.array_equal(fl.head_rot, fw.head_rot)

    def test_count_must_be_positive(self, tmp_path, grid):
        with pytest.raises(ValueError):
            gen_dataset(0, grid, SimConfig(), 0, tmp_path / "x.jsonl")

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(IoFailure):
            load_dataset(tmp_path / "nope.jsonl")

    def test_load_malformed_line_reports_position(self, tmp_path, grid):
        path = tmp_path / "d.jsonl"
        gen_dataset(1, grid, SimConfig(), seed=0, path=path)
        good = path.read_text()
        path.write_text(good + '{"id": "broken"}\n')
        with pytest.raises(IoFailure) as err:
            load_dataset(path)
        assert ":2:" in str(err.value)

    def test_blank_lines_skipped(self, tmp_path, grid):
        path = tmp_path / "d.jsonl"
        gen_dataset(2, grid, SimConfig(), seed=0, path=path)
        path.write_text(path.read_text() + "\n\n")
        assert len(load_dataset(path)) == 2

    def test_to_training_sequences(self, grid, tmp_path):
        recs = gen_dataset(3, grid, SimConfig(), seed=1, path=tmp_path / "d.jsonl")
        seqs = to_training_sequences(recs)
        assert len(seqs) == 3
        for rec, seq in zip(recs, seqs):
            assert seq.inputs.shape == (len(rec.trajectory.frames), 28)
            assert seq.target_cell == rec.trajectory.target_cell
            assert np.all(seq.inputs[0, 14:] == 0.0)  # first-frame velocities


@pytest.fixture(scope="module")
def oracle_report():
    grid = GridSpec()
    return run_study(
        cells=[(0, 0), (2, 5), (4, 9)],
        trials_per_cell=4,
        predictor=OraclePredictor(grid),
        seed=11,
    )


class TestStudy:
    def test_trial_counts_and_pairing(self, oracle_report):
        rep = oracle_report
        assert len(rep.trials) == 3 * 4 * 2
        assert rep.errors == []
        by_mode = collections.Counter(t.mode for t in rep.trials)
        assert by_mode[REACTIVE] == by_mode[PREEMPTIVE] == 12
        # every (cell, seed) appears exactly once per mode
        keys = collections.Counter((t.target_cell, t.seed) for t in rep.trials)
        assert all(v == 2 for v in keys.values())
        pairs = rep.paired()
        assert len(pairs) == 12

    def test_paired_uses_one_trajectory_per_seed(self, oracle_report):
        # identical release/detect times across the mode pair prove the
        # same generated reach backed both runs
        by_key = {}
        for t in oracle_report.trials:
            by_key.setdefault((t.target_cell, t.seed), []).append(t)
        for pair in by_key.values():
            assert pair[0].release_time == pair[1].release_time
            assert pair[0].detect_time == pair[1].detect_time

    def test_sorted_deterministic_order(self, oracle_report):
        key = [(t.target_cell, t.mode, t.seed) for t in oracle_report.trials]
        assert key == sorted(key)

    def test_reactive_subset_study_matches(self, oracle_report):
        solo = run_study(
            cells=[(0, 0), (2, 5), (4, 9)],
            trials_per_cell=4,
            modes=(REACTIVE,),
            seed=11,
        )
        want = [t for t in oracle_report.trials if t.mode == REACTIVE]
        assert solo.trials == want

    def test_rows_recompute(self, oracle_report):
        rows = oracle_report.rows()
        assert len(rows) == 6  # 3 cells x 2 modes
        for row in rows:
            cell = (row["cell_x"], row["cell_y"])
            group = [
                t
                for t in oracle_report.trials
                if t.target_cell == cell and t.mode == row["mode"]
            ]
            assert row["trials"] == len(group) == 4
            resp = np.array([t.response_time for t in group])
            assert abs(row["response_mean"] - resp.mean()) <= 1e-12
            assert abs(row["response_median"] - np.median(resp)) <= 1e-12
            grab = np.array([t.start_to_grab for t in group])
            assert abs(row["grab_q1"] - np.percentile(grab, 25)) <= 1e-12
            assert abs(row["grab_q3"] - np.percentile(grab, 75)) <= 1e-12
            if row["mode"] == REACTIVE:
                assert row["error_grids_mean"] is None
            else:
                assert row["error_grids_mean"] == 0.0

    def test_overall_oracle_improves(self, oracle_report):
        o = oracle_report.overall()
        assert o["paired_trials"] == 12
        assert o["improvement_response_mean"] > 0
        assert o["improvement_grab_mean"] > 0
        assert o["preemptive_win_rate"] == 1.0
        assert 0.0 <= o["p_grab"] <= 1.0
        assert o["p_grab"] < 0.05

    def test_overall_single_mode_has_no_pairs(self):
        rep = run_study([(1, 1)], 2, modes=(REACTIVE,), seed=0)
        o = rep.overall()
        assert o["paired_trials"] == 0
        assert o["improvement_grab_mean"] is None
        assert o["p_grab"] is None

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            run_study([(0, 0)], 1, modes=("fast",))

    def test_preemptive_without_predictor_rejected(self):
        with pytest.raises(ValueError):
            run_study([(0, 0)], 1, modes=MODES, predictor=None)

    def test_failures_recorded_not_raised(self):
        cfg = TrialConfig(sim=SimConfig(timeout=0.25))
        rep = run_study([(0, 0)], 2, modes=(REACTIVE,), seed=5, config=cfg)
        assert rep.trials == []
        assert len(rep.errors) == 2
        assert all("TrialTimeout" in e["error"] for e in rep.errors)
        assert {e["trial"] for e in rep.errors} == {0, 1}

    def test_config_snapshot_contents(self, oracle_report):
        cfg = oracle_report.config
        assert cfg["seed"] == 11
        assert cfg["trials_per_cell"] == 4
        assert cfg["cells"] == [[0, 0], [2, 5], [4, 9]]
        assert cfg["grid"]["n"] == 5
        assert cfg["plane"]["normal"] == [0.0, 0.0, 1.0]


class TestExport:
    def test_json_round_trip(self, oracle_report, tmp_path):
        path = export_report(oracle_report, tmp_path / "r.json", format="json")
        doc = json.loads(path.read_text())
        assert set(doc) == {"config", "rows", "overall", "paired", "trials", "errors"}
        assert len(doc["trials"]) == len(oracle_report.trials)
        assert doc["rows"] == json.loads(json.dumps(oracle_report.rows()))
        assert doc["overall"]["preemptive_win_rate"] == 1.0
        t0 = doc["trials"][0]
        assert t0["mode"] == oracle_report.trials[0].mode
        assert t0["start_to_grab"] == oracle_report.trials[0].start_to_grab

    def test_csv_matches_rows_exactly(self, oracle_report, tmp_path):
        path = export_report(oracle_report, tmp_path / "r.csv", format="csv")
        with open(path, newline="") as f:
            got = list(csv.DictReader(f))
        rows = oracle_report.rows()
        assert len(got) == len(rows)
        for raw, row in zip(got, rows):
            assert tuple(raw) == ROW_FIELDS
            for k, v in row.items():
                if v is None:
                    assert raw[k] == ""
                elif isinstance(v, float):
                    assert float(raw[k]) == v  # repr round-trips float64
                else:
                    assert raw[k] == str(v)

    def test_empty_report_writes_header_only_csv(self, tmp_path):
        rep = StudyReport(config={})
        path = export_report(rep, tmp_path / "e.csv", format="csv")
        lines = path.read_text().strip().splitlines()
        assert lines == [",".join(ROW_FIELDS)]

    def test_unknown_format_rejected(self, oracle_report, tmp_path):
        with pytest.raises(ValueError):
            export_report(oracle_report, tmp_path / "r.xml", format="xml")

    def test_unwritable_path_raises_io_failure(self, oracle_report, tmp_path):
        with pytest.raises(IoFailure):
            export_report(oracle_report, tmp_path / "no" / "dir" / "r.json")

    def test_export_deterministic_bytes(self, oracle_report, tmp_path):
        a = export_report(oracle_report, tmp_path / "a.json")
        b = export_report(oracle_report, tmp_path / "b.json")
        assert a.read_bytes() == b.read_bytes()
