import math

import numpy as np
import pytest

from bubble_anfis.dataset import split
from bubble_anfis.errors import ConfigError, SelectionError, SummaryError
from bubble_anfis.membership import MfFamily
from bubble_anfis.metrics import MetricReport
from bubble_anfis.sweep import (
    OK,
    REPORT_COLUMNS,
    SKIPPED,
    SweepCell,
    SweepReport,
    SweepSpec,
    load_report,
    paper_matrix,
    report_to_csv,
    run_cell,
    run_sweep,
    trend_summary,
)
from bubble_anfis.trainer import TrainConfig

FAST = TrainConfig(epochs=3)


def fake_cell(inputs, m, fam, r2):
    rep = MetricReport(r2, r2, 1.0, 1.0, 10, False)
    return SweepCell(tuple(inputs), m, MfFamily.parse(fam), OK, m ** len(inputs), rep, rep, rep)


class TestSpec:
    def test_small_sizes_give_36_cells(self):
        spec = SweepSpec(input_sets=(("x",), ("x", "y")))
        assert len(spec.cells()) == 36

    def test_paper_matrix_has_60_cells(self):
        cells = paper_matrix().cells()
        assert len(cells) == 60
        assert not any(len(s) >= 3 and m == 6 for s, m, _ in cells)

    def test_axis_order(self):
        cells = SweepSpec(input_sets=(("x",),), mf_counts=(2, 4), families=("tri", "gauss")).cells()
        assert [(m, f.value) for _, m, f in cells] == [(2, "tri"), (2, "gauss"), (4, "tri"), (4, "gauss")]

    @pytest.mark.parametrize(
        "kwargs", [{"input_sets": ()}, {"mf_counts": ()}, {"families": ()}, {"input_sets": ((),)}]
    )
    def test_empty_axes(self, kwargs):
        with pytest.raises(ConfigError):
            SweepSpec(**kwargs)

    def test_empty_after_restriction(self, small_surrogate):
        spec = SweepSpec(input_sets=(("x",),), counts_by_size={2: (2,)})
        with pytest.raises(ConfigError):
            run_sweep(small_surrogate, spec)

    def test_unknown_column(self, small_surrogate):
        with pytest.raises(SelectionError):
            run_sweep(small_surrogate, SweepSpec(input_sets=(("w",),), train=FAST))


class TestRun:
    @pytest.fixture(scope="class")
    @classmethod
    def report(cls, small_surrogate):
        spec = SweepSpec(input_sets=(("x",), ("x", "y")), train=FAST)
        return run_sweep(small_surrogate, spec)

    def test_cells_and_status(self, report):
        assert len(report) == 36
        assert all(c.status == OK for c in report.cells)
        assert all(c.train is not None and c.test is not None and c.combined is not None for c in report.cells)
        assert report.n_train + report.n_test == 288

    def test_rule_explosion_is_skipped(self, small_surrogate):
        spec = SweepSpec(
            input_sets=(("x", "y", "z", "v_as"),), mf_counts=(6,), families=("gbell",),
            max_rules=1000, train=FAST,
        )
        (cell,) = run_sweep(small_surrogate, spec).cells
        assert cell.status == SKIPPED and cell.rule_count == 1296
        assert cell.test is None

    def test_deterministic_and_parallel(self, small_surrogate, report):
        spec = SweepSpec(input_sets=(("x",), ("x", "y")), train=FAST)
        again = run_sweep(small_surrogate, spec, jobs=4)
        for a, b in zip(report.cells, again.cells):
            assert (a.input_set, a.mf_count, a.family, a.test, a.train) == (
                b.input_set, b.mf_count, b.family, b.test, b.train
            )

    def test_single_cell_matches_sweep(self, small_surrogate, report):
        spec = SweepSpec(input_sets=(("x",), ("x", "y")), train=FAST)
        tr, te = split(small_surrogate, spec.train_frac, spec.split_seed)
        cell = run_cell(tr, te, ("x", "y"), 4, "psig", spec)
        assert cell.test == report.find(("x", "y"), 4, "psig").test
        assert cell.combined == report.find(("x", "y"), 4, "psig").combined

    def test_shared_partition(self, small_surrogate, report):
        n_test = {c.test.n for c in report.cells}
        assert n_test == {report.n_test}


class TestReportCsv:
    def test_rows_and_round_trip(self, small_surrogate, tmp_path):
        spec = SweepSpec(input_sets=(("x",), ("x", "y")), train=FAST)
        report = run_sweep(small_surrogate, spec)
        report_to_csv(report, tmp_path / "r.csv")
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert len(lines) == 37
        assert lines[0] == ",".join(REPORT_COLUMNS)
        rows = load_report(tmp_path / "r.csv")
        assert len(rows) == 36
        first = rows[0]
        assert first["input_set"] == "x" and first["mf_count"] == "2" and first["family"] == "gbell"
        assert float(first["r2_test"]) == report.cells[0].test.r2_determination
        assert first["wall_time_s"] == ""

    def test_skipped_row(self, tmp_path):
        cell = SweepCell(("x", "y", "z", "v_as"), 6, MfFamily.GBELL, SKIPPED, 1296)
        report_to_csv(SweepReport((cell,), 0, 7, 3), tmp_path / "r.csv")
        (row,) = load_report(tmp_path / "r.csv")
        assert row["status"] == SKIPPED and row["rule_count"] == "1296"
        assert all(row[k] == "" for k in ("r2_train", "r2_test", "r2_combined", "rmse_test"))

    def test_timing_column(self, tmp_path):
        cell = fake_cell(["x"], 2, "gauss", 0.5)
        report_to_csv(SweepReport((cell,), 0, 7, 3), tmp_path / "r.csv", timing=True)
        (row,) = load_report(tmp_path / "r.csv")
        assert row["wall_time_s"] == "0.000"


class TestTrend:
    def test_max_extraction(self):
        cells = (
            fake_cell(["x"], 2, "gbell", 0.1),
            fake_cell(["x"], 4, "gauss", 0.3),
            fake_cell(["x", "y"], 2, "tri", 0.7),
            fake_cell(["x", "y"], 4, "tri", 0.5),
        )
        s = trend_summary(SweepReport(cells, 0, 7, 3))
        assert s.by_size == {1: 0.3, 2: 0.7}
        assert s.by_size_count == {(1, 2): 0.1, (1, 4): 0.3, (2, 2): 0.7, (2, 4): 0.5}

    def test_single_cell(self):
        s = trend_summary(SweepReport((fake_cell(["x"], 2, "gbell", 0.42),), 0, 7, 3))
        assert s.by_size == {1: 0.42}

    def test_no_ok_cells(self):
        cell = SweepCell(("x",), 2, MfFamily.GBELL, SKIPPED, 2)
        with pytest.raises(SummaryError):
            trend_summary(SweepReport((cell,), 0, 7, 3))

    def test_failed_cells_ignored(self):
        bad = SweepCell(("x",), 4, MfFamily.TRI, "failed", 4, message="boom")
        s = trend_summary(SweepReport((fake_cell(["x"], 2, "gbell", 0.2), bad), 0, 7, 3))
        assert s.by_size == {1: 0.2}
        assert not math.isnan(np.float64(s.by_size[1]))
