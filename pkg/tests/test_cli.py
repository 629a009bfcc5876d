import json

import numpy as np
import pytest

from bubble_anfis.cli import main, parse_args
from bubble_anfis.dataset import GridSpec, generate_surrogate, load_csv, select_regression, write_csv
from bubble_anfis.errors import UsageError
from bubble_anfis.fis import forward, load_model

SMALL_GEN = ["--n-r", "3", "--n-theta", "4", "--n-z", "3", "--velocities", "0.004,0.008"]
FAST_TRAIN = ["--inputs", "x,z", "--mf-count", "2", "--mf-type", "gauss", "--epochs", "3"]


@pytest.fixture()
def data(tmp_path):
    path = tmp_path / "d.csv"
    assert main(["gen", "--out", str(path), *SMALL_GEN]) == 0
    return path


class TestParse:
    def test_gen_defaults(self):
        cmd = parse_args(["gen", "--out", "d.csv"])
        assert cmd.subcommand == "gen"
        a = cmd.args
        assert (a.n_r, a.n_theta, a.n_z) == (10, 12, 10)
        assert tuple(a.velocities) == GridSpec().velocities

    def test_train_defaults(self):
        a = parse_args(["train", "--data", "d.csv", "--model", "m.json"]).args
        assert (a.epochs, a.train_frac, a.mf_count, a.mf_type) == (700, 0.7, 4, "gbell")
        assert a.inputs == ["x", "y", "z", "v_as"] and a.output_col == "dpdz"

    def test_sweep_defaults(self):
        a = parse_args(["sweep", "--data", "d.csv", "--out", "r.csv"]).args
        assert a.epochs == 100 and a.jobs == 1 and a.mf_counts == [2, 4, 6]

    def test_missing_data(self):
        with pytest.raises(UsageError, match="missing --data"):
            parse_args(["train"])

    def test_missing_flag_exit_code(self, capsys):
        assert main(["train", "--model", "m.json"]) == 2
        assert "missing --data" in capsys.readouterr().err

    @pytest.mark.parametrize(
        "argv",
        [["frobnicate"], [], ["gen", "--out", "d.csv", "--bogus"], ["train", "--mf-type", "trapezoid"]],
    )
    def test_usage_errors(self, argv, capsys):
        assert main(argv) == 2
        assert capsys.readouterr().out == ""

    def test_help_documents_defaults(self, capsys):
        assert main(["train", "--help"]) == 0
        text = capsys.readouterr().out
        assert "700" in text and "0.7" in text
        assert main(["gen", "--help"]) == 0
        assert "6000" in capsys.readouterr().out

    def test_config_overrides_defaults(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"epochs": 12, "mf-type": "tri", "inputs": "x,y"}))
        a = parse_args(["train", "--data", "d", "--model", "m", "--config", str(cfg)]).args
        assert (a.epochs, a.mf_type, a.inputs) == (12, "tri", ["x", "y"])
        a = parse_args(["train", "--data", "d", "--model", "m", "--config", str(cfg), "--epochs", "5"]).args
        assert a.epochs == 5

    def test_config_unknown_key(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"nope": 1}))
        assert main(["train", "--data", "d", "--model", "m", "--config", str(cfg)]) == 2


class TestPipeline:
    def test_gen_train_eval(self, data, tmp_path, capsys):
        model = tmp_path / "m.json"
        assert main(["train", "--data", str(data), "--model", str(model), *FAST_TRAIN]) == 0
        capsys.readouterr()
        assert main(["eval", "--data", str(data), "--model", str(model)]) == 0
        out = capsys.readouterr().out
        metrics = dict(line.split(",") for line in out.strip().splitlines()[1:])
        assert {"r2_train", "r2_test", "r2_combined"} <= metrics.keys()
        assert int(metrics["n_train"]) + int(metrics["n_test"]) == 72

    def test_inputs_not_mutated(self, data, tmp_path):
        before = data.read_bytes()
        model = tmp_path / "m.json"
        main(["train", "--data", str(data), "--model", str(model), *FAST_TRAIN])
        model_bytes = model.read_bytes()
        main(["eval", "--data", str(data), "--model", str(model)])
        main(["predict", "--model", str(model), "--points", str(data), "--out", str(tmp_path / "p.csv")])
        assert data.read_bytes() == before and model.read_bytes() == model_bytes

    def test_train_byte_identical(self, data, tmp_path):
        for name in ("a.json", "b.json"):
            assert main(["train", "--data", str(data), "--model", str(tmp_path / name), *FAST_TRAIN, "--seed", "3"]) == 0
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_trace_written(self, data, tmp_path):
        trace = tmp_path / "t.csv"
        argv = ["train", "--data", str(data), "--model", str(tmp_path / "m.json"), *FAST_TRAIN, "--trace", str(trace)]
        assert main(argv) == 0
        assert len(trace.read_text().splitlines()) == 4

    def test_rule_explosion_exit(self, data, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("ANFIS_MAX_RULES", "1000")
        argv = ["train", "--data", str(data), "--model", str(tmp_path / "m.json"), "--mf-count", "6", "--epochs", "1"]
        assert main(argv) == 1
        assert "1296" in capsys.readouterr().err
        assert not (tmp_path / "m.json").exists()

    def test_missing_data_file(self, tmp_path):
        assert main(["train", "--data", str(tmp_path / "none.csv"), "--model", str(tmp_path / "m.json")]) == 1


class TestPredict:
    @pytest.fixture()
    def model_path(self, data, tmp_path):
        path = tmp_path / "m.json"
        assert main(["train", "--data", str(data), "--model", str(path), *FAST_TRAIN]) == 0
        return path

    def test_matches_forward_bitwise(self, data, model_path, tmp_path):
        ds = load_csv(data)
        points = tmp_path / "pts.csv"
        write_csv(ds.take(np.arange(10)), points)
        out = tmp_path / "p.csv"
        assert main(["predict", "--model", str(model_path), "--points", str(points), "--out", str(out)]) == 0
        pred = load_csv(out)
        model = load_model(model_path)
        assert pred.names == ["x", "z", "dpdz"]
        X, _, _ = select_regression(ds.take(np.arange(10)), ["x", "z"], "dpdz")
        np.testing.assert_array_equal(pred.column("x"), X[:, 0])
        assert [forward(model, x) for x in X] == pred.column("dpdz").tolist()

    def test_header_only(self, model_path, tmp_path):
        points = tmp_path / "pts.csv"
        points.write_text("x[m],z[m]\n")
        out = tmp_path / "p.csv"
        assert main(["predict", "--model", str(model_path), "--points", str(points), "--out", str(out)]) == 0
        assert out.read_text() == "x[m],z[m],dpdz[Pa/m]\n"

    def test_missing_column(self, model_path, tmp_path, capsys):
        points = tmp_path / "pts.csv"
        points.write_text("x[m],y[m]\n0.01,0.02\n")
        assert main(["predict", "--model", str(model_path), "--points", str(points), "--out", str(tmp_path / "p.csv")]) == 1
        assert "z" in capsys.readouterr().err

    def test_off_grid_points(self, model_path, tmp_path):
        # points absent from the training grid
        grid = GridSpec(2, 3, 2, (0.006,))
        points = tmp_path / "pts.csv"
        write_csv(generate_surrogate(grid), points)
        out = tmp_path / "p.csv"
        assert main(["predict", "--model", str(model_path), "--points", str(points), "--out", str(out)]) == 0
        assert np.all(np.isfinite(load_csv(out).column("dpdz")))


class TestSweepCommand:
    def test_sweep_report(self, data, tmp_path, capsys):
        out = tmp_path / "r.csv"
        argv = ["sweep", "--data", str(data), "--out", str(out), "--input-sets", "x;x,z",
                "--mf-counts", "2", "--families", "gauss,tri", "--epochs", "2"]
        assert main(argv) == 0
        assert len(out.read_text().splitlines()) == 5
        summary = capsys.readouterr().out
        assert summary.startswith("input_count,mf_count,best_r2_test")
