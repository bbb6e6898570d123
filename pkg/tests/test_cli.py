import json

import pytest

import glycemlp as g
from glycemlp.cli import main
from glycemlp.trainer import load_report, read_curve_csv, strip_timing


@pytest.fixture()
def data_csv(tmp_path):
    path = tmp_path / "data.csv"
    assert main(["synth", "--rows", "120", "--seed", "7",
                 "--signal", "planted-linear", "--out", str(path)]) == 0
    return path


def run_train(tmp_path, data_csv, outname="runs", extra=()):
    outdir = tmp_path / outname
    argv = ["train", "--input", str(data_csv), "--sex", "male",
            "--epochs", "200", "--checkpoints", "1,50,200",
            "--seed", "3", "--out", str(outdir), *extra]
    assert main(argv) == 0
    return outdir


class TestSynth:
    def test_round_trips_through_parser(self, data_csv):
        records = g.parse_csv(data_csv)
        assert len(records) == 120

    def test_deterministic_output(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            assert main(["synth", "--rows", "40", "--seed", "5", "--out", str(path)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_rejects_bad_rows(self, tmp_path, capsys):
        assert main(["synth", "--rows", "0", "--out", str(tmp_path / "x.csv")]) == 2
        assert "--rows" in capsys.readouterr().err


class TestTrain:
    def test_end_to_end_artifacts(self, tmp_path, data_csv, capsys):
        outdir = run_train(tmp_path, data_csv)
        report = load_report(outdir / "train_report.json")
        assert report["metadata"]["dataset_tag"] == "male"
        assert [r["epoch"] for r in report["rows"]] == [1, 50, 200]
        net = g.load_checkpoint(outdir / "checkpoint.json")
        assert net.config.input_dim == 30
        curve = read_curve_csv(outdir / "curve.csv")
        assert len(curve) == 3
        out = capsys.readouterr().out
        assert "%" in out

    def test_byte_identical_reports_modulo_timing(self, tmp_path, data_csv):
        out_a = run_train(tmp_path, data_csv, "a")
        out_b = run_train(tmp_path, data_csv, "b")
        doc_a = strip_timing(json.loads((out_a / "train_report.json").read_text()))
        doc_b = strip_timing(json.loads((out_b / "train_report.json").read_text()))
        assert json.dumps(doc_a) == json.dumps(doc_b)
        assert (out_a / "checkpoint.json").read_bytes() == (out_b / "checkpoint.json").read_bytes()

    def test_parallel_backend_flag(self, tmp_path, data_csv):
        out_seq = run_train(tmp_path, data_csv, "seq")
        out_par = run_train(tmp_path, data_csv, "par",
                            extra=("--backend", "parallel", "--workers", "2"))
        assert (out_seq / "checkpoint.json").read_bytes() == (out_par / "checkpoint.json").read_bytes()

    def test_negative_learning_rate_exits_2(self, tmp_path, data_csv, capsys):
        code = main(["train", "--input", str(data_csv), "--sex", "male",
                     "--learning-rate", "-1", "--out", str(tmp_path / "x")])
        assert code == 2
        assert "--learning-rate" in capsys.readouterr().err

    def test_unknown_flag_exits_2(self, tmp_path, data_csv, capsys):
        code = main(["train", "--input", str(data_csv), "--sex", "male",
                     "--frobnicate", "1", "--out", str(tmp_path / "x")])
        assert code == 2

    def test_missing_input_exits_2(self, tmp_path, capsys):
        code = main(["train", "--input", str(tmp_path / "nope.csv"), "--sex", "male",
                     "--out", str(tmp_path / "x")])
        assert code == 2
        assert "not found" in capsys.readouterr().err

    def test_schema_violation_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("id,sex\np1,M\n")
        code = main(["train", "--input", str(bad), "--sex", "male",
                     "--out", str(tmp_path / "x")])
        assert code == 2
        assert "column" in capsys.readouterr().err

    def test_sex_all_prints_note(self, tmp_path, data_csv, capsys):
        outdir = tmp_path / "all"
        assert main(["train", "--input", str(data_csv), "--sex", "all",
                     "--epochs", "10", "--checkpoints", "10",
                     "--out", str(outdir)]) == 0
        assert "per-sex" in capsys.readouterr().out


class TestEval:
    def test_eval_report_on_csv(self, tmp_path, data_csv, capsys):
        outdir = run_train(tmp_path, data_csv)
        code = main(["eval", "--report", str(outdir / "train_report.json"),
                     "--input", str(data_csv), "--sex", "male"])
        assert code == 0
        out = capsys.readouterr().out
        assert "accuracy" in out and "confusion" in out

    def test_missing_report_exits_2(self, tmp_path, data_csv):
        assert main(["eval", "--report", str(tmp_path / "none.json"),
                     "--input", str(data_csv), "--sex", "male"]) == 2


class TestSweep:
    def test_writes_curve(self, tmp_path, data_csv):
        out = tmp_path / "curve.csv"
        assert main(["sweep", "--input", str(data_csv), "--sex", "female",
                     "--epochs", "100", "--checkpoints", "1,10,100",
                     "--seed", "2", "--out", str(out)]) == 0
        rows = read_curve_csv(out)
        assert [r["epoch"] for r in rows] == [1, 10, 100]


class TestBench:
    def test_small_bench_artifacts(self, tmp_path, capsys):
        outdir = tmp_path / "bench"
        assert main(["bench", "--rows", "30", "--columns", "6", "--hidden-dim", "8",
                     "--epochs-grid", "2,4", "--repetitions", "1",
                     "--out", str(outdir)]) == 0
        doc = json.loads((outdir / "bench_report.json").read_text())
        assert doc["format"] == "glycemlp-bench-report-v1"
        table = (outdir / "speedup.csv").read_text().splitlines()
        assert table[0] == "epochs,sequential_seconds,parallel_seconds,speedup"
        assert len(table) == 3
        out = capsys.readouterr().out
        assert "reference GPU result" in out and "50x" in out

    def test_bad_epochs_grid_exits_2(self, tmp_path, capsys):
        assert main(["bench", "--epochs-grid", "abc", "--out", str(tmp_path / "x")]) == 2
        assert "--epochs-grid" in capsys.readouterr().err
