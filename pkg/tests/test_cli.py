"""End-to-end CLI flows and exit codes."""

import numpy as np
import pytest

from tlrgeo.cli import main
from tlrgeo.dataio import load_predictions, load_values
from tlrgeo.bench import ExperimentReport


@pytest.fixture
def synthetic(tmp_path):
    locs = tmp_path / "locs.csv"
    vals = tmp_path / "vals.csv"
    code = main(["generate", "--n", "60", "--theta", "1:0.1:0.5",
                 "--seed", "11", "--out-locations", str(locs),
                 "--out-values", str(vals)])
    assert code == 0
    return locs, vals


class TestGenerate:
    def test_files_written(self, synthetic):
        locs, vals = synthetic
        assert locs.read_text().startswith("x,y\n")
        assert len(load_values(vals)) == 60

    def test_deterministic(self, tmp_path):
        args = ["generate", "--n", "20", "--theta", "1:0.1:0.5", "--seed", "3"]
        for tag in ("a", "b"):
            main(args + ["--out-locations", str(tmp_path / f"l{tag}.csv"),
                         "--out-values", str(tmp_path / f"v{tag}.csv")])
        assert (tmp_path / "la.csv").read_text() == (tmp_path / "lb.csv").read_text()
        assert (tmp_path / "va.csv").read_text() == (tmp_path / "vb.csv").read_text()

    def test_bad_theta_exit_2(self, tmp_path, capsys):
        code = main(["generate", "--n", "5", "--theta", "1:0.1", "--seed", "1",
                     "--out-locations", str(tmp_path / "l.csv"),
                     "--out-values", str(tmp_path / "v.csv")])
        assert code == 2


class TestEstimate:
    def test_small_fit(self, synthetic, tmp_path, capsys):
        locs, vals = synthetic
        trace = tmp_path / "trace.csv"
        code = main(["estimate", "--locations", str(locs), "--values", str(vals),
                     "--mode", "dense", "--tile-size", "30",
                     "--max-iters", "8", "--out-trace", str(trace)])
        assert code == 0
        out = capsys.readouterr().out
        assert "theta_hat" in out and "loglik" in out
        lines = trace.read_text().strip().split("\n")
        assert lines[0] == "iter,theta1,theta2,theta3,loglik,seconds"
        assert len(lines) > 4

    def test_tlr_mode(self, synthetic, tmp_path):
        locs, vals = synthetic
        code = main(["estimate", "--locations", str(locs), "--values", str(vals),
                     "--mode", "tlr", "--accuracy", "1e-7", "--tile-size", "20",
                     "--max-iters", "5", "--out-trace", str(tmp_path / "t.csv")])
        assert code == 0

    def test_missing_file_exit_2(self, tmp_path):
        code = main(["estimate", "--locations", str(tmp_path / "nope.csv"),
                     "--values", str(tmp_path / "nope2.csv"),
                     "--out-trace", str(tmp_path / "t.csv")])
        assert code == 2

    def test_length_mismatch_exit_2(self, synthetic, tmp_path):
        locs, _ = synthetic
        bad = tmp_path / "bad.csv"
        bad.write_text("value\n1.0\n2.0\n")
        code = main(["estimate", "--locations", str(locs), "--values", str(bad),
                     "--out-trace", str(tmp_path / "t.csv")])
        assert code == 2


class TestPredictAndMse:
    def test_flow(self, synthetic, tmp_path, capsys):
        locs, vals = synthetic
        unknown = tmp_path / "unknown.csv"
        known = locs.read_text().strip().split("\n")
        unknown.write_text("\n".join([known[0]] + known[1:4]) + "\n")
        out = tmp_path / "pred.csv"
        code = main(["predict", "--locations", str(locs), "--values", str(vals),
                     "--theta", "1:0.1:0.5", "--unknown", str(unknown),
                     "--mode", "dense", "--out", str(out)])
        assert code == 0
        coords, pred, _ = load_predictions(out)
        # nugget-free interpolation at known locations
        np.testing.assert_allclose(pred, load_values(vals)[:3], rtol=1e-8)

        truth = tmp_path / "truth.csv"
        truth.write_text("value\n" + "\n".join(
            format(v, ".17g") for v in load_values(vals)[:3]) + "\n")
        code = main(["mse", "--truth", str(truth), "--pred", str(out)])
        assert code == 0
        assert float(capsys.readouterr().out.strip().split("\n")[-1]) < 1e-10

    def test_numerical_failure_exit_3(self, tmp_path):
        # a singular system: duplicate-free but collinear near-identical points
        locs = tmp_path / "l.csv"
        vals = tmp_path / "v.csv"
        eps_sep = 1e-9
        rows = ["x,y"] + [f"0.5,{0.5 + i * eps_sep}" for i in range(30)]
        locs.write_text("\n".join(rows) + "\n")
        vals.write_text("value\n" + "\n".join(["1.0"] * 30) + "\n")
        unknown = tmp_path / "u.csv"
        unknown.write_text("x,y\n0.25,0.25\n")
        code = main(["predict", "--locations", str(locs), "--values", str(vals),
                     "--theta", "1:0.1:2.5", "--unknown", str(unknown),
                     "--out", str(tmp_path / "p.csv")])
        assert code == 3


class TestMc:
    def test_runs_and_writes(self, tmp_path, capsys):
        out = tmp_path / "mc.csv"
        code = main(["mc", "--n", "50", "--theta", "1:0.1:0.5",
                     "--replicates", "2", "--modes", "dense,tlr:1e-5",
                     "--seed", "4", "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0].startswith("mode,replicate")
        assert len(lines) == 1 + 4
        assert "median theta" in capsys.readouterr().out


class TestBenchmarkCmd:
    def test_runs_and_report_parses(self, tmp_path):
        cfg = tmp_path / "b.cfg"
        cfg.write_text("n = 80\nmodes = dense,tlr:1e-5\nnb = 40\nrepeats = 1\n")
        out = tmp_path / "report.csv"
        code = main(["benchmark", "--config", str(cfg), "--out", str(out)])
        assert code == 0
        report = ExperimentReport.load_csv(out)
        assert len(report.rows) == 2

    def test_bad_config_exit_2(self, tmp_path):
        cfg = tmp_path / "b.cfg"
        cfg.write_text("nonsense\n")
        code = main(["benchmark", "--config", str(cfg), "--out",
                     str(tmp_path / "r.csv")])
        assert code == 2
