"""Tests for regperc.cli."""

import json

import pytest

from regperc.cli import main
from regperc.errors import RejectionLimit
from regperc.formats import read_csv, write_csv
from regperc.gaussian_wave import WaveModel, write_phi_csv

PETERSEN_EDGES = (
    [(i, (i + 1) % 5) for i in range(5)]
    + [(i, i + 5) for i in range(5)]
    + [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
)


def _rows(text: str) -> list[list[str]]:
    return [line.split(",") for line in text.strip().splitlines() if not line.startswith("#")]


class TestCliBasics:

    def test_no_command(self, capsys):
        assert main([]) == 1
        assert "usage" in capsys.readouterr().out

    def test_unknown_command(self, capsys):
        assert main(["frobnicate"]) == 1
        assert capsys.readouterr().err.startswith("Error:")

    def test_unknown_flag(self, capsys):
        assert main(["generate", "--colour", "red"]) == 1
        assert "Error:" in capsys.readouterr().err

    def test_validation_exit_code(self, capsys):
        assert main(["generate", "--n", "5"]) == 1
        assert "n*d must be even" in capsys.readouterr().err

    def test_numerical_exit_code(self, capsys, monkeypatch):
        def refuse(*args, **kwargs):
            raise RejectionLimit("no simple graph after 148 restarts")

        monkeypatch.setattr("regperc.cli.generate_regular", refuse)
        assert main(["generate", "--n", "10"]) == 2
        assert "148 restarts" in capsys.readouterr().err


class TestCliGenerate:

    def test_stdout(self, capsys):
        assert main(["generate", "--n", "20", "--d", "3", "--seed", "4"]) == 0
        out, err = capsys.readouterr()
        data = json.loads(out)
        assert data["n"] == 20
        assert data["d"] == 3
        assert len(data["edges"]) == 30
        assert err.startswith("generated n=20 d=3 seed=4")

    def test_out_and_stats(self, capsys, tmp_path):
        path = tmp_path / "g.json"
        assert main(["generate", "--n", "20", "--out", str(path), "--stats"]) == 0
        assert json.loads(path.read_text())["n"] == 20
        out = capsys.readouterr().out
        assert "C3=" in out
        assert "diameter=" in out
        assert "tree-like r=2:" in out

    def test_deterministic(self, capsys):
        main(["generate", "--n", "30", "--seed", "2"])
        first = capsys.readouterr().out
        main(["generate", "--n", "30", "--seed", "2"])
        assert capsys.readouterr().out == first

    def test_restart_policy_flag(self, capsys):
        assert main(["generate", "--n", "20", "--restarts", "scaled"]) == 0
        assert main(["generate", "--n", "20", "--restarts", "often"]) == 1
        assert "--restarts" in capsys.readouterr().err


class TestCliSpectrum:

    def test_graph_file(self, capsys, tmp_path):
        graph = tmp_path / "petersen.json"
        graph.write_text(json.dumps({"n": 10, "d": 3, "seed": 0, "edges": PETERSEN_EDGES}))
        vec = tmp_path / "v.csv"
        rc = main(["spectrum", "--graph", str(graph), "--lambda", "1", "--vector-out", str(vec)])
        assert rc == 0
        out, err = capsys.readouterr()
        rows = _rows(out)
        assert rows[0] == ["index", "lambda", "residual"]
        eigenvalues = sorted(float(r[1]) for r in rows[1:])
        assert eigenvalues[0] == pytest.approx(-2.0)
        assert eigenvalues[-1] == pytest.approx(3.0)
        assert "McKay TV distance" in err
        header, body = read_csv(vec)
        assert header == ["vertex", "value"]
        assert len(body) == 10

    def test_missing_graph_file(self, capsys, tmp_path):
        assert main(["spectrum", "--graph", str(tmp_path / "absent.json")]) == 1
        assert "--graph" in capsys.readouterr().err

    def test_size_cap(self, capsys):
        assert main(["spectrum", "--n", "5000"]) == 1
        assert "cap" in capsys.readouterr().err


class TestCliSweep:

    def test_sweep(self, capsys):
        rc = main(["sweep", "--n", "400", "--d", "3", "--seed", "8", "--lambda", "0"])
        assert rc == 0
        out, err = capsys.readouterr()
        rows = _rows(out)
        assert rows[0] == ["alpha", "induced", "max_component", "ratio"]
        assert rows[-1][1] == "400"
        assert "alpha_c=" in err

    def test_sweep_several_indices(self, capsys, tmp_path):
        out = tmp_path / "curves.csv"
        argv = ["sweep", "--n", "400", "--d", "3", "--seed", "8", "--index", "100", "--index", "250",
                "--out", str(out)]
        assert main(argv) == 0
        header, body = read_csv(out)
        assert header == ["index", "lambda", "alpha", "induced", "max_component", "ratio"]
        assert {r[0] for r in body} == {"100", "250"}
        assert sum(r[3] == "400" for r in body) == 2
        report = capsys.readouterr().out
        assert "sweep index=100" in report
        assert "sweep index=250" in report

    def test_sweep_index_out_of_range(self, capsys):
        assert main(["sweep", "--n", "40", "--index", "40"]) == 1
        assert "--index" in capsys.readouterr().err


class TestCliModel:

    def test_model_phi(self, capsys):
        assert main(["model-phi", "--d", "3", "--lambda", "0", "--kmax", "6"]) == 0
        rows = _rows(capsys.readouterr().out)
        assert rows[0] == ["k", "phi"]
        assert len(rows) == 8
        assert float(rows[1][1]) == pytest.approx(1.0)
        assert float(rows[3][1]) == pytest.approx(-0.5)

    def test_model_phi_matches_module_writer(self, tmp_path):
        out = tmp_path / "phi.csv"
        assert main(["model-phi", "--d", "4", "--lambda", "0.5", "--kmax", "5", "--out", str(out)]) == 0
        expected = write_phi_csv(WaveModel(0.5, 4), 5, tmp_path / "direct.csv")
        assert out.read_bytes() == expected.read_bytes()

    def test_outside_spectrum(self, capsys):
        assert main(["model-phi", "--lambda", "3.5"]) == 1
        assert "--lambda" in capsys.readouterr().err

    def test_model_critical(self, capsys, tmp_path):
        out = tmp_path / "m.csv"
        rc = main(["model-critical", "--lambda-grid=-0.4,0,0.4", "--quad-nodes", "64",
                   "--tol", "0.01", "--out", str(out)])
        assert rc == 0
        header, body = read_csv(out)
        assert header[:3] == ["d", "lambda", "alpha_c"]
        assert [r[1] for r in body] == ["-0.40000000000000002", "0", "0.40000000000000002"]
        assert "minimum alpha_c" in capsys.readouterr().out

    def test_sample_wave(self, capsys):
        rc = main(["sample-wave", "--d", "3", "--lambda", "0", "--radius", "2", "--count", "3", "--seed", "7"])
        assert rc == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "# d=3,lambda=0,radius=2,seed=7"
        assert lines[1].split(",") == [f"v{i}" for i in range(10)]
        assert len(lines) == 5


class TestCliExperiments:

    def test_critical_curve_independent_of_workers(self, capsys, monkeypatch):
        argv = ["critical-curve", "--n", "40", "--realizations", "2", "--lambda-bins", "4", "--seed", "3"]
        monkeypatch.setenv("REGPERC_WORKERS", "1")
        assert main(argv) == 0
        serial = capsys.readouterr().out
        monkeypatch.setenv("REGPERC_WORKERS", "2")
        assert main(argv) == 0
        assert capsys.readouterr().out == serial
        assert _rows(serial)[0] == ["d", "lambda_bin", "alpha_c_mean", "alpha_c_stderr", "count"]

    def test_sharpening(self, capsys):
        assert main(["sharpening", "--sizes", "60,120", "--samples", "2", "--seed", "1"]) == 0
        out, err = capsys.readouterr()
        rows = _rows(out)
        assert rows[0][:2] == ["d", "n"]
        assert [r[1] for r in rows[1:]] == ["60", "120"]
        assert err.startswith("sharpening d=3")

    def test_fig5(self, capsys, tmp_path):
        rc = main(["fig5", "--n", "60", "--realizations", "2", "--lambda-bins", "4",
                   "--quad-nodes", "64", "--tol", "0.05", "--out", str(tmp_path)])
        assert rc == 0
        assert capsys.readouterr().out.startswith("fig5 d=3:")
        assert (tmp_path / "fig5_d3.svg").exists()


class TestCliPlot:

    def test_plot(self, capsys, tmp_path):
        src = write_csv(tmp_path / "in.csv", ["x", "y"], [(0, 1.0), (1, 0.5), (2, 0.0)])
        svg = tmp_path / "out.svg"
        assert main(["plot", str(src), "--x", "x", "--y", "y", "--out", str(svg)]) == 0
        assert capsys.readouterr().out.strip() == f"wrote {svg}"
        assert 'id="series-y"' in svg.read_text()

    def test_plot_needs_out(self, capsys, tmp_path):
        src = write_csv(tmp_path / "in.csv", ["x", "y"], [(0, 1.0)])
        assert main(["plot", str(src), "--x", "x", "--y", "y"]) == 1
        assert "--out" in capsys.readouterr().err

    def test_missing_column(self, capsys, tmp_path):
        src = write_csv(tmp_path / "in.csv", ["x", "y"], [(0, 1.0)])
        rc = main(["plot", str(src), "--x", "x", "--y", "z", "--out", str(tmp_path / "o.svg")])
        assert rc == 1
        assert "--y" in capsys.readouterr().err


class TestCliConfigAndLogging:

    def test_config_file(self, capsys, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("d = 3\nlambda = 0\nkmax = 3\n")
        assert main(["model-phi", "--config", str(conf)]) == 0
        assert len(_rows(capsys.readouterr().out)) == 5

    def test_flag_overrides_config(self, capsys, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("kmax = 3\n")
        assert main(["model-phi", "--config", str(conf), "--kmax", "1"]) == 0
        assert len(_rows(capsys.readouterr().out)) == 3

    def test_bad_config(self, capsys, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("d = 3\ncolour = red\n")
        assert main(["model-phi", "--config", str(conf)]) == 1
        assert "line 2" in capsys.readouterr().err

    def test_log_json(self, capsys, tmp_path):
        log = tmp_path / "run.json"
        assert main(["generate", "--n", "20", "--log-json", str(log)]) == 0
        data = json.loads(log.read_text())
        assert data["command"] == "generate"
        assert data["status"] == "completed"
        assert data["tasks"][0]["task_id"] == "generate"

    def test_log_json_records_failure(self, capsys, tmp_path):
        log = tmp_path / "run.json"
        assert main(["generate", "--n", "5", "--log-json", str(log)]) == 1
        data = json.loads(log.read_text())
        assert data["status"] == "failed"
        assert data["errors"]

    def test_verbose(self, capsys):
        assert main(["model-phi", "--kmax", "2", "--verbose"]) == 0
        assert "Run: model-phi [completed]" in capsys.readouterr().err
