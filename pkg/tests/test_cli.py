import json

import pytest

from fylab.cli import main, parse_loss


def read(path):
    return path.read_bytes()


def test_parse_loss():
    assert parse_loss("tsallis-1.5").name == parse_loss("tsallis:1.5").name == parse_loss("tsallis", 1.5).name
    assert parse_loss("logistic").name == parse_loss("shannon").name
    assert parse_loss("tsallis-1.5", 2.0).potential.q == 2.0


def test_analyze_writes_outputs(tmp_path, capsys):
    code = main(["analyze", "--loss", "tsallis-2", "--out", str(tmp_path), "--label", "a"])
    assert code == 0
    run_dir = tmp_path / "analyze" / "a"
    body = json.loads((run_dir / "analysis.json").read_text())
    assert body["margin"] == pytest.approx(2.0)
    meta = json.loads((run_dir / "meta.json").read_text())
    assert meta["command"] == "analyze" and meta["settings"]["eps_bar"] == 0.01
    assert (run_dir / "rho.csv").read_text().startswith("lambda,rho\n")
    assert json.loads(capsys.readouterr().out) == body


@pytest.mark.parametrize("argv", [
    ["analyze", "--loss", "nonsense"],
    ["analyze", "--loss", "tsallis-0"],
    ["rates", "--eps"],
    ["verify", "medium"],
    ["pilot", "--eta", "-1"],
    ["analyze"],
])
def test_usage_errors_exit_2(argv, tmp_path):
    try:
        code = main(argv + ["--out", str(tmp_path)])
    except SystemExit as exc:
        code = exc.code
    assert code == 2


def test_out_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("FYLAB_OUT", str(tmp_path / "env"))
    assert main(["analyze", "--loss", "gini", "--label", "x"]) == 0
    assert (tmp_path / "env" / "analyze" / "x" / "analysis.json").exists()


def pilot_argv(out, label, threads):
    return ["pilot", "--loss", "tsallis-2", "--loss", "logistic", "--eta", "1", "--eta", "16",
            "--steps", "500", "--out", str(out), "--label", label, "--threads", str(threads)]


def test_pilot_outputs_are_reproducible(tmp_path):
    assert main(pilot_argv(tmp_path, "one", 1)) == 0
    assert main(pilot_argv(tmp_path, "two", 3)) == 0
    one, two = tmp_path / "pilot" / "one", tmp_path / "pilot" / "two"
    csvs = sorted(p.name for p in one.glob("*.csv"))
    assert len(csvs) == 4
    for name in csvs + ["summary.json"]:
        assert read(one / name) == read(two / name), name
    summary = json.loads((one / "summary.json").read_text())
    assert [(r["loss"], r["eta"]) for r in summary["runs"]] == sorted((r["loss"], r["eta"]) for r in summary["runs"])
    margin_rows = [r for r in summary["runs"] if "norm_bound" in r]
    assert margin_rows and all(r["sup_norm"] <= r["norm_bound"] for r in margin_rows)


def test_pilot_from_csv(tmp_path):
    data = tmp_path / "d.csv"
    data.write_text("x1,x2,y\n0.9,0.2,1\n-0.8,0.1,-1\n0.5,-0.3,1\n")
    argv = ["pilot", "--loss", "gini", "--eta", "2", "--steps", "50", "--data", str(data),
            "--out", str(tmp_path), "--label", "c"]
    assert main(argv) == 0
    meta = json.loads((tmp_path / "pilot" / "c" / "meta.json").read_text())
    assert meta["settings"]["data"] == str(data)


def test_rates(tmp_path):
    argv = ["rates", "--loss", "tsallis-2", "--eta", "4", "--eps", "0.1", "0.01", "--steps", "2000",
            "--out", str(tmp_path), "--label", "r"]
    assert main(argv) == 0
    body = json.loads((tmp_path / "rates" / "r" / "ratefit.json").read_text())
    assert body["within_bounds"] and body["eps_grid"] == [0.1, 0.01]


@pytest.mark.slow
def test_verify_fast_end_to_end(tmp_path, capsys):
    code = main(["verify", "fast", "--out", str(tmp_path), "--label", "v", "--threads", "2"])
    body = json.loads((tmp_path / "verify" / "v" / "report.json").read_text())
    assert code == (0 if body["ok"] else 1)
    assert body["counts"]["pass"] > 200
    assert "passed" in capsys.readouterr().out
