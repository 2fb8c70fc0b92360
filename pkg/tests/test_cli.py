import csv
import io
import json

import pytest

from lbscluster import cli
from lbscluster.harness import ConfigError, ExperimentConfig, rows_csv, run, sweep

SMALL = ["--dataset", "blobs", "--eps", "2", "--min-pts", "5", "--k", "5",
         "--budget", "40", "--repetitions", "2"]


def _run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_run_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["run", *SMALL, "--methods", "hdbscan,baseline", "--out", str(a)]) == 0
    assert cli.main(["run", *SMALL, "--methods", "hdbscan,baseline", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    report = json.loads(a.read_text())
    assert report["config"]["min_cell_size"] == 2.0
    assert report["config"]["l"] == 2 and report["config"]["merge_threshold"] == 4.0
    for method in ("hdbscan", "baseline"):
        reps = report["methods"][method]["reps"]
        assert [r["seed"] for r in reps] == [0, 1]
        assert all(r["queries"] <= 40 for r in reps)
        assert "seconds" not in reps[0]


def test_timing_flag_adds_seconds(capsys):
    code, out, _ = _run(["run", *SMALL, "--timing", "--repetitions", "1"], capsys)
    assert code == 0
    assert "seconds" in json.loads(out)["methods"]["hdbscan"]["reps"][0]


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dataset": "blobs", "eps": 2, "min_pts": 5, "k": 5,
                               "budget": 10, "repetitions": 1}))
    code, out, _ = _run(["run", "--config", str(cfg), "--budget", "20"], capsys)
    assert code == 0
    assert json.loads(out)["config"]["budget"] == 20


@pytest.mark.parametrize("argv", [
    ["run", "--min-pts", "20", "--k", "10"],
    ["run", "--eps", "-1"],
    ["run", "--budget", "lots"],
    ["run", "--dataset", "/nonexistent/file.csv"],
    ["run", "--methods", "kmeans"],
    ["run", "--methods", "baseline", "--budget", "none"],
    ["run", "--curve", "peano", "--fanout", "4"],
    ["sweep", "--axis", "budget", "--values", " , "],
    ["generate", "blobs", "--param", "bogus=1", "--out", "/tmp/x.csv"],
    ["generate", "blobs", "--param", "nokey", "--out", "/tmp/x.csv"],
])
def test_config_errors_exit_2(argv, capsys):
    code, _, err = _run(argv, capsys)
    assert code == 2
    assert err.startswith("error:")


def test_bad_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text("[1, 2]")
    assert _run(["run", "--config", str(cfg)], capsys)[0] == 2
    cfg.write_text('{"colour": 1}')
    assert _run(["run", "--config", str(cfg)], capsys)[0] == 2


def test_argparse_usage_error_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["sweep", "--axis", "nope", "--values", "1"])
    assert exc.value.code == 2


def test_generate_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert cli.main(["generate", "moons", "--seed", "3", "--param", "n=50", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 50


def test_save_model_then_assign(tmp_path, capsys):
    model, pts, labels = tmp_path / "m.json", tmp_path / "p.csv", tmp_path / "l.csv"
    cli.main(["generate", "blobs", "--seed", "0", "--out", str(pts)])
    code, _, _ = _run(["run", *SMALL, "--repetitions", "1", "--budget", "none",
                       "--save-model", str(model)], capsys)
    assert code == 0
    assert cli.main(["assign", "--model", str(model), "--points", str(pts), "--out", str(labels)]) == 0
    rows = list(csv.DictReader(labels.open()))
    assert len(rows) == 200
    assert {r["label"] for r in rows} >= {"0", "1"}
    code, out, _ = _run(["assign", "--model", str(model), "--points", str(pts)], capsys)
    assert out == labels.read_text()


def test_assign_bad_model(tmp_path, capsys):
    bad = tmp_path / "m.json"
    bad.write_text("{}")
    pts = tmp_path / "p.csv"
    pts.write_text("1,2\n")
    assert _run(["assign", "--model", str(bad), "--points", str(pts)], capsys)[0] == 2


def test_assign_bad_points(tmp_path, capsys):
    model = tmp_path / "m.json"
    _run(["run", *SMALL, "--repetitions", "1", "--save-model", str(model)], capsys)
    pts = tmp_path / "p.csv"
    pts.write_text("1,2\nfoo\n")
    assert _run(["assign", "--model", str(model), "--points", str(pts)], capsys)[0] == 2


def test_single_value_sweep_equals_run():
    cfg = ExperimentConfig(dataset="blobs", eps=2, min_pts=5, k=5, budget=30, repetitions=2,
                           methods=("hdbscan", "baseline"))
    rows = sweep(cfg, "budget", ["30"])
    report = run(cfg)
    for row in rows:
        summary = report["methods"][row["method"]]["summary"]
        for metric, st in summary.items():
            assert row[f"{metric}_median"] == st["median"]
            assert row[f"{metric}_std"] == st["std"]


def test_sweep_cli_csv(capsys):
    code, out, _ = _run(["sweep", *SMALL, "--axis", "curve", "--values", "hilbert,peano,z"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["value"] for r in rows] == ["hilbert", "peano", "z"]
    assert float(rows[0]["rand_median"]) > 0


def test_sweep_rejects_bad_axis():
    with pytest.raises(ConfigError):
        sweep(ExperimentConfig(), "eps", [1])
    assert rows_csv([]).startswith("axis,value,method,")


def test_fetch_parses_before_saving(tmp_path, capsys):
    src = tmp_path / "src.txt"
    src.write_text("1 2\n3 4\n")
    out = tmp_path / "out.txt"
    code, _, err = _run(["fetch", "--url", src.as_uri(), "--out", str(out)], capsys)
    assert code == 0 and out.read_text() == "1 2\n3 4\n"
    assert "2 points" in err
    src.write_text("1 2\nbad row\n")
    out2 = tmp_path / "out2.txt"
    assert _run(["fetch", "--url", src.as_uri(), "--out", str(out2)], capsys)[0] == 2
    assert not out2.exists()


def test_budget_none_runs_to_termination(capsys):
    code, out, _ = _run(["run", *SMALL, "--budget", "none", "--repetitions", "1"], capsys)
    rep = json.loads(out)["methods"]["hdbscan"]["reps"][0]
    assert code == 0 and rep["queries"] > 0 and rep["rand"] > 0.9
