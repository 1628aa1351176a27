import json

import pytest

from mctree.cli import main, read_config


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def data_lines(text):
    return [ln for ln in text.splitlines() if not ln.startswith("#")]


def test_price_row_and_config_echo(capsys):
    code, out, _ = run(capsys, "price", "--method", "corr", "--n", "20", "--m-draws", "500", "--seed", "42")
    assert code == 0
    header, row = data_lines(out)
    assert header.split(",")[:3] == ["method", "S0", "K"]
    assert row.startswith("Corr-call,100.0,95.0")
    assert "# seed=42" in out and "# m_draws=500" in out
    assert out.startswith("# mctree price")


def test_json_mirrors_csv_fields(capsys):
    _, out, _ = run(capsys, "price", "--n", "10", "--m-draws", "100", "--format", "json")
    doc = json.loads(out)
    assert doc["config"]["n"] == 10
    assert set(doc["rows"][0]) >= {"mean", "sd", "ci_low", "ci_high", "seed"}


def test_usage_error_exit_code_and_record(capsys):
    code, _, err = run(capsys, "price", "--method", "lsm")
    assert code == 2
    assert json.loads(err)["error"] == "usage"
    code, _, err = run(capsys, "american", "--method", "corr")
    assert code == 2


def test_domain_error_exit_code(capsys):
    code, _, err = run(capsys, "price", "--sigma", "-0.2")
    assert code == 3
    rec = json.loads(err)
    assert rec["error"] == "domain" and rec["exit_code"] == 3
    code, _, _ = run(capsys, "price", "--mix", "4", "--m-draws", "10")
    assert code == 3


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# demo\nn = 12\nm-draws=64\nseed=5\nmethod=bias\n")
    assert read_config(str(cfg))["m_draws"] == "64"
    _, out, _ = run(capsys, "price", "--config", str(cfg), "--seed", "6")
    assert "# n=12" in out and "# seed=6" in out and "# method=bias" in out
    cfg.write_text("bogus=1\n")
    code, _, _ = run(capsys, "price", "--config", str(cfg))
    assert code == 2


def test_artifact_replays_itself(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("MCTREE_OUTPUT_DIR", str(tmp_path))
    assert main(["price", "--n", "15", "--m-draws", "3000", "--seed", "8", "--out", "first.csv"]) == 0
    first = tmp_path / "first.csv"
    assert main(["price", "--config", str(first), "--workers", "4", "--out", "second.csv"]) == 0
    assert first.read_bytes() == (tmp_path / "second.csv").read_bytes()


def test_density_metrics_line(capsys):
    code, out, _ = run(capsys, "density", "--n", "50", "--mix", "9", "--metrics")
    assert code == 0
    values = dict(zip(*[ln.split(",") for ln in data_lines(out)]))
    assert float(values["kl"]) >= 0


def test_density_grid_modes_agree(capsys):
    _, direct, _ = run(capsys, "density", "--n", "6", "--mix", "3", "--points", "7")
    _, rational, _ = run(capsys, "density", "--n", "6", "--mix", "3", "--points", "7", "--mode", "rational")
    a = [float(ln.split(",")[1]) for ln in data_lines(direct)[1:]]
    b = [float(ln.split(",")[1]) for ln in data_lines(rational)[1:]]
    assert a == pytest.approx(b, rel=1e-12)


@pytest.mark.parametrize("argv", [
    ["baseline", "--model", "bs", "--kind", "put"],
    ["baseline", "--model", "crr", "--style", "american", "--kind", "put", "--n", "40"],
    ["baseline", "--model", "mc", "--m-draws", "2000"],
    ["baseline", "--model", "lsm", "--style", "american", "--kind", "put", "--m-draws", "500", "--n", "10"],
    ["american", "--n", "10", "--m-draws", "50"],
    ["cva", "--n", "20", "--m-draws", "30"],
    ["cva", "--n", "10", "--m-draws", "20", "--profile"],
])
def test_commands_run(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 0
    assert len(data_lines(out)) >= 2


def test_baseline_flag_combinations(capsys):
    assert run(capsys, "baseline", "--model", "lsm")[0] == 2
    assert run(capsys, "baseline", "--model", "bs", "--style", "american")[0] == 2


def test_reproduce_lattice_table(capsys):
    code, out, _ = run(capsys, "reproduce", "--table", "3")
    assert code == 0
    rows = data_lines(out)[1:]
    assert len(rows) == 8 and all(r.endswith(",PASS") for r in rows)


def test_reproduce_needs_one_target(capsys):
    assert run(capsys, "reproduce")[0] == 2
    assert run(capsys, "reproduce", "--table", "3", "--figure", "parity")[0] == 2


def test_reproduce_parity_figure(capsys):
    code, out, _ = run(capsys, "reproduce", "--figure", "parity", "--m-draws", "200")
    assert code == 0
    lines = data_lines(out)
    assert lines[0] == "N,call_minus_put,forward,gap,gap_se"
    assert len(lines) == 21
