from pathlib import Path

import pytest

from wimaxsim.cli import main
from wimaxsim.metrics import CSV_HEADER

TRACES = Path(__file__).resolve().parent.parent / "traces"


def test_simulate_writes_csv(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code = main(["simulate", "--set", "preset=download_only",
                 "--set", "n_ss=2", "--set", "duration_s=5",
                 "--set", "warmup_s=1", "--seed", "1,2", "--out", str(out)])
    assert code == 0
    lines = out.read_text(encoding="utf-8").strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3  # one row per seed


def test_simulate_stdout(capsys):
    code = main(["simulate", "--set", "preset=download_only",
                 "--set", "n_ss=1", "--set", "duration_s=1",
                 "--set", "warmup_s=0", "--seed", "1"])
    assert code == 0
    assert capsys.readouterr().out.startswith(CSV_HEADER)


def test_simulate_config_file(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("preset = download_only\nn_ss = 1\nduration_s = 1\n"
                   "warmup_s = 0\n", encoding="utf-8")
    out = tmp_path / "o.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    assert out.exists()


def test_bad_config_exits_one(capsys):
    assert main(["simulate", "--set", "n_ss=zero"]) == 1
    assert "n_ss" in capsys.readouterr().err


def test_unknown_key_exits_one(capsys):
    assert main(["simulate", "--set", "wibble=1"]) == 1


def test_event_log_written(tmp_path):
    out = tmp_path / "run.csv"
    log = tmp_path / "events.log"
    code = main(["simulate", "--set", "preset=download_only",
                 "--set", "n_ss=1", "--set", "duration_s=2",
                 "--set", "warmup_s=0", "--seed", "3",
                 "--out", str(out), "--log", str(log)])
    assert code == 0
    assert log.read_text(encoding="utf-8").count("\n") > 10


def test_sweep_csv_and_figure(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--set", "preset=download_only",
                 "--set", "duration_s=2", "--set", "warmup_s=0",
                 "--axis", "n_ss=1,2", "--policies", "rpg,dda_i",
                 "--seed", "1", "--jobs", "1", "--out", str(out)])
    assert code == 0
    rows = out.read_text(encoding="utf-8").strip().split("\n")
    assert len(rows) == 5  # header + 2 axis values x 2 policies x 1 seed
    fig = tmp_path / "sweep_trends.png"
    assert fig.exists() and fig.stat().st_size > 0


def test_sweep_no_figures(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--set", "preset=download_only",
                 "--set", "duration_s=1", "--set", "warmup_s=0",
                 "--axis", "n_ss=1", "--policies", "rpg", "--seed", "1",
                 "--jobs", "1", "--out", str(out), "--no-figures"])
    assert code == 0
    assert not (tmp_path / "sweep_trends.png").exists()


def test_sweep_bad_axis(capsys):
    assert main(["sweep", "--axis", "bogus=1,2", "--policies", "rpg"]) == 1


def test_replay_golden_pass(capsys):
    code = main(["replay", "--trace", str(TRACES / "fig2.trace"),
                 "--policy", "rpg",
                 "--golden", str(TRACES / "golden" / "fig2_rpg.golden")])
    assert code == 0


def test_replay_golden_mismatch_exits_two(capsys):
    code = main(["replay", "--trace", str(TRACES / "fig2.trace"),
                 "--policy", "dda_i",
                 "--golden", str(TRACES / "golden" / "fig2_rpg.golden")])
    assert code == 2
    assert "mismatch" in capsys.readouterr().err


def test_replay_prints_timeline(capsys):
    code = main(["replay", "--trace", str(TRACES / "fig4.trace"),
                 "--policy", "dda_d"])
    assert code == 0
    out = capsys.readouterr().out
    assert "final perceived=200 actual=200" in out


def test_replay_missing_trace(capsys):
    assert main(["replay", "--trace", "/no/such.trace", "--policy", "rpg"]) == 1
