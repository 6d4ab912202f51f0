"""
Tests for the command-line entry point.
"""

import csv

import pytest

from cli import _default_checkpoints, main

# RUN TESTS:
# pytest tests/test_cli.py


@pytest.fixture
def episode_csv(tmp_path):
    out = tmp_path / "results.csv"
    argv = ["simulate", "--d", "4", "--k", "2", "--s0", "1", "--n", "2", "--decisions", "40", "--reps", "3"]
    assert main([*argv, "--seed", "7", "--out", str(out)]) == 0
    return out


def test_simulate_writes_episode_and_summary_files(episode_csv, capsys):
    with episode_csv.open() as f:
        rows = list(csv.DictReader(f))

    assert len(rows) == 3 * 20
    assert {row["cell"] for row in rows} == {"d4-k2-q1-n2"}
    assert (episode_csv.parent / "results_summary.csv").exists()


def test_simulate_from_grid_file(tmp_path, capsys):
    grid = tmp_path / "grid.txt"
    grid.write_text("d = 4, 5\nk = 2\ns0 = 1\nq = 1\nn = 1, 2\ndecisions = 8\nreps = 1\n")
    out = tmp_path / "grid.csv"

    assert main(["simulate", "--grid", str(grid), "--out", str(out)]) == 0

    printed = capsys.readouterr().out
    for cell in ("d4-k2-q1-n1", "d4-k2-q1-n2", "d5-k2-q1-n1", "d5-k2-q1-n2"):
        assert cell in printed


def test_simulate_needs_a_world(tmp_path):
    assert main(["simulate", "--out", str(tmp_path / "x.csv")]) == 2


def test_verify_table(episode_csv, tmp_path):
    out = tmp_path / "verify.csv"

    assert main(["verify", "--in", str(episode_csv), "--out", str(out), "--checkpoints", "5,20"]) == 0

    with out.open() as f:
        rows = list(csv.DictReader(f))
    assert [int(row["epoch"]) for row in rows] == [5, 20]
    assert all(row["cell"] == "d4-k2-q1-n2" and row["replications"] == "3" for row in rows)
    assert float(rows[0]["bound"]) == pytest.approx(min(1.0, 10 / 5**4))


def test_verify_reads_arm_count_from_cell(episode_csv, tmp_path):
    out = tmp_path / "verify.csv"

    assert main(["verify", "--in", str(episode_csv), "--out", str(out)]) == 0

    with out.open() as f:
        rows = list(csv.DictReader(f))
    assert [int(row["epoch"]) for row in rows] == [4, 8, 16, 20]
    assert float(rows[0]["bound"]) == pytest.approx(min(1.0, 10 / 4**4))


def test_verify_rejects_arm_flag(episode_csv, tmp_path):
    with pytest.raises(SystemExit):
        main(["verify", "--in", str(episode_csv), "--out", str(tmp_path / "v.csv"), "--k", "2"])


def test_verify_missing_input(tmp_path):
    assert main(["verify", "--in", str(tmp_path / "none.csv"), "--out", str(tmp_path / "v.csv")]) == 2


def test_constants_with_given_assumptions(capsys):
    argv = ["constants", "--d", "100", "--k", "2", "--s0", "5", "--sigma", "1.0", "--p-star", "0.3", "--phi0", "1.0"]

    assert main(argv) == 0

    lines = capsys.readouterr().out.splitlines()
    data = dict(line.split(" = ", 1) for line in lines)
    assert all(" = " in line for line in lines)
    assert {"c1", "c2", "lambda1"} <= data.keys()
    assert float(data["c1"]) == pytest.approx(1 / 12800)
    assert float(data["lambda1"]) == pytest.approx(0.3 / 320)


def test_default_checkpoints():
    assert _default_checkpoints(k=2, q=1, last_epoch=20) == [4, 8, 16, 20]
    assert _default_checkpoints(k=3, q=1, last_epoch=8) == []
    assert _default_checkpoints(k=3, q=1, last_epoch=40) == [16, 32, 40]
