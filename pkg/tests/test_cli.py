"""CLI: flags, config files, output artifacts, report rendering."""

import csv
import json

import pytest

from suba.cli import main


def run_cli(args):
    return main(args)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_study_writes_outputs(tmp_path, capsys):
    out = tmp_path / "study"
    code = run_cli(
        [
            "study", "--scenario", "2", "--designs", "er,ar",
            "--replicates", "3", "--N", "24", "--runin", "8",
            "--seed", "5", "--jobs", "1", "--out", str(out), "--quiet",
        ]
    )
    assert code == 0
    rows = read_csv(out / "replicates.csv")
    assert len(rows) == 6  # 3 replicates x 2 designs
    agg = json.loads((out / "aggregate.json").read_text())
    assert agg["scenario"] == 2
    assert set(agg["designs"]) == {"er", "ar"}
    assert not (out / "orr_diffs.csv").exists()  # no suba, no diffs


def test_study_with_suba_writes_diffs(tmp_path):
    out = tmp_path / "study"
    run_cli(
        [
            "study", "--scenario", "2", "--designs", "suba,er",
            "--replicates", "2", "--N", "20", "--runin", "8",
            "--seed", "5", "--jobs", "1", "--out", str(out), "--quiet",
        ]
    )
    diffs = read_csv(out / "orr_diffs.csv")
    assert len(diffs) == 2
    assert "orr_suba_minus_er" in diffs[0]
    agg = json.loads((out / "aggregate.json").read_text())
    assert "orr_diffs" in agg
    assert "mean_stop_size" in agg["designs"]["suba"]


def test_config_file_overrides_flags(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"replicates": 2, "scenario": 6}))
    out = tmp_path / "study"
    run_cli(
        [
            "study", "--scenario", "2", "--designs", "er",
            "--replicates", "99", "--N", "20", "--runin", "8",
            "--jobs", "1", "--config", str(cfg), "--out", str(out), "--quiet",
        ]
    )
    agg = json.loads((out / "aggregate.json").read_text())
    assert agg["scenario"] == 6  # file wins over the flag
    assert agg["replicates"] == 2


def test_config_file_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(SystemExit):
        run_cli(
            [
                "study", "--designs", "er", "--out", str(tmp_path / "x"),
                "--config", str(cfg), "--quiet",
            ]
        )


def test_sweep_outputs_and_qdiffs(tmp_path):
    out = tmp_path / "sweep"
    run_cli(
        [
            "sweep", "--axis", "N", "--values", "8,16",
            "--scenario", "2", "--designs", "suba",
            "--replicates", "2", "--N", "16", "--runin", "8",
            "--seed", "1", "--jobs", "1", "--out", str(out), "--quiet",
        ]
    )
    summary = json.loads((out / "sweep_summary.json").read_text())
    assert summary["axis"] == "N"
    assert [s["value"] for s in summary["studies"]] == [8, 16]
    q = read_csv(out / "q_diffs.csv")
    assert len(q) == 4  # 2 values x 2 replicates
    assert {row["N"] for row in q} == {"8", "16"}
    assert (out / "value_8" / "aggregate.json").exists()
    assert (out / "value_16" / "replicates.csv").exists()


def test_report_on_study_dir(tmp_path, capsys):
    out = tmp_path / "study"
    run_cli(
        [
            "study", "--scenario", "2", "--designs", "er",
            "--replicates", "2", "--N", "20", "--runin", "8",
            "--jobs", "1", "--out", str(out), "--quiet",
        ]
    )
    capsys.readouterr()
    assert run_cli(["report", str(out)]) == 0
    text = capsys.readouterr().out
    assert "scenario 2" in text
    assert "ANP" in text


def test_report_on_sweep_summary(tmp_path, capsys):
    out = tmp_path / "sweep"
    run_cli(
        [
            "sweep", "--axis", "phi", "--values", "0.4,0.8",
            "--scenario", "6", "--designs", "er",
            "--replicates", "2", "--N", "20", "--runin", "8",
            "--jobs", "1", "--out", str(out), "--quiet",
        ]
    )
    capsys.readouterr()
    assert run_cli(["report", str(out)]) == 0
    text = capsys.readouterr().out
    assert "sweep over phi" in text
    assert "0.4" in text and "0.8" in text


def test_report_missing_file(tmp_path):
    with pytest.raises(SystemExit):
        run_cli(["report", str(tmp_path)])
