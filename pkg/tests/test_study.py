"""Study driver and CLI: grids, serialization, config precedence, failures."""

import json
import math
import re

import numpy as np
import pytest

from gekplate.cli import build_parser, config_from_args, main, read_config_file
from gekplate.mesh import build_structured_mesh, write_mesh
from gekplate.solver import SolverError
from gekplate.study import (
    CSV_COLUMNS,
    StudyConfig,
    format_tables,
    run_study,
    write_csv,
    write_json,
)

TINY = dict(example="1", ns=(2, 4), iotas=(1e-6,), etas=(10.0,))


def rows_without_timing(result):
    return [
        {k: v for k, v in row.items() if k != "solve_seconds"}
        for row in result.rows
    ]


def test_run_study_grid_order_and_rates():
    result = run_study(StudyConfig(**TINY))
    assert result.ok and len(result.rows) == 2
    first, second = result.rows
    assert (first["n"], second["n"]) == (2, 4)
    assert (first["dofs"], second["dofs"]) == (11, 59)
    assert (first["h"], second["h"]) == (0.5, 0.25)
    assert math.isnan(first["rate_norm_iota_h"])
    assert 0.0 < second["rate_norm_iota_h"] < 4.0
    assert first["solver"] == "direct" and first["residual"] < 1e-9
    assert first["osc"] > 0.0


def test_rate_chain_resets_between_series():
    config = StudyConfig(example="1", ns=(2, 4), iotas=(0.0, 1e-6), etas=(10.0,))
    result = run_study(config)
    assert len(result.rows) == 4
    # each (iota, eta) series restarts: NaN, finite, NaN, finite
    flags = [math.isnan(r["rate_norm_iota_h"]) for r in result.rows]
    assert flags == [True, False, True, False]


def test_csv_layout_and_determinism():
    result = run_study(StudyConfig(**TINY))
    text = write_csv(result)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + len(result.rows) and text.endswith("\n")
    cells = lines[1].split(",")
    assert cells[0] == "1" and cells[1] == "2"
    assert re.fullmatch(r"-?\d\.\d{12}e[+-]\d{2,3}", cells[CSV_COLUMNS.index("l2")])
    assert cells[CSV_COLUMNS.index("rate_norm_iota_h")] == "nan"

    again = run_study(StudyConfig(**TINY))
    assert rows_without_timing(result) == rows_without_timing(again)


def test_json_replaces_nan_with_null():
    result = run_study(StudyConfig(**TINY))
    payload = json.loads(write_json(result))
    assert payload["config"]["example"] == "1"
    assert payload["config"]["ns"] == [2, 4]
    assert payload["failures"] == []
    assert payload["rows"][0]["rate_norm_iota_h"] is None
    assert isinstance(payload["rows"][1]["rate_norm_iota_h"], float)
    assert isinstance(payload["rows"][0]["dofs"], int)


def test_format_tables_both_examples():
    text1 = format_tables(run_study(StudyConfig(**TINY)))
    assert "example 1" in text1 and "iota=1e-06" in text1
    assert "  -  " in text1  # the first level has no rate yet

    config2 = StudyConfig(example="2", ns=(2, 4), iotas=(1e-6,), etas=(10.0,))
    text2 = format_tables(run_study(config2))
    for label in ("norm_iota_h", "h1_semi", "h2_broken", "h3_broken", "l2"):
        assert label in text2


def test_mesh_file_runs_single_level(tmp_path):
    path = tmp_path / "square2.mesh"
    write_mesh(build_structured_mesh(2), path)
    config = StudyConfig(
        example="1", mesh_file=str(path), iotas=(1e-6,), etas=(10.0,)
    )
    assert config.ns == (0,)
    result = run_study(config)
    assert len(result.rows) == 1
    row = result.rows[0]
    assert abs(row["h"] - math.sqrt(2) / 2) < 1e-14  # largest diameter
    assert math.isnan(row["rate_norm_iota_h"])

    structured = run_study(StudyConfig(example="1", ns=(2,), iotas=(1e-6,),
                                       etas=(10.0,))).rows[0]
    assert abs(row["norm_iota_h"] - structured["norm_iota_h"]) < 1e-10


def test_threads_do_not_change_results():
    serial = run_study(StudyConfig(**TINY, threads=1))
    threaded = run_study(StudyConfig(**TINY, threads=2))
    assert rows_without_timing(serial) == rows_without_timing(threaded)


def test_solver_failures_become_nan_rows(monkeypatch):
    def broken(system, method="direct"):
        raise SolverError("synthetic breakdown")

    monkeypatch.setattr("gekplate.study.solve", broken)
    result = run_study(StudyConfig(**TINY))
    assert not result.ok and len(result.failures) == 2
    assert "synthetic breakdown" in result.failures[0]
    for row in result.rows:
        assert math.isnan(row["norm_iota_h"]) and math.isnan(row["l2"])
    assert "nan" in write_csv(result)
    assert json.loads(write_json(result))["rows"][0]["norm_iota_h"] is None


def test_config_validation():
    with pytest.raises(ValueError):
        StudyConfig(example="3")
    with pytest.raises(ValueError):
        StudyConfig(ns=(0, 4))
    with pytest.raises(ValueError):
        StudyConfig(etas=(0.0,))
    with pytest.raises(ValueError):
        StudyConfig(iotas=(-1.0,))
    with pytest.raises(ValueError):
        StudyConfig(example="custom")
    assert StudyConfig(example="1").iotas == (1.0, 1e-2, 1e-4, 1e-6, 0.0)
    assert StudyConfig(example="2").iotas == (1e-6, 1e-8)
    assert StudyConfig().quad_volume == 8
    assert StudyConfig().quad_error == 12
    assert StudyConfig().quad_edge == 4


def test_config_file_parsing(tmp_path):
    path = tmp_path / "study.cfg"
    path.write_text(
        "# comment line\n"
        "example = 1\n"
        "n = 2,4\n"
        "iota = 1e-6, 0\n"
        "quad_volume = 6   # underscores normalize to dashes\n"
    )
    values = read_config_file(str(path))
    assert values == {
        "example": "1",
        "n": (2, 4),
        "iota": (1e-6, 0.0),
        "quad-volume": 6,
    }
    bad = tmp_path / "bad.cfg"
    bad.write_text("mystery = 3\n")
    with pytest.raises(ValueError):
        read_config_file(str(bad))
    nokey = tmp_path / "nokey.cfg"
    nokey.write_text("just some words\n")
    with pytest.raises(ValueError):
        read_config_file(str(nokey))


def test_flags_override_config_file(tmp_path):
    path = tmp_path / "study.cfg"
    path.write_text("example = 1\nn = 2\niota = 1e-6\n")
    args = build_parser().parse_args(
        ["--config", str(path), "--n", "4", "--eta", "5"]
    )
    config = config_from_args(args)
    assert config.ns == (4,)
    assert config.iotas == (1e-6,)
    assert config.etas == (5.0,)


def test_cli_writes_csv(tmp_path, capsys):
    out = tmp_path / "study.csv"
    code = main(
        ["--example", "1", "--n", "2,4", "--iota", "1e-6", "--eta", "10",
         "--out", str(out)]
    )
    assert code == 0
    captured = capsys.readouterr()
    assert "example 1" in captured.out and f"wrote {out}" in captured.out
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS) and len(lines) == 3


def test_cli_writes_json(tmp_path):
    out = tmp_path / "study.json"
    code = main(
        ["--example", "1", "--n", "2", "--iota", "0", "--eta", "10",
         "--out", str(out), "--format", "json"]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["rows"][0]["n"] == 2


def test_cli_custom_problem_factory():
    code = main(
        ["--example", "custom", "--problem", "gekplate.problems:example1",
         "--n", "2", "--iota", "0", "--eta", "10"]
    )
    assert code == 0


def test_cli_error_paths(tmp_path, capsys):
    assert main(["--example", "custom", "--n", "2"]) == 2
    assert "problem factory" in capsys.readouterr().err

    assert main(["--config", str(tmp_path / "missing.cfg")]) == 2
    assert "error:" in capsys.readouterr().err

    assert main(["--example", "custom", "--problem", "gekplate.problems:nope",
                 "--n", "2"]) == 2
    assert "error:" in capsys.readouterr().err

    with pytest.raises(SystemExit):
        main(["--example", "3"])  # argparse rejects unknown choices
