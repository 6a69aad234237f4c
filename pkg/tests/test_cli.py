import pytest
import toml

from app.cli import build_parser, cli_main


@pytest.fixture
def config_file(tmp_path):
    def write(**overrides):
        data = {
            "name": "cli",
            "runs": 2,
            "weights": "uniform",
            "suite": {"kind": "desk", "dimensions": [4], "problems": [1, 2, 3]},
            "algorithms": {"arrde": {}, "de": {}},
            "budget": {"multiplier": 100},
            "output": {"directory": str(tmp_path / "out"), "checkpoint_every": 100},
        }
        data.update(overrides)
        path = tmp_path / "experiment.toml"
        path.write_text(toml.dumps(data))
        return path
    return write


def test_list_algorithms(capsys):
    assert cli_main(["list-algorithms"]) == 0
    names = [line.split()[0] for line in capsys.readouterr().out.splitlines()]
    assert {"de", "lshade", "jso", "arrde"} <= set(names)


def test_list_problems(capsys):
    assert cli_main(["list-problems", "--dimension", "4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 12
    assert lines[0].startswith("F01_bent_cigar_D4")


def test_list_problems_bad_dimension(capsys):
    assert cli_main(["list-problems", "--dimension", "2"]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_missing_config(capsys, tmp_path):
    assert cli_main(["run", str(tmp_path / "missing.cfg")]) == 2
    assert "not found" in capsys.readouterr().err


def test_bad_flags(capsys):
    assert cli_main(["score"]) == 2
    assert cli_main(["frobnicate"]) == 2
    assert cli_main(["score", "x", "--legacy", "cec1999"]) == 2
    assert "usage" in capsys.readouterr().err


def test_invalid_config_is_a_usage_error(config_file, capsys):
    assert cli_main(["run", str(config_file(algorithms={"nope": {}}))]) == 2
    assert "unknown algorithm" in capsys.readouterr().err


def test_run_score_and_table(config_file, tmp_path, capsys):
    path = config_file()
    assert cli_main(["run", str(path), "--threads", "1"]) == 0
    assert "12 records" in capsys.readouterr().out

    assert cli_main(["run", str(path)]) == 0
    assert "(0 new runs)" in capsys.readouterr().out

    out = tmp_path / "out"
    assert cli_main(["score", str(out), "--weights", "uniform", "--reference", "arrde", "--write"]) == 0
    report = capsys.readouterr().out
    assert "0/3/0" in report and "S_tot" in report
    assert (out / "score_report.txt").exists() and (out / "score_rows.csv").exists()

    assert cli_main(["table", str(out)]) == 0
    assert "F01_bent_cigar_D4" in capsys.readouterr().out
    assert not (out / "error_table.txt").exists()


def test_score_errors(config_file, tmp_path, capsys):
    assert cli_main(["score", str(tmp_path / "nothing")]) == 2
    assert cli_main(["run", str(config_file())]) == 0
    out = tmp_path / "out"
    assert cli_main(["score", str(out), "--weights", "uniform", "--reference", "ghost"]) == 2
    # default desk weights do not cover D = 4
    assert cli_main(["score", str(out)]) == 2
    next(out.rglob("run_000.json")).write_text("{broken")
    assert cli_main(["score", str(out), "--weights", "uniform"]) == 1
    assert "DataError" in capsys.readouterr().err


def test_sweep(config_file, tmp_path, capsys):
    path = config_file(budget={"multiplier": 100, "sweep": [50, 100]})
    assert cli_main(["sweep", str(path), "--threads", "1"]) == 0
    output = capsys.readouterr().out
    assert "nmd" in output
    assert (tmp_path / "out" / "budget_sweep.csv").exists()
    assert (tmp_path / "out" / "sweep" / "nmd_50").is_dir()


def test_parser_defaults():
    args = build_parser().parse_args(["score", "results/demo"])
    assert args.weights == "desk" and args.legacy == [] and not args.write
