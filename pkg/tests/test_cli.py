import math

import numpy as np
import pytest

from conftest import EXAMPLE_A, EXAMPLE_Y, SYSTEM_M
from tropreg.cli import EXIT_OK, EXIT_PARSE, EXIT_USAGE, main
from tropreg.formats import format_matrix, parse_matrices, parse_orbit, parse_report


@pytest.fixture
def example_files(tmp_path):
    A = tmp_path / "A.txt"
    y = tmp_path / "y.txt"
    A.write_text(format_matrix(EXAMPLE_A))
    y.write_text(format_matrix(EXAMPLE_Y))
    return str(A), str(y)


def summary(text):
    fields = {}
    for line in text.split("# summary")[1].splitlines():
        for token in line.split():
            key, _, value = token.partition("=")
            fields[key] = value
    return fields


def test_regress_brute(example_files, capsys):
    A, y = example_files
    assert main(["regress", "--A", A, "--y", y, "--solver", "brute"]) == EXIT_OK
    report = parse_report(capsys.readouterr().out)
    assert report.solver == "brute"
    assert report.seed == 0
    assert math.isclose(report.residual_2norm, 1 / math.sqrt(2), rel_tol=1e-12)
    assert len(report.trace) == 7


def test_regress_newton_is_reproducible(example_files, capsys):
    A, y = example_files
    main(["regress", "--A", A, "--y", y, "--seed", "3", "--starts", "4"])
    first = capsys.readouterr().out
    main(["regress", "--A", A, "--y", y, "--seed", "3", "--starts", "4", "--threads", "2"])
    assert capsys.readouterr().out == first
    assert parse_report(first).counters["starts"] == 4


def test_regress_single_newton_run(example_files, capsys):
    A, y = example_files
    assert main(["regress", "--A", A, "--y", y, "--mu", "0.5", "--patience", "3"]) == EXIT_OK
    report = parse_report(capsys.readouterr().out)
    assert {record.mu for record in report.trace} == {0.5}


def test_regress_regularized(example_files, capsys):
    A, y = example_files
    assert main(["regress", "--A", A, "--y", y, "--solver", "brute", "--lambda", "1"]) == EXIT_OK
    report = parse_report(capsys.readouterr().out)
    assert report.solver == "irsls"
    assert "outer_iterations" in report.counters


def test_infeasible_instance_is_not_an_error(tmp_path, capsys):
    A, y = tmp_path / "A.txt", tmp_path / "y.txt"
    A.write_text(format_matrix([[0.0], [0.0]]))
    y.write_text(format_matrix([-np.inf, 1.0]))
    assert main(["regress", "--A", str(A), "--y", str(y), "--solver", "brute"]) == EXIT_OK
    report = parse_report(capsys.readouterr().out)
    assert report.verdict == "infeasible"
    assert report.residual_2norm == math.inf


def test_malformed_matrix(tmp_path, example_files, capsys):
    _, y = example_files
    bad = tmp_path / "bad.txt"
    bad.write_text("maxplus 3 2\n0 0\n1\n0 1\n")
    assert main(["regress", "--A", str(bad), "--y", y]) == EXIT_PARSE
    err = capsys.readouterr().err
    assert "line 3" in err
    assert "bad.txt" in err


def test_usage_errors(tmp_path, example_files, capsys):
    A, y = example_files
    assert main(["regress", "--A", str(tmp_path / "missing.txt"), "--y", y]) == EXIT_USAGE
    assert main(["regress", "--A", A, "--y", y, "--mu", "1.5"]) == EXIT_USAGE
    assert main(["regress", "--A", A, "--y", y, "--solver", "brute", "--mu", "0.5"]) == EXIT_USAGE
    assert main(["regress", "--A", A, "--y", y, "--lambda", "-1"]) == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_argument_errors_exit_with_usage_code():
    with pytest.raises(SystemExit) as ctx:
        main(["regress"])
    assert ctx.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as ctx:
        main(["no-such-command"])
    assert ctx.value.code == EXIT_USAGE


def test_patterns(example_files, capsys):
    A, y = example_files
    assert main(["patterns", "--A", A]) == EXIT_OK
    out = capsys.readouterr().out
    assert len([line for line in out.splitlines() if line.startswith("pattern=")]) == 7
    fields = summary(out)
    assert fields["patterns"] == "7"
    assert fields["max_dimension"] == "2"

    assert main(["patterns", "--A", A, "--y", y]) == EXIT_OK
    out = capsys.readouterr().out
    assert "pattern=1;1;2 dimension=2 admissible=true" in out


def test_sysid_pipeline(tmp_path, capsys):
    M = tmp_path / "M.txt"
    M.write_text(format_matrix(SYSTEM_M))
    orbit_file = tmp_path / "orbit.txt"
    args = ["sysid-simulate", "--M", str(M), "--N", "30", "--sigma", "1", "--seed", "2"]
    assert main(args + ["--out", str(orbit_file)]) == EXIT_OK
    orbit = parse_orbit(orbit_file.read_text())
    assert orbit.states.shape == (4, 31)
    assert orbit.seed == 2

    assert main(["sysid-identify", "--orbit", str(orbit_file), "--starts", "2"]) == EXIT_OK
    out = capsys.readouterr().out
    (estimate,) = parse_matrices(out)
    assert estimate.shape == (4, 4)
    assert "evidence 4 4" in out
    assert "frobenius_residual=" in out


def test_hardgen_family(capsys):
    assert main(["hardgen", "--family", "1;2;1,2", "--n", "2", "--k", "2"]) == EXIT_OK
    out = capsys.readouterr().out
    A, y = parse_matrices(out)
    assert A.shape == (9, 3)
    assert y.shape == (9, 1)
    assert "setcover n=2 m=3 k=2 family=1;2;1,2 cover=true" in out


def test_hardgen_errors(capsys):
    assert main(["hardgen", "--family", "1;x", "--n", "2", "--k", "2"]) == EXIT_USAGE
    assert main(["hardgen", "--family", "1;2;1,2"]) == EXIT_USAGE
    assert main(["hardgen", "--family", "1;2;1,2", "--n", "2", "--k", "5"]) == EXIT_USAGE


def test_hardgen_catalog(capsys):
    assert main(["hardgen", "--catalog"]) == EXIT_OK
    out = capsys.readouterr().out
    assert sum(line.startswith("setcover ") for line in out.splitlines()) >= 100


def test_bench(capsys):
    args = ["bench", "--instances", "3", "--max-n", "3", "--max-d", "2"]
    assert main(args) == EXIT_OK
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0] == "n d brute_residual newton_residual gap"
    assert len(lines[1:4]) == 3
    assert summary(out)["instances"] == "3"
    main(args)
    assert capsys.readouterr().out == out

    assert main(args + ["--timing"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[0].endswith(" wall_time")


def test_out_file(tmp_path, example_files, capsys):
    A, y = example_files
    target = tmp_path / "report.txt"
    assert main(["regress", "--A", A, "--y", y, "--solver", "infnorm", "--out", str(target)]) == EXIT_OK
    assert capsys.readouterr().out == ""
    assert parse_report(target.read_text()).solver == "infnorm"


@pytest.mark.parametrize("command", ["brute", "newton", "sysid-identify", "bench"])
def test_output_does_not_depend_on_threads(command, tmp_path, example_files, capsys):
    A, y = example_files
    if command in ("brute", "newton"):
        args = ["regress", "--A", A, "--y", y, "--solver", command, "--seed", "5"]
    elif command == "sysid-identify":
        M = tmp_path / "M.txt"
        M.write_text(format_matrix(SYSTEM_M))
        orbit_file = tmp_path / "orbit.txt"
        main(["sysid-simulate", "--M", str(M), "--N", "30", "--sigma", "1", "--out", str(orbit_file)])
        args = ["sysid-identify", "--orbit", str(orbit_file), "--starts", "2", "--seed", "5"]
    else:
        args = ["bench", "--instances", "4", "--max-n", "4", "--max-d", "3", "--seed", "5"]
    capsys.readouterr()

    outputs = []
    for threads in ("1", "4"):
        assert main(args + ["--threads", threads]) == EXIT_OK
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]
