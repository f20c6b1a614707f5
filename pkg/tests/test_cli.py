"""Command-line interface: parsing, config files, outputs, exit codes."""

import subprocess
import sys

import numpy as np
import pytest
import scipy.io

from dlsmaxwell.cli import (
    RunConfig,
    UsageError,
    format_config,
    main,
    parse_config,
    read_config_file,
    validate_config,
)
from dlsmaxwell.mesh import load_mesh


# ---------------------------------------------------------------------------
# parsing and validation


def test_no_arguments_is_usage_error(capsys):
    assert main([]) == 1
    assert "error" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    assert main(["converge", "--frobnicate", "3"]) == 1


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == 1


def test_bad_degree_rejected(capsys):
    assert main(["converge", "--m", "4"]) == 1
    assert main(["converge", "--m", "0"]) == 1


def test_unknown_problem_rejected(capsys):
    assert main(["converge", "--problem", "example9"]) == 1
    assert "example9" in capsys.readouterr().err


def test_bad_solver_rejected():
    assert main(["converge", "--solver", "gmres"]) == 1


def test_bad_theta_rejected():
    assert main(["adapt", "--theta", "1.5"]) == 1


def test_parse_defaults():
    cfg = parse_config(["converge"])
    assert cfg.command == "converge"
    assert cfg.problem == "example1"
    assert cfg.k == 1.0 and cfg.m == 1
    assert cfg.levels == (5, 10, 20, 40)
    assert cfg.solver == "bicgstab"


def test_flags_override_defaults():
    cfg = parse_config(["converge", "--k", "8", "--m", "2", "--levels", "10,20"])
    assert cfg.k == 8.0 and cfg.m == 2 and cfg.levels == (10, 20)


def test_config_file_and_flag_priority(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# smooth study\nproblem = example1\nk = 2.0\nm = 2\n")
    cfg = parse_config(["converge", "--config", str(path)])
    assert cfg.k == 2.0 and cfg.m == 2
    # explicit flags beat file values
    cfg = parse_config(["converge", "--config", str(path), "--k", "4.0"])
    assert cfg.k == 4.0 and cfg.m == 2


def test_config_file_unknown_key(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("wavenumber = 3\n")
    with pytest.raises(UsageError):
        read_config_file(str(path))


def test_config_round_trip(tmp_path):
    cfg = parse_config(
        ["adapt", "--problem", "example5", "--theta", "0.3", "--steps", "7",
         "--levels", "5", "--mu", "2.0", "--solver", "cg"]
    )
    path = tmp_path / "out.cfg"
    path.write_text(format_config(cfg))
    back = parse_config(["adapt", "--config", str(path)])
    assert back == cfg


def test_validate_rejects_nonpositive_k():
    cfg = RunConfig(command="converge", k=-1.0)
    with pytest.raises(UsageError):
        validate_config(cfg)


# ---------------------------------------------------------------------------
# runs and outputs


def test_converge_writes_csv(tmp_path, capsys):
    out = tmp_path / "conv.csv"
    code = main(["converge", "--levels", "3,6", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("h,n_cells,n_dofs,energy,order_energy")
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[1] == "18" and first[4] == ""
    second = lines[2].split(",")
    assert second[4] != ""
    assert float(second[4]) > 0.5


def test_converge_output_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["converge", "--levels", "3,6", "--out", str(a)]) == 0
    assert main(["converge", "--levels", "3,6", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_adapt_writes_csv(tmp_path, capsys):
    out = tmp_path / "adapt.csv"
    code = main(
        ["adapt", "--problem", "example5", "--levels", "2", "--steps", "3",
         "--theta", "0.4", "--out", str(out)]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "step,n_cells,n_dofs,l2_u,l2_p,energy,sum_eta2,marked"
    assert len(lines) == 4
    assert lines[1].split(",")[1] == "24"


def test_solve_once_reports_and_dumps(tmp_path, capsys):
    mesh_file = tmp_path / "mesh.txt"
    mat_file = tmp_path / "A.mtx"
    code = main(
        ["solve-once", "--levels", "3", "--dump-mesh", str(mesh_file),
         "--dump-matrix", str(mat_file)]
    )
    assert code == 0
    text = capsys.readouterr().out
    assert "J_h" in text and "energy" in text
    mesh = load_mesh(mesh_file)
    assert mesh.n_cells == 18
    A = scipy.io.mmread(mat_file)
    assert A.shape == (mesh.n_cells * 9, mesh.n_cells * 9)
    assert (abs(A - A.T) > 1e-11 * abs(A).max()).nnz == 0


def test_unconverged_solver_exits_two(tmp_path, capsys):
    # an impossible tolerance cannot be certified, even on a tiny mesh
    code = main(["solve-once", "--levels", "2", "--tol", "1e-30"])
    assert code == 2
    assert "converged False" in capsys.readouterr().out


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "dlsmaxwell"], capture_output=True, text=True
    )
    assert proc.returncode == 1
    assert "usage" in (proc.stderr + proc.stdout).lower()


def test_console_script_help():
    proc = subprocess.run(
        [sys.executable, "-m", "dlsmaxwell", "converge", "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "--levels" in proc.stdout
