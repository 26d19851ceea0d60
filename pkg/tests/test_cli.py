import io
import json
import subprocess
import sys

import numpy as np
import pytest

from polyvem.cli import main


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_mesh_gen_and_meshinfo(tmp_path):
    p = tmp_path / "cut.mesh"
    code, text = run("mesh", "gen", "cut", "--n", "8", "--eps", "1e-3", "-o", str(p))
    assert code == 0 and "cells 72" in text
    code, text2 = run("meshinfo", str(p))
    assert code == 0 and text2 == text


def test_usage_errors():
    with pytest.raises(SystemExit) as exc:
        run("mesh", "gen", "bogus")
    assert exc.value.code == 2
    assert run("mesh", "gen", "cut", "--n", "4", "--eps", "0.5")[0] == 2
    assert run("converge", "--levels", "4", "8")[0] == 2
    assert run("meshinfo", "nosuchfile")[0] == 2
    assert run("check", "uniform:3", "--gamma1", "2")[0] == 2


def test_check_exit_codes(tmp_path):
    code, text = run("check", "uniform:3")
    assert code == 0 and json.loads(text)["admissible"]
    p = tmp_path / "r.json"
    code, _ = run("check", "stack", "-o", str(p))
    assert code == 3
    assert json.loads(p.read_text())["patch_failures"]


def test_solve_outputs(tmp_path):
    dofs, mat = tmp_path / "u.txt", tmp_path / "A.txt"
    code, text = run("solve", "fixture:hourglass", "--case", "linear", "--stab", "original",
                     "-o", str(dofs), "--matrix-out", str(mat), "--dump-local", "0")
    assert code == 0
    assert "Kc =" in text and "stab original" in text
    err = float(text.split("energy_err")[1].split()[0])
    assert err < 1e-9
    vals = np.loadtxt(dofs, comments="#")
    assert vals.shape[1] == 2
    assert mat.read_text().startswith("#")


def test_solve_failures():
    assert run("solve", "stack")[0] == 3
    assert run("solve", "uniform:8", "--case", "expsin", "--maxiter", "2")[0] == 4


def test_converge_csv(tmp_path):
    p = tmp_path / "c.csv"
    code, text = run("converge", "--family", "cut", "--levels", "2", "4", "8", "--stab", "original", "-o", str(p))
    assert code == 0 and "mean EOC" in text
    assert p.read_text().splitlines()[0].startswith("level,h,ndof")


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "polyvem", "meshinfo", "uniform:2"], capture_output=True, text=True)
    assert r.returncode == 0 and "cells 4" in r.stdout


def test_converge_is_bytewise_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p, threads in ((a, "1"), (b, "3")):
        assert run("converge", "--family", "jitter", "--levels", "3", "4", "6", "--threads", threads, "-o", str(p))[0] == 0
    assert a.read_bytes() == b.read_bytes()
