import subprocess
import sys

import numpy as np
import pytest

from ehtl0 import cli
from ehtl0.bench import gen_example2, TrialSpec
from ehtl0.problem import make_example1, save_problem


def run(*args):
    return subprocess.run([sys.executable, "-m", "ehtl0", *map(str, args)],
                          capture_output=True, text=True)


@pytest.fixture
def ex1_json(tmp_path):
    path = tmp_path / "ex1.json"
    save_problem(make_example1(), path)
    return path


def test_solve_example1(ex1_json, tmp_path):
    trace = tmp_path / "t.csv"
    out = run("solve", ex1_json, "--h", 0.1, "--beta", 0.005, "--x0", 20, "--trace", trace)
    assert out.returncode == 0, out.stderr
    assert "status: converged" in out.stdout
    assert "x: 0 0 0" in out.stdout
    lines = trace.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("solver,k,")


@pytest.mark.parametrize("solver", ["alg1e0", "iht", "fista", "aht"])
def test_solve_other_solvers(ex1_json, solver):
    assert cli.main(["solve", str(ex1_json), "--solver", solver, "--h", "0.1",
                     "--beta", "0.005"]) == 0


def test_argument_errors(ex1_json, tmp_path):
    assert run("solve", ex1_json, "--solver", "nope").returncode == 1
    assert run("solve", tmp_path / "missing.json").returncode == 1
    assert run("solve", ex1_json, "--beta", -1).returncode == 1
    assert run("solve", ex1_json, "--x0", 100).returncode == 1  # outside the box
    assert run("prox-check", "--instances", 0).returncode == 1
    assert run("profile", tmp_path / "missing.csv", "--out", tmp_path / "p.csv").returncode == 1
    assert run().returncode == 1


def test_prox_check_small():
    assert cli.main(["prox-check", "--instances", "2000", "--grid-step", "1e-3"]) == 0


def test_prox_check_flags_violation(monkeypatch):
    real = cli.prox_batch

    def worse(*args):
        y, phi, t = real(*args)
        return y, phi + 1.0, t

    monkeypatch.setattr(cli, "prox_batch", worse)
    assert cli.main(["prox-check", "--instances", "100", "--grid-step", "1e-2"]) == 2


def test_example_and_profile(tmp_path):
    out = tmp_path / "ex2"
    assert cli.main(["example2", "--m", "40", "--n", "10", "--trials", "2",
                     "--max-iter", "300", "--out", str(out)]) == 0
    prof = tmp_path / "prof.csv"
    assert cli.main(["profile", str(out / "metrics.csv"), "--out", str(prof)]) == 0
    assert prof.read_bytes() == (out / "profile.csv").read_bytes()


def test_byte_determinism(tmp_path):
    dirs = []
    for i in range(2):
        d = tmp_path / f"r{i}"
        r = run("example3", "--m", 30, "--n", 8, "--m-test", 20, "--trials", 2,
                "--max-iter", 200, "--seed", 5, "--out", d)
        assert r.returncode == 0, r.stderr
        dirs.append(d)
    files = sorted(p.name for p in dirs[0].iterdir())
    assert files == sorted(p.name for p in dirs[1].iterdir())
    for name in files:
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()


def test_solve_problem_from_generator(tmp_path):
    problem, _ = gen_example2(TrialSpec(2, 40, 10, 0.2, 1, 0))
    path = tmp_path / "p.json"
    save_problem(problem, path)
    out = run("solve", path, "--x0", 1)
    assert out.returncode == 0, out.stderr
    x = np.array(out.stdout.split("x: ")[1].split(), dtype=float)
    assert problem.box.contains(x)
