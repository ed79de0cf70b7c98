import csv
import math
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ehtl0.bench import (DESK_SCALE, TrialSpec, error_rate, gen_example2, gen_example3,
                         performance_profile, profile_from_metrics, read_metrics_csv,
                         rel_err, run_experiment, spa_rat)


def spec2(trial=0, seed=0):
    return TrialSpec(2, 60, 20, 0.2, seed, trial)


def spec3(trial=0, seed=0):
    return TrialSpec(3, 50, 10, 0.3, seed, trial, m_test=40)


def test_trial_spec_validation():
    with pytest.raises(ValueError):
        TrialSpec(4, 10, 10, 0.2)
    with pytest.raises(ValueError):
        TrialSpec(2, 10, 10, 0.0)
    with pytest.raises(ValueError):
        TrialSpec(2, 10, 2, 0.2)  # rounds to zero nonzeros
    assert TrialSpec(2, 10, 40, 0.2).sparsity == 8


def test_example2_shapes_and_truth():
    problem, x = gen_example2(spec2())
    assert problem.dimension == 20 and x.shape == (20,)
    assert np.count_nonzero(x) == 4
    assert problem.box.contains(x)
    assert problem.penalty.lambda1[0] == problem.penalty.lambda2[0] == 0.06


def test_generators_deterministic_and_streams_differ():
    p1, x1 = gen_example2(spec2(1))
    p2, x2 = gen_example2(spec2(1))
    _, x3 = gen_example2(spec2(2))
    assert np.array_equal(x1, x2)
    assert np.array_equal(p1.f(np.ones(20)), p2.f(np.ones(20)))
    assert not np.array_equal(x1, x3)


def test_example3_labels_and_split():
    d = gen_example3(spec3())
    assert d.problem.dimension == 11
    assert d.A_test.shape == (40, 10) and d.y_test.shape == (40,)
    assert set(np.unique(d.y_test)) <= {-1.0, 1.0}
    w, v = d.x_true[:-1], d.x_true[-1]
    assert (w >= 0).all() and (w <= 1).all() and 0 <= v < 1
    # the generating hyperplane separates its own samples
    assert error_rate(d.x_true, d.A_test, d.y_test) == 0.0


def test_rel_err_examples():
    # [TRIVIAL]
    # normalized by the estimate
    assert rel_err([2.0, 0.0], [1.0, 0.0]) == pytest.approx(0.5)
    assert rel_err([1.0, 0.0], [1.0, 0.0]) == 0.0
    assert math.isinf(rel_err([0.0], [1.0]))


def test_spa_rat_examples():
    # [TRIVIAL]
    assert spa_rat([1.0, 1.0, 0.0], [0.0, 1.0, 1.0]) == pytest.approx(0.5)
    assert spa_rat([0.0, 0.0], [0.0, 0.0]) == 1.0
    assert spa_rat([3.0, 0.0], [1.0, 0.0]) == 1.0


def test_profile_examples():
    # [TRIVIAL]
    t, rho = performance_profile([[5]])
    assert rho[0, 0] == 1.0
    t, rho = performance_profile([[10, 20]], t_grid=[1.0, 1.5, 2.0])
    assert rho[:, 0].tolist() == [1.0, 1.0, 1.0]
    assert rho[:, 1].tolist() == [0.0, 0.0, 1.0]
    t, rho = performance_profile([[1, math.inf]], t_grid=[1.0, 1e9])
    assert rho[:, 1].tolist() == [0.0, 0.0]
    for bad in ([], [[0, 1]], [[math.nan, 1]]):
        with pytest.raises(ValueError):
            performance_profile(bad)


@settings(max_examples=50)
@given(st.lists(st.lists(st.integers(1, 500), min_size=3, max_size=3), min_size=1, max_size=10))
def test_profile_monotone_and_bounded(counts):
    t, rho = performance_profile(counts)
    assert t[0] == 1.0
    assert np.all(np.diff(rho, axis=0) >= 0)
    assert np.all((rho >= 0) & (rho <= 1))
    assert np.allclose(rho[-1], 1.0)
    # at t=1 the fractions of winners sum to at least 1
    assert rho[0].sum() * len(counts) >= len(counts) - 1e-12


def test_profile_from_metrics_handles_failures():
    rows = [{"trial": 0, "solver": "a", "status": "converged", "iterations": 0},
            {"trial": 0, "solver": "b", "status": "max_iter", "iterations": 3000}]
    solvers, t, rho = profile_from_metrics(rows)
    assert solvers == ["a", "b"]
    assert rho[:, 0].tolist() == [1.0] and rho[:, 1].tolist() == [0.0]


def test_run_experiment_outputs(tmp_path):
    rows = run_experiment(2, 2, tmp_path, seed=3, overrides={"m": 60, "n": 20}, max_iter=400)
    names = {r["solver"] for r in rows}
    assert names == {"Alg1", "Alg1_eps=0", "IHT", "AHT (approx.)"}
    for f in ("metrics.csv", "profile.csv", "traces_alg1.csv", "traces_iht.csv"):
        assert os.path.getsize(tmp_path / f) > 0
    back = read_metrics_csv(tmp_path / "metrics.csv")
    assert len(back) == 8
    assert min(float(r["objective_gap"]) for r in back) == 0.0
    with open(tmp_path / "traces_alg1.csv") as fh:
        header = next(csv.reader(fh))
    assert header[:3] == ["trial", "solver", "k"]


def test_example1_runs_single_trial(tmp_path):
    rows = run_experiment(1, 5, tmp_path)
    assert {r["trial"] for r in rows} == {0}
    alg1 = next(r for r in rows if r["solver"] == "Alg1")
    assert alg1["status"] == "converged" and alg1["support_size"] == 0


@pytest.mark.parametrize("seed", [0, 1, 7])
def test_truth_against_itself(seed):
    _, x = gen_example2(spec2(seed=seed))
    assert rel_err(x, x) == 0.0 and spa_rat(x, x) == 1.0
    x3 = gen_example3(spec3(seed=seed)).x_true
    assert rel_err(x3, x3) == 0.0 and spa_rat(x3, x3) == 1.0


def test_desk_scale_defaults():
    assert DESK_SCALE[2]["n"] == 40 and DESK_SCALE[3]["m_test"] == 150
