"""Seeded test problems, recovery metrics, performance profiles and batch runs."""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .baselines import AHT_LABEL, BaselineConfig, aht_solve, eht_fista_solve, iht_solve
from .problem import (BoxConstraint, SparseProblem, make_example1, make_least_squares,
                      make_logistic)
from .solver import SolveResult, SolverConfig, default_gamma, solve, TRACE_COLUMNS, _fmt

__all__ = [
    "TrialSpec",
    "DESK_SCALE",
    "FULL_SCALE",
    "trial_rng",
    "gen_example2",
    "gen_example3",
    "rel_err",
    "spa_rat",
    "error_rate",
    "performance_profile",
    "SolverRun",
    "solver_suite",
    "run_trial",
    "run_experiment",
    "profile_from_metrics",
    "write_profile_csv",
]

DESK_SCALE = {
    1: dict(m=3, n=3, spar=1.0, m_test=0),
    2: dict(m=200, n=40, spar=0.2, m_test=0),
    3: dict(m=100, n=20, spar=0.2, m_test=150),
}
FULL_SCALE = {
    1: DESK_SCALE[1],
    2: dict(m=2000, n=400, spar=0.2, m_test=0),
    3: dict(m=400, n=50, spar=0.2, m_test=600),
}

LAMBDA_EX2 = 0.06
LAMBDA_EX3 = 0.05


@dataclass(frozen=True)
class TrialSpec:
    """One random instance: ``seed`` is the batch seed, ``trial`` the stream index."""
    example: int
    m: int
    n: int
    spar: float
    seed: int = 0
    trial: int = 0
    m_test: int = 0

    def __post_init__(self):
        if self.example not in (1, 2, 3):
            raise ValueError(f"example must be 1, 2 or 3, got {self.example}")
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be positive")
        if self.m_test < 0:
            raise ValueError("m_test must be nonnegative")
        if self.example != 1:
            if not 0 < self.spar < 1:
                raise ValueError("spar must lie in (0, 1)")
            if self.sparsity < 1:
                raise ValueError(f"spar * n = {self.spar * self.n} rounds below 1")

    @property
    def sparsity(self) -> int:
        return int(round(self.spar * self.n))


def trial_rng(spec: TrialSpec) -> np.random.Generator:
    """PCG64 stream ``trial`` spawned from ``SeedSequence(seed)``."""
    ss = np.random.SeedSequence(spec.seed, spawn_key=(spec.trial,))
    return np.random.Generator(np.random.PCG64(ss))


def gen_example2(spec: TrialSpec):
    """Sparse least squares on the box ``[-1, 5]^n``. Returns ``(problem, x_true)``."""
    rng = trial_rng(spec)
    m, n, s = spec.m, spec.n, spec.sparsity
    A = rng.standard_normal((m, n))
    x = rng.uniform(-2.0, 6.0, n)
    x[: n - s] = 0.0
    x = np.clip(x, -1.0, 5.0)
    rng.shuffle(x)
    b = A @ x + 0.05 * rng.standard_normal(m)
    box = BoxConstraint.uniform(n, -1.0, 5.0)
    return make_least_squares(A, b, LAMBDA_EX2, box), x


class LogisticData(NamedTuple):
    problem: SparseProblem
    x_true: np.ndarray
    A_test: np.ndarray
    y_test: np.ndarray


def _labels(A, w, v):
    return np.where(A @ w + v >= 0, 1.0, -1.0)


def gen_example3(spec: TrialSpec) -> LogisticData:
    """Sparse logistic regression on ``[-1, 1]^{n+1}``.

    ``m + m_test`` samples are drawn together and split; the last coordinate
    of ``x_true`` is the intercept.
    """
    rng = trial_rng(spec)
    m, n, s = spec.m, spec.n, spec.sparsity
    A_all = rng.standard_normal((m + spec.m_test, n))
    w = rng.uniform(0.0, 2.0, n)
    w[: n - s] = 0.0
    w[w > 1.0] = 1.0
    rng.shuffle(w)
    v = rng.random()
    y_all = _labels(A_all, w, v)
    A, A_test = A_all[:m], A_all[m:]
    problem = make_logistic(A, y_all[:m], LAMBDA_EX3)
    return LogisticData(problem, np.append(w, v), A_test, y_all[m:])


# -- metrics ---------------------------------------------------------------------

def rel_err(x_a, x_true) -> float:
    """``|x_a - x_true| / |x_a|``; ``inf`` when ``x_a`` is zero."""
    x_a = np.asarray(x_a, dtype=float)
    denom = np.linalg.norm(x_a)
    if denom == 0:
        return math.inf
    return float(np.linalg.norm(x_a - np.asarray(x_true, dtype=float)) / denom)


def spa_rat(x_a, x_true) -> float:
    """Support overlap over the larger support size (1 if both are empty)."""
    sa = np.asarray(x_a) != 0
    st = np.asarray(x_true) != 0
    big = max(sa.sum(), st.sum())
    if big == 0:
        return 1.0
    return float((sa & st).sum() / big)


def error_rate(x_a, A, y) -> float:
    """Misclassification rate of ``sgn(A w_+ + v)`` with ``sgn(0) = -1``."""
    x_a = np.asarray(x_a, dtype=float)
    w = np.maximum(x_a[:-1], 0.0)
    pred = np.where(np.asarray(A) @ w + x_a[-1] > 0, 1.0, -1.0)
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        return math.nan
    return float(np.mean(pred != y))


def performance_profile(counts, t_grid=None):
    """Performance profile of iteration counts.

    Parameters
    ----------
    counts : array_like, shape (problems, solvers)
        Positive counts; ``inf`` marks a failure.
    t_grid : array_like, optional
        Ratios at which to sample. Defaults to the sorted distinct finite
        ratios (always including 1).

    Returns
    -------
    t_grid : ndarray
    rho : ndarray, shape (len(t_grid), solvers)
        Fraction of problems each solver handles within factor ``t`` of the best.
    """
    k = np.asarray(counts, dtype=float)
    if k.ndim != 2 or k.shape[0] == 0 or k.shape[1] == 0:
        raise ValueError("counts must be a nonempty (problems, solvers) array")
    if np.isnan(k).any() or (k <= 0).any():
        raise ValueError("iteration counts must be positive")
    best = k.min(axis=1, keepdims=True)
    with np.errstate(invalid="ignore"):
        r = np.where(np.isfinite(best), k / best, np.inf)
    if t_grid is None:
        t_grid = np.unique(np.append(r[np.isfinite(r)], 1.0))
    t_grid = np.asarray(t_grid, dtype=float)
    rho = (r[None, :, :] <= t_grid[:, None, None]).mean(axis=1)
    return t_grid, rho


# -- experiments --------------------------------------------------------------------

class SolverRun(NamedTuple):
    name: str
    slug: str
    run: object  # callable (problem, x0) -> SolveResult


def solver_suite(example: int, problem: SparseProblem, max_iter: int = 3000):
    """Solvers and settings used for ``example``."""
    Lf = problem.lipschitz
    eps, eps_bar = 1e-3, 2e-3
    if example == 1:
        h = 0.1

        def alg1(beta, factor=1.0, e=eps):
            cfg = SolverConfig(e, beta, h, default_gamma(h, beta, Lf, factor), eps_bar, max_iter)
            return lambda p, x0: solve(p, cfg, x0)

        bc = BaselineConfig(2.0 * Lf, 1.0, max_iter, eps_bar)
        return [
            SolverRun("Alg1", "alg1", alg1(0.005)),
            SolverRun("Alg1_beta=0", "alg1_beta0", alg1(0.0)),
            SolverRun("Alg1_eps=0", "alg1e0", alg1(0.005, 2.0, 0.0)),
            SolverRun("IHT", "iht", lambda p, x0: iht_solve(p, bc, x0)),
            SolverRun("EHT_FISTA", "eht_fista", lambda p, x0: eht_fista_solve(p, bc, x0)),
        ]
    h, beta = 10.0, 0.01
    L = (6.0 if example == 2 else 9.0) * Lf
    c = default_gamma(h, beta, Lf)
    cfg1 = SolverConfig(eps, beta, h, c, eps_bar, max_iter)
    cfg0 = SolverConfig(0.0, beta, h, 2.0 * c, eps_bar, max_iter)
    bc = BaselineConfig(L, 1.0, max_iter, eps_bar)
    return [
        SolverRun("Alg1", "alg1", lambda p, x0: solve(p, cfg1, x0)),
        SolverRun("Alg1_eps=0", "alg1e0", lambda p, x0: solve(p, cfg0, x0, solver_name="Alg1_eps=0")),
        SolverRun("IHT", "iht", lambda p, x0: iht_solve(p, bc, x0)),
        SolverRun(AHT_LABEL, "aht", lambda p, x0: aht_solve(p, bc, x0)),
    ]


def _start(example: int, n: int) -> np.ndarray:
    if example == 1:
        return np.array([20.0, 19.0, 20.0])
    if example == 2:
        return np.ones(n)
    return 0.5 * np.ones(n + 1)


def run_trial(spec: TrialSpec, max_iter: int = 3000):
    """Solve one instance with every solver of the suite.

    Returns a list of ``(SolverRun, SolveResult, metrics dict)``.
    """
    test = None
    if spec.example == 1:
        problem, x_true = make_example1(), np.zeros(3)
    elif spec.example == 2:
        problem, x_true = gen_example2(spec)
    else:
        data = gen_example3(spec)
        problem, x_true, test = data.problem, data.x_true, (data.A_test, data.y_test)
    x0 = _start(spec.example, spec.n)
    out = []
    for sr in solver_suite(spec.example, problem, max_iter):
        res = sr.run(problem, x0)
        if res.solver != sr.name:
            res.solver = sr.name
        x_a = res.x_final
        if spec.example == 3:
            x_a = np.append(np.maximum(x_a[:-1], 0.0), x_a[-1])
        metrics = {
            "rel_err": rel_err(x_a, x_true),
            "spa_rat": spa_rat(x_a, x_true),
            "error_rate": error_rate(res.x_final, *test) if test is not None else math.nan,
        }
        metrics["rel_err_undefined"] = int(math.isinf(metrics["rel_err"]))
        out.append((sr, res, metrics))
    return out


METRIC_COLUMNS = ("trial", "solver", "status", "iterations", "rel_err", "rel_err_undefined",
                  "spa_rat", "error_rate", "final_objective", "objective_gap",
                  "support_size", "path_length_1")


def _trial_specs(example, trials, seed, overrides, full_scale):
    dims = dict((FULL_SCALE if full_scale else DESK_SCALE)[example])
    dims.update({k: v for k, v in overrides.items() if v is not None})
    if example == 1:
        trials = 1
    return [TrialSpec(example, dims["m"], dims["n"], dims["spar"], seed, t, dims["m_test"])
            for t in range(trials)]


def run_experiment(example: int, trials: int, out_dir, seed: int = 0, overrides=None,
                   full_scale: bool = False, max_iter: int = 3000):
    """Run a batch and write ``metrics.csv``, ``traces_<solver>.csv`` and ``profile.csv``.

    Example 1 is deterministic and always runs a single trial.
    Returns the metric rows as dicts.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    specs = _trial_specs(example, trials, seed, overrides or {}, full_scale)
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc

    rows = []
    traces = {}
    for spec in specs:
        results = run_trial(spec, max_iter)
        f_best = min(res.final_objective for _, res, _ in results)
        for sr, res, met in results:
            rows.append({
                "trial": spec.trial,
                "solver": sr.name,
                "status": res.status,
                "iterations": res.iterations,
                "rel_err": met["rel_err"],
                "rel_err_undefined": met["rel_err_undefined"],
                "spa_rat": met["spa_rat"],
                "error_rate": met["error_rate"],
                "final_objective": res.final_objective,
                "objective_gap": res.final_objective - f_best,
                "support_size": int(np.count_nonzero(res.x_final)),
                "path_length_1": res.path_length_1,
            })
            traces.setdefault(sr.slug, []).append((spec.trial, res))

    _write_csv(os.path.join(out_dir, "metrics.csv"), METRIC_COLUMNS,
               [[r[c] for c in METRIC_COLUMNS] for r in rows])
    for slug, runs in traces.items():
        body = []
        for trial, res in runs:
            body.extend([trial, res.solver, *row] for row in res.trace.rows())
        _write_csv(os.path.join(out_dir, f"traces_{slug}.csv"),
                   ("trial", "solver") + TRACE_COLUMNS, body)
    solvers, t, rho = profile_from_metrics(rows)
    write_profile_csv(os.path.join(out_dir, "profile.csv"), solvers, t, rho)
    return rows


def profile_from_metrics(rows):
    """Build the iteration-count profile from metric rows.

    Runs that did not converge count as failures. A run certified at its
    starting point counts as one iteration.
    """
    solvers = list(dict.fromkeys(r["solver"] for r in rows))
    trials = list(dict.fromkeys(int(r["trial"]) for r in rows))
    if not trials:
        raise ValueError("no metric rows")
    k = np.full((len(trials), len(solvers)), np.inf)
    ti = {t: i for i, t in enumerate(trials)}
    si = {s: j for j, s in enumerate(solvers)}
    for r in rows:
        if r["status"] == "converged":
            k[ti[int(r["trial"])], si[r["solver"]]] = max(int(r["iterations"]), 1)
    t, rho = performance_profile(k)
    return solvers, t, rho


def write_profile_csv(path, solvers, t, rho):
    _write_csv(path, ["t"] + list(solvers),
               [[float(ti)] + [float(v) for v in row] for ti, row in zip(t, rho)])


def read_metrics_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _write_csv(path, header, rows):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([c if isinstance(c, str) else _fmt(c) for c in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
