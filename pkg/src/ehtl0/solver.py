"""Extrapolated hard thresholding with Hessian-driven damping and dry friction.

One iteration, with ``c = 1 + h*gamma``::

    v = (x_k - x_{k-1}) / (h c) - (beta / c) (g_k - g_{k-1})
    z = v - (h / c) (g_k - e_k)
    x_{k+1} = x_k + h * argmin_{y : x_k + h y in box} Q(x_k, z, y)

    Q(x, z, y) = (h eps / c) |y|_1 + (lambda1 / c) |(x + h y)_+|_0
                 + (lambda2 / c) |(x + h y)_-|_0 + 0.5 |y - z|^2

``e_k`` is an optional gradient error (zero for the unperturbed method).
The energy

    E_k = beta L_f / (2h) |x_k - x_{k-1}|^2 + 0.5 |(x_k - x_{k-1}) / h|^2 + F(x_k)

decreases by at least ``eps |x_{k+1} - x_k|_1`` per step when
``gamma >= 1/h + (2 beta + h) L_f``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .problem import SparseProblem, composite_value
from .prox import prox_vector
from .stationarity import StationarityReport, check_eps_local_min

__all__ = [
    "ConfigError",
    "SolverConfig",
    "ConfigCheck",
    "SolverState",
    "IterationTrace",
    "SolveResult",
    "TRACE_COLUMNS",
    "default_gamma",
    "validate_config",
    "compute_v",
    "compute_z",
    "step",
    "energy",
    "initial_state",
    "solve",
    "decaying_error",
    "descent_violations",
    "perturbed_descent_violations",
    "finite_length_check",
    "square_summability_check",
    "perturbed_square_summability_check",
    "perturbed_finite_length_check",
    "write_trace_csv",
]

TRACE_COLUMNS = ("k", "step_norm_1", "step_norm_2", "energy", "objective",
                 "second_difference", "support_size")

CONVERGED = "converged"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible"


class ConfigError(ValueError):
    """Parameters violate the damping condition."""


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the method.

    ``error_injector`` maps the iteration index ``k`` to a gradient error
    vector; leave it ``None`` for the unperturbed method.
    """
    epsilon: float
    beta: float
    h: float
    gamma: float
    eps_bar: float
    max_iter: int = 3000
    error_injector: Optional[Callable[[int], np.ndarray]] = None
    seed: int = 0
    step_tol: float = 1e-9
    sum_tol: float = 1e-6

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ConfigError("epsilon must be nonnegative")
        if not self.beta >= 0:
            raise ConfigError("beta must be nonnegative")
        if not self.h > 0:
            raise ConfigError("h must be positive")
        if not self.gamma > 0:
            raise ConfigError("gamma must be positive")
        if not self.eps_bar >= 0:
            raise ConfigError("eps_bar must be nonnegative")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ConfigError("max_iter must be a positive integer")

    @property
    def damping(self) -> float:
        return 1.0 + self.h * self.gamma


def default_gamma(h: float, beta: float, lipschitz: float, factor: float = 1.0) -> float:
    """``factor * (1/h + (2 beta + h) L_f)``."""
    return factor * (1.0 / h + (2.0 * beta + h) * lipschitz)


class ConfigCheck(NamedTuple):
    ok: bool
    rule: str
    gamma: float
    threshold: float
    strict: bool

    def message(self) -> str:
        op = ">" if self.strict else ">="
        state = "satisfied" if self.ok else "violated"
        return (f"{self.rule}: gamma {op} 1/h + (2 beta + h) L_f {state} "
                f"(gamma = {self.gamma!r}, threshold = {self.threshold!r})")


def validate_config(cfg: SolverConfig, lipschitz: float, rtol: float = 1e-12) -> ConfigCheck:
    """Check the damping condition for ``cfg`` against ``L_f = lipschitz``.

    The non-strict inequality is accepted up to a relative ``rtol`` so that a
    gamma computed by :func:`default_gamma` is not rejected by rounding. With
    ``epsilon == 0`` the inequality must hold strictly.
    """
    threshold = default_gamma(cfg.h, cfg.beta, lipschitz)
    strict = cfg.epsilon == 0
    if cfg.beta == 0:
        rule = "beta = 0 rule"
    elif strict:
        rule = "strict rule (epsilon = 0)"
    else:
        rule = "damping rule"
    if strict:
        ok = cfg.gamma > threshold
    else:
        ok = cfg.gamma >= threshold * (1.0 - rtol)
    return ConfigCheck(bool(ok), rule, float(cfg.gamma), float(threshold), strict)


@dataclass(frozen=True)
class SolverState:
    x_prev: np.ndarray
    x_cur: np.ndarray
    grad_prev: np.ndarray
    grad_cur: np.ndarray
    k: int = 0


def initial_state(problem: SparseProblem, x0) -> SolverState:
    x0 = np.array(x0, dtype=float).reshape(-1)
    g0 = problem.grad(x0)
    return SolverState(x0, x0.copy(), g0, g0.copy(), 0)


def compute_v(state: SolverState, cfg: SolverConfig) -> np.ndarray:
    c = cfg.damping
    return ((state.x_cur - state.x_prev) / (cfg.h * c)
            - (cfg.beta / c) * (state.grad_cur - state.grad_prev))


def compute_z(v, grad, cfg: SolverConfig, e_k=None) -> np.ndarray:
    g = np.asarray(grad, dtype=float)
    if e_k is not None:
        g = g - np.asarray(e_k, dtype=float)
    return np.asarray(v, dtype=float) - (cfg.h / cfg.damping) * g


def energy(problem: SparseProblem, x_prev, x_cur, cfg: SolverConfig) -> float:
    """Energy of the pair ``(x_{k-1}, x_k)`` without the ``inf F`` offset."""
    d = np.asarray(x_cur) - np.asarray(x_prev)
    dd = float(d @ d)
    return (cfg.beta * problem.lipschitz / (2.0 * cfg.h) * dd
            + 0.5 * dd / cfg.h ** 2
            + composite_value(problem, x_cur))


def step(state: SolverState, cfg: SolverConfig, problem: SparseProblem, e_k=None):
    """One iteration. Returns ``(new_state, w)`` with ``w`` the velocity."""
    c = cfg.damping
    v = compute_v(state, cfg)
    z = compute_z(v, state.grad_cur, cfg, e_k)
    a = cfg.h * cfg.epsilon / c
    b1 = problem.penalty.lambda1 / c
    b2 = problem.penalty.lambda2 / c
    w, x_next = prox_vector(state.x_cur, z, a, b1, b2, cfg.h, problem.box)
    new = SolverState(state.x_cur, x_next, state.grad_cur, problem.grad(x_next),
                      state.k + 1)
    return new, w


@dataclass
class IterationTrace:
    """Column store of per-iteration records.

    Row ``k`` describes the move from ``x_k`` to ``x_{k+1}``: ``energy`` and
    ``objective`` are evaluated at ``x_k``; ``second_difference`` is
    ``|x_{k+1} - 2 x_k + x_{k-1}|^2``.
    """
    k: list = field(default_factory=list)
    step_norm_1: list = field(default_factory=list)
    step_norm_2: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    second_difference: list = field(default_factory=list)
    support_size: list = field(default_factory=list)

    def append(self, k, step_norm_1, step_norm_2, energy, objective,
               second_difference, support_size):
        self.k.append(int(k))
        self.step_norm_1.append(float(step_norm_1))
        self.step_norm_2.append(float(step_norm_2))
        self.energy.append(float(energy))
        self.objective.append(float(objective))
        self.second_difference.append(float(second_difference))
        self.support_size.append(int(support_size))

    def __len__(self):
        return len(self.k)

    def rows(self):
        return zip(*(getattr(self, c) for c in TRACE_COLUMNS))

    def column(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=float)


@dataclass
class SolveResult:
    x_final: np.ndarray
    status: str
    iterations: int
    path_length_1: float
    trace: IterationTrace
    certificate: Optional[StationarityReport]
    final_energy: float
    final_objective: float
    solver: str = "Alg1"
    iterates: Optional[list] = None
    info: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    def energies(self) -> np.ndarray:
        """Energies ``E_0, ..., E_K`` including the final iterate."""
        return np.append(self.trace.column("energy"), self.final_energy)


def _infeasible_result(x0, solver: str) -> SolveResult:
    x0 = np.array(x0, dtype=float).reshape(-1)
    return SolveResult(x0, INFEASIBLE, 0, 0.0, IterationTrace(), None,
                       math.nan, math.nan, solver)


def solve(problem: SparseProblem, cfg: SolverConfig, x0, keep_iterates: bool = False,
          check_config: bool = True, solver_name: str = "Alg1") -> SolveResult:
    """Run the method from ``x_{-1} = x_0 = x0``.

    Stops when ``x_k`` is certified as an ``eps_bar``-local minimizer or after
    ``max_iter`` steps. An infeasible ``x0`` yields status ``"infeasible"``.

    Raises
    ------
    ConfigError
        If ``gamma`` violates the damping condition.
    """
    if check_config:
        chk = validate_config(cfg, problem.lipschitz)
        if not chk.ok:
            raise ConfigError(chk.message())
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != problem.dimension:
        raise ValueError(f"x0 has length {x0.size}, expected {problem.dimension}")
    if not problem.box.contains(x0):
        return _infeasible_result(x0, solver_name)

    state = initial_state(problem, x0)
    trace = IterationTrace()
    iterates = [state.x_cur.copy()] if keep_iterates else None
    error_norms = []
    path = 0.0
    e_cur = energy(problem, state.x_prev, state.x_cur, cfg)
    status = MAX_ITER
    report = None
    while True:
        report = check_eps_local_min(problem, state.x_cur, cfg.eps_bar, grad=state.grad_cur)
        if report.satisfied:
            status = CONVERGED
            break
        if state.k >= cfg.max_iter:
            break
        e_k = None
        if cfg.error_injector is not None:
            e_k = np.asarray(cfg.error_injector(state.k), dtype=float)
            error_norms.append(float(np.linalg.norm(e_k)))
        new, _ = step(state, cfg, problem, e_k)
        d = new.x_cur - state.x_cur
        dd = new.x_cur - 2.0 * state.x_cur + state.x_prev
        n1 = float(np.abs(d).sum())
        trace.append(state.k, n1, float(np.linalg.norm(d)), e_cur,
                     composite_value(problem, state.x_cur), float(dd @ dd),
                     int(np.count_nonzero(state.x_cur)))
        path += n1
        state = new
        e_cur = energy(problem, state.x_prev, state.x_cur, cfg)
        if keep_iterates:
            iterates.append(state.x_cur.copy())

    info = {"gamma": cfg.gamma, "lipschitz": problem.lipschitz}
    if cfg.error_injector is not None:
        info["error_norms"] = error_norms
    return SolveResult(state.x_cur.copy(), status, state.k, path, trace, report,
                       e_cur, composite_value(problem, state.x_cur), solver_name,
                       iterates, info)


def decaying_error(direction, power: float = 2.0) -> Callable[[int], np.ndarray]:
    """Injector ``k -> direction / (k + 1)**power``."""
    u = np.array(direction, dtype=float)

    def inject(k: int) -> np.ndarray:
        return u / float(k + 1) ** power

    return inject


# -- invariant checks on finished runs -----------------------------------------

def descent_violations(result: SolveResult, cfg: SolverConfig, tol: float | None = None):
    """Indices ``k`` where ``eps |dx|_1 + |ddx|^2 / (2h^2) > E_k - E_{k+1} + tol``."""
    tol = cfg.step_tol if tol is None else tol
    tr = result.trace
    if not len(tr):
        return []
    e = result.energies()
    lhs = (cfg.epsilon * tr.column("step_norm_1")
           + tr.column("second_difference") / (2.0 * cfg.h ** 2))
    rhs = e[:-1] - e[1:] + tol
    return [int(k) for k in np.flatnonzero(lhs > rhs)]


def perturbed_descent_violations(result: SolveResult, cfg: SolverConfig,
                                 tol: float | None = None):
    """Per-step check for runs with gradient errors ``e_k``.

    ``eps |dx|_1 - |e_k| |dx|_2 + |ddx|^2 / (2h^2) <= E_k - E_{k+1} + tol``;
    summing it once ``|e_k| <= eps/2`` gives the tail length bound.
    """
    tol = cfg.step_tol if tol is None else tol
    tr = result.trace
    if not len(tr):
        return []
    errs = np.asarray(result.info.get("error_norms", np.zeros(len(tr))), dtype=float)
    e = result.energies()
    lhs = (cfg.epsilon * tr.column("step_norm_1") - errs * tr.column("step_norm_2")
           + tr.column("second_difference") / (2.0 * cfg.h ** 2))
    return [int(k) for k in np.flatnonzero(lhs > e[:-1] - e[1:] + tol)]


class BoundCheck(NamedTuple):
    ok: bool
    value: float
    bound: float


def finite_length_check(result: SolveResult, cfg: SolverConfig, tol: float | None = None) -> BoundCheck:
    """``sum |dx|_1 <= E_0 / eps + tol`` (requires ``eps > 0``)."""
    if cfg.epsilon <= 0:
        raise ValueError("finite length bound needs epsilon > 0")
    tol = cfg.sum_tol if tol is None else tol
    e = result.energies()
    bound = e[0] / cfg.epsilon + tol
    return BoundCheck(bool(result.path_length_1 <= bound), result.path_length_1, float(bound))


def _zeta(cfg: SolverConfig, lipschitz: float) -> float:
    h = cfg.h
    return 0.5 * (cfg.gamma / h - 1.0 / h ** 2 - 2.0 * cfg.beta * lipschitz / h - lipschitz)


def square_summability_check(result: SolveResult, cfg: SolverConfig, lipschitz: float,
                             tol: float | None = None) -> BoundCheck:
    """``sum |dx|^2 <= E_0 / zeta + tol``, ``zeta = (gamma/h - 1/h^2 - 2 beta L/h - L) / 2``."""
    zeta = _zeta(cfg, lipschitz)
    if zeta <= 0:
        raise ValueError("square summability needs gamma > 1/h + (2 beta + h) L_f")
    tol = cfg.sum_tol if tol is None else tol
    total = float(np.sum(result.trace.column("step_norm_2") ** 2))
    bound = result.energies()[0] / zeta + tol
    return BoundCheck(bool(total <= bound), total, float(bound))


def perturbed_square_summability_check(result: SolveResult, cfg: SolverConfig,
                                       lipschitz: float, tol: float | None = None) -> BoundCheck:
    """``sum |dx|^2 <= (2/zeta)(E_0 + sum |e_k|^2 / (2 zeta)) + tol``."""
    zeta = _zeta(cfg, lipschitz)
    if zeta <= 0:
        raise ValueError("square summability needs gamma > 1/h + (2 beta + h) L_f")
    tol = cfg.sum_tol if tol is None else tol
    errs = np.asarray(result.info.get("error_norms", []), dtype=float)
    total = float(np.sum(result.trace.column("step_norm_2") ** 2))
    bound = (2.0 / zeta) * (result.energies()[0] + float(errs @ errs) / (2.0 * zeta)) + tol
    return BoundCheck(bool(total <= bound), total, float(bound))


def perturbed_finite_length_check(result: SolveResult, cfg: SolverConfig,
                                  tol: float | None = None):
    """Tail bound once the error is small.

    With ``N`` the first index where ``|e_k| <= eps/2``, checks
    ``sum_{k >= N} |dx_k|_2 <= (2/eps)(E_N - E_final) + tol``. Returns
    ``(BoundCheck, N)``; ``N`` is ``None`` when the error never got that small,
    in which case the check is vacuous.
    """
    if cfg.epsilon <= 0:
        raise ValueError("finite length bound needs epsilon > 0")
    tol = cfg.sum_tol if tol is None else tol
    errs = np.asarray(result.info.get("error_norms", []), dtype=float)
    small = np.flatnonzero(errs <= cfg.epsilon / 2.0)
    if small.size == 0:
        return BoundCheck(True, 0.0, math.inf), None
    n0 = int(small[0])
    e = result.energies()
    tail = float(np.sum(result.trace.column("step_norm_2")[n0:]))
    bound = (2.0 / cfg.epsilon) * (e[n0] - e[-1]) + tol
    return BoundCheck(bool(tail <= bound), tail, float(bound)), n0


def write_trace_csv(path, results, with_solver: bool = False) -> None:
    """Write traces of one or more results as CSV (17 significant digits)."""
    if isinstance(results, SolveResult):
        results = [results]
    header = (["solver"] if with_solver else []) + list(TRACE_COLUMNS)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for res in results:
            for row in res.trace.rows():
                cells = [res.solver] if with_solver else []
                cells += [_fmt(v) for v in row]
                w.writerow(cells)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % v
