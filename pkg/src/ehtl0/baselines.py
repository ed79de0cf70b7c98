"""Hard-thresholding baselines: IHT, FISTA-extrapolated IHT and a restarted variant.

All three share the termination rule of :func:`ehtl0.solver.solve` (an
``eps_bar`` certificate at the current iterate, or ``max_iter`` steps) so
iteration counts are comparable. Trace rows use the same columns; the
``energy`` column is NaN because these methods have no energy function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import SparseProblem, composite_value
from .prox import prox_vector
from .solver import (CONVERGED, MAX_ITER, IterationTrace, SolveResult,
                     _infeasible_result)
from .stationarity import check_eps_local_min

__all__ = [
    "BaselineConfig",
    "hard_threshold_step",
    "fista_t_next",
    "iht_solve",
    "eht_fista_solve",
    "aht_solve",
    "AHT_LABEL",
]

AHT_LABEL = "AHT (approx.)"


@dataclass(frozen=True)
class BaselineConfig:
    L: float
    t1: float = 1.0
    max_iter: int = 3000
    eps_bar: float = 2e-3

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if not self.eps_bar >= 0:
            raise ValueError("eps_bar must be nonnegative")


def hard_threshold_step(problem: SparseProblem, point, L: float, grad=None) -> np.ndarray:
    """``argmin_{x in box} <g, x - p> + L/2 |x - p|^2 + penalty(x)`` with ``g = grad f(p)``.

    Equivalent to the scalar prox anchored at 0 with ``h = 1``, ``a = 0``,
    target ``p - g/L`` and weights ``lambda / L``; ``point`` may lie outside
    the box.
    """
    point = np.asarray(point, dtype=float)
    g = problem.grad(point) if grad is None else grad
    target = point - g / L
    zero = np.zeros_like(point)
    _, x_next = prox_vector(zero, target, 0.0, problem.penalty.lambda1 / L,
                            problem.penalty.lambda2 / L, 1.0, problem.box)
    return x_next


def fista_t_next(t: float) -> float:
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))


def _run(problem, cfg: BaselineConfig, x0, name, advance, keep_iterates):
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != problem.dimension:
        raise ValueError(f"x0 has length {x0.size}, expected {problem.dimension}")
    if not problem.box.contains(x0):
        return _infeasible_result(x0, name)
    x_prev = x0.copy()
    x = x0.copy()
    g = problem.grad(x)
    F = composite_value(problem, x)
    trace = IterationTrace()
    iterates = [x.copy()] if keep_iterates else None
    path = 0.0
    k = 0
    status = MAX_ITER
    ctx = {"t": cfg.t1, "restarts": 0}
    while True:
        report = check_eps_local_min(problem, x, cfg.eps_bar, grad=g)
        if report.satisfied:
            status = CONVERGED
            break
        if k >= cfg.max_iter:
            break
        x_next = advance(x, x_prev, g, F, ctx)
        F_next = composite_value(problem, x_next)
        d = x_next - x
        dd = x_next - 2.0 * x + x_prev
        n1 = float(np.abs(d).sum())
        trace.append(k, n1, float(np.linalg.norm(d)), math.nan, F,
                     float(dd @ dd), int(np.count_nonzero(x)))
        path += n1
        x_prev, x, F = x, x_next, F_next
        g = problem.grad(x)
        k += 1
        if keep_iterates:
            iterates.append(x.copy())
    info = {"L": cfg.L}
    if ctx["restarts"]:
        info["restarts"] = ctx["restarts"]
    return SolveResult(x.copy(), status, k, path, trace, report, math.nan, F,
                       name, iterates, info)


def iht_solve(problem: SparseProblem, cfg: BaselineConfig, x0,
              keep_iterates: bool = False) -> SolveResult:
    """Iterative hard thresholding with step ``1/L``."""
    def advance(x, x_prev, g, F, ctx):
        return hard_threshold_step(problem, x, cfg.L, grad=g)

    return _run(problem, cfg, x0, "IHT", advance, keep_iterates)


def eht_fista_solve(problem: SparseProblem, cfg: BaselineConfig, x0,
                    keep_iterates: bool = False) -> SolveResult:
    """Hard thresholding at FISTA-extrapolated points.

    ``y_k = x_k + ((t_k - 1)/t_{k+1}) (x_k - x_{k-1})`` followed by a hard
    threshold step at ``y_k``.
    """
    def advance(x, x_prev, g, F, ctx):
        t = ctx["t"]
        t_next = fista_t_next(t)
        y = x + ((t - 1.0) / t_next) * (x - x_prev)
        ctx["t"] = t_next
        return hard_threshold_step(problem, y, cfg.L)

    return _run(problem, cfg, x0, "EHT_FISTA", advance, keep_iterates)


def aht_solve(problem: SparseProblem, cfg: BaselineConfig, x0,
              keep_iterates: bool = False) -> SolveResult:
    """FISTA-type hard thresholding with a function-value restart.

    If the extrapolated step increases ``F``, the momentum is reset
    (``t = 1``) and a plain hard threshold step is taken from ``x_k``
    instead, so ``F`` never increases when ``L >= L_f``.
    """
    def advance(x, x_prev, g, F, ctx):
        t = ctx["t"]
        t_next = fista_t_next(t)
        y = x + ((t - 1.0) / t_next) * (x - x_prev)
        x_next = hard_threshold_step(problem, y, cfg.L)
        if composite_value(problem, x_next) > F:
            ctx["restarts"] += 1
            x_next = hard_threshold_step(problem, x, cfg.L, grad=g)
            t_next = fista_t_next(1.0)
        ctx["t"] = t_next
        return x_next

    return _run(problem, cfg, x0, AHT_LABEL, advance, keep_iterates)
