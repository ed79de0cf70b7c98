"""First-order certificates for (epsilon-)local minimizers.

A point ``x`` is certified when, coordinate by coordinate,
``0 in g_i + N_i(x_i) + [-eps, eps]`` where ``g = grad f(x)`` and ``N_i`` is
the normal cone of the set that ``x_i`` may move in without changing the
penalty. Which set applies depends on the coordinate's weights:

========================  ==============================  =====================
coordinate                admissible set                  condition at x_i = 0
========================  ==============================  =====================
``x_i != 0``              ``[l_i, u_i]``                  (box normal cone)
unpenalized               ``[l_i, u_i]``                  box normal cone
``lambda1, lambda2 > 0``  ``{0}``                         none
``lambda2 == 0``          ``[l_i, 0]``                    ``g <= eps`` if l_i < 0
``lambda1 == 0``          ``[0, u_i]``                    ``g >= -eps`` if u_i > 0
========================  ==============================  =====================

With uniform weights this is exactly the ``lambda2 > 0`` or the
``lambda2 == 0`` characterization; mixed weights are flagged in the report.
A point certified at ``eps = 0`` minimizes ``f`` over the admissible box,
which :func:`restricted_min_oracle` verifies independently.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .problem import SparseProblem

__all__ = [
    "ConeKind",
    "ConeCondition",
    "Violation",
    "StationarityReport",
    "check_eps_local_min",
    "mixed_regime_check",
    "restricted_box",
    "restricted_minimum",
    "restricted_min_oracle",
]


class ConeKind(str, Enum):
    INTERIOR = "interior"
    AT_LOWER = "at_lower"
    AT_UPPER = "at_upper"
    ZERO_NEG_LOWER = "zero_with_neg_lower"
    ZERO_POS_UPPER = "zero_with_pos_upper"
    FREE = "free_or_omitted"


@dataclass(frozen=True)
class ConeCondition:
    kind: ConeKind
    gradient: float
    slack: float


@dataclass(frozen=True)
class Violation:
    index: int
    kind: ConeKind
    gradient: float
    bound: float


@dataclass(frozen=True)
class StationarityReport:
    satisfied: bool
    eps_used: float
    violations: tuple = ()
    conditions: tuple = field(default=(), repr=False)
    regime: str = "def2"

    def to_dict(self) -> dict:
        return {
            "satisfied": self.satisfied,
            "eps": self.eps_used,
            "regime": self.regime,
            "violations": [
                {"index": v.index, "kind": v.kind.value, "gradient": v.gradient,
                 "bound": v.bound}
                for v in self.violations
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _classify(problem: SparseProblem, x: np.ndarray) -> np.ndarray:
    lower, upper = problem.box.lower, problem.box.upper
    l1, l2 = problem.penalty.lambda1, problem.penalty.lambda2
    n = x.size
    kinds = np.empty(n, dtype=object)
    boxlike = (x != 0) | ((l1 == 0) & (l2 == 0))
    for i in range(n):
        if boxlike[i]:
            if x[i] == lower[i]:
                kinds[i] = ConeKind.AT_LOWER
            elif x[i] == upper[i]:
                kinds[i] = ConeKind.AT_UPPER
            else:
                kinds[i] = ConeKind.INTERIOR
        elif l1[i] > 0 and l2[i] > 0:
            kinds[i] = ConeKind.FREE
        elif l2[i] == 0:
            kinds[i] = ConeKind.ZERO_NEG_LOWER if lower[i] < 0 else ConeKind.FREE
        else:
            kinds[i] = ConeKind.ZERO_POS_UPPER if upper[i] > 0 else ConeKind.FREE
    return kinds


def _regime(problem: SparseProblem) -> str:
    l2 = problem.penalty.lambda2
    if (l2 > 0).all():
        return "def2"
    if (l2 == 0).all():
        return "def3"
    return "mixed"


def check_eps_local_min(problem: SparseProblem, x, eps: float, grad=None,
                        atol: float = 0.0) -> StationarityReport:
    """Certify ``x`` as an ``eps``-local minimizer.

    Parameters
    ----------
    problem : SparseProblem
    x : array_like
        Feasible point.
    eps : float
        Relaxation of the first-order inclusion; 0 asks for an exact local
        minimizer.
    grad : array_like, optional
        ``grad f(x)`` if already available.
    atol : float
        Extra absolute slack on every gradient comparison.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != problem.dimension:
        raise ValueError(f"x has length {x.size}, expected {problem.dimension}")
    if not problem.box.contains(x):
        raise ValueError("x is infeasible")
    g = problem.grad(x) if grad is None else np.asarray(grad, dtype=float)

    kinds = _classify(problem, x)
    conditions = []
    violations = []
    for i, (kind, gi) in enumerate(zip(kinds, g)):
        gi = float(gi)
        if kind is ConeKind.INTERIOR:
            slack, bound = eps - abs(gi), eps
        elif kind in (ConeKind.AT_LOWER, ConeKind.ZERO_POS_UPPER):
            slack, bound = gi + eps, -eps
        elif kind in (ConeKind.AT_UPPER, ConeKind.ZERO_NEG_LOWER):
            slack, bound = eps - gi, eps
        else:
            slack, bound = np.inf, np.inf
        conditions.append(ConeCondition(kind, gi, float(slack)))
        if slack < -atol:
            violations.append(Violation(i, kind, gi, float(bound)))
    return StationarityReport(not violations, float(eps), tuple(violations),
                              tuple(conditions), _regime(problem))


def mixed_regime_check(problem: SparseProblem, x, eps: float, grad=None,
                       atol: float = 0.0) -> StationarityReport:
    """Per-coordinate certificate; the regime field reads ``"mixed"`` when
    coordinates fall under different penalty regimes."""
    return check_eps_local_min(problem, x, eps, grad=grad, atol=atol)


def restricted_box(problem: SparseProblem, x_star):
    """Bounds of the box on which ``x_star`` must minimize ``f``."""
    x = np.asarray(x_star, dtype=float).reshape(-1)
    lo = problem.box.lower.copy()
    hi = problem.box.upper.copy()
    l1, l2 = problem.penalty.lambda1, problem.penalty.lambda2
    pinned = (x == 0) & ((l1 > 0) | (l2 > 0))
    hi[pinned & (l1 > 0)] = 0.0
    lo[pinned & (l2 > 0)] = 0.0
    return lo, hi


def restricted_minimum(problem: SparseProblem, x_star, max_iter: int = 200000,
                       tol: float = 1e-13):
    """Minimize ``f`` over :func:`restricted_box` by accelerated projected gradient.

    Uses a fixed step ``1/L`` with function-value restarts; stops when the
    projected-gradient step falls below ``tol``. Returns ``(x_min, f_min)``.
    """
    lo, hi = restricted_box(problem, x_star)
    L = problem.lipschitz
    f, grad = problem.f, problem.grad
    x = np.clip(np.zeros(problem.dimension), lo, hi)
    y = x.copy()
    fx = f(x)
    t = 1.0
    for _ in range(max_iter):
        x_new = np.clip(y - grad(y) / L, lo, hi)
        f_new = f(x_new)
        if f_new > fx:
            # restart from x with a plain projected step
            t = 1.0
            x_new = np.clip(x - grad(x) / L, lo, hi)
            f_new = f(x_new)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        done = np.max(np.abs(x_new - x)) <= tol * max(1.0, np.max(np.abs(x_new)))
        x, fx, t = x_new, f_new, t_new
        if done:
            g = grad(x)
            if np.max(np.abs(np.clip(x - g / L, lo, hi) - x)) <= tol:
                break
    return x, fx


def restricted_min_oracle(problem: SparseProblem, x_star, eps_opt: float,
                          max_dimension: int = 50) -> bool:
    """Is ``x_star`` within ``eps_opt`` of the minimum of ``f`` on its admissible box?

    Test-scale only: refuses problems with more than ``max_dimension``
    coordinates.
    """
    if problem.dimension > max_dimension:
        raise ValueError(f"restricted_min_oracle is limited to dimension "
                         f"{max_dimension}, got {problem.dimension}")
    x_star = np.asarray(x_star, dtype=float).reshape(-1)
    if not problem.box.contains(x_star):
        raise ValueError("x_star is infeasible")
    _, f_min = restricted_minimum(problem, x_star)
    return bool(problem.f(x_star) <= f_min + eps_opt)
