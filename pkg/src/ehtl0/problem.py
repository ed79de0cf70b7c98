"""Composite l0-penalized problems over boxes.

A :class:`SparseProblem` bundles a smooth convex objective ``f`` with a box
``[lower, upper]`` (always containing the origin) and per-coordinate weights
that charge ``lambda1[i]`` for ``x_i > 0`` and ``lambda2[i]`` for ``x_i < 0``::

    F(x) = f(x) + sum_i lambda1[i] * 1{x_i > 0} + lambda2[i] * 1{x_i < 0}

Three concrete objective families are provided (a small quadratic, least
squares and logistic regression with an unpenalized intercept) together with
a user-oracle escape hatch and a JSON round trip.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import expit

__all__ = [
    "BoxConstraint",
    "PenaltyWeights",
    "SmoothObjective",
    "QuadraticObjective",
    "LeastSquaresObjective",
    "LogisticObjective",
    "CallableObjective",
    "SparseProblem",
    "SupportSets",
    "SpectralNormWarning",
    "composite_value",
    "support",
    "spectral_norm",
    "make_example1",
    "make_least_squares",
    "make_logistic",
    "problem_to_dict",
    "problem_from_dict",
    "save_problem",
    "load_problem",
]


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BoxConstraint:
    """Box ``lower <= x <= upper`` with ``lower <= 0 <= upper`` coordinatewise.

    Infinite bounds are plain ``-np.inf`` / ``np.inf``.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = _frozen(self.lower).reshape(-1)
        upper = _frozen(self.upper).reshape(-1)
        if lower.shape != upper.shape:
            raise ValueError(
                f"lower and upper differ in length: {lower.size} != {upper.size}")
        if np.isnan(lower).any() or np.isnan(upper).any():
            raise ValueError("box bounds contain NaN")
        if (lower > 0).any() or (upper < 0).any():
            raise ValueError("box must contain the origin (lower <= 0 <= upper)")
        if not (lower < upper).all():
            bad = int(np.flatnonzero(lower >= upper)[0])
            raise ValueError(f"empty or degenerate box at coordinate {bad}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def uniform(cls, n: int, lower: float, upper: float) -> "BoxConstraint":
        return cls(np.full(n, float(lower)), np.full(n, float(upper)))

    @classmethod
    def unbounded(cls, n: int) -> "BoxConstraint":
        return cls.uniform(n, -np.inf, np.inf)

    @property
    def dimension(self) -> int:
        return self.lower.size

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((self.lower <= x) & (x <= self.upper)))

    def project(self, x) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)


@dataclass(frozen=True)
class PenaltyWeights:
    """Per-coordinate weights on the positive and negative support counts."""

    lambda1: np.ndarray
    lambda2: np.ndarray

    def __post_init__(self):
        l1 = _frozen(self.lambda1).reshape(-1)
        l2 = _frozen(self.lambda2).reshape(-1)
        if l1.shape != l2.shape:
            raise ValueError("lambda1 and lambda2 differ in length")
        if not (np.isfinite(l1).all() and np.isfinite(l2).all()):
            raise ValueError("penalty weights must be finite")
        if (l1 < 0).any() or (l2 < 0).any():
            raise ValueError("penalty weights must be nonnegative")
        object.__setattr__(self, "lambda1", l1)
        object.__setattr__(self, "lambda2", l2)

    @classmethod
    def uniform(cls, n: int, lambda1: float, lambda2: float | None = None):
        if lambda2 is None:
            lambda2 = lambda1
        return cls(np.full(n, float(lambda1)), np.full(n, float(lambda2)))

    @property
    def dimension(self) -> int:
        return self.lambda1.size

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.sum(self.lambda1[x > 0]) + np.sum(self.lambda2[x < 0]))


class SmoothObjective:
    """Convex ``f`` with an ``L``-Lipschitz gradient.

    Subclasses implement :meth:`value` and :meth:`gradient` and set
    ``lipschitz``. Serializable families also implement :meth:`payload`.
    """

    kind = "custom"
    lipschitz: float
    dimension: int

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def payload(self) -> dict:
        raise TypeError(f"objective of kind {self.kind!r} is not serializable")


class QuadraticObjective(SmoothObjective):
    """``f(x) = 0.5 x^T Q x + c^T x`` with symmetric positive semidefinite Q."""

    kind = "quadratic"

    def __init__(self, hessian, linear=None, lipschitz: float | None = None):
        Q = _frozen(hessian)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("hessian must be a square matrix")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * max(1.0, np.abs(Q).max())):
            raise ValueError("hessian must be symmetric")
        n = Q.shape[0]
        c = _frozen(np.zeros(n) if linear is None else linear).reshape(-1)
        if c.size != n:
            raise ValueError("linear term has the wrong length")
        self.hessian = Q
        self.linear = c
        self.dimension = n
        self.lipschitz = float(spectral_norm(Q) if lipschitz is None else lipschitz)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ (self.hessian @ x) + self.linear @ x)

    def gradient(self, x):
        return self.hessian @ np.asarray(x, dtype=float) + self.linear

    def payload(self):
        return {"hessian": self.hessian.tolist(), "linear": self.linear.tolist()}


class LeastSquaresObjective(SmoothObjective):
    """``f(x) = 0.5 ||Ax - b||^2``, ``L = ||A^T A||``."""

    kind = "least_squares"

    def __init__(self, A, b, lipschitz: float | None = None):
        A = _frozen(A)
        b = _frozen(b).reshape(-1)
        if A.ndim != 2:
            raise ValueError("A must be a matrix")
        if A.shape[0] != b.size:
            raise ValueError(f"A has {A.shape[0]} rows but b has length {b.size}")
        self.A = A
        self.b = b
        self.dimension = A.shape[1]
        if lipschitz is None:
            lipschitz = spectral_norm(A) ** 2
        self.lipschitz = float(lipschitz)

    def value(self, x):
        r = self.A @ np.asarray(x, dtype=float) - self.b
        return float(0.5 * (r @ r))

    def gradient(self, x):
        return self.A.T @ (self.A @ np.asarray(x, dtype=float) - self.b)

    def payload(self):
        return {"A": self.A.tolist(), "b": self.b.tolist()}


class LogisticObjective(SmoothObjective):
    """Mean logistic loss over rows ``d_i = (a_i, 1)``; last coordinate is the intercept.

    The Lipschitz constant follows the experiments' choice ``||A||^2 / m``
    rather than the tighter ``||D||^2 / (4m)``.
    """

    kind = "logistic"

    def __init__(self, A, y, lipschitz: float | None = None):
        A = _frozen(A)
        y = _frozen(y).reshape(-1)
        if A.ndim != 2:
            raise ValueError("A must be a matrix")
        if A.shape[0] != y.size:
            raise ValueError(f"A has {A.shape[0]} rows but y has length {y.size}")
        if not np.isin(y, (-1.0, 1.0)).all():
            raise ValueError("labels must be -1 or +1")
        m, n = A.shape
        self.A = A
        self.y = y
        self.D = _frozen(np.hstack([A, np.ones((m, 1))]))
        self.dimension = n + 1
        if lipschitz is None:
            lipschitz = spectral_norm(A) ** 2 / m
        self.lipschitz = float(lipschitz)

    def _margins(self, x):
        return self.y * (self.D @ np.asarray(x, dtype=float))

    def value(self, x):
        return float(np.mean(np.logaddexp(0.0, -self._margins(x))))

    def gradient(self, x):
        s = expit(-self._margins(x))
        return -(self.D.T @ (self.y * s)) / self.y.size

    def payload(self):
        return {"A": self.A.tolist(), "y": self.y.tolist()}


class CallableObjective(SmoothObjective):
    """Wrap user-supplied value and gradient oracles."""

    def __init__(self, value: Callable, gradient: Callable, lipschitz: float,
                 dimension: int):
        if not lipschitz > 0:
            raise ValueError("lipschitz must be positive")
        self._value = value
        self._gradient = gradient
        self.lipschitz = float(lipschitz)
        self.dimension = int(dimension)

    def value(self, x):
        return float(self._value(np.asarray(x, dtype=float)))

    def gradient(self, x):
        return np.asarray(self._gradient(np.asarray(x, dtype=float)), dtype=float)


@dataclass(frozen=True)
class SparseProblem:
    objective: SmoothObjective
    box: BoxConstraint
    penalty: PenaltyWeights

    def __post_init__(self):
        n = self.objective.dimension
        if self.box.dimension != n or self.penalty.dimension != n:
            raise ValueError(
                f"dimension mismatch: objective {n}, box {self.box.dimension}, "
                f"penalty {self.penalty.dimension}")

    @property
    def dimension(self) -> int:
        return self.objective.dimension

    @property
    def lipschitz(self) -> float:
        return self.objective.lipschitz

    def f(self, x) -> float:
        return self.objective.value(x)

    def grad(self, x) -> np.ndarray:
        return self.objective.gradient(x)

    def value(self, x) -> float:
        return composite_value(self, x)


class SupportSets(NamedTuple):
    gamma: np.ndarray
    gamma_plus: np.ndarray
    gamma_minus: np.ndarray


def composite_value(p: SparseProblem, x) -> float:
    """Objective ``f(x)`` plus the weighted positive and negative support counts."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != p.dimension:
        raise ValueError(f"x has length {x.size}, expected {p.dimension}")
    return p.objective.value(x) + p.penalty.value(x)


def support(x, zero_tol: float = 0.0) -> SupportSets:
    """Index sets of nonzero, positive and negative entries of ``x``.

    Entries with ``|x_i| <= zero_tol`` count as zero. Solver iterates contain
    exact zeros, so the default tolerance is 0.
    """
    if zero_tol < 0:
        raise ValueError("zero_tol must be nonnegative")
    x = np.asarray(x, dtype=float).reshape(-1)
    plus = np.flatnonzero(x > zero_tol)
    minus = np.flatnonzero(x < -zero_tol)
    return SupportSets(np.union1d(plus, minus), plus, minus)


class SpectralNormWarning(RuntimeWarning):
    pass


def spectral_norm(A, tol: float = 1e-12, max_iter: int = 20000, seed: int = 0) -> float:
    """Largest singular value of ``A`` by power iteration on ``A^T A``.

    The start vector is drawn from a generator seeded with ``seed`` so the
    estimate is reproducible. Iteration stops once the Rayleigh quotient
    changes by less than ``tol`` relative; if that never happens a
    :class:`SpectralNormWarning` is issued and the last estimate returned.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        raise ValueError("A must be nonempty")
    if not tol > 0:
        raise ValueError("tol must be positive")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        new = float(v @ w)
        v = w / nw
        if abs(new - lam) <= tol * new:
            lam = new
            break
        lam = new
    else:
        warnings.warn(f"power iteration did not converge in {max_iter} iterations",
                      SpectralNormWarning, stacklevel=2)
    return math.sqrt(max(lam, 0.0))


def make_example1() -> SparseProblem:
    """``500 x^T x + 30 x_2 (x_1 + x_3) + 0.01 ||x||_0`` on ``[-50, 50]^3``."""
    H = np.array([[1000.0, 30.0, 0.0],
                  [30.0, 1000.0, 30.0],
                  [0.0, 30.0, 1000.0]])
    return SparseProblem(QuadraticObjective(H),
                         BoxConstraint.uniform(3, -50.0, 50.0),
                         PenaltyWeights.uniform(3, 0.01))


def make_least_squares(A, b, lam: float, box: BoxConstraint) -> SparseProblem:
    """``0.5 ||Ax - b||^2 + lam ||x||_0`` over ``box``."""
    obj = LeastSquaresObjective(A, b)
    n = obj.dimension
    return SparseProblem(obj, box, PenaltyWeights.uniform(n, lam))


def make_logistic(A, y, lam: float, lower: float = -1.0, upper: float = 1.0) -> SparseProblem:
    """Logistic loss plus ``lam ||w_+||_0``; the intercept is never penalized."""
    obj = LogisticObjective(A, y)
    n = obj.dimension
    lambda1 = np.full(n, float(lam))
    lambda1[-1] = 0.0
    return SparseProblem(obj, BoxConstraint.uniform(n, lower, upper),
                         PenaltyWeights(lambda1, np.zeros(n)))


# -- JSON ---------------------------------------------------------------------

_OBJECTIVES = {
    "quadratic": lambda d: QuadraticObjective(d["hessian"], d.get("linear"),
                                              d.get("lipschitz")),
    "least_squares": lambda d: LeastSquaresObjective(d["A"], d["b"], d.get("lipschitz")),
    "logistic": lambda d: LogisticObjective(d["A"], d["y"], d.get("lipschitz")),
}


def _encode(v: np.ndarray) -> list:
    return [("inf" if t > 0 else "-inf") if math.isinf(t) else float(t) for t in v]


def _decode(v) -> np.ndarray:
    return np.array([float(t) for t in v], dtype=float)


def problem_to_dict(p: SparseProblem) -> dict:
    obj = {"kind": p.objective.kind, **p.objective.payload(),
           "lipschitz": p.objective.lipschitz}
    return {
        "dimension": p.dimension,
        "lower": _encode(p.box.lower),
        "upper": _encode(p.box.upper),
        "lambda1": p.penalty.lambda1.tolist(),
        "lambda2": p.penalty.lambda2.tolist(),
        "objective": obj,
    }


def problem_from_dict(d: dict) -> SparseProblem:
    try:
        kind = d["objective"]["kind"]
        make = _OBJECTIVES[kind]
    except KeyError as exc:
        raise ValueError(f"unknown or missing objective kind: {exc}") from None
    p = SparseProblem(make(d["objective"]),
                      BoxConstraint(_decode(d["lower"]), _decode(d["upper"])),
                      PenaltyWeights(_decode(d["lambda1"]), _decode(d["lambda2"])))
    if "dimension" in d and int(d["dimension"]) != p.dimension:
        raise ValueError(f"declared dimension {d['dimension']} != {p.dimension}")
    return p


def save_problem(p: SparseProblem, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(p), fh)


def load_problem(path) -> SparseProblem:
    with open(path, encoding="utf-8") as fh:
        return problem_from_dict(json.load(fh))
