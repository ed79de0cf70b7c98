"""Exact prox of dry friction plus sign-split l0 penalties on an interval.

For one coordinate the subproblem is::

    min_{lo <= y <= hi}  phi(y) = a|y| + b1 1{x + h y > 0} + b2 1{x + h y < 0}
                                  + 0.5 (y - z)^2

``y`` is a velocity and ``x + h y`` the new coordinate. The breakpoints
``0`` and ``y0 = -x/h`` split the interval into at most three cells on which
``phi`` is a shifted quadratic, so the global minimum is among seven
candidates: the four breakpoints and one clipped soft-threshold point per
cell. Every candidate is scored with the true indicators.

The point ``y0`` lands the coordinate on exactly zero. Because ``x + h*(-x/h)``
need not round to zero, candidates carry their new coordinate explicitly and
``y0`` is paired with the exact value 0; interval endpoints are likewise
paired with the exact box bounds.

Candidates are ranked on ``phi`` minus the penalty of the current
coordinate, a constant shift that keeps small quadratic differences exact.
Values within ``min(TIE_TOL, TIE_RTOL * |min|)`` of the minimum count as
tied; among them the smallest ``|x + h y|`` wins, then the smallest ``|y|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .problem import BoxConstraint

__all__ = [
    "InfeasibleError",
    "CoordinateProxProblem",
    "ProxResult",
    "TIE_TOL",
    "TIE_RTOL",
    "coordinate_objective",
    "prox_coordinate",
    "prox_batch",
    "prox_vector",
    "brute_force_prox_oracle",
    "brute_force_prox_batch",
    "random_prox_instances",
]

TIE_TOL = 1e-12
TIE_RTOL = 1e-14


class InfeasibleError(ValueError):
    """The feasible interval for a coordinate is empty."""


@dataclass(frozen=True)
class CoordinateProxProblem:
    """Scalar subproblem on the velocity interval ``[lo, hi]``.

    ``lower`` and ``upper`` optionally record the coordinate bounds the
    interval came from, so that a result at an endpoint reports the exact
    bound as its new coordinate.
    """
    x: float
    z: float
    a: float
    b1: float
    b2: float
    h: float
    lo: float
    hi: float
    lower: float | None = None
    upper: float | None = None

    def __post_init__(self):
        vals = (self.x, self.z, self.a, self.b1, self.b2, self.h, self.lo, self.hi)
        if any(math.isnan(v) for v in vals):
            raise ValueError(f"NaN in prox problem {self}")
        if self.lo > self.hi:
            raise InfeasibleError(f"empty interval [{self.lo}, {self.hi}]")
        if not (self.lo <= 0.0 <= self.hi):
            raise ValueError("interval must contain 0 (current point feasible)")
        if self.a < 0 or self.b1 < 0 or self.b2 < 0:
            raise ValueError("weights a, b1, b2 must be nonnegative")
        if not self.h > 0:
            raise ValueError("h must be positive")

    @classmethod
    def from_box(cls, x, z, a, b1, b2, h, lower, upper) -> "CoordinateProxProblem":
        return cls(x, z, a, b1, b2, h, (lower - x) / h, (upper - x) / h,
                   float(lower), float(upper))


class ProxResult(NamedTuple):
    y: float
    objective: float
    new_coordinate: float


def coordinate_objective(p: CoordinateProxProblem, y: float,
                         new_coordinate: float | None = None) -> float:
    """Evaluate ``phi(y)``; indicators use ``new_coordinate`` when given."""
    t = p.x + p.h * y if new_coordinate is None else new_coordinate
    pen = p.b1 if t > 0 else (p.b2 if t < 0 else 0.0)
    return p.a * abs(y) + pen + 0.5 * (y - p.z) ** 2


def _as_batch(*arrays):
    out = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in arrays))
    return [np.ascontiguousarray(v).reshape(-1) for v in out]


def _kernel(x, z, a, b1, b2, h, lo, hi, t_lo, t_hi):
    n = x.size
    zero = np.zeros(n)
    y0 = -x / h
    bp = np.sort(np.stack([lo, zero, np.clip(y0, lo, hi), hi], axis=1), axis=1)
    left, right = bp[:, :-1], bp[:, 1:]
    # cells never straddle 0 because 0 is a breakpoint
    cell = np.where(left >= 0, (z - a)[:, None], (z + a)[:, None])
    cell = np.clip(cell, left, right)

    ys = np.column_stack([lo, hi, zero, np.clip(y0, lo, hi), cell])
    with np.errstate(invalid="ignore"):
        ts = x[:, None] + h[:, None] * ys
    ts[:, 0] = t_lo
    ts[:, 1] = t_hi
    ts[:, 2] = x
    ts[:, 3] = 0.0
    at_lo = ys == lo[:, None]
    at_hi = ys == hi[:, None]
    # y0 keeps its exact zero even when it rounds onto an endpoint
    at_lo[:, 3] = at_hi[:, 3] = False
    ts = np.where(at_lo, t_lo[:, None], np.where(at_hi, t_hi[:, None], ts))
    ts = np.clip(ts, t_lo[:, None], t_hi[:, None])

    finite = np.isfinite(ys)
    pen_x = np.where(x > 0, b1, np.where(x < 0, b2, 0.0))[:, None]
    with np.errstate(invalid="ignore", over="ignore"):
        pen = np.where(ts > 0, b1[:, None], np.where(ts < 0, b2[:, None], 0.0))
        smooth = a[:, None] * np.abs(ys) + 0.5 * (ys - z[:, None]) ** 2
        phi = smooth + pen
        # candidates are ranked on phi minus the current penalty: the shift
        # cancels exactly for moves that keep the sign of x, so tiny
        # quadratic decreases are not lost to rounding against b1 or b2
        rel = smooth + (pen - pen_x)
    phi = np.where(finite, phi, np.inf)
    rel = np.where(finite, rel, np.inf)

    # ties: smaller |new coordinate|, then smaller |y|
    best = rel.min(axis=1)
    near = rel <= (best + np.minimum(TIE_TOL, TIE_RTOL * np.abs(best)))[:, None]
    k1 = np.where(near, np.abs(ts), np.inf)
    near &= k1 == k1.min(axis=1)[:, None]
    k2 = np.where(near, np.abs(ys), np.inf)
    idx = np.argmin(k2, axis=1)
    rows = np.arange(n)
    return ys[rows, idx], phi[rows, idx], ts[rows, idx]


def _validate(x, z, a, b1, b2, h, lo, hi):
    stacked = np.stack([x, z, a, b1, b2, h, lo, hi])
    bad = np.isnan(stacked).any(axis=0)
    if bad.any():
        raise ValueError(f"NaN input at coordinate {int(np.flatnonzero(bad)[0])}")
    bad = lo > hi
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise InfeasibleError(f"empty interval [{lo[i]}, {hi[i]}] at coordinate {i}")
    bad = (lo > 0) | (hi < 0)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise InfeasibleError(f"current point infeasible at coordinate {i}")
    if (a < 0).any() or (b1 < 0).any() or (b2 < 0).any():
        raise ValueError("weights a, b1, b2 must be nonnegative")
    if not (h > 0).all():
        raise ValueError("h must be positive")


def prox_batch(x, z, a, b1, b2, h, lo, hi):
    """Vectorized :func:`prox_coordinate` over broadcastable arrays.

    Returns ``(y, objective, new_coordinate)`` arrays.
    """
    x, z, a, b1, b2, h, lo, hi = _as_batch(x, z, a, b1, b2, h, lo, hi)
    _validate(x, z, a, b1, b2, h, lo, hi)
    with np.errstate(invalid="ignore"):
        t_lo = np.where(np.isfinite(lo), x + h * lo, -np.inf)
        t_hi = np.where(np.isfinite(hi), x + h * hi, np.inf)
    return _kernel(x, z, a, b1, b2, h, lo, hi, t_lo, t_hi)


def prox_coordinate(p: CoordinateProxProblem) -> ProxResult:
    """Global minimizer of the scalar subproblem ``p``."""
    if p.lower is None and p.upper is None:
        y, phi, t = prox_batch(p.x, p.z, p.a, p.b1, p.b2, p.h, p.lo, p.hi)
    else:
        args = _as_batch(p.x, p.z, p.a, p.b1, p.b2, p.h, p.lo, p.hi)
        _validate(*args)
        t_lo = np.array([p.x + p.h * p.lo if p.lower is None else p.lower])
        t_hi = np.array([p.x + p.h * p.hi if p.upper is None else p.upper])
        y, phi, t = _kernel(*args, t_lo, t_hi)
    return ProxResult(float(y[0]), float(phi[0]), float(t[0]))


def prox_vector(x, z, a, b1, b2, h: float, box: BoxConstraint):
    """Apply the scalar prox to every coordinate.

    The interval for coordinate ``i`` is ``[(l_i - x_i)/h, (u_i - x_i)/h]``.
    Returns ``(w, x_next)`` where ``x_next`` lies in ``box`` and agrees with
    ``x + h*w`` up to rounding (exactly on zeros and on active bounds).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    n = x.size
    if box.dimension != n:
        raise ValueError(f"box has dimension {box.dimension}, x has {n}")
    z, a, b1, b2, hv = _as_batch(z, a, b1, b2, h)
    z, a, b1, b2, hv = (np.broadcast_to(v, n) if v.size == 1 else v
                        for v in (z, a, b1, b2, hv))
    if z.size != n:
        raise ValueError(f"z has length {z.size}, expected {n}")
    if not box.contains(x):
        i = int(np.flatnonzero((x < box.lower) | (x > box.upper))[0])
        raise InfeasibleError(f"x is outside the box at coordinate {i}")
    with np.errstate(invalid="ignore"):
        lo = (box.lower - x) / hv
        hi = (box.upper - x) / hv
    _validate(x, z, a, b1, b2, hv, lo, hi)
    w, _, x_next = _kernel(x, np.asarray(z, float), np.asarray(a, float),
                           np.asarray(b1, float), np.asarray(b2, float),
                           np.asarray(hv, float), lo, hi, box.lower, box.upper)
    return w, x_next


# -- brute-force oracle ---------------------------------------------------------

try:
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None


def _phi_at(g, xi, zi, ai, b1i, b2i, h_i):
    t = xi + h_i * g
    pen = b1i if t > 0 else (b2i if t < 0 else 0.0)
    return ai * abs(g) + pen + 0.5 * (g - zi) * (g - zi)


def _grid_scan_py(x, z, a, b1, b2, h, lo, hi, step, out_y, out_phi, out_t):
    for i in range(x.size):
        xi, zi, ai, h_i = x[i], z[i], a[i], h[i]
        b1i, b2i = b1[i], b2[i]
        lim = abs(zi) + abs(xi) / h_i + 10.0
        L = max(lo[i], -lim)
        H = min(hi[i], lim)

        # exact breakpoints first: 0 (stay), y0 (land on zero), endpoints
        best_y = 0.0
        best_t = xi
        best = _phi_at(0.0, xi, zi, ai, b1i, b2i, h_i)
        y0 = -xi / h_i
        if lo[i] <= y0 <= hi[i]:
            v = ai * abs(y0) + 0.5 * (y0 - zi) * (y0 - zi)
            if v < best:
                best, best_y, best_t = v, y0, 0.0
        for e in (lo[i], hi[i]):
            if math.isfinite(e):
                v = _phi_at(e, xi, zi, ai, b1i, b2i, h_i)
                if v < best:
                    best, best_y, best_t = v, e, xi + h_i * e

        # grid points near the clipped quadratic center tighten the bound
        c = min(max(zi, L), H)
        k_c = math.floor(c / step)
        for k in range(k_c - 1, k_c + 3):
            g = k * step
            if L <= g <= H:
                v = _phi_at(g, xi, zi, ai, b1i, b2i, h_i)
                if v < best:
                    best, best_y, best_t = v, g, xi + h_i * g

        # a grid point with x + h g != 0 pays at least min(b1, b2), so
        # phi(g) >= 0.5 (g - z)^2 + min(b1, b2) and points outside this window
        # cannot win; x + h g == 0 only at y0, evaluated above
        slack = max(best - min(b1i, b2i), 0.0)
        r = math.sqrt(2.0 * slack)
        k_lo = math.ceil(max(L, zi - r) / step)
        k_hi = math.floor(min(H, zi + r) / step)
        for k in range(k_lo, k_hi + 1):
            g = k * step
            v = _phi_at(g, xi, zi, ai, b1i, b2i, h_i)
            if v < best:
                best, best_y, best_t = v, g, xi + h_i * g
        out_y[i] = best_y
        out_phi[i] = best
        out_t[i] = best_t


if njit is not None:
    _phi_at = njit(_phi_at)
    _grid_scan = njit(cache=True)(_grid_scan_py)
else:  # pragma: no cover
    _grid_scan = _grid_scan_py


def brute_force_prox_batch(x, z, a, b1, b2, h, lo, hi, grid_step: float):
    """Grid-search oracle for many scalar problems.

    Evaluates ``phi`` on the grid ``{k * grid_step}`` intersected with the
    interval (infinite ends clamped to ``|z| + |x|/h + 10``) together with the
    exact breakpoints ``0``, ``-x/h``, ``lo`` and ``hi``. Grid points whose
    quadratic term plus the smaller jump weight exceeds the best value already
    seen are skipped, which leaves the grid minimum unchanged.
    """
    if not grid_step > 0:
        raise ValueError("grid_step must be positive")
    x, z, a, b1, b2, h, lo, hi = _as_batch(x, z, a, b1, b2, h, lo, hi)
    _validate(x, z, a, b1, b2, h, lo, hi)
    n = x.size
    out_y, out_phi, out_t = np.empty(n), np.empty(n), np.empty(n)
    _grid_scan(x, z, a, b1, b2, h, lo, hi, float(grid_step), out_y, out_phi, out_t)
    return out_y, out_phi, out_t


def brute_force_prox_oracle(p: CoordinateProxProblem, grid_step: float) -> ProxResult:
    y, phi, t = brute_force_prox_batch(p.x, p.z, p.a, p.b1, p.b2, p.h, p.lo, p.hi,
                                       grid_step)
    return ProxResult(float(y[0]), float(phi[0]), float(t[0]))


def random_prox_instances(n: int, rng: np.random.Generator, inf_prob: float = 0.25):
    """Random scalar problems as a dict of arrays.

    ``x, z`` uniform on ``[-10, 10]``, ``a`` on ``[0, 1]``, ``b1, b2`` on
    ``[0, 5]``, ``h`` from ``{0.1, 1, 10}``. Each box side is infinite with
    probability ``inf_prob`` and pinned at 0 (when ``x`` allows) with
    probability 0.05; otherwise it sits up to 10 beyond ``x``.
    """
    x = rng.uniform(-10, 10, n)
    z = rng.uniform(-10, 10, n)
    a = rng.uniform(0, 1, n)
    b1 = rng.uniform(0, 5, n)
    b2 = rng.uniform(0, 5, n)
    h = rng.choice(np.array([0.1, 1.0, 10.0]), n)
    lower = np.minimum(x, 0.0) - rng.uniform(0, 10, n)
    upper = np.maximum(x, 0.0) + rng.uniform(0, 10, n)
    u_kind = rng.random(n)
    l_kind = rng.random(n)
    lower = np.where(l_kind < inf_prob, -np.inf, lower)
    upper = np.where(u_kind < inf_prob, np.inf, upper)
    lower = np.where((l_kind > 0.95) & (x >= 0), 0.0, lower)
    upper = np.where((u_kind > 0.95) & (x <= 0), 0.0, upper)
    lo = (lower - x) / h
    hi = (upper - x) / h
    return {"x": x, "z": z, "a": a, "b1": b1, "b2": b2, "h": h, "lo": lo, "hi": hi}
