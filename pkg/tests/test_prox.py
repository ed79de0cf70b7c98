import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from ehtl0.problem import BoxConstraint
from ehtl0.prox import (CoordinateProxProblem, InfeasibleError, brute_force_prox_batch,
                        brute_force_prox_oracle, coordinate_objective, prox_batch,
                        prox_coordinate, prox_vector, random_prox_instances)

STEP = 1e-5


def P(x=0.0, z=0.0, a=0.0, b1=0.0, b2=0.0, h=1.0, lo=-10.0, hi=10.0):
    return CoordinateProxProblem(x, z, a, b1, b2, h, lo, hi)


# -- documented examples, each checked against the grid oracle --------------------------

def test_pure_quadratic_interior():
    r = prox_coordinate(P(z=0.7))
    assert r.y == pytest.approx(0.7) and r.objective == pytest.approx(0.0)


def test_jump_not_worth_paying():
    p = P(z=0.5, b1=1.0)
    r = prox_coordinate(p)
    assert r.y == 0.0 and r.objective == pytest.approx(0.125)
    assert brute_force_prox_oracle(p, STEP).objective == pytest.approx(0.125)


def test_jump_worth_paying():
    p = P(z=2.0, b1=1.0)
    r = prox_coordinate(p)
    assert r.y == pytest.approx(2.0) and r.objective == pytest.approx(1.0)
    assert brute_force_prox_oracle(p, STEP).objective == pytest.approx(1.0)


def test_exact_zero_point_beats_quadratic_minimizer():
    p = P(x=3.0, z=-2.9, b1=0.5)
    r = prox_coordinate(p)
    assert r.y == -3.0 and r.new_coordinate == 0.0
    assert r.objective == pytest.approx(0.005)
    o = brute_force_prox_oracle(p, STEP)
    assert o.objective == pytest.approx(0.005)
    assert r.objective <= o.objective + 1e-12


@pytest.mark.parametrize("x", [-4.0, 0.0, 2.5])
def test_friction_pins_zero_velocity(x):
    r = prox_coordinate(P(x=x, z=0.0, a=0.3))
    assert r.y == 0.0 and r.new_coordinate == x


# -- errors -------------------------------------------------------------------------------

def test_empty_interval_is_infeasible():
    with pytest.raises(InfeasibleError):
        P(lo=1.0, hi=-1.0)


def test_nan_rejected():
    with pytest.raises(ValueError):
        P(z=math.nan)


def test_negative_weight_rejected():
    with pytest.raises(ValueError):
        P(b1=-1.0)


def test_oracle_rejects_bad_step():
    with pytest.raises(ValueError):
        brute_force_prox_oracle(P(), 0.0)


def test_vector_reports_offending_coordinate():
    box = BoxConstraint.uniform(3, -1, 1)
    with pytest.raises(InfeasibleError, match="coordinate 2"):
        prox_vector([0.0, 0.0, 2.0], np.zeros(3), 0.0, 0.0, 0.0, 1.0, box)


# -- properties ------------------------------------------------------------------------------

coord = st.floats(-10, 10, allow_nan=False)
weight = st.floats(0, 5, allow_nan=False)
step_h = st.sampled_from([0.1, 1.0, 10.0])
bound = st.one_of(st.just(math.inf), st.floats(0, 10, allow_nan=False))


@st.composite
def instances(draw):
    x, z = draw(coord), draw(coord)
    h = draw(step_h)
    below, above = draw(bound), draw(bound)
    l_i, u_i = min(x, 0.0) - below, max(x, 0.0) + above
    assume(l_i < u_i)
    return CoordinateProxProblem.from_box(x, z, draw(st.floats(0, 1)), draw(weight),
                                          draw(weight), h, l_i, u_i), l_i, u_i


@given(instances())
def test_agrees_with_grid_oracle(inst):
    p, _, _ = inst
    r = prox_coordinate(p)
    o = brute_force_prox_oracle(p, 1e-3)
    assert r.objective <= o.objective + 1e-12
    assert r.objective >= o.objective - (0.5e-6 + 1e-12)


@given(instances())
def test_feasible_and_consistent(inst):
    p, l_i, u_i = inst
    r = prox_coordinate(p)
    assert p.lo <= r.y <= p.hi
    assert l_i <= r.new_coordinate <= u_i
    assert r.new_coordinate == pytest.approx(p.x + p.h * r.y, abs=1e-9)
    assert r.objective == pytest.approx(coordinate_objective(p, r.y, r.new_coordinate))


@given(coord, st.floats(0, 1), weight, weight, step_h)
def test_zero_target_from_zero_stays_at_zero(z_unused, a, b1, b2, h):
    # With x = 0 every term of phi is nonnegative and vanishes at y = 0.
    r = prox_coordinate(P(x=0.0, z=0.0, a=a, b1=b1, b2=b2, h=h))
    assert r.y == 0.0 and r.new_coordinate == 0.0


@given(coord, st.floats(0, 1), step_h)
def test_zero_target_without_penalty_stays_put(x, a, h):
    # for |x| tiny, landing on 0 costs an underflowed x^2/(2h^2) and ties
    assume(abs(x) > 1e-100)
    r = prox_coordinate(P(x=x, z=0.0, a=a, h=h, lo=-math.inf, hi=math.inf))
    assert r.y == 0.0 and r.new_coordinate == x


def test_zero_target_with_penalty_may_move():
    # phi(0) = b1 when x > 0, so landing on zero can be cheaper.
    r = prox_coordinate(P(x=0.1, z=0.0, b1=1.0, h=1.0))
    assert r.new_coordinate == 0.0 and r.y == pytest.approx(-0.1)


@given(st.floats(0, 10, allow_nan=False), st.floats(0.01, 5))
def test_positive_part_hard_threshold(z, b1):
    r = prox_coordinate(P(z=z, b1=b1, lo=-math.inf, hi=math.inf))
    thr = math.sqrt(2 * b1)
    if abs(z - thr) < 1e-9:
        return
    expected = z if z > thr else 0.0
    assert r.new_coordinate == pytest.approx(expected, abs=0)


@given(st.floats(-10, 0, allow_nan=False), st.floats(0, 5))
def test_negative_targets_are_free_without_b2(z, b1):
    assume(z < -1e-100)
    r = prox_coordinate(P(z=z, b1=b1, lo=-math.inf, hi=math.inf))
    assert r.new_coordinate == z


def test_tie_prefers_zero():
    r = prox_coordinate(P(z=1.0, b1=0.5))
    assert r.new_coordinate == 0.0


def test_tiny_genuine_decrease_is_not_a_tie():
    # phi(0) - phi(z) = z^2 / 2 = 5e-15 is real progress and must be taken.
    r = prox_coordinate(P(x=1.0, z=1e-7, b1=0.1))
    assert r.y == pytest.approx(1e-7)


def test_exact_box_bounds_are_returned():
    r = prox_coordinate(CoordinateProxProblem.from_box(0.3, 100.0, 0.0, 0.0, 0.0, 0.1, -1.0, 5.0))
    assert r.new_coordinate == 5.0


def test_unbounded_cells_use_soft_threshold():
    r = prox_coordinate(P(x=0.0, z=50.0, a=1.0, lo=-math.inf, hi=math.inf))
    assert r.y == 49.0


def test_oracle_pure_quadratic_within_step():
    o = brute_force_prox_oracle(P(z=0.123456), 1e-3)
    assert abs(o.y - 0.123456) <= 1e-3


def test_oracle_never_pays_huge_jump():
    o = brute_force_prox_oracle(P(z=5.0, b1=1e6), 1e-3)
    assert o.new_coordinate <= 0.0


# -- vector prox -------------------------------------------------------------------------------

def test_vector_fixed_point():
    box = BoxConstraint.uniform(4, -2, 2)
    x = np.array([0.5, -1.0, 0.0, 2.0])
    w, xn = prox_vector(x, np.zeros(4), 0.0, 0.0, 0.0, 0.7, box)
    assert np.all(w == 0) and np.array_equal(xn, x)


def test_vector_is_separable(rng):
    box = BoxConstraint([-1.0, -np.inf, 0.0], [2.0, 3.0, np.inf])
    x = np.array([0.5, -2.0, 1.0])
    z = rng.standard_normal(3)
    b1 = np.array([0.1, 0.5, 0.0])
    b2 = np.array([0.2, 0.0, 1.0])
    w, xn = prox_vector(x, z, 0.05, b1, b2, 0.5, box)
    for i in range(3):
        r = prox_coordinate(CoordinateProxProblem.from_box(
            x[i], z[i], 0.05, b1[i], b2[i], 0.5, box.lower[i], box.upper[i]))
        assert w[i] == r.y and xn[i] == r.new_coordinate


def test_vector_dominates_random_probes():
    # [DERIVED] random-probe dominance of the separable objective
    r = np.random.default_rng(5)
    n, h = 5, 0.5
    box = BoxConstraint.uniform(n, -2.0, 3.0)
    x = r.uniform(-2, 3, n)
    z = r.normal(0, 3, n)
    a, b1, b2 = 0.1, r.uniform(0, 2, n), r.uniform(0, 2, n)
    w, _ = prox_vector(x, z, a, b1, b2, h, box)

    def Q(y):
        t = x + h * y
        return a * np.abs(y).sum() + b1[t > 0].sum() + b2[t < 0].sum() + 0.5 * ((y - z) ** 2).sum()

    lo, hi = (box.lower - x) / h, (box.upper - x) / h
    q = Q(w)
    for y in r.uniform(lo, hi, (10_000, n)):
        assert q <= Q(y) + 1e-12


def test_vector_order_independent(rng):
    box = BoxConstraint.uniform(6, -1, 1)
    x = rng.uniform(-1, 1, 6)
    z = rng.standard_normal(6)
    perm = rng.permutation(6)
    w, xn = prox_vector(x, z, 0.01, 0.3, 0.2, 1.0, box)
    wp, xnp = prox_vector(x[perm], z[perm], 0.01, 0.3, 0.2, 1.0, box)
    assert np.array_equal(w[perm], wp) and np.array_equal(xn[perm], xnp)


def test_batch_agreement_on_generated_instances():
    inst = random_prox_instances(20_000, np.random.default_rng(7))
    keys = ("x", "z", "a", "b1", "b2", "h", "lo", "hi")
    _, phi, _ = prox_batch(*(inst[k] for k in keys))
    _, phi_o, _ = brute_force_prox_batch(*(inst[k] for k in keys), grid_step=1e-3)
    assert np.all(phi <= phi_o + 1e-12)
    assert np.all(phi >= phi_o - (0.5e-6 + 1e-12))


def test_generated_instances_cover_infinite_intervals():
    inst = random_prox_instances(10_000, np.random.default_rng(1))
    assert np.isinf(inst["lo"]).any() and np.isinf(inst["hi"]).any()
    assert np.isfinite(inst["lo"]).any() and np.isfinite(inst["hi"]).any()
    assert set(np.unique(inst["h"])) == {0.1, 1.0, 10.0}
