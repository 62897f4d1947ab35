import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bosonzeno.discrete_zeno import (MeasurementPlan, convergence_table, lower_bound,
                                     log_success_probability, max_step_ratio,
                                     overlap_probability, step_probability, success_probability)
from bosonzeno.errors import DomainError
from bosonzeno.frame import SweepSchedule, frame_at, frame_from_detuning


def _schedule(ratio, T=10.0):
    return SweepSchedule(epsilon0=float(ratio), delta=1.0, T=T)


def _product_oracle(plan):
    # plain loop over the defining product, in double precision
    s = plan.schedule
    total = 1.0
    for k in range(1, plan.n):
        a = frame_at(s, min(s.t_start + k * plan.dt, s.t_end))
        b = frame_at(s, min(s.t_start + (k + 1) * plan.dt, s.t_end))
        total *= (a.U * b.U + a.V * b.V) ** (2 * plan.N)
    return total


def test_plan_validation():
    with pytest.raises(DomainError):
        MeasurementPlan(0, 1, _schedule(10))
    with pytest.raises(DomainError):
        MeasurementPlan(10, 0, _schedule(10))


def test_measurement_times():
    plan = MeasurementPlan(4, 1, _schedule(10, T=8.0))
    np.testing.assert_allclose(plan.times(np.arange(1, 5)), [-2, 0, 2, 4])
    assert plan.d_epsilon == pytest.approx(5.0)


def test_identical_frames_give_one():
    f = frame_from_detuning(0.7, 1.0)
    assert overlap_probability(f, f, 13) == pytest.approx(1.0, abs=1e-15)


def test_single_boson_is_born_rule():
    # one boson: |<P_k|P_k+1>|^2 with the ground mode written as a unit 2-vector
    a, b = frame_from_detuning(-3.0, 1.0), frame_from_detuning(2.0, 1.0)
    va, vb = np.array([a.U, a.V]), np.array([b.U, b.V])
    assert overlap_probability(a, b, 1) == pytest.approx(abs(va @ vb) ** 2, rel=1e-15)


def test_analytic_overlaps():
    mid, far = frame_from_detuning(0.0, 1.0), frame_from_detuning(math.inf, 1.0)
    assert overlap_probability(mid, far, 1) == pytest.approx(0.5, rel=1e-15)
    assert overlap_probability(mid, far, 10) == pytest.approx(2.0**-10, rel=1e-14)


def test_step_probability_range_and_errors():
    plan = MeasurementPlan(50, 3, _schedule(10))
    vals = [step_probability(plan, k) for k in range(1, 50)]
    assert all(0 < v <= 1 for v in vals)
    for bad in (0, 50):
        with pytest.raises(DomainError):
            step_probability(plan, bad)


def test_single_interval_is_empty_product():
    assert success_probability(MeasurementPlan(1, 100, _schedule(10))) == 1.0


@pytest.mark.parametrize("ratio, n, N", [(10, 200, 1), (5, 57, 7), (20, 1000, 3)])
def test_matches_brute_force_product(ratio, n, N):
    plan = MeasurementPlan(n, N, _schedule(ratio))
    assert success_probability(plan) == pytest.approx(_product_oracle(plan), rel=1e-11)


def test_success_is_product_of_steps():
    plan = MeasurementPlan(40, 2, _schedule(10))
    prod = math.prod(step_probability(plan, k) for k in range(1, 40))
    assert success_probability(plan) == pytest.approx(prod, rel=1e-12)


def test_pure_power_in_N():
    s = _schedule(10)
    for n in (100, 10**4):
        base = log_success_probability(MeasurementPlan(n, 1, s))
        for N in (2, 17, 1000):
            assert log_success_probability(MeasurementPlan(n, N, s)) == pytest.approx(N * base, rel=1e-13)


def test_non_increasing_in_N():
    s = _schedule(10)
    vals = [success_probability(MeasurementPlan(1000, N, s)) for N in (1, 2, 5, 10, 100)]
    assert np.all(np.diff(vals) <= 0)


def test_bound_high_precision_example():
    plan = MeasurementPlan(500_000, 100, _schedule(10))
    mpmath.mp.dps = 50
    ref = (1 - mpmath.mpf(100) / (2 * mpmath.mpf(500_000) ** 2)) ** (100 * 500_000)
    b = lower_bound(plan)
    assert b.valid
    assert b.value == pytest.approx(float(ref), rel=1e-12)
    assert b.value >= 0.99
    assert b.value == pytest.approx(math.exp(-100 * 100 / (2 * 500_000)), rel=1e-6)


def test_bound_flagged_when_bracket_not_positive():
    b = lower_bound(MeasurementPlan(7, 1, _schedule(10)))
    assert not b.valid and b.bracket <= 0 and b.value == 0.0
    assert lower_bound(MeasurementPlan(8, 1, _schedule(10))).valid


def test_bound_tends_to_one():
    vals = [lower_bound(MeasurementPlan(n, 10, _schedule(10))).value for n in (10**3, 10**5, 10**7)]
    assert np.all(np.diff(vals) > 0) and 1 - vals[-1] < 1e-4


def test_n1_example_above_bound():
    plan = MeasurementPlan(10**4, 1, _schedule(10))
    assert success_probability(plan) >= lower_bound(plan).value


def test_success_tends_to_one():
    s = _schedule(10)
    vals = [success_probability(MeasurementPlan(n, 1, s)) for n in (10**3, 10**4, 10**5, 10**6)]
    assert np.all(np.diff(vals) > 0)
    assert 1 - vals[-1] < 1e-5


@pytest.mark.filterwarnings("ignore:epsilon0/delta")
@pytest.mark.parametrize("ratio", [2, 5, 10, 20])
def test_doubling_n_never_hurts(ratio):
    # tiny n (a handful of coarse steps) can land a measurement on the crossing and
    # is excluded; from n = 4 upward doubling is monotone for every ratio
    s = _schedule(ratio)
    n = 4
    prev = success_probability(MeasurementPlan(n, 1, s))
    while n < 2**17:
        n *= 2
        cur = success_probability(MeasurementPlan(n, 1, s))
        assert cur >= prev
        prev = cur


def test_max_step_ratio_diagnostic():
    plan = MeasurementPlan(1000, 1, _schedule(10))
    # a measurement lands on epsilon = 0, so the worst ratio is d_epsilon / delta
    assert max_step_ratio(plan) == pytest.approx(plan.d_epsilon, rel=1e-12)
    assert max_step_ratio(MeasurementPlan(1, 1, _schedule(10))) == 0.0


def test_no_underflow_for_huge_N_n():
    plan = MeasurementPlan(10**6, 10**6, _schedule(10))
    logp = log_success_probability(plan)
    assert math.isfinite(logp) and logp < 0
    assert logp == pytest.approx(10**6 * log_success_probability(MeasurementPlan(10**6, 1, plan.schedule)))


def test_convergence_table_shape():
    rows = convergence_table(_schedule(10), 10, [100, 1000])
    assert [r[0] for r in rows] == [100, 1000]
    assert all(len(r) == 5 for r in rows)


@settings(max_examples=60, deadline=None)
@given(ratio=st.floats(5, 30), n=st.integers(2, 3000), N=st.integers(1, 500))
def test_bound_holds_in_small_step_regime(ratio, n, N):
    plan = MeasurementPlan(n, N, _schedule(ratio))
    b = lower_bound(plan)
    if b.valid and plan.small_step:
        assert success_probability(plan) >= b.value
