import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bosonzeno.errors import DomainError, InvariantViolation
from bosonzeno.frame import SweepSchedule, frame_at, frame_from_detuning, kappa_at
from bosonzeno.meanfield import (MeanFieldState, RelaxationConfig, TrajectoryRecord,
                                 final_probability, ground_state, integrate, lab_probability,
                                 rhs_combined, rhs_sigma_x, rhs_sigma_z)

SCHED = SweepSchedule(10.0, 1.0, 20.0)
# kappa ~ 1e-13 everywhere: the coherent drive is negligible against O(1) rates
STILL = SweepSchedule(10.0, 1.0, 1e12)


def _ground_ceiling(schedule):
    f = frame_at(schedule, schedule.t_end)
    return f.V**2


def _rhs_minus_oracle(jz, jm, t, N, gx, gz, schedule):
    # the lowering equation coded independently with the -i gap rotation
    eps = schedule.v * t
    gap = math.hypot(eps, schedule.delta)
    kappa = schedule.v * schedule.delta / (2 * gap**2)
    return (-1j * gap * jm + 2 * kappa * jz - 0.5 * gx * jm
            + gx * (N - 1) * jm * jz / N - 0.5 * gz * jm)


def test_relaxation_config_validation():
    assert RelaxationConfig().closed
    assert not RelaxationConfig(0.1, 0).closed
    with pytest.raises(DomainError):
        RelaxationConfig(-1, 0)
    with pytest.raises(DomainError):
        RelaxationConfig(0, float("nan"))


def test_state_bounds():
    ground_state(10).check(10)
    with pytest.raises(InvariantViolation):
        MeanFieldState(-5.1, 0).check(10)
    with pytest.raises(InvariantViolation):
        MeanFieldState(0, 5.1j).check(10)


def test_substitution_example():
    # N=2, gx=1, jz=0, jplus=0: the kappa terms vanish identically
    djz, djp = rhs_sigma_x(MeanFieldState(0.0, 0j), 0.3, 2, 1.0, SCHED)
    assert djz == pytest.approx(-1.5, abs=1e-15)
    assert djp == 0


@pytest.mark.parametrize("N", [1, 2, 50, 10**4])
@pytest.mark.parametrize("gx", [0.1, 10.0])
def test_dissipative_fixed_point(N, gx):
    djz, djp = rhs_sigma_x(ground_state(N), 0.0, N, gx, STILL)
    assert abs(djz) < 1e-9 * N and abs(djp) < 1e-9 * N


def test_single_boson_drops_pair_terms():
    s = MeanFieldState(0.1, 0.2 - 0.3j)
    for closure in ("product", "offset"):
        djz, djp = rhs_sigma_x(s, 1.0, 1, 2.0, SCHED, closure=closure)
        kappa = kappa_at(SCHED, 1.0)
        gap = frame_at(SCHED, 1.0).gap
        assert djz == pytest.approx(-2 * kappa * 0.2 - 2.0 * (0.5 + 0.1))
        assert djp == pytest.approx(1j * gap * s.jplus + 2 * kappa * 0.1 - 1.0 * s.jplus)


def test_offset_closure_term():
    s = MeanFieldState(0.4, 0.5 + 0.2j)
    rotation = 1j * s.jplus  # gap = delta = 1 at t = 0
    a = rhs_sigma_x(s, 0.0, 4, 1.0, STILL, closure="offset")[1]
    assert a == pytest.approx(rotation - 0.5 * s.jplus - 3 * s.jplus * (0.5 + 0.1), abs=1e-9)
    b = rhs_sigma_x(s, 0.0, 4, 1.0, STILL, closure="product")[1]
    assert b == pytest.approx(rotation - 0.5 * s.jplus + 3 * s.jplus * 0.1, abs=1e-9)
    with pytest.raises(DomainError):
        rhs_sigma_x(s, 0.0, 4, 1.0, STILL, closure="nope")


@settings(max_examples=100, deadline=None)
@given(jz=st.floats(-0.5, 0.5), re=st.floats(-0.5, 0.5), im=st.floats(-0.5, 0.5),
       t=st.floats(-10, 10), N=st.integers(1, 1000),
       gx=st.floats(0, 10), gz=st.floats(0, 10))
def test_lowering_equation_is_conjugate(jz, re, im, t, N, gx, gz):
    s = MeanFieldState(jz * N, complex(re, im) * N)
    _, djp = rhs_combined(s, t, N, RelaxationConfig(gx, gz), SCHED)
    djm = _rhs_minus_oracle(s.jz, s.jminus, t, N, gx, gz, SCHED)
    assert djm == pytest.approx(djp.conjugate(), rel=1e-12, abs=1e-12 * N)


def test_sigma_z_examples():
    djz, _ = rhs_sigma_z(MeanFieldState(0.3, 0j), 1.0, 2.0, SCHED)
    assert djz == 0
    # far from the crossing kappa is negligible: jplus only rotates at the gap
    _, djp = rhs_sigma_z(MeanFieldState(0.0, 0.2 + 0.1j), 0.0, 0.0, STILL)
    assert djp == pytest.approx(1j * 1.0 * (0.2 + 0.1j), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(jz=st.floats(-1, 1), re=st.floats(-1, 1), im=st.floats(-1, 1),
       lam=st.floats(1e-3, 1e3), t=st.floats(-10, 10), gz=st.floats(0, 10))
def test_sigma_z_linear(jz, re, im, lam, t, gz):
    a = rhs_sigma_z(MeanFieldState(jz, complex(re, im)), t, gz, SCHED)
    b = rhs_sigma_z(MeanFieldState(lam * jz, lam * complex(re, im)), t, gz, SCHED)
    assert b[0] == pytest.approx(lam * a[0], rel=1e-12, abs=1e-12)
    assert b[1] == pytest.approx(lam * a[1], rel=1e-12, abs=1e-12)


def test_combined_adds_channels():
    s = MeanFieldState(-0.2, 0.1 + 0.05j)
    x = rhs_sigma_x(s, 0.5, 3, 0.7, SCHED)
    z = rhs_sigma_z(s, 0.5, 1.3, SCHED)
    c = rhs_combined(s, 0.5, 3, RelaxationConfig(0.7, 1.3), SCHED)
    coherent = rhs_sigma_z(s, 0.5, 0.0, SCHED)
    assert c[0] == pytest.approx(x[0] + z[0] - coherent[0])
    assert c[1] == pytest.approx(x[1] + z[1] - coherent[1])


def test_lab_probability_examples():
    N = 7
    g = ground_state(N)
    assert lab_probability(g, frame_from_detuning(math.inf, 1.0), N) == 1.0
    assert lab_probability(g, frame_from_detuning(-math.inf, 1.0), N) == pytest.approx(0.0, abs=1e-30)
    for eps in (-3.0, 0.0, 0.4):
        assert lab_probability(MeanFieldState(0, 0j), frame_from_detuning(eps, 1.0), N) == pytest.approx(0.5)
    with pytest.raises(InvariantViolation):
        lab_probability(MeanFieldState(0, 3.0), frame_from_detuning(0.0, 1.0), 4)


def test_record_requires_increasing_time():
    with pytest.raises(InvariantViolation):
        TrajectoryRecord(1, np.array([0.0, 0.0]), np.zeros(2), np.zeros(2, complex), np.zeros(2))


def test_trajectory_shape_and_start():
    rec = integrate(SCHED, 5, RelaxationConfig(0.1, 0.1), n_samples=101)
    assert len(rec) == 101 and rec.t[0] == SCHED.t_start and rec.t[-1] == SCHED.t_end
    assert rec.jz[0] == -2.5 and rec.jplus[0] == 0
    # the ground mode is almost entirely b early on
    assert rec.p_a[0] == pytest.approx(frame_at(SCHED, SCHED.t_start).V ** 2, abs=1e-12)
    assert rec.p_a[0] < 3e-3


def test_adiabatic_limit():
    for T in (200.0, 2000.0):
        s = SweepSchedule(10.0, 1.0, T)
        assert final_probability(s, 3) == pytest.approx(_ground_ceiling(s), abs=2e-3)


def test_single_spin_norm_conserved():
    rec = integrate(SCHED, 1, RelaxationConfig(), n_samples=500)
    norm = np.sqrt(rec.jz**2 + np.abs(rec.jplus) ** 2)
    assert np.max(np.abs(norm - 0.5)) < 1e-6


def test_sigma_z_normalized_trajectory_independent_of_N():
    cfg = RelaxationConfig(0.0, 0.7)
    base = integrate(SCHED, 1, cfg, n_samples=300).normalized()
    for N in (10, 100):
        other = integrate(SCHED, N, cfg, n_samples=300).normalized()
        for a, b in zip(base, other):
            assert np.max(np.abs(a - b)) <= 1e-10


def test_final_p_a_non_decreasing_in_gamma_x():
    # Below saturation the trend is strict. Once p_a sits on the ground-state ceiling
    # the damped coherence lags the moving frame by about kappa/(gamma_x/2 - i gap),
    # which moves p_a by at most 2 U V kappa / gap at the end of the sweep; the exact
    # solver shows the same few-1e-5 ripple, so that scale is the allowed slack.
    s = SweepSchedule(10.0, 1.0, 10.0)
    f = frame_at(s, s.t_end)
    slack = 2 * f.U * f.V * f.kappa / f.gap
    grid = np.geomspace(1e-3, 1e2, 16)
    for N in (1, 10):
        p = np.array([final_probability(s, N, RelaxationConfig(g, 0.0)) for g in grid])
        d = np.diff(p)
        below = p[1:] < _ground_ceiling(s) - 10 * slack
        assert np.all(d[below] > 0)
        assert np.all(d >= -slack)


def test_final_p_a_increases_with_N_at_weak_gamma_x():
    s = SweepSchedule(10.0, 1.0, 10.0)
    p = [final_probability(s, N, RelaxationConfig(0.01, 0.0)) for N in (1, 10, 100, 1000)]
    assert np.all(np.diff(p) > 0)


def test_sigma_z_gives_no_N_enhancement():
    s = SweepSchedule(10.0, 1.0, 10.0)
    p = [final_probability(s, N, RelaxationConfig(0.0, 1.0)) for N in (1, 100, 10**4)]
    assert max(p) - min(p) < 1e-8


def test_t_initial_and_custom_grid():
    rec = integrate(SCHED, 2, t_eval=np.array([0.0, 5.0]), t_initial=-1.0,
                    initial=MeanFieldState(0.0, 1.0))
    assert rec.t.tolist() == [0.0, 5.0]
    with pytest.raises(DomainError):
        integrate(SCHED, 2, t_eval=np.array([0.0, 50.0]))
