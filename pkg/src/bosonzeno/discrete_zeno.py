"""Discrete projective-measurement stabilisation of the sweep.

The ``N`` bosons are projected onto the instantaneous ground mode at
``t_k = -T/2 + k T/n`` for ``k = 1..n``. Each boson survives a projection with
the Born probability ``(U_{k+1} U_k + V_{k+1} V_k)^2``, so a step succeeds with
probability ``(U_{k+1} U_k + V_{k+1} V_k)^(2N)``. The state starts exactly in
the ground mode, so the ``n - 1`` transition factors make up the whole product.

Products are accumulated as sums of ``log cos^2(delta alpha)`` where ``alpha`` is the
frame mixing angle, so ``N n`` in the billions neither underflows nor loses
the tiny deviations from one.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .frame import SweepSchedule, frame_arrays, frame_at

#: the second-order expansion behind the closed-form bound is trusted below this step ratio
SMALL_STEP_RATIO = 0.1
_CHUNK = 1 << 20


@dataclass(frozen=True)
class MeasurementPlan:
    n: int
    N: int
    schedule: SweepSchedule

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N!r}")

    @property
    def dt(self):
        return self.schedule.T / self.n

    @property
    def d_epsilon(self):
        """Detuning step between measurements, ``2 epsilon0 / n``."""
        return 2.0 * self.schedule.epsilon0 / self.n

    @property
    def step_ratio(self):
        """Worst-case ``d_epsilon / delta``; the bound is asserted only when small."""
        return self.d_epsilon / self.schedule.delta

    @property
    def small_step(self):
        return self.step_ratio <= SMALL_STEP_RATIO

    def times(self, k):
        k = np.asarray(k)
        return self.schedule.t_start + k * self.dt


@dataclass(frozen=True)
class BoundResult:
    value: float
    valid: bool
    bracket: float


def _angles(plan, k):
    # clip guards the last point against k*dt rounding just past T/2
    t = np.clip(plan.times(k), plan.schedule.t_start, plan.schedule.t_end)
    U, V, _, _ = frame_arrays(plan.schedule, t)
    return np.arctan2(U, V)


def overlap_probability(before, after, N):
    """Probability that all ``N`` bosons in the ground mode of ``before`` land in that of ``after``."""
    amp = after.U * before.U + after.V * before.V
    return float((amp * amp) ** N)


def step_probability(plan, k):
    """Probability that the projection at ``t_{k+1}`` finds the ground mode again."""
    if int(k) != k or not 1 <= k <= plan.n - 1:
        raise DomainError(f"k must lie in [1, n-1] = [1, {plan.n - 1}], got {k!r}")
    s = plan.schedule
    t0, t1 = (min(max(float(t), s.t_start), s.t_end) for t in plan.times(np.array([k, k + 1])))
    return overlap_probability(frame_at(s, t0), frame_at(s, t1), plan.N)


def log_success_probability(plan):
    """``log`` of the product of all ``n - 1`` step probabilities."""
    total = 0.0
    # fixed chunk order keeps the reduction bit-reproducible
    for start in range(1, plan.n, _CHUNK):
        stop = min(start + _CHUNK, plan.n)
        alpha = _angles(plan, np.arange(start, stop + 1))
        half = 0.5 * np.diff(alpha)
        # log cos(d) = log1p(-2 sin^2(d/2)), exact near d = 0
        total += float(np.sum(np.log1p(-2.0 * np.sin(half) ** 2)))
    return 2.0 * plan.N * total


def success_probability(plan):
    return math.exp(log_success_probability(plan))


def lower_bound(plan):
    """Closed-form bound ``[1 - epsilon0^2 / (2 delta^2 n^2)]^(N n)``.

    Returns a ``BoundResult`` with ``valid=False`` when the bracket is not positive.
    """
    s = plan.schedule
    x = s.epsilon0**2 / (2.0 * s.delta**2 * plan.n**2)
    bracket = 1.0 - x
    if bracket <= 0:
        return BoundResult(0.0, False, bracket)
    return BoundResult(math.exp(plan.N * plan.n * math.log1p(-x)), True, bracket)


def max_step_ratio(plan):
    """Largest ``d_epsilon / sqrt(epsilon(t_k)^2 + delta^2)`` over the transitions."""
    if plan.n < 2:
        return 0.0
    s = plan.schedule
    # the ratio peaks where |epsilon(t_k)| is smallest
    k = np.arange(1, plan.n)
    eps = s.v * plan.times(k)
    return float(plan.d_epsilon / math.sqrt(np.min(eps * eps) + s.delta**2))


def convergence_table(schedule, N, n_values):
    """Rows ``(n, success_probability, lower_bound, bound_valid, max_step_ratio)``."""
    rows = []
    for n in n_values:
        plan = MeasurementPlan(int(n), N, schedule)
        bound = lower_bound(plan)
        rows.append((plan.n, success_probability(plan), bound.value, bound.valid, max_step_ratio(plan)))
    return rows
