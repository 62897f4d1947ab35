"""Linear Landau-Zener sweep and its instantaneous diagonal frame.

Energies are measured in units of the minimum gap by default (``delta=1``).
The ground mode of the diagonal frame is ``P = U b + V a`` and the excited
mode is ``Q = -V b + U a``; ``U`` and ``V`` are taken real and non-negative.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

#: Below this ratio of epsilon0/delta the sweep endpoints are not deep in the
#: asymptotic regime and a warning is emitted.
EPSILON_RATIO_WARN = 5.0


@dataclass(frozen=True)
class SweepSchedule:
    """Detuning ramp ``epsilon(t) = 2 epsilon0 t / T`` over ``[-T/2, T/2]``."""

    epsilon0: float
    delta: float
    T: float

    def __post_init__(self):
        for name in ("epsilon0", "delta", "T"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
        if self.delta <= 0:
            raise DomainError(
                f"delta must be > 0 (a non-zero minimum gap is required), got {self.delta!r}"
            )
        if self.T <= 0:
            raise DomainError(f"T must be > 0, got {self.T!r}")
        if self.epsilon0 <= self.delta:
            raise DomainError(
                f"epsilon0 must exceed delta, got epsilon0={self.epsilon0!r}, delta={self.delta!r}"
            )
        if self.epsilon0 < EPSILON_RATIO_WARN * self.delta:
            warnings.warn(
                f"epsilon0/delta = {self.epsilon0 / self.delta:.3g} < {EPSILON_RATIO_WARN:g}; "
                "the sweep does not start deep in the diabatic regime",
                stacklevel=3,
            )

    @property
    def v(self):
        """Sweep rate ``d epsilon / dt``."""
        return 2.0 * self.epsilon0 / self.T

    @property
    def t_start(self):
        return -0.5 * self.T

    @property
    def t_end(self):
        return 0.5 * self.T

    def with_T(self, T):
        return SweepSchedule(self.epsilon0, self.delta, T)

    def check_time(self, t):
        t = np.asarray(t, dtype=float)
        # one ulp of slack so grids built from linspace never trip the check
        slack = 4 * np.finfo(float).eps * self.T
        if np.any(np.abs(t) > self.t_end + slack) or np.any(np.isnan(t)):
            raise DomainError(f"time outside [-T/2, T/2] = [{self.t_start}, {self.t_end}]")
        return t


@dataclass(frozen=True)
class FrameCoefficients:
    U: float
    V: float
    gap: float
    kappa: float

    @property
    def angle(self):
        """Mixing angle ``alpha`` with ``U = sin(alpha)``, ``V = cos(alpha)``."""
        return math.atan2(self.U, self.V)


def epsilon_at(schedule, t):
    t = schedule.check_time(t)
    eps = schedule.v * t
    return float(eps) if eps.ndim == 0 else eps


def _amplitudes(eps, delta):
    gap = np.hypot(eps, delta)
    # half-angle form keeps U^2 + V^2 = 1 to rounding and avoids 1 - eps/gap cancellation
    alpha = 0.5 * np.arctan2(delta, eps)
    return np.sin(alpha), np.cos(alpha), gap


def kappa_at(schedule, t):
    """Diabatic coupling ``v delta / (2 (epsilon^2 + delta^2))``."""
    eps = np.asarray(epsilon_at(schedule, t))
    kappa = schedule.v * schedule.delta / (2.0 * (eps * eps + schedule.delta**2))
    return float(kappa) if kappa.ndim == 0 else kappa


def frame_at(schedule, t):
    """Frame amplitudes, gap and diabatic coupling at a single time ``t``."""
    eps = epsilon_at(schedule, t)
    if np.ndim(eps):
        raise DomainError("frame_at takes a scalar time; use frame_arrays for grids")
    U, V, gap = _amplitudes(eps, schedule.delta)
    return FrameCoefficients(float(U), float(V), float(gap), kappa_at(schedule, t))


def frame_arrays(schedule, t):
    """Vectorised ``(U, V, gap, kappa)`` over an array of times."""
    eps = np.asarray(epsilon_at(schedule, t), dtype=float)
    U, V, gap = _amplitudes(eps, schedule.delta)
    return U, V, gap, np.asarray(kappa_at(schedule, t))


def frame_from_detuning(eps, delta):
    """Frame amplitudes for a bare detuning value; ``eps`` may be +-inf."""
    if delta <= 0:
        raise DomainError("delta must be > 0")
    U, V, gap = _amplitudes(float(eps), float(delta))
    return FrameCoefficients(float(U), float(V), float(gap), 0.0)
