"""Landau-Zener sweeps of N two-mode bosons stabilised by quantum Zeno measurements.

Modules: ``frame`` (sweep and diagonal frame), ``discrete_zeno`` (projective
measurements), ``meanfield`` (Hartree dynamics), ``exact`` (Dicke-space
Lindblad oracle), ``readout`` (majority-vote failure probability), ``tmin``
(minimum sweep time search), ``estimators`` (scikit-learn wrappers), ``cli``.
"""
__version__ = "0.1.0"

from .errors import (BosonZenoError, CapacityError, ConfigError, DomainError, FitDomainError,
                     InfeasibleError, IntegrationError, InvariantViolation)
from .frame import FrameCoefficients, SweepSchedule, epsilon_at, frame_at, kappa_at
from .meanfield import MeanFieldState, RelaxationConfig, TrajectoryRecord, integrate, lab_probability
from .readout import ReadoutModel, failure_probability, required_p
