"""Hartree mean-field dynamics of the collective rotated-frame spin.

Sign convention (used everywhere in the package): ``Jz = (n_excited - n_ground)/2``
in the instantaneous diagonal frame, ``J-`` moves one boson from the excited
mode ``Q`` to the ground mode ``P``, and the initial state ``|N>_P |0>_Q`` has
``<Jz> = -N/2``, ``<J+> = 0``.

The longitudinal (sigma-x type) channel relaxes populations at a rate enhanced
by ``N - 1`` through final-state stimulation; the transverse (sigma-z type)
channel only dephases ``<J+->`` at rate ``gamma_z / 2`` and has no ``N``
dependence.

Two closures are available for the stimulated part of ``d<J+>/dt``:

``"product"`` (default)
    ``+gamma_x (N-1) <J+><Jz>/N``, the factorisation of the exact collective
    term ``gamma_x <J+ Jz>``. It keeps pure product states on the Bloch sphere
    and its error against the exact oracle shrinks with ``N``.
``"offset"``
    ``-gamma_x (N-1) <J+> (1/2 + <Jz>/N)``. Kept for comparison; it can drive
    the state outside the Bloch ball (lab probabilities above one).
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, IntegrationError, InvariantViolation
from .frame import frame_arrays

DEFAULT_SAMPLES = 2000
DEFAULT_RTOL = 1e-8
#: absolute tolerance on the normalised variables (jz/N, jplus/N)
DEFAULT_ATOL = 1e-10
PROBABILITY_TOL = 1e-6
CLOSURES = ("product", "offset")


@dataclass(frozen=True)
class RelaxationConfig:
    gamma_x: float = 0.0
    gamma_z: float = 0.0

    def __post_init__(self):
        for name in ("gamma_x", "gamma_z"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")

    @property
    def closed(self):
        return self.gamma_x == 0 and self.gamma_z == 0


@dataclass(frozen=True)
class MeanFieldState:
    """Collective expectations ``<Jz>`` and ``<J+>``; ``<J->`` is ``conj(jplus)``."""

    jz: float
    jplus: complex

    @property
    def jminus(self):
        return complex(self.jplus).conjugate()

    def check(self, N):
        tol = 1e-6 * N
        if not (-N / 2 - tol <= self.jz <= N / 2 + tol):
            raise InvariantViolation(f"<Jz>={self.jz!r} outside [-N/2, N/2] for N={N}")
        if abs(self.jplus) > N / 2 + tol:
            raise InvariantViolation(f"|<J+>|={abs(self.jplus)!r} exceeds N/2 for N={N}")
        return self


def ground_state(N):
    return MeanFieldState(-0.5 * N, 0j)


def _check_N(N):
    if int(N) != N or N < 1:
        raise DomainError(f"N must be a positive integer, got {N!r}")
    return int(N)


def _check_closure(closure):
    if closure not in CLOSURES:
        raise DomainError(f"closure must be one of {CLOSURES}, got {closure!r}")
    return closure


def _stimulated_damping(x, closure):
    """Per-``(N-1) gamma_x`` damping of ``<J+>`` at normalised ``<Jz>/N = x``."""
    return -x if closure == "product" else 0.5 + x


def _coherent(state, t, schedule):
    eps = schedule.v * t
    d2 = eps * eps + schedule.delta**2
    gap = math.sqrt(d2)
    kappa = schedule.v * schedule.delta / (2.0 * d2)
    jp = complex(state.jplus)
    djz = -kappa * 2.0 * jp.real
    djp = 1j * gap * jp + 2.0 * kappa * state.jz
    return djz, djp


def rhs_sigma_x(state, t, N, gamma_x, schedule, closure="product"):
    """Time derivative ``(d<Jz>/dt, d<J+>/dt)`` under longitudinal relaxation."""
    N = _check_N(N)
    _check_closure(closure)
    djz, djp = _coherent(state, t, schedule)
    jz, jp = state.jz, complex(state.jplus)
    djz += -gamma_x * (0.5 * N + jz) - gamma_x * (N - 1) * (0.25 * N - jz * jz / N)
    djp += -0.5 * gamma_x * jp - gamma_x * (N - 1) * jp * _stimulated_damping(jz / N, closure)
    return djz, djp


def rhs_sigma_z(state, t, gamma_z, schedule):
    """Time derivative under transverse relaxation; linear in the state, no ``N``."""
    djz, djp = _coherent(state, t, schedule)
    djp += -0.5 * gamma_z * complex(state.jplus)
    return djz, djp


def rhs_combined(state, t, N, config, schedule, closure="product"):
    """Both channels; coherent terms counted once, dissipators added."""
    djz, djp = rhs_sigma_x(state, t, N, config.gamma_x, schedule, closure)
    djp += -0.5 * config.gamma_z * complex(state.jplus)
    return djz, djp


def _normalized_rhs(N, config, schedule, closure):
    v = schedule.v
    delta = schedule.delta
    delta2 = delta * delta
    gx = config.gamma_x
    gxs = config.gamma_x * (N - 1)
    coh_decay = 0.5 * config.gamma_x + 0.5 * config.gamma_z
    offset = closure == "offset"

    def rhs(t, y):
        x, re, im = y
        eps = v * t
        d2 = eps * eps + delta2
        gap = math.sqrt(d2)
        kappa = v * delta / (2.0 * d2)
        stim = gxs * (0.5 + x) if offset else -gxs * x
        dx = -2.0 * kappa * re - gx * (0.5 + x) - gxs * (0.25 - x * x)
        dre = -gap * im + 2.0 * kappa * x - (coh_decay + stim) * re
        dim = gap * re - (coh_decay + stim) * im
        return [dx, dre, dim]

    return rhs


@dataclass
class TrajectoryRecord:
    """Sampled mean-field (or oracle) trajectory in un-normalised units."""

    N: int
    t: np.ndarray
    jz: np.ndarray
    jplus: np.ndarray
    p_a: np.ndarray
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.t.size > 1 and not np.all(np.diff(self.t) > 0):
            raise InvariantViolation("trajectory times must be strictly increasing")

    def __len__(self):
        return self.t.size

    @property
    def final_p_a(self):
        return float(self.p_a[-1])

    def state(self, i):
        return MeanFieldState(float(self.jz[i]), complex(self.jplus[i]))

    def normalized(self):
        return self.jz / self.N, self.jplus / self.N


def uniform_grid(schedule, n_samples=DEFAULT_SAMPLES):
    if n_samples < 2:
        raise DomainError("need at least two output samples")
    grid = np.linspace(schedule.t_start, schedule.t_end, int(n_samples))
    grid[-1] = schedule.t_end
    return grid


def integrate(schedule, N, config=RelaxationConfig(), initial=None, t_eval=None,
              n_samples=DEFAULT_SAMPLES, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
              closure="product", t_initial=None):
    """Integrate the mean-field equations from ``-T/2`` (or ``t_initial``) to ``T/2``.

    Uses the Dormand-Prince 4(5) embedded pair with adaptive steps. The state is
    integrated as ``(jz/N, jplus/N)`` so tolerances do not depend on ``N``.
    Integration stops at the last requested output time.
    """
    N = _check_N(N)
    _check_closure(closure)
    if initial is None:
        initial = ground_state(N)
    initial.check(N)
    if t_eval is None:
        t_eval = uniform_grid(schedule, n_samples)
    t0 = schedule.t_start if t_initial is None else float(schedule.check_time(t_initial))
    t_eval = np.clip(schedule.check_time(t_eval), t0, schedule.t_end)

    y0 = [initial.jz / N, complex(initial.jplus).real / N, complex(initial.jplus).imag / N]
    sol = solve_ivp(
        _normalized_rhs(N, config, schedule, closure),
        (t0, float(t_eval[-1])),
        y0,
        method="RK45",
        t_eval=t_eval,
        rtol=rtol,
        atol=atol,
    )
    if sol.status != 0:
        raise IntegrationError(f"mean-field integration failed: {sol.message}",
                               last_time=float(sol.t[-1]) if sol.t.size else schedule.t_start)

    x, re, im = sol.y
    jz = x * N
    jplus = (re + 1j * im) * N
    tol = 1e-6 * N
    if np.any(np.abs(jz) > N / 2 + tol) or np.any(np.abs(jplus) > N / 2 + tol):
        bad = int(np.argmax(np.maximum(np.abs(jz), np.abs(jplus))))
        raise InvariantViolation(f"mean-field state left the Bloch ball at t={sol.t[bad]!r}")
    U, V, _, _ = frame_arrays(schedule, sol.t)
    p_a = lab_probabilities(jz, jplus, U, V, N)
    return TrajectoryRecord(N, sol.t, jz, jplus, p_a,
                            extra={"nfev": int(sol.nfev)})


def lab_probabilities(jz, jplus, U, V, N):
    """Per-boson probability of occupying lab mode ``a``, vectorised."""
    jz = np.asarray(jz, dtype=float)
    re = np.real(np.asarray(jplus))
    p = (V * V * (0.5 * N - jz) + U * U * (0.5 * N + jz) + 2.0 * U * V * re) / N
    if np.any(p < -PROBABILITY_TOL) or np.any(p > 1 + PROBABILITY_TOL):
        raise InvariantViolation(f"lab probability outside [0, 1]: range [{p.min()!r}, {p.max()!r}]")
    return np.clip(p, 0.0, 1.0)


def lab_probability(state, frame, N):
    """``<a^dagger a>/N`` from the rotated-frame state, using ``a = V P + U Q``."""
    N = _check_N(N)
    return float(lab_probabilities(state.jz, state.jplus, frame.U, frame.V, N))


def final_probability(schedule, N, config=RelaxationConfig(), rtol=DEFAULT_RTOL,
                      atol=DEFAULT_ATOL, closure="product"):
    """Lab-frame ``p_a`` at ``t = T/2``."""
    rec = integrate(schedule, N, config, t_eval=np.array([schedule.t_end]), rtol=rtol,
                    atol=atol, closure=closure)
    return rec.final_p_a
