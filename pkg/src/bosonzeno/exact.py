"""Exact Lindblad evolution on the permutation-symmetric (Dicke) subspace.

Works entirely in the rotated diagonal frame, where the generator is
``H = gap(t) Jz + 2 kappa(t) Jy`` and both dissipators are time independent:

    d rho/dt = -i[H, rho] + (gamma_x/2) D[J-] rho + (gamma_z/2) D[Jz] rho,
    D[c] rho = 2 c rho c^+ - c^+ c rho - rho c^+ c.

Used as a brute-force oracle for the mean-field solver at small ``N``.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import CapacityError, DomainError, IntegrationError, InvariantViolation
from .frame import frame_arrays
from .meanfield import (DEFAULT_ATOL, DEFAULT_RTOL, DEFAULT_SAMPLES, RelaxationConfig,
                        TrajectoryRecord, lab_probabilities, uniform_grid)

N_MAX = 64
TRACE_TOL = 1e-9
HERMITIAN_TOL = 1e-12
POSITIVITY_TOL = 1e-8


@dataclass(frozen=True)
class CollectiveOperators:
    """Dense ``(N+1) x (N+1)`` collective spin matrices, basis ``m = -N/2 .. N/2``."""

    N: int
    jz: np.ndarray
    jplus: np.ndarray
    jminus: np.ndarray
    jy: np.ndarray

    @property
    def m(self):
        return np.diag(self.jz).real


def build_collective_operators(N, n_max=N_MAX):
    if int(N) != N or N < 1:
        raise DomainError(f"N must be a positive integer, got {N!r}")
    if N > n_max:
        raise CapacityError(f"N={N} exceeds the dense oracle cap N_max={n_max}")
    N = int(N)
    j = N / 2
    m = np.arange(N + 1) - j
    jz = np.diag(m).astype(complex)
    # <m+1| J+ |m> = sqrt(j(j+1) - m(m+1))
    ladder = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    jplus = np.diag(ladder, k=-1).astype(complex)
    jminus = jplus.conj().T.copy()
    jy = (jplus - jminus) / 2j
    return CollectiveOperators(N, jz, jplus, jminus, jy)


@dataclass
class DickeDensityMatrix:
    N: int
    rho: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=complex)
        if self.rho.shape != (self.N + 1, self.N + 1):
            raise DomainError(f"rho must be {(self.N + 1,) * 2}, got {self.rho.shape}")

    @classmethod
    def ground(cls, N):
        rho = np.zeros((N + 1, N + 1), dtype=complex)
        rho[0, 0] = 1.0
        return cls(N, rho)

    @classmethod
    def maximally_mixed(cls, N):
        return cls(N, np.eye(N + 1, dtype=complex) / (N + 1))

    def check(self):
        """Raise ``InvariantViolation`` unless trace, hermiticity and positivity hold."""
        rho = self.rho
        drift = abs(np.trace(rho) - 1.0)
        if drift > TRACE_TOL:
            raise InvariantViolation(f"trace drift {drift:.3e} > {TRACE_TOL:g}")
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > HERMITIAN_TOL:
            raise InvariantViolation(f"hermiticity residual {herm:.3e} > {HERMITIAN_TOL:g}")
        low = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
        if low < -POSITIVITY_TOL:
            raise InvariantViolation(f"negative eigenvalue {low:.3e}")
        return self

    @property
    def purity(self):
        return float(np.real(np.vdot(self.rho.conj().T, self.rho)))


def expectations(rho, ops=None):
    """``(<Jz>, <J+>)`` of a Dicke density matrix."""
    if isinstance(rho, DickeDensityMatrix):
        rho = rho.rho
    N = rho.shape[0] - 1
    if ops is None:
        ops = build_collective_operators(N, n_max=max(N, N_MAX))
    jz = np.trace(rho @ ops.jz)
    if abs(jz.imag) > 1e-10:
        raise InvariantViolation(f"<Jz> has imaginary part {jz.imag:.3e}")
    return float(jz.real), complex(np.trace(rho @ ops.jplus))


class HermitianPacking:
    """Real parametrisation of an ``n x n`` Hermitian matrix.

    Layout: ``n`` diagonal entries, then real and imaginary parts of the strict
    upper triangle. Matrices rebuilt from it are Hermitian to the last bit.
    """

    def __init__(self, n):
        self.n = n
        self.iu = np.triu_indices(n, k=1)
        self.n_off = len(self.iu[0])

    @property
    def size(self):
        return self.n + 2 * self.n_off

    def pack(self, rho):
        upper = rho[self.iu]
        return np.concatenate([np.diagonal(rho).real, upper.real, upper.imag])

    def unpack(self, y):
        n, k = self.n, self.n_off
        y = np.asarray(y)
        upper = y[n:n + k] + 1j * y[n + k:]
        rho = np.zeros((n, n), dtype=complex)
        rho[self.iu] = upper
        rho = rho + rho.conj().T
        rho[np.diag_indices(n)] = y[:n]
        return rho

    def unpack_many(self, ys):
        """Unpack the columns of a ``(size, n_times)`` array."""
        return np.stack([self.unpack(col) for col in ys.T])


def _liouvillian_rhs(ops, config, schedule, packing):
    n = ops.N + 1
    m = ops.m
    jy = ops.jy
    jm, jp = ops.jminus, ops.jplus
    jpjm = jp @ jm
    half_gx = 0.5 * config.gamma_x
    half_gz = 0.5 * config.gamma_z
    # D[Jz] is diagonal in the Dicke basis: -(m_i - m_j)^2 rho_ij
    dephase = -half_gz * (m[:, None] - m[None, :]) ** 2
    energy_diff = m[:, None] - m[None, :]
    v, delta = schedule.v, schedule.delta

    def rhs(t, y):
        rho = packing.unpack(y)
        eps = v * t
        d2 = eps * eps + delta * delta
        gap = math.sqrt(d2)
        kappa = v * delta / (2.0 * d2)
        # -i[gap Jz, rho] is elementwise since Jz is diagonal
        comm = jy @ rho
        out = -1j * gap * energy_diff * rho - 2j * kappa * (comm - comm.conj().T)
        if half_gx:
            a = jpjm @ rho
            out += half_gx * (2.0 * (jm @ rho @ jp) - a - a.conj().T)
        if half_gz:
            out += dephase * rho
        return packing.pack(out)

    return rhs


def evolve(schedule, N, config=RelaxationConfig(), rho0=None, t_eval=None,
           n_samples=DEFAULT_SAMPLES, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, check=True,
           t_initial=None):
    """Integrate the master equation from ``-T/2`` (or ``t_initial``) to the last output time.

    Returns ``(times, rhos)`` with ``rhos`` of shape ``(len(times), N+1, N+1)``.
    When ``check`` is set every sample is tested against the density-matrix
    invariants and a breach raises ``IntegrationError``.
    """
    ops = build_collective_operators(N)
    if rho0 is None:
        rho0 = DickeDensityMatrix.ground(ops.N)
    if rho0.N != ops.N:
        raise DomainError("rho0 dimension does not match N")
    rho0.check()
    if t_eval is None:
        t_eval = uniform_grid(schedule, n_samples)
    t0 = schedule.t_start if t_initial is None else float(schedule.check_time(t_initial))
    t_eval = np.clip(schedule.check_time(t_eval), t0, schedule.t_end)

    packing = HermitianPacking(ops.N + 1)
    sol = solve_ivp(_liouvillian_rhs(ops, config, schedule, packing),
                    (t0, float(t_eval[-1])),
                    packing.pack(rho0.rho), method="RK45", t_eval=t_eval,
                    rtol=rtol, atol=atol)
    if sol.status != 0:
        raise IntegrationError(f"master-equation integration failed: {sol.message}",
                               last_time=float(sol.t[-1]) if sol.t.size else schedule.t_start)
    rhos = packing.unpack_many(sol.y)
    if check:
        for t, rho in zip(sol.t, rhos):
            try:
                DickeDensityMatrix(ops.N, rho).check()
            except InvariantViolation as exc:
                raise IntegrationError(f"oracle invariant breach at t={t!r}: {exc}",
                                       last_time=float(t)) from exc
    return sol.t, rhos


def trajectory(schedule, N, config=RelaxationConfig(), **kwargs):
    """Run ``evolve`` and reduce to the same record the mean-field solver emits.

    The record's ``extra`` carries ``purity`` per sample.
    """
    ops = build_collective_operators(N)
    times, rhos = evolve(schedule, N, config, **kwargs)
    jz = np.einsum("tij,ji->t", rhos, ops.jz).real
    jplus = np.einsum("tij,ji->t", rhos, ops.jplus)
    purity = np.einsum("tij,tji->t", rhos, rhos).real
    U, V, _, _ = frame_arrays(schedule, times)
    p_a = lab_probabilities(jz, jplus, U, V, ops.N)
    return TrajectoryRecord(ops.N, times, jz, jplus, p_a, extra={"purity": purity})


def landau_zener_check(schedule):
    """Final excited-state population of a closed single-boson sweep.

    Returns ``(excitation, lz_asymptote)`` where the asymptote is
    ``exp(-pi delta^2 / (2 v))``.
    """
    times, rhos = evolve(schedule, 1, RelaxationConfig(), t_eval=np.array([schedule.t_end]))
    excitation = float(rhos[-1][1, 1].real)
    return excitation, math.exp(-math.pi * schedule.delta**2 / (2.0 * schedule.v))
