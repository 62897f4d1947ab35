"""Majority-vote readout failure probability in the Gaussian limit.

Everything is on the fraction scale: the measured fraction of bosons in mode
``a`` has mean ``p`` and standard deviation ``sqrt(p (1 - p) / N)``, and the
answer is wrong when that fraction falls below the 1/2 cut-off.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc, erfcinv

from .errors import DomainError, InfeasibleError

DEFAULT_TARGET_PE = 1e-12


@dataclass(frozen=True)
class ReadoutModel:
    N: int
    p: float
    target_pe: float = DEFAULT_TARGET_PE

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N!r}")
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"p must lie in [0, 1], got {self.p!r}")
        if not 0.0 < self.target_pe < 1.0:
            raise DomainError(f"target_pe must lie in (0, 1), got {self.target_pe!r}")

    @property
    def failure_probability(self):
        return failure_probability(self.p, self.N)

    @property
    def passes(self):
        return self.failure_probability <= self.target_pe


def failure_probability(p, N):
    """``P_e = erfc((p - 1/2) sqrt(N) / sqrt(2 p (1 - p))) / 2``.

    ``p`` may be an array. The endpoints ``p = 0`` and ``p = 1`` return the exact
    limits 1 and 0.
    """
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N!r}")
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr < 0) | (p_arr > 1)) or np.any(np.isnan(p_arr)):
        raise DomainError("p must lie in [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = (p_arr - 0.5) * math.sqrt(N) / np.sqrt(2.0 * p_arr * (1.0 - p_arr))
    arg = np.where(p_arr <= 0.0, -np.inf, np.where(p_arr >= 1.0, np.inf, arg))
    pe = 0.5 * erfc(arg)
    return float(pe) if pe.ndim == 0 else pe


def _margin(p, N, z):
    return (p - 0.5) * math.sqrt(N) - z * math.sqrt(2.0 * p * (1.0 - p))


def required_p(N, target_pe=DEFAULT_TARGET_PE, xtol=1e-12):
    """Smallest per-boson probability whose failure probability is at most ``target_pe``."""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N!r}")
    if not 0.0 < target_pe < 1.0:
        raise DomainError(f"target_pe must lie in (0, 1), got {target_pe!r}")
    if target_pe >= 0.5:
        # every p >= 1/2 already meets the target
        return 0.5
    z = float(erfcinv(2.0 * target_pe))
    hi = 1.0 - 1e-300
    if _margin(hi, N, z) < 0:
        raise InfeasibleError(f"no p in (1/2, 1) reaches P_e <= {target_pe!r} at N={N}")
    p = brentq(_margin, 0.5, 1.0, args=(N, z), xtol=xtol, rtol=4 * np.finfo(float).eps)
    # the root may sit a rounding step on the wrong side; walk up until the target is met
    while failure_probability(p, N) > target_pe and p < 1.0:
        p = np.nextafter(p, 1.0)
    return float(p)
