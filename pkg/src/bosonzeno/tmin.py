"""Minimum sweep duration meeting a readout target, and the speedup exponent."""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .errors import DomainError, FitDomainError, InfeasibleError
from .frame import SweepSchedule
from .meanfield import DEFAULT_ATOL, DEFAULT_RTOL, RelaxationConfig, final_probability
from .readout import DEFAULT_TARGET_PE, failure_probability, required_p

DEFAULT_T_LO = 1e-4
DEFAULT_T_HI = 1e3
DEFAULT_REL_PRECISION = 1e-3
PRESCAN_POINTS = 16
#: spacing of the fallback scan in log T
GRID_STEP = 1e-3
CERTIFICATE_SHRINK = 2e-3


@dataclass(frozen=True)
class TminEntry:
    N: int
    T_min: float
    p_final: float
    required_p: float
    #: p_a at T_min * (1 - 2e-3); below required_p unless T_min sits on T_lo (then NaN)
    certificate_lo: float
    #: p_a at T_min, at or above required_p
    certificate_hi: float
    monotone_prescan: bool = True
    evaluations: int = 0

    @property
    def certified(self):
        hi_ok = self.certificate_hi >= self.required_p
        lo_ok = math.isnan(self.certificate_lo) or self.certificate_lo < self.required_p
        return hi_ok and lo_ok


@dataclass
class TminResult:
    entries: list
    slope: float = float("nan")
    residual: float = float("nan")
    intercept: float = float("nan")
    target_pe: float = DEFAULT_TARGET_PE
    fit_N: tuple = field(default_factory=tuple)

    @property
    def N(self):
        return np.array([e.N for e in self.entries])

    @property
    def T_min(self):
        return np.array([e.T_min for e in self.entries])

    def speedup_monotone(self):
        order = np.argsort(self.N)
        return bool(np.all(np.diff(self.T_min[order]) <= 0))

    def all_meet_target(self):
        return all(failure_probability(e.p_final, e.N) <= self.target_pe for e in self.entries)


class _Evaluator:
    def __init__(self, N, config, template, closure, rtol, atol):
        self.N, self.config, self.template = N, config, template
        self.closure, self.rtol, self.atol = closure, rtol, atol
        self.cache = {}

    def __call__(self, T):
        if T not in self.cache:
            self.cache[T] = final_probability(self.template.with_T(T), self.N, self.config,
                                              rtol=self.rtol, atol=self.atol,
                                              closure=self.closure)
        return self.cache[T]


def _grid_scan(f, lo, hi, threshold):
    """First point of a ``GRID_STEP`` log-spaced grid on ``[lo, hi]`` meeting the threshold."""
    n = max(2, int(math.ceil(math.log(hi / lo) / GRID_STEP)) + 1)
    grid = np.exp(np.linspace(math.log(lo), math.log(hi), n))
    grid[0], grid[-1] = lo, hi
    prev = lo
    for T in grid:
        if f(T) >= threshold:
            return prev, T
        prev = T
    return None


def solve_tmin(N, config, template, target_pe=DEFAULT_TARGET_PE, T_lo=DEFAULT_T_LO,
               T_hi=DEFAULT_T_HI, rel_precision=DEFAULT_REL_PRECISION,
               closure="product", rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, threshold=None):
    """Smallest ``T`` in ``[T_lo, T_hi]`` whose final ``p_a`` reaches ``required_p(N, target_pe)``.

    A 16-point log-spaced pre-scan brackets the first success. If ``p_a`` is
    monotone across the pre-scan up to that point the bracket is bisected in
    ``log T``; otherwise everything below the bracket is scanned on a fine log
    grid before bisecting. ``threshold`` overrides the readout-derived target ``p``.
    """
    if not 0 < T_lo < T_hi:
        raise DomainError(f"need 0 < T_lo < T_hi, got {T_lo!r}, {T_hi!r}")
    p_req = required_p(N, target_pe) if threshold is None else float(threshold)
    f = _Evaluator(N, config, template, closure, rtol, atol)

    scan = np.exp(np.linspace(math.log(T_lo), math.log(T_hi), PRESCAN_POINTS))
    scan[0], scan[-1] = T_lo, T_hi
    values = []
    first = None
    for i, T in enumerate(scan):
        values.append(f(T))
        if values[-1] >= p_req:
            first = i
            break
    if first is None:
        best = max(values)
        raise InfeasibleError(
            f"p_a never reaches required_p={p_req:.12g} for N={N} within T <= {T_hi:g} "
            f"(best {best:.12g})", best=best)

    monotone = bool(np.all(np.diff(values) >= 0))
    if first == 0:
        return TminEntry(N, float(T_lo), values[0], p_req, float("nan"), values[0],
                         monotone, len(f.cache))

    lo, hi = scan[first - 1], scan[first]
    if not monotone:
        # the pre-scan cannot rule out a narrow earlier success anywhere below the
        # bracket, so walk the whole stretch on the fine grid
        lo, hi = _grid_scan(f, T_lo, scan[first], p_req)
        if lo == hi:
            return TminEntry(N, float(T_lo), f(T_lo), p_req, float("nan"), f(T_lo),
                             monotone, len(f.cache))

    while hi / lo - 1.0 > rel_precision:
        mid = math.sqrt(lo * hi)
        if f(mid) >= p_req:
            hi = mid
        else:
            lo = mid

    p_final = f(hi)
    cert_lo = f(hi * (1.0 - CERTIFICATE_SHRINK)) if hi * (1.0 - CERTIFICATE_SHRINK) >= T_lo else float("nan")
    return TminEntry(N, float(hi), p_final, p_req, cert_lo, p_final, monotone, len(f.cache))


def _solve_one(N, **kwargs):
    return solve_tmin(N, **kwargs)


def solve_many(N_values, config, template, target_pe=DEFAULT_TARGET_PE, workers=1, **kwargs):
    """``solve_tmin`` for each ``N``; results come back in input order."""
    job = partial(_solve_one, config=config, template=template, target_pe=target_pe, **kwargs)
    if workers <= 1 or len(N_values) <= 1:
        entries = [job(N) for N in N_values]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(job, N_values))
    return TminResult(entries, target_pe=target_pe)


def fit_exponent(result, min_entries=4, min_decades=2.0):
    """Least-squares slope of ``log T_min`` against ``log N`` over the larger-``N`` half.

    Returns ``(slope, residual)`` with the residual the RMS misfit in ``log T``;
    also stores both on ``result``.
    """
    N = result.N.astype(float)
    T = result.T_min.astype(float)
    if len(N) < min_entries:
        raise FitDomainError(f"need at least {min_entries} entries, got {len(N)}")
    if math.log10(N.max() / N.min()) < min_decades:
        raise FitDomainError(f"N must span at least {min_decades:g} decades")
    order = np.argsort(N, kind="stable")
    keep = order[len(N) // 2:]
    x, y = np.log(N[keep]), np.log(T[keep])
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    result.slope, result.residual, result.intercept = float(slope), residual, float(intercept)
    result.fit_N = tuple(int(n) for n in N[keep])
    return float(slope), residual


def adiabatic_time(template, p_target=0.99, N=1, **kwargs):
    """Closed-system sweep duration after which the final ``p_a`` first reaches ``p_target``."""
    entry = solve_tmin(N, RelaxationConfig(), template, threshold=p_target, **kwargs)
    return entry.T_min


def default_template(epsilon0=10.0, delta=1.0):
    """Schedule with the requested ``epsilon0/delta``; ``T`` is overwritten by the search."""
    return SweepSchedule(epsilon0, delta, 1.0)
