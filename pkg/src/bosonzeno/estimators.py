"""scikit-learn compatible wrappers.

``ZenoSweepTransformer`` maps an array of sweep times to the collective state
and lab probability at those times; ``TminPowerLaw`` searches ``T_min`` for a
set of boson numbers during ``fit`` and predicts the fitted power law.
Both follow the usual conventions: hyper-parameters live in ``__init__``,
learned attributes end in ``_``, ``fit`` returns ``self``.
"""
import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import exact, meanfield, tmin
from .frame import SweepSchedule
from .meanfield import RelaxationConfig
from .readout import DEFAULT_TARGET_PE


class ZenoSweepTransformer(TransformerMixin, BaseEstimator):
    """Simulate one sweep and sample it at the times given to ``transform``.

    ``transform(X)`` takes ``X`` of shape ``(n_samples, 1)`` holding times in
    ``[-T/2, T/2]`` (any order) and returns columns
    ``jz, re_jplus, im_jplus, p_a``.
    """

    def __init__(self, n_bosons=1, gamma_x=0.0, gamma_z=0.0, epsilon0=10.0, delta=1.0, T=20.0,
                 method="meanfield", closure="product", rtol=1e-8, atol=1e-10):
        self.n_bosons = n_bosons
        self.gamma_x = gamma_x
        self.gamma_z = gamma_z
        self.epsilon0 = epsilon0
        self.delta = delta
        self.T = T
        self.method = method
        self.closure = closure
        self.rtol = rtol
        self.atol = atol

    def fit(self, X=None, y=None):
        if self.method not in ("meanfield", "exact"):
            raise ValueError(f"method must be 'meanfield' or 'exact', got {self.method!r}")
        self.schedule_ = SweepSchedule(float(self.epsilon0), float(self.delta), float(self.T))
        self.relaxation_ = RelaxationConfig(float(self.gamma_x), float(self.gamma_z))
        if self.method == "exact":
            exact.build_collective_operators(self.n_bosons)
        if X is not None:
            self.n_features_in_ = check_array(X).shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "schedule_")
        X = check_array(X, ensure_min_samples=1)
        if X.shape[1] != 1:
            raise ValueError(f"expected a single column of times, got {X.shape[1]} columns")
        times = X[:, 0]
        order = np.argsort(times, kind="stable")
        uniq, inverse = np.unique(times[order], return_inverse=True)
        # the integrator wants strictly increasing output times starting at the sweep start
        t_eval = uniq
        if self.method == "exact":
            rec = exact.trajectory(self.schedule_, self.n_bosons, self.relaxation_, t_eval=t_eval,
                                   rtol=self.rtol, atol=self.atol)
        else:
            rec = meanfield.integrate(self.schedule_, self.n_bosons, self.relaxation_,
                                      t_eval=t_eval, rtol=self.rtol, atol=self.atol,
                                      closure=self.closure)
        cols = np.column_stack([rec.jz, rec.jplus.real, rec.jplus.imag, rec.p_a])
        out = np.empty((len(times), 4))
        out[order] = cols[inverse]
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array(["jz", "re_jplus", "im_jplus", "p_a"], dtype=object)


class TminPowerLaw(RegressorMixin, BaseEstimator):
    """Minimum sweep time versus boson number, summarised as ``T_min = c N^slope``.

    ``fit(X)`` with ``X`` a column of boson numbers runs the search for each.
    When ``y`` is supplied it is taken as already-measured ``T_min`` values and
    only the power law is fitted.
    """

    def __init__(self, gamma_x=0.1, gamma_z=0.0, epsilon0=10.0, delta=1.0,
                 target_pe=DEFAULT_TARGET_PE, T_lo=tmin.DEFAULT_T_LO, T_hi=tmin.DEFAULT_T_HI,
                 rel_precision=tmin.DEFAULT_REL_PRECISION, closure="product", n_jobs=1):
        self.gamma_x = gamma_x
        self.gamma_z = gamma_z
        self.epsilon0 = epsilon0
        self.delta = delta
        self.target_pe = target_pe
        self.T_lo = T_lo
        self.T_hi = T_hi
        self.rel_precision = rel_precision
        self.closure = closure
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        X = check_array(X)
        if X.shape[1] != 1:
            raise ValueError("X must be a single column of boson numbers")
        self.n_features_in_ = 1
        N = X[:, 0]
        if np.any(N < 1) or np.any(N != np.rint(N)):
            raise ValueError("boson numbers must be positive integers")
        N = [int(n) for n in N]
        if y is None:
            self.result_ = tmin.solve_many(
                N, RelaxationConfig(self.gamma_x, self.gamma_z),
                tmin.default_template(self.epsilon0, self.delta), self.target_pe,
                workers=self.n_jobs, T_lo=self.T_lo, T_hi=self.T_hi,
                rel_precision=self.rel_precision, closure=self.closure)
        else:
            y = check_array(np.asarray(y, dtype=float).reshape(-1, 1))[:, 0]
            if y.shape[0] != len(N) or np.any(y <= 0):
                raise ValueError("y must hold one positive T_min per row of X")
            entries = [tmin.TminEntry(n, float(t), float("nan"), float("nan"), float("nan"),
                                      float("nan")) for n, t in zip(N, y)]
            self.result_ = tmin.TminResult(entries, target_pe=self.target_pe)
        self.slope_, self.residual_ = tmin.fit_exponent(self.result_)
        self.intercept_ = self.result_.intercept
        return self

    def predict(self, X):
        check_is_fitted(self, "slope_")
        X = check_array(X)
        return np.exp(self.intercept_) * X[:, 0] ** self.slope_
