"""Estimate eps from binned asymmetry data and score fixed models by chi^2.

Only eps is floated (as Re eps, Im eps); lifetimes, mass difference and
channel widths stay fixed. :class:`EpsilonFitter` exposes the fit through
the scikit-learn estimator interface with X = bin intervals (t_lo, t_hi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .asymmetry import interval_expectation
from .errors import EmptySectorError, ValidationError
from .io import read_json, write_json
from .params import KaonPhysics
from .states import Channel, Model

MIN_BINS = 5
GRID_SIZE = 21
GRID_MAX_ABS = 0.01
SIMPLEX_STEP = 5e-4
HESSIAN_STEP = 1e-5
# Hessian eigenvalues below this fraction of the largest are treated as flat
FLAT_RTOL = 1e-9
FALSIFY_SIGMA = 5.0


@dataclass(frozen=True)
class FitResult:
    epsilon_hat: complex
    chi2: float
    ndf: int
    covariance: np.ndarray
    converged: bool
    n_evaluations: int = 0
    message: str = ""

    @property
    def abs_epsilon(self) -> float:
        return abs(self.epsilon_hat)

    @property
    def sigma_abs_epsilon(self) -> float:
        """Error on |eps| propagated from the (Re, Im) covariance."""
        r = abs(self.epsilon_hat)
        if r == 0:
            return float(math.sqrt(max(np.max(np.diag(self.covariance)), 0.0)))
        g = np.array([self.epsilon_hat.real, self.epsilon_hat.imag]) / r
        with np.errstate(invalid="ignore"):
            var = float(g @ self.covariance @ g)
        if math.isnan(var):
            return math.inf
        return math.sqrt(max(var, 0.0))

    def to_dict(self) -> dict:
        return {"epsilon_hat": self.epsilon_hat, "abs_epsilon": self.abs_epsilon,
                "arg_epsilon_degrees": math.degrees(np.angle(self.epsilon_hat)),
                "sigma_abs_epsilon": self.sigma_abs_epsilon, "chi2": self.chi2,
                "ndf": self.ndf, "covariance": self.covariance, "converged": self.converged,
                "n_evaluations": self.n_evaluations, "message": self.message}

    @classmethod
    def from_dict(cls, doc: dict) -> FitResult:
        eps = doc["epsilon_hat"]
        cov = np.array([[float(v) for v in row] for row in doc["covariance"]])
        return cls(complex(eps["re"], eps["im"]), float(doc["chi2"]), int(doc["ndf"]), cov,
                   bool(doc["converged"]), int(doc.get("n_evaluations", 0)), doc.get("message", ""))


def write_fit_json(result: FitResult, path):
    return write_json(path, result.to_dict())


def read_fit_json(path) -> FitResult:
    return FitResult.from_dict(read_json(path))


def _covariance(f, x0: np.ndarray, h: float = HESSIAN_STEP) -> np.ndarray:
    """2 H^-1 from a central-difference Hessian; flat directions get inf variance."""
    n = x0.size
    hess = np.empty((n, n))
    f0 = f(x0)
    for i in range(n):
        ei = np.eye(n)[i] * h
        hess[i, i] = (f(x0 + ei) - 2 * f0 + f(x0 - ei)) / h ** 2
        for j in range(i + 1, n):
            ej = np.eye(n)[j] * h
            hess[i, j] = hess[j, i] = (f(x0 + ei + ej) - f(x0 + ei - ej)
                                       - f(x0 - ei + ej) + f(x0 - ei - ej)) / (4 * h ** 2)
    lam, vec = np.linalg.eigh(hess)
    top = max(float(np.max(np.abs(lam))), 0.0)
    flat = lam <= FLAT_RTOL * top if top > 0 else np.ones(n, dtype=bool)
    cov = np.zeros((n, n))
    for k in np.flatnonzero(~flat):
        cov += (2.0 / lam[k]) * np.outer(vec[:, k], vec[:, k])
    for k in np.flatnonzero(flat):
        touched = np.abs(np.outer(vec[:, k], vec[:, k])) > 1e-8
        cov[touched] = np.inf
    return cov


def _as_intervals(X) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValidationError("X must have shape (n_bins, 2) holding (t_lo, t_hi)")
    return X[:, 0], X[:, 1]


class EpsilonFitter(RegressorMixin, BaseEstimator):
    """Least-squares estimate of eps from binned WWA asymmetry data.

    Parameters
    ----------
    physics : KaonPhysics, optional
        Fixed inputs; its own eps is ignored. Defaults to the standard set.
    norm_window, norm_channels
        Generation window and channels of the event samples, so that the
        model reproduces per-flavor normalized count asymmetries.
    channel : str
        Channel the asymmetry was measured in.
    grid_size : int
        Pre-scan grid is ``grid_size`` x ``grid_size`` over |eps| in
        [0, 0.01] and arg in [0, 90] degrees.
    max_iter : int
        Bound on simplex iterations.

    Attributes
    ----------
    epsilon_ : complex
    result_ : FitResult
    """

    def __init__(self, physics=None, norm_window=None, norm_channels=None, channel="2pi",
                 grid_size=GRID_SIZE, max_iter=4000):
        self.physics = physics
        self.norm_window = norm_window
        self.norm_channels = norm_channels
        self.channel = channel
        self.grid_size = grid_size
        self.max_iter = max_iter

    def _physics(self) -> KaonPhysics:
        return self.physics if self.physics is not None else KaonPhysics.default()

    def _expect(self, eps: complex, t_lo, t_hi):
        return interval_expectation(Model.WWA, self._physics().with_epsilon(eps), t_lo, t_hi,
                                    self.channel, self.norm_window, self.norm_channels)

    def fit(self, X, y, sigma=None):
        t_lo, t_hi = _as_intervals(X)
        y = np.asarray(y, dtype=float)
        sigma = np.ones_like(y) if sigma is None else np.broadcast_to(
            np.asarray(sigma, dtype=float), y.shape)
        if y.shape != t_lo.shape:
            raise ValidationError("y must hold one value per interval")
        ok = np.isfinite(y) & np.isfinite(sigma) & (sigma > 0)
        if np.count_nonzero(ok) < MIN_BINS:
            raise EmptySectorError(f"need at least {MIN_BINS} non-empty bins with sigma > 0")
        t_lo, t_hi, y, sigma = t_lo[ok], t_hi[ok], y[ok], sigma[ok]
        limit = 0.1 * (1 - 1e-9)

        def chi2(x):
            eps = complex(x[0], x[1])
            if abs(eps) >= limit:
                return 1e300
            r = (y - self._expect(eps, t_lo, t_hi)) / sigma
            return float(r @ r)

        mags = np.linspace(0.0, GRID_MAX_ABS, self.grid_size)
        args = np.radians(np.linspace(0.0, 90.0, self.grid_size))
        best, best_x = math.inf, np.zeros(2)
        for m in mags:
            for a in args:
                x = np.array([m * math.cos(a), m * math.sin(a)])
                v = chi2(x)
                if v < best:
                    best, best_x = v, x
        simplex = np.array([best_x, best_x + [SIMPLEX_STEP, 0.0], best_x + [0.0, SIMPLEX_STEP]])
        res = minimize(chi2, best_x, method="Nelder-Mead",
                       options={"initial_simplex": simplex, "xatol": 1e-10, "fatol": 1e-10,
                                "maxiter": self.max_iter, "maxfev": 4 * self.max_iter})
        x_hat = res.x if res.fun <= best else best_x
        eps_hat = complex(x_hat[0], x_hat[1])
        self.epsilon_ = eps_hat
        self.result_ = FitResult(eps_hat, float(min(res.fun, best)), int(y.size - 2),
                                 _covariance(chi2, np.asarray(x_hat, dtype=float)),
                                 bool(res.success), int(res.nfev) + self.grid_size ** 2,
                                 str(res.message))
        return self

    def predict(self, X):
        check_is_fitted(self, "epsilon_")
        t_lo, t_hi = _as_intervals(X)
        return self._expect(self.epsilon_, t_lo, t_hi)


def _intervals(data) -> tuple[np.ndarray, np.ndarray]:
    use = data.usable
    X = np.column_stack([data.bin_edges[:-1], data.bin_edges[1:]])[use]
    return X, use


def fit_epsilon(data, physics: KaonPhysics | None = None, **kwargs) -> FitResult:
    """Fit eps to a :class:`~kaontwf.events.BinnedAsymmetry`."""
    X, use = _intervals(data)
    if X.shape[0] < MIN_BINS:
        raise EmptySectorError(f"need at least {MIN_BINS} non-empty bins with sigma > 0")
    est = EpsilonFitter(physics, data.norm_window, data.norm_channels, data.channel.value, **kwargs)
    est.fit(X, data.values[use], data.sigma[use])
    return est.result_


@dataclass(frozen=True)
class ModelChi2:
    chi2: float
    ndf: int
    n_sigma: float

    @property
    def falsified(self) -> bool:
        return self.n_sigma > FALSIFY_SIGMA

    def to_dict(self) -> dict:
        return {"chi2": self.chi2, "ndf": self.ndf, "n_sigma": self.n_sigma,
                "verdict": verdict(self.n_sigma)}


def verdict(n_sigma: float) -> str:
    return "falsified" if n_sigma > FALSIFY_SIGMA else "consistent"


def model_chi2(model, data, physics: KaonPhysics) -> ModelChi2:
    """chi^2 of ``data`` against a fully specified model.

    n_sigma = (chi2 - ndf) / sqrt(2 ndf) with ndf the number of usable bins.
    """
    X, use = _intervals(data)
    if X.shape[0] == 0:
        raise EmptySectorError("no usable bins")
    expected = interval_expectation(Model.parse(model), physics, X[:, 0], X[:, 1],
                                    Channel.parse(data.channel), data.norm_window,
                                    data.norm_channels)
    r = (data.values[use] - expected) / data.sigma[use]
    chi2 = float(r @ r)
    ndf = int(X.shape[0])
    return ModelChi2(chi2, ndf, (chi2 - ndf) / math.sqrt(2 * ndf))
