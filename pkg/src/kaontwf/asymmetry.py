"""Two-pion decay-time asymmetry under the WWA and T.W.F. models.

    A_pipi(t) = (P_K0bar(t) - P_K0(t)) / (P_K0(t) + P_K0bar(t))

Direct CP violation is neglected. The channel width G(K1 -> pi pi) cancels in
the ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import twf, wwa
from .errors import DegenerateError, GridMismatchError, ValidationError
from .io import read_csv, write_csv
from .params import KaonPhysics
from .ratelaw import RateLaw, check_time
from .states import Channel, Flavor, Model

__all__ = [
    "AsymmetryCurve",
    "Discrepancy",
    "model_rate_law",
    "asymmetry_at",
    "small_t_limit",
    "large_t_limit",
    "curve",
    "interval_expectation",
    "binned_expectation",
    "discrepancy",
    "write_curve_csv",
    "read_curve_csv",
]


def model_rate_law(model, initial, channel, physics: KaonPhysics) -> RateLaw:
    """Rate law of ``channel`` for either model; T.W.F. parameters via ``twf.constrain``."""
    model = Model.parse(model)
    if model is Model.WWA:
        return wwa.rate_law(initial, channel, physics)
    return twf.rate_law(initial, channel, physics, twf.constrain(physics, model.variant))


@dataclass(frozen=True)
class AsymmetryCurve:
    times: np.ndarray
    values: np.ndarray
    sigma: np.ndarray | None = None
    model_tag: str | None = None

    def __post_init__(self):
        times = np.atleast_1d(np.asarray(self.times, dtype=float))
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if times.shape != values.shape:
            raise ValidationError("times and values must have the same length")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if self.sigma is not None:
            sigma = np.atleast_1d(np.asarray(self.sigma, dtype=float))
            if sigma.shape != times.shape:
                raise ValidationError("sigma must match the time grid")
            object.__setattr__(self, "sigma", sigma)


def _ratio(p, pbar):
    total = p + pbar
    if np.any(~np.isfinite(total)) or np.any(total <= 0):
        raise DegenerateError("vanishing denominator P_K0 + P_K0bar")
    return (pbar - p) / total


def asymmetry_at(model, t, physics: KaonPhysics):
    """A_pipi at time(s) ``t`` (tau_S units), exact ratio of the model rates."""
    t = check_time(t)
    p = model_rate_law(model, Flavor.K0, Channel.TWO_PION, physics)(t)
    pbar = model_rate_law(model, Flavor.K0BAR, Channel.TWO_PION, physics)(t)
    out = _ratio(np.asarray(p), np.asarray(pbar))
    return float(out) if np.ndim(out) == 0 else out


def small_t_limit(model, physics: KaonPhysics) -> float:
    """A_pipi at t = 0, evaluated in closed form (rates are regular there)."""
    return asymmetry_at(model, 0.0, physics)


def large_t_limit(model, physics: KaonPhysics, exact: bool = False) -> float:
    """Plateau of A_pipi for t >> tau_S.

    Returns 2 Re(eps) for the WWA and 2 Re(eps_S tilde) for the T.W.F. model.
    With ``exact=True`` the asymptote 2 Re(x) / (1 + |x|^2) of the exact rates
    is returned instead.
    """
    model = Model.parse(model)
    if model is Model.WWA:
        x = physics.epsilon
    else:
        x = twf.constrain(physics, model.variant).eps_s_tilde
    if exact:
        return 2.0 * x.real / (1.0 + abs(x) ** 2)
    return 2.0 * x.real


def curve(model, t_min: float, t_max: float, n_points: int, physics: KaonPhysics) -> AsymmetryCurve:
    """Uniform-grid sampling of :func:`asymmetry_at`.

    ``t_min == t_max`` with ``n_points == 1`` yields a single point.
    """
    model = Model.parse(model)
    if t_min < 0 or t_max < t_min:
        raise ValidationError("need 0 <= t_min <= t_max")
    if t_min == t_max:
        if n_points != 1:
            raise ValidationError("a degenerate window holds exactly one point")
        times = np.array([float(t_min)])
    else:
        if n_points < 2:
            raise ValidationError("n_points must be >= 2")
        times = np.linspace(t_min, t_max, int(n_points))
    return AsymmetryCurve(times, np.atleast_1d(asymmetry_at(model, times, physics)),
                          model_tag=model.value)


def _yields(model, initial, physics, t_lo, t_hi, channel, norm_window, norm_channels):
    law = model_rate_law(model, initial, channel, physics)
    y = law.integral(t_lo, t_hi)
    if norm_window is None:
        return y
    lo, hi = norm_window
    total = sum(model_rate_law(model, initial, ch, physics).integral(lo, hi)
                for ch in norm_channels)
    return y / total


def interval_expectation(model, physics: KaonPhysics, t_lo, t_hi, channel=Channel.TWO_PION,
                         norm_window=None, norm_channels=None) -> np.ndarray:
    """Expected count asymmetry over the intervals [t_lo[i], t_hi[i]].

    Without ``norm_window`` this is the asymmetry of the rate integrals. With
    ``norm_window=(t0, t1)`` each flavor's yields are first divided by its
    total yield in ``norm_channels`` over [t0, t1], which is what equal-size
    event samples per flavor actually measure.
    """
    t_lo = np.atleast_1d(np.asarray(t_lo, dtype=float))
    t_hi = np.atleast_1d(np.asarray(t_hi, dtype=float))
    if t_lo.shape != t_hi.shape or np.any(t_hi <= t_lo):
        raise ValidationError("intervals need t_hi > t_lo elementwise")
    channel = Channel.parse(channel)
    if norm_channels is None:
        norm_channels = (channel,)
    norm_channels = tuple(Channel.parse(c) for c in norm_channels)
    args = (t_lo, t_hi, channel, norm_window, norm_channels)
    y = _yields(model, Flavor.K0, physics, *args)
    ybar = _yields(model, Flavor.K0BAR, physics, *args)
    return _ratio(np.asarray(y), np.asarray(ybar))


def binned_expectation(model, physics: KaonPhysics, edges, channel=Channel.TWO_PION,
                       norm_window=None, norm_channels=None) -> np.ndarray:
    """:func:`interval_expectation` over contiguous bins given by ``edges``."""
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValidationError("bin edges must be strictly increasing with >= 2 entries")
    return interval_expectation(model, physics, edges[:-1], edges[1:], channel,
                                norm_window, norm_channels)


@dataclass(frozen=True)
class Discrepancy:
    max_abs_diff: float
    argmax_t: float
    n_sigma: float | None


def discrepancy(a: AsymmetryCurve, b: AsymmetryCurve, window) -> Discrepancy:
    """Largest |a - b| inside ``window``; significance uses ``a.sigma`` if present."""
    if a.times.shape != b.times.shape or not np.array_equal(a.times, b.times):
        raise GridMismatchError("curves are sampled on different time grids")
    t_lo, t_hi = window
    mask = (a.times >= t_lo) & (a.times <= t_hi)
    if not np.any(mask):
        raise ValidationError(f"no grid point inside window [{t_lo}, {t_hi}]")
    diff = np.abs(a.values[mask] - b.values[mask])
    i = int(np.argmax(diff))
    n_sigma = None
    if a.sigma is not None:
        sig = a.sigma[mask]
        with np.errstate(divide="ignore", invalid="ignore"):
            pulls = np.where(sig > 0, diff / sig, 0.0)
        n_sigma = float(np.max(pulls))
    return Discrepancy(float(diff[i]), float(a.times[mask][i]), n_sigma)


def write_curve_csv(c: AsymmetryCurve, path):
    header = ["t_over_tau_s", "value"]
    columns = [c.times, c.values]
    if c.sigma is not None:
        header.append("sigma")
        columns.append(c.sigma)
    return write_csv(path, header, columns)


def read_curve_csv(path, model_tag=None) -> AsymmetryCurve:
    header, rows = read_csv(path)
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    sigma = data[:, 2] if len(header) > 2 else None
    return AsymmetryCurve(data[:, 0], data[:, 1], sigma, model_tag)
