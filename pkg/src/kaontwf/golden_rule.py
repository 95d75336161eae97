"""Ingoing mode coupled to discretized decay continua.

Interaction-picture amplitudes obey

    dc_in/dt  = -i sum_k conj(G_k) c_k exp(-i (w_k - w_in) t)
    dc_k/dt   = -i G_k c_in exp(+i (w_k - w_in) t)

which conserves |c_in|^2 + sum_k |c_k|^2. The system is integrated with
fixed-step classical RK4 and compared with first-order perturbation theory
and with the golden-rule width 2 pi rho |G|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, EmptySectorError, IntegratorError, ResolutionError, ValidationError
from .io import write_csv
from .params import read_config

# default comb: spacing Gamma/50, bandwidth 40 Gamma
SPACING_OVER_GAMMA = 1.0 / 50.0
BANDWIDTH_OVER_GAMMA = 40.0
STEPS_PER_SCALE = 40
NORM_TOL = 1e-6


@dataclass(frozen=True)
class Continuum:
    """Tabulated density of states rho(w) and squared coupling |G(w)|^2."""

    omega: np.ndarray
    dos: np.ndarray
    coupling_sq: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        dos = np.asarray(self.dos, dtype=float)
        g2 = np.asarray(self.coupling_sq, dtype=float)
        if not (omega.shape == dos.shape == g2.shape) or omega.ndim != 1 or omega.size < 2:
            raise ValidationError("continuum tables must be 1-D with matching lengths >= 2")
        if np.any(np.diff(omega) <= 0):
            raise ValidationError("continuum frequency grid must be strictly increasing")
        if np.any(dos < 0) or np.any(g2 < 0):
            raise ValidationError("density of states and |G|^2 must be non-negative")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "dos", dos)
        object.__setattr__(self, "coupling_sq", g2)

    def at(self, omega: float) -> tuple[float, float]:
        if not self.omega[0] <= omega <= self.omega[-1]:
            raise ValidationError(
                f"omega_in={omega} outside tabulated range [{self.omega[0]}, {self.omega[-1]}]")
        return (float(np.interp(omega, self.omega, self.dos)),
                float(np.interp(omega, self.omega, self.coupling_sq)))


@dataclass(frozen=True)
class ModeSystem:
    """Ingoing mode plus discrete outgoing channels (one entry per channel)."""

    omega_in: float
    species: np.ndarray
    labels: np.ndarray
    omega: np.ndarray
    coupling: np.ndarray
    continua: Mapping[int, Continuum] = field(default_factory=dict)

    def __post_init__(self):
        species = np.asarray(self.species, dtype=int)
        labels = np.asarray(self.labels, dtype=int)
        omega = np.asarray(self.omega, dtype=float)
        coupling = np.asarray(self.coupling, dtype=complex)
        if not (species.shape == labels.shape == omega.shape == coupling.shape):
            raise ValidationError("channel arrays must have equal lengths")
        if not np.all(np.isfinite(coupling)) or not np.all(np.isfinite(omega)):
            raise ValidationError("couplings and channel frequencies must be finite")
        for name, value in (("species", species), ("labels", labels),
                            ("omega", omega), ("coupling", coupling)):
            object.__setattr__(self, name, value)

    @property
    def n_channels(self) -> int:
        return self.omega.size

    @property
    def species_ids(self) -> list[int]:
        return sorted(set(self.species.tolist()))

    @classmethod
    def from_channels(cls, omega_in, channels: Sequence[tuple]) -> ModeSystem:
        """Build from (species, label, omega, coupling) tuples."""
        if channels:
            species, labels, omega, coupling = zip(*channels)
        else:
            species = labels = omega = coupling = ()
        return cls(omega_in, np.array(species, dtype=int), np.array(labels, dtype=int),
                   np.array(omega, dtype=float), np.array(coupling, dtype=complex))


def flat_continuum_system(gammas: Sequence[float], omega_in: float = 0.0,
                          spacing_over_gamma: float = SPACING_OVER_GAMMA,
                          bandwidth_over_gamma: float = BANDWIDTH_OVER_GAMMA) -> ModeSystem:
    """One uniform frequency comb per species, sized on the total width.

    Species i gets per-mode |G|^2 = Gamma_i * spacing / (2 pi), i.e.
    2 pi rho |G|^2 = Gamma_i with rho = 1/spacing. Modes sit at half-integer
    offsets so the comb is symmetric about ``omega_in``.
    """
    gammas = [float(g) for g in gammas]
    if not gammas or any(g <= 0 for g in gammas):
        raise ValidationError("species widths must be positive")
    total = sum(gammas)
    spacing = spacing_over_gamma * total
    bandwidth = bandwidth_over_gamma * total
    n = max(1, int(round(bandwidth / spacing)))
    offsets = (np.arange(n) - 0.5 * (n - 1)) * spacing
    species, labels, omega, coupling = [], [], [], []
    continua = {}
    for i, g in enumerate(gammas, start=1):
        g2 = g * spacing / (2 * math.pi)
        species.append(np.full(n, i))
        labels.append(np.arange(n))
        omega.append(omega_in + offsets)
        coupling.append(np.full(n, math.sqrt(g2), dtype=complex))
        half = 0.5 * n * spacing
        continua[i] = Continuum(np.array([omega_in - half, omega_in + half]),
                                np.full(2, 1.0 / spacing), np.full(2, g2))
    return ModeSystem(omega_in, np.concatenate(species), np.concatenate(labels),
                      np.concatenate(omega), np.concatenate(coupling), continua)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    c_in: np.ndarray
    c_out: np.ndarray  # shape (n_times, n_channels)
    species: np.ndarray

    def norm(self) -> np.ndarray:
        return np.abs(self.c_in) ** 2 + np.sum(np.abs(self.c_out) ** 2, axis=1)

    def species_population(self, species_id: int) -> np.ndarray:
        mask = self.species == species_id
        return np.sum(np.abs(self.c_out[:, mask]) ** 2, axis=1)

    def branching_fractions(self) -> dict[int, float]:
        """Share of the final outgoing population carried by each species."""
        ids = sorted(set(self.species.tolist()))
        pops = np.array([self.species_population(i)[-1] for i in ids])
        total = pops.sum()
        if total <= 0:
            raise ValidationError("no outgoing population to share out")
        return {i: float(p / total) for i, p in zip(ids, pops)}


def _golden_rule_total(sys: ModeSystem) -> float | None:
    if not sys.continua:
        return None
    return golden_rule_gamma(sys.continua, sys.omega_in)["gamma_total"]


def default_steps(sys: ModeSystem, t_max: float) -> int:
    """Step count with h <= min(2 pi / W, 1 / Gamma) / 40."""
    width = float(np.ptp(sys.omega)) if sys.n_channels > 1 else 0.0
    detune = float(np.max(np.abs(sys.omega - sys.omega_in))) if sys.n_channels else 0.0
    bandwidth = max(width, 2 * detune)
    rate = _golden_rule_total(sys)
    if rate is None:
        rate = float(np.sqrt(np.sum(np.abs(sys.coupling) ** 2)))
    scales = []
    if bandwidth > 0:
        scales.append(2 * math.pi / bandwidth)
    if rate > 0:
        scales.append(1.0 / rate)
    h = min(scales) / STEPS_PER_SCALE if scales else t_max / 10
    return max(10, int(math.ceil(t_max / h)))


def integrate(sys: ModeSystem, t_max: float, n_steps: int, initial=None,
              record_every: int = 1, norm_tol: float = NORM_TOL) -> Trajectory:
    """Fixed-step RK4 from c_in = 1, c_out = 0 (or from ``initial``).

    ``initial`` is an optional (c_in0, c_out0) pair. Every ``record_every``-th
    step is stored (the final step always is). Raises ``IntegratorError`` as
    soon as the norm drifts by more than ``norm_tol``.
    """
    if not t_max > 0:
        raise ValidationError("t_max must be positive")
    if n_steps < 10:
        raise ValidationError("n_steps must be >= 10")
    if record_every < 1:
        raise ValidationError("record_every must be >= 1")
    detuning = sys.omega - sys.omega_in
    g = sys.coupling
    g_conj = np.conj(g)
    if initial is None:
        y_in = 1.0 + 0j
        y_out = np.zeros(sys.n_channels, dtype=complex)
    else:
        y_in = complex(initial[0])
        y_out = np.array(initial[1], dtype=complex)
        if y_out.shape != (sys.n_channels,):
            raise ValidationError("initial outgoing amplitudes must match the channel count")
    norm0 = abs(y_in) ** 2 + float(np.sum(np.abs(y_out) ** 2))

    def rhs(t, c_in, c_out):
        phase = np.exp(1j * detuning * t)
        return -1j * np.sum(g_conj * c_out * np.conj(phase)), -1j * g * c_in * phase

    h = t_max / n_steps
    times, rec_in, rec_out = [0.0], [y_in], [y_out.copy()]
    for k in range(n_steps):
        t = k * h
        a_in, a_out = rhs(t, y_in, y_out)
        b_in, b_out = rhs(t + h / 2, y_in + h / 2 * a_in, y_out + h / 2 * a_out)
        c_in_, c_out_ = rhs(t + h / 2, y_in + h / 2 * b_in, y_out + h / 2 * b_out)
        d_in, d_out = rhs(t + h, y_in + h * c_in_, y_out + h * c_out_)
        y_in = y_in + h / 6 * (a_in + 2 * b_in + 2 * c_in_ + d_in)
        y_out = y_out + h / 6 * (a_out + 2 * b_out + 2 * c_out_ + d_out)
        norm = abs(y_in) ** 2 + float(np.sum(np.abs(y_out) ** 2))
        if abs(norm - norm0) > norm_tol:
            raise IntegratorError(
                f"norm drift {abs(norm - norm0):.3g} at t={t + h:.6g}; use a smaller step")
        if (k + 1) % record_every == 0 or k + 1 == n_steps:
            times.append((k + 1) * h)
            rec_in.append(y_in)
            rec_out.append(y_out.copy())
    return Trajectory(np.array(times), np.array(rec_in), np.array(rec_out), sys.species.copy())


def perturbative_occupation(coupling_mag, detuning, t):
    """First-order |c_k(t)|^2 = |G|^2 t^2 sinc^2(detuning t / 2)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError("t must be >= 0")
    x = np.asarray(detuning, dtype=float) * t / 2
    out = np.abs(coupling_mag) ** 2 * t ** 2 * np.sinc(x / np.pi) ** 2
    return float(out) if np.ndim(out) == 0 else out


def golden_rule_gamma(continua, omega_in: float) -> dict:
    """Gamma_i = 2 pi rho_i(w_in) |G_i(w_in)|^2 per species and their sum.

    ``continua`` maps species id to a :class:`Continuum` or to a list of
    them (one per internal label), whose contributions are summed.
    """
    if not isinstance(continua, Mapping):
        continua = dict(enumerate(continua, start=1))
    per_species = {}
    for sid, spec in continua.items():
        items = spec if isinstance(spec, (list, tuple)) else [spec]
        total = 0.0
        for c in items:
            rho, g2 = c.at(omega_in)
            total += 2 * math.pi * rho * g2
        per_species[sid] = total
    return {"gamma": per_species, "gamma_total": float(sum(per_species.values()))}


def fit_decay_constant(traj: Trajectory, window) -> float:
    """Least-squares slope of -log|c_in|^2 over ``window`` = (t_lo, t_hi)."""
    lo, hi = window
    mask = (traj.times >= lo) & (traj.times <= hi)
    if np.count_nonzero(mask) < 3:
        raise ValidationError("fewer than 3 samples inside the fit window")
    p = np.abs(traj.c_in[mask]) ** 2
    slope = np.polyfit(traj.times[mask], np.log(p), 1)[0]
    return float(-slope)


@dataclass(frozen=True)
class EffectiveMode:
    indices: np.ndarray
    weights: np.ndarray
    g_eff: float


def effective_mode(sys: ModeSystem, omega: float, atol: float = 1e-12) -> EffectiveMode:
    """The single superposition of channels at ``omega`` that couples to the ingoing mode.

    Its weights are G_k / g_eff with g_eff = sqrt(sum |G_k|^2); every
    superposition orthogonal to it is decoupled.
    """
    idx = np.flatnonzero(np.abs(sys.omega - omega) <= atol)
    if idx.size == 0:
        raise EmptySectorError(f"no channel at omega={omega}")
    g = sys.coupling[idx]
    g_eff = float(np.sqrt(np.sum(np.abs(g) ** 2)))
    if g_eff == 0:
        raise EmptySectorError(f"channels at omega={omega} are all uncoupled")
    return EffectiveMode(idx, g / g_eff, g_eff)


def sinc_delta_check(t: float, window: float = 200.0) -> float:
    """t * integral of sinc^2(dw t / 2) over |dw| <= window (tends to 2 pi).

    Raises ``ResolutionError`` when the neglected tails, bounded by
    8 / (t * window), exceed 1% of 2 pi.
    """
    if not t > 0:
        raise ValidationError("t must be positive")
    if 8.0 / (t * window) > 0.01 * 2 * math.pi:
        raise ResolutionError(f"window {window} too narrow for t={t}: not converged within 1%")
    # substitute u = dw t / 2: t * int sinc^2 d(dw) = 2 * int sinc^2(u) du
    u_max = window * t / 2
    # integrate lobe by lobe between zeros of sin(u)
    edges = np.arange(0.0, u_max, math.pi)
    edges = np.append(edges, u_max)
    nodes, weights = np.polynomial.legendre.leggauss(24)
    a, b = edges[:-1], edges[1:]
    u = 0.5 * (b - a)[:, None] * nodes[None, :] + 0.5 * (b + a)[:, None]
    f = np.sinc(u / np.pi) ** 2
    half = np.sum(0.5 * (b - a)[:, None] * weights[None, :] * f)
    return float(4.0 * half)


def write_trajectory_csv(traj: Trajectory, path):
    ids = sorted(set(traj.species.tolist()))
    header = ["t", "re_c_in", "im_c_in"] + [f"norm_out_species_{i}" for i in ids]
    columns = [traj.times, traj.c_in.real, traj.c_in.imag]
    columns += [traj.species_population(i) for i in ids]
    return write_csv(path, header, columns)


@dataclass(frozen=True)
class Scenario:
    gammas: tuple[float, ...]
    spacing_over_gamma: float = SPACING_OVER_GAMMA
    bandwidth_over_gamma: float = BANDWIDTH_OVER_GAMMA
    t_max_times_gamma: float = 8.0
    omega_in: float = 0.0

    def to_config(self) -> dict:
        cfg = {"species_count": len(self.gammas),
               "spacing_over_gamma": self.spacing_over_gamma,
               "bandwidth_over_gamma": self.bandwidth_over_gamma,
               "t_max_times_gamma": self.t_max_times_gamma,
               "omega_in": self.omega_in}
        cfg.update({f"gamma_{i}": g for i, g in enumerate(self.gammas, start=1)})
        return cfg


def load_scenario(source) -> Scenario:
    """Parse a key-value scenario (``species_count``, ``gamma_1``..., ratios)."""
    doc = dict(source) if isinstance(source, Mapping) else read_config(source)

    def number(key, default=None):
        if key not in doc:
            if default is None:
                raise ConfigError(f"missing field {key!r}", field=key)
            return default
        try:
            return float(doc[key])
        except (TypeError, ValueError):
            raise ConfigError(f"field {key!r} must be a number, got {doc[key]!r}", field=key) from None

    count = number("species_count")
    if count < 1 or count != int(count):
        raise ConfigError("species_count must be a positive integer", field="species_count")
    gammas = tuple(number(f"gamma_{i}") for i in range(1, int(count) + 1))
    return Scenario(gammas,
                    number("spacing_over_gamma", SPACING_OVER_GAMMA),
                    number("bandwidth_over_gamma", BANDWIDTH_OVER_GAMMA),
                    number("t_max_times_gamma", 8.0),
                    number("omega_in", 0.0))


@dataclass(frozen=True)
class ScenarioResult:
    scenario: Scenario
    trajectory: Trajectory
    gamma_golden_rule: float
    gamma_fitted: float
    branching: dict[int, float]
    max_norm_error: float

    def summary(self) -> dict:
        total = self.gamma_golden_rule
        return {"scenario": self.scenario.to_config(),
                "gamma_golden_rule": total,
                "gamma_fitted": self.gamma_fitted,
                "branching": {str(k): v for k, v in self.branching.items()},
                "branching_expected": {str(i): g / sum(self.scenario.gammas)
                                       for i, g in enumerate(self.scenario.gammas, start=1)},
                "max_norm_error": self.max_norm_error}


def run_scenario(scenario: Scenario, record_every: int = 10) -> ScenarioResult:
    """Integrate a flat multi-species continuum and extract its decay constant."""
    sys = flat_continuum_system(scenario.gammas, scenario.omega_in,
                                scenario.spacing_over_gamma, scenario.bandwidth_over_gamma)
    gamma = golden_rule_gamma(sys.continua, sys.omega_in)["gamma_total"]
    t_max = scenario.t_max_times_gamma / gamma
    traj = integrate(sys, t_max, default_steps(sys, t_max), record_every=record_every)
    fitted = fit_decay_constant(traj, (0.5 / gamma, 3.0 / gamma))
    return ScenarioResult(scenario, traj, gamma, fitted, traj.branching_fractions(),
                          float(np.max(np.abs(traj.norm() - 1.0))))
