"""Weisskopf-Wigner (mass-decay matrix) description of neutral-kaon decay.

The evolution is carried out directly in the K_S/K_L eigenbasis:

    |K_S> = (|K1> + eps |K2>) / sqrt(1 + |eps|^2)
    |K_L> = (eps |K1> + |K2>) / sqrt(1 + |eps|^2)

and a channel rate is the channel width times the squared overlap of the
evolved state with the CP (or flavor) state that feeds the channel. Times are
in units of tau_S and rates in units of 1/tau_S.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .params import ComplexEnergy, DerivedConstants, KaonPhysics, derive
from .ratelaw import RateLaw, check_time
from .states import Channel, Flavor

__all__ = [
    "RateCurve",
    "complex_energies",
    "initial_amplitudes",
    "evolve_flavor",
    "rate_law",
    "two_pion_rate",
    "three_pion_rate",
    "semileptonic_rate",
    "rate_curve",
]


@dataclass(frozen=True)
class RateCurve:
    times: np.ndarray
    rates: np.ndarray
    channel: Channel

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        rates = np.asarray(self.rates, dtype=float)
        if times.shape != rates.shape:
            raise ValidationError("times and rates must have the same length")
        if np.any(times < 0) or np.any(np.diff(times) <= 0):
            raise ValidationError("times must be non-negative and strictly increasing")
        if np.any(rates < 0):
            raise ValidationError("rates must be non-negative")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "rates", rates)


def complex_energies(d: DerivedConstants) -> tuple[ComplexEnergy, ComplexEnergy]:
    """(E_S, E_L) in tau_S units, measured from m_S."""
    return d.e_s, d.e_l


def initial_amplitudes(initial, epsilon: complex) -> tuple[complex, complex]:
    """Amplitudes (c_S, c_L) on |K_S>, |K_L> of a state prepared at t = 0.

    ``initial`` is a :class:`Flavor` or an explicit (a_S, a_L) pair; explicit
    pairs are rescaled to unit norm (K_S and K_L are not orthogonal, so the
    norm is computed on the CP basis).
    """
    eps = complex(epsilon)
    n = np.sqrt(1.0 + abs(eps) ** 2)
    if isinstance(initial, tuple):
        a_s, a_l = complex(initial[0]), complex(initial[1])
        u, v = (a_s + eps * a_l) / n, (eps * a_s + a_l) / n
        norm = np.sqrt(abs(u) ** 2 + abs(v) ** 2)
        if norm == 0:
            raise ValidationError("explicit amplitudes describe the null state")
        return a_s / norm, a_l / norm
    flavor = Flavor.parse(initial)
    if flavor is Flavor.KS:
        return 1.0 + 0j, 0j
    if flavor is Flavor.KL:
        return 0j, 1.0 + 0j
    u, v = flavor.cp_components()
    # invert the K_S/K_L superposition on the CP basis
    det = 1.0 - eps ** 2
    return n * (u - eps * v) / det, n * (v - eps * u) / det


def evolve_flavor(initial, t, physics: KaonPhysics):
    """Amplitudes (c_S(t), c_L(t)) of the evolved state on |K_S>, |K_L>.

    For K0 both start at sqrt(1+|eps|^2) / (sqrt(2)(1+eps)); for K0bar the
    prefactor uses (1-eps) and c_L carries a minus sign.
    """
    t = check_time(t)
    d = derive(physics)
    c_s, c_l = initial_amplitudes(initial, physics.epsilon)
    return c_s * d.e_s.propagator(t), c_l * d.e_l.propagator(t)


def _cp_coefficients(initial, physics: KaonPhysics):
    """Coefficients of exp(-iE_S t), exp(-iE_L t) in <K1|psi(t)> and <K2|psi(t)>."""
    eps = physics.epsilon
    n = np.sqrt(1.0 + abs(eps) ** 2)
    c_s, c_l = initial_amplitudes(initial, eps)
    k1 = (c_s / n, eps * c_l / n)
    k2 = (eps * c_s / n, c_l / n)
    return k1, k2


def rate_law(initial, channel, physics: KaonPhysics) -> RateLaw:
    """Production rate of ``channel`` (units 1/tau_S) as a closed-form law."""
    channel = Channel.parse(channel)
    d = derive(physics)
    tau = physics.tau_s
    k1, k2 = _cp_coefficients(initial, physics)
    if channel is Channel.TWO_PION:
        terms = ((physics.gamma_k1_to_2pi * tau, *k1),)
    elif channel is Channel.THREE_PION:
        terms = ((physics.gamma_k2_to_3pi * tau, *k2),)
    else:
        # <K0|psi> = (a1 + a2)/sqrt2, <K0bar|psi> = (a2 - a1)/sqrt2
        sign = 1.0 if channel is Channel.SEMILEPTONIC_PLUS else -1.0
        a = k2[0] + sign * k1[0]
        b = k2[1] + sign * k1[1]
        terms = ((0.5 * physics.gamma_semileptonic * tau, a, b),)
    return RateLaw(terms, d.e_s, d.e_l)


def two_pion_rate(initial, t, physics: KaonPhysics):
    """P_{X(0) -> pi pi (t)}; the pi+pi- and pi0pi0 modes are aggregated."""
    return rate_law(initial, Channel.TWO_PION, physics)(t)


def three_pion_rate(initial, t, physics: KaonPhysics):
    return rate_law(initial, Channel.THREE_PION, physics)(t)


def semileptonic_rate(initial, lepton_sign, t, physics: KaonPhysics):
    """Rate into pi- l+ nu (``lepton_sign='+'``) or pi+ l- nubar ('-')."""
    return rate_law(initial, _lepton_channel(lepton_sign), physics)(t)


def _lepton_channel(lepton_sign) -> Channel:
    if lepton_sign in ("+", 1, +1.0, Channel.SEMILEPTONIC_PLUS):
        return Channel.SEMILEPTONIC_PLUS
    if lepton_sign in ("-", -1, -1.0, Channel.SEMILEPTONIC_MINUS):
        return Channel.SEMILEPTONIC_MINUS
    raise ValidationError(f"lepton_sign must be '+' or '-', got {lepton_sign!r}")


def rate_curve(initial, channel, times, physics: KaonPhysics) -> RateCurve:
    channel = Channel.parse(channel)
    times = np.asarray(times, dtype=float)
    return RateCurve(times, np.atleast_1d(rate_law(initial, channel, physics)(times)), channel)
