"""Binary temporal-wave-function (T.W.F.) model of neutral-kaon decay.

The decay-time distribution in the CP = +1 / CP = -1 sectors is the squared
modulus of a two-component amplitude

    Psi_+(t) = alpha sqrt(G_S) e_S(t) + beta eps_L sqrt(G_L) e_L(t)
    Psi_-(t) = beta sqrt(G_L) e_L(t) + alpha eps_S sqrt(G_S) e_S(t)

with e_X(t) = exp(-i E_X t) and (alpha, beta) fixed by the preparation.
A CP = +1 channel i is produced at rate (G_i / G_S) |Psi_+|^2, a CP = -1
channel at (G_j / G_L) |Psi_-|^2. Time unit is tau_S throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularPreparationError, UnsupportedRegimeError, ValidationError
from .params import DerivedConstants, KaonPhysics, derive
from .ratelaw import RateLaw, check_time
from .states import Channel, Flavor, TwfVariant
from .wwa import _lepton_channel

__all__ = [
    "TwfParams",
    "Preparation",
    "TwoComponentAmplitude",
    "constrain",
    "prepare",
    "twf_amplitude",
    "rate_law",
    "twf_two_pion_rate",
    "twf_three_pion_rate",
    "twf_semileptonic_rate",
]

# below this |1 - eps_S eps_L| the pseudo-spinors (1, eps_S), (eps_L, 1) are collinear
_SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class TwfParams:
    eps_s_tilde: complex
    eps_l_tilde: complex

    def __post_init__(self):
        eps_s, eps_l = complex(self.eps_s_tilde), complex(self.eps_l_tilde)
        if not (np.isfinite(eps_s) and np.isfinite(eps_l)):
            raise ValidationError("T.W.F. CP parameters must be finite")
        if abs(eps_s) >= 1:
            raise ValidationError(f"|eps_s_tilde| must be < 1, got {abs(eps_s)}")
        if abs(1.0 - eps_s * eps_l) < _SINGULAR_TOL:
            raise SingularPreparationError("eps_s_tilde * eps_l_tilde == 1: basis is singular")
        if abs(eps_s * eps_l) >= 1:
            raise ValidationError("|eps_s_tilde * eps_l_tilde| must be < 1")
        object.__setattr__(self, "eps_s_tilde", eps_s)
        object.__setattr__(self, "eps_l_tilde", eps_l)

    @property
    def is_cp_conserving(self) -> bool:
        return self.eps_s_tilde == 0 and self.eps_l_tilde == 0


@dataclass(frozen=True)
class Preparation:
    """Weights of the short-lived (1, eps_S) and long-lived (eps_L, 1) spinors."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        if not (np.isfinite(complex(self.alpha)) and np.isfinite(complex(self.beta))):
            raise ValidationError("preparation coefficients must be finite")


@dataclass(frozen=True)
class TwoComponentAmplitude:
    """Psi_+ and Psi_- in units of 1/sqrt(tau_S)."""

    plus: np.ndarray
    minus: np.ndarray

    @property
    def density(self):
        """Total decay-time density |Psi_+|^2 + |Psi_-|^2."""
        return np.abs(self.plus) ** 2 + np.abs(self.minus) ** 2


def constrain(physics: KaonPhysics, variant) -> TwfParams:
    """T.W.F. parameters pinned to the WWA eps.

    eps_L is matched to the K_L -> 2pi rate, eps_L = eps sqrt(G_S/G_L), for
    both variants. eps_S either reproduces the large-t asymmetry plateau
    (``MATCHED_LARGE_T``: eps_S = eps) or the K_S -> 3pi rate
    (``MATCHED_THREE_PION``: eps_S = eps sqrt(G_L/G_S)).
    """
    variant = TwfVariant.parse(variant)
    eps = physics.epsilon
    ratio = physics.tau_l / physics.tau_s  # G_S / G_L
    eps_l = eps * np.sqrt(ratio)
    if variant is TwfVariant.MATCHED_LARGE_T:
        eps_s = eps
    else:
        eps_s = eps / np.sqrt(ratio)
    return TwfParams(complex(eps_s), complex(eps_l))


def prepare(initial, p: TwfParams) -> Preparation:
    """(alpha, beta) for a kaon prepared in ``initial`` at t = 0.

    Flavor and CP states are decomposed on the (1, eps_S), (eps_L, 1)
    pseudo-spinors; e.g. K0 ~ (1, 1)/sqrt2 gives
    alpha = (1 - eps_L) / (sqrt2 (1 - eps_S eps_L)),
    beta  = (1 - eps_S) / (sqrt2 (1 - eps_S eps_L)).
    """
    if isinstance(initial, Preparation):
        return initial
    flavor = Flavor.parse(initial)
    eps_s, eps_l = p.eps_s_tilde, p.eps_l_tilde
    if flavor is Flavor.KS:
        return Preparation(1.0 / np.sqrt(1.0 + abs(eps_s) ** 2), 0j)
    if flavor is Flavor.KL:
        return Preparation(0j, 1.0 / np.sqrt(1.0 + abs(eps_l) ** 2))
    det = 1.0 - eps_s * eps_l
    if abs(det) < _SINGULAR_TOL:
        raise SingularPreparationError("eps_s_tilde * eps_l_tilde == 1: basis is singular")
    u, v = flavor.cp_components()
    return Preparation(complex((u - eps_l * v) / det), complex((v - eps_s * u) / det))


def twf_amplitude(prep: Preparation, p: TwfParams, t, d: DerivedConstants) -> TwoComponentAmplitude:
    t = check_time(t)
    sg_s, sg_l = np.sqrt(d.gamma_s_red), np.sqrt(d.gamma_l_red)
    es = d.e_s.propagator(t)
    el = d.e_l.propagator(t)
    plus = prep.alpha * sg_s * es + prep.beta * p.eps_l_tilde * sg_l * el
    minus = prep.beta * sg_l * el + prep.alpha * p.eps_s_tilde * sg_s * es
    return TwoComponentAmplitude(plus, minus)


def rate_law(initial, channel, physics: KaonPhysics, p: TwfParams) -> RateLaw:
    """Tilded production rate of ``channel`` (units 1/tau_S)."""
    channel = Channel.parse(channel)
    d = derive(physics)
    tau = physics.tau_s
    prep = prepare(initial, p)
    # sqrt(G_L / G_S)
    r = np.sqrt(d.gamma_l_red / d.gamma_s_red)
    # Psi_+/sqrt(G_S) and Psi_-/sqrt(G_L) as (coef of e_S, coef of e_L)
    plus = (prep.alpha, prep.beta * p.eps_l_tilde * r)
    minus = (prep.alpha * p.eps_s_tilde / r, prep.beta)
    if channel is Channel.TWO_PION:
        terms = ((physics.gamma_k1_to_2pi * tau, *plus),)
    elif channel is Channel.THREE_PION:
        terms = ((physics.gamma_k2_to_3pi * tau, *minus),)
    else:
        if not p.is_cp_conserving:
            raise UnsupportedRegimeError(
                "semileptonic T.W.F. rates are only defined for eps_s_tilde = eps_l_tilde = 0")
        sign = 1.0 if channel is Channel.SEMILEPTONIC_PLUS else -1.0
        terms = ((0.5 * physics.gamma_semileptonic * tau,
                  plus[0] + sign * minus[0], plus[1] + sign * minus[1]),)
    return RateLaw(terms, d.e_s, d.e_l)


def twf_two_pion_rate(initial, t, physics: KaonPhysics, p: TwfParams):
    return rate_law(initial, Channel.TWO_PION, physics, p)(t)


def twf_three_pion_rate(initial, t, physics: KaonPhysics, p: TwfParams):
    return rate_law(initial, Channel.THREE_PION, physics, p)(t)


def twf_semileptonic_rate(initial, lepton_sign, t, physics: KaonPhysics, p: TwfParams):
    """Semileptonic rate in the CP-conserving limit only.

    The l+ (l-) final state is fed by the symmetric (antisymmetric)
    combination of the CP = +1 and CP = -1 amplitudes, which reproduces
    strangeness oscillations.
    """
    return rate_law(initial, _lepton_channel(lepton_sign), physics, p)(t)
