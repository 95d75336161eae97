"""Physical constants of the neutral-kaon system and derived quantities.

All public quantities downstream of :func:`derive` are expressed in units of
the K_S lifetime: times in tau_S, rates as Gamma * tau_S, energies (with
hbar = 1) as angular frequencies times tau_S. ``KaonPhysics`` itself keeps SI
values so that configuration files read naturally.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ConfigError, ValidationError

TAU_S_SECONDS = 8.92e-11
TAU_L_SECONDS = 5.17e-8
ABS_EPSILON = 2.228e-3
ARG_EPSILON_DEGREES = 43.5
# external input (standard compilation value), not fixed by the models
DELTA_M_TIMES_TAU_S = 0.472
K1_2PI_OVER_GAMMA_S = 1.0
K2_3PI_OVER_GAMMA_L = 0.20
SEMILEPTONIC_OVER_GAMMA_L = 0.335

CONFIG_KEYS = (
    "tau_s_seconds",
    "tau_l_seconds",
    "abs_epsilon",
    "arg_epsilon_degrees",
    "delta_m_times_tau_s",
    "gamma_k1_2pi_over_gamma_s",
    "gamma_k2_3pi_over_gamma_l",
    "gamma_semileptonic_over_gamma_l",
)

_DEFAULT_CONFIG = {
    "tau_s_seconds": TAU_S_SECONDS,
    "tau_l_seconds": TAU_L_SECONDS,
    "abs_epsilon": ABS_EPSILON,
    "arg_epsilon_degrees": ARG_EPSILON_DEGREES,
    "delta_m_times_tau_s": DELTA_M_TIMES_TAU_S,
    "gamma_k1_2pi_over_gamma_s": K1_2PI_OVER_GAMMA_S,
    "gamma_k2_3pi_over_gamma_l": K2_3PI_OVER_GAMMA_L,
    "gamma_semileptonic_over_gamma_l": SEMILEPTONIC_OVER_GAMMA_L,
}


@dataclass(frozen=True)
class KaonPhysics:
    """Inputs of both decay models, in SI units (seconds, 1/seconds).

    ``delta_m`` is m_L - m_S as an angular frequency (hbar = 1).
    """

    tau_s: float
    tau_l: float
    delta_m: float
    epsilon: complex
    gamma_k1_to_2pi: float
    gamma_k2_to_3pi: float
    gamma_semileptonic: float

    def __post_init__(self):
        for name in ("tau_s", "tau_l", "delta_m", "gamma_k1_to_2pi",
                     "gamma_k2_to_3pi", "gamma_semileptonic"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValidationError(f"{name} must be finite, got {value!r}")
        if not np.isfinite(complex(self.epsilon)):
            raise ValidationError(f"epsilon must be finite, got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", complex(self.epsilon))
        if self.tau_s <= 0:
            raise ValidationError(f"tau_s must be positive, got {self.tau_s}")
        # equality is admitted so the degenerate symmetric case stays usable
        if self.tau_l < self.tau_s:
            raise ValidationError(
                f"tau_l ({self.tau_l}) must not be shorter than tau_s ({self.tau_s})")
        if abs(self.epsilon) >= 0.1:
            raise ValidationError(f"|epsilon| must be < 0.1, got {abs(self.epsilon)}")
        if not 0 < self.gamma_k1_to_2pi <= (1.0 / self.tau_s) * (1 + 1e-12):
            raise ValidationError("gamma_k1_to_2pi must lie in (0, Gamma_S]")
        if not 0 < self.gamma_k2_to_3pi <= (1.0 / self.tau_l) * (1 + 1e-12):
            raise ValidationError("gamma_k2_to_3pi must lie in (0, Gamma_L]")
        if self.gamma_semileptonic < 0:
            raise ValidationError("gamma_semileptonic must be non-negative")

    @classmethod
    def default(cls) -> KaonPhysics:
        return load_physics(None)

    def with_epsilon(self, epsilon: complex) -> KaonPhysics:
        return replace(self, epsilon=complex(epsilon))

    def to_config(self) -> dict[str, float]:
        """Flat key-value form; ``load_physics(p.to_config())`` round-trips."""
        return {
            "tau_s_seconds": self.tau_s,
            "tau_l_seconds": self.tau_l,
            "abs_epsilon": abs(self.epsilon),
            "arg_epsilon_degrees": math.degrees(np.angle(self.epsilon)),
            "delta_m_times_tau_s": self.delta_m * self.tau_s,
            "gamma_k1_2pi_over_gamma_s": self.gamma_k1_to_2pi * self.tau_s,
            "gamma_k2_3pi_over_gamma_l": self.gamma_k2_to_3pi * self.tau_l,
            "gamma_semileptonic_over_gamma_l": self.gamma_semileptonic * self.tau_l,
        }


@dataclass(frozen=True)
class ComplexEnergy:
    """Eigenvalue ``mass - i * half_width`` of the effective Hamiltonian."""

    mass: float
    half_width: float

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValidationError(f"half_width must be positive, got {self.half_width}")

    @property
    def value(self) -> complex:
        return complex(self.mass, -self.half_width)

    @property
    def width(self) -> float:
        return 2.0 * self.half_width

    def propagator(self, t):
        """exp(-i E t), evaluated as exp(-Gamma t / 2) (cos mt - i sin mt)."""
        t = np.asarray(t, dtype=float)
        return np.exp(-self.half_width * t) * (np.cos(self.mass * t) - 1j * np.sin(self.mass * t))


@dataclass(frozen=True)
class DerivedConstants:
    """Rates in SI plus the complex energies in tau_S units.

    ``gamma_s``/``gamma_l`` are in 1/s. Everything suffixed ``_red`` (and the
    complex energies) is reduced, i.e. multiplied by tau_S.
    """

    gamma_s: float
    gamma_l: float
    ratio_sl: float
    e_s: ComplexEnergy
    e_l: ComplexEnergy
    tau_s: float = field(repr=False)

    @property
    def gamma_s_red(self) -> float:
        return self.e_s.width

    @property
    def gamma_l_red(self) -> float:
        return self.e_l.width

    @property
    def delta_m_red(self) -> float:
        return self.e_l.mass - self.e_s.mass


def derive(physics: KaonPhysics) -> DerivedConstants:
    gamma_s = 1.0 / physics.tau_s
    gamma_l = 1.0 / physics.tau_l
    # m_S is the reference mass
    e_s = ComplexEnergy(mass=0.0, half_width=0.5)
    e_l = ComplexEnergy(mass=physics.delta_m * physics.tau_s,
                        half_width=0.5 * physics.tau_s / physics.tau_l)
    return DerivedConstants(gamma_s=gamma_s, gamma_l=gamma_l, ratio_sl=gamma_s / gamma_l,
                            e_s=e_s, e_l=e_l, tau_s=physics.tau_s)


def read_config(path) -> dict[str, str]:
    """Read a flat ``key = value`` file (``#``/``;`` comments) into a dict."""
    text = Path(path).read_text()
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string("[config]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return dict(parser["config"])


def _as_float(document: Mapping, key: str) -> float:
    raw = document[key]
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"field {key!r} must be a number, got {raw!r}", field=key) from None
    if not math.isfinite(value):
        raise ConfigError(f"field {key!r} must be finite, got {raw!r}", field=key)
    return value


def _truthy(raw) -> bool:
    if isinstance(raw, bool):
        return raw
    return str(raw).strip().lower() in ("1", "true", "yes", "on")


def load_physics(source=None, *, use_defaults: bool = False) -> KaonPhysics:
    """Build a validated :class:`KaonPhysics` from a key-value document.

    Parameters
    ----------
    source : mapping, path or None
        Flat mapping of the ``CONFIG_KEYS`` (values may be strings), or a path
        to a ``key = value`` file. ``None`` means "all defaults".
    use_defaults : bool
        Fill missing keys with defaults. A document may request the same by
        carrying ``defaults = true``.

    Keys not in ``CONFIG_KEYS`` are ignored so the physics block can share a
    file with other settings.
    """
    if source is None:
        document: Mapping = {}
        use_defaults = True
    elif isinstance(source, Mapping):
        document = source
    else:
        document = read_config(source)
    if "defaults" in document and _truthy(document["defaults"]):
        use_defaults = True

    values = {}
    for key in CONFIG_KEYS:
        if key in document:
            values[key] = _as_float(document, key)
        elif use_defaults:
            values[key] = _DEFAULT_CONFIG[key]
        else:
            raise ConfigError(f"missing field {key!r}", field=key)

    tau_s = values["tau_s_seconds"]
    tau_l = values["tau_l_seconds"]
    if tau_s <= 0 or tau_l <= 0:
        raise ValidationError("lifetimes must be positive")
    epsilon = values["abs_epsilon"] * np.exp(1j * math.radians(values["arg_epsilon_degrees"]))
    return KaonPhysics(
        tau_s=tau_s,
        tau_l=tau_l,
        delta_m=values["delta_m_times_tau_s"] / tau_s,
        epsilon=complex(epsilon),
        gamma_k1_to_2pi=values["gamma_k1_2pi_over_gamma_s"] / tau_s,
        gamma_k2_to_3pi=values["gamma_k2_3pi_over_gamma_l"] / tau_l,
        gamma_semileptonic=values["gamma_semileptonic_over_gamma_l"] / tau_l,
    )
