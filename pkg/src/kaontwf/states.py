"""Enumerations shared by the two decay models."""

from __future__ import annotations

from enum import Enum

from .errors import ValidationError


class Flavor(str, Enum):
    K0 = "K0"
    K0BAR = "K0bar"
    K1 = "K1"
    K2 = "K2"
    KS = "KS"
    KL = "KL"

    @classmethod
    def parse(cls, value) -> Flavor:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "")
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ValidationError(f"unknown flavor {value!r}")

    def cp_components(self) -> tuple[complex, complex]:
        """Components on the orthonormal CP basis (K1, K2).

        K0bar carries the overall sign used by the textbook inversion of the
        K_S/K_L superpositions, i.e. it is represented by (1, -1)/sqrt(2).
        """
        s = 2 ** -0.5
        return {
            Flavor.K0: (s, s),
            Flavor.K0BAR: (s, -s),
            Flavor.K1: (1.0, 0.0),
            Flavor.K2: (0.0, 1.0),
        }[self]


class Channel(str, Enum):
    TWO_PION = "2pi"
    THREE_PION = "3pi"
    SEMILEPTONIC_PLUS = "l+"
    SEMILEPTONIC_MINUS = "l-"

    @classmethod
    def parse(cls, value) -> Channel:
        if isinstance(value, cls):
            return value
        aliases = {"2pi": cls.TWO_PION, "twopion": cls.TWO_PION, "pipi": cls.TWO_PION,
                   "3pi": cls.THREE_PION, "threepion": cls.THREE_PION,
                   "l+": cls.SEMILEPTONIC_PLUS, "semileptonicplus": cls.SEMILEPTONIC_PLUS,
                   "l-": cls.SEMILEPTONIC_MINUS, "semileptonicminus": cls.SEMILEPTONIC_MINUS}
        key = str(value).strip().lower().replace("_", "")
        if key in aliases:
            return aliases[key]
        raise ValidationError(f"unknown channel {value!r}")


class TwfVariant(str, Enum):
    """How eps_S-tilde is pinned to eps (the two choices plotted for A_pipi)."""

    MATCHED_LARGE_T = "large-t"
    MATCHED_THREE_PION = "three-pion"

    @classmethod
    def parse(cls, value) -> TwfVariant:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for member in cls:
            if member.value == key or member.name.lower().replace("_", "-") == key:
                return member
        raise ValidationError(f"unknown T.W.F. variant {value!r} (use 'large-t' or 'three-pion')")


class Model(str, Enum):
    WWA = "wwa"
    TWF_LARGE_T = "twf-large-t"
    TWF_THREE_PION = "twf-three-pion"

    @property
    def variant(self) -> TwfVariant | None:
        return {Model.TWF_LARGE_T: TwfVariant.MATCHED_LARGE_T,
                Model.TWF_THREE_PION: TwfVariant.MATCHED_THREE_PION}.get(self)

    @property
    def is_twf(self) -> bool:
        return self is not Model.WWA

    @classmethod
    def twf(cls, variant) -> Model:
        variant = TwfVariant.parse(variant)
        if variant is TwfVariant.MATCHED_LARGE_T:
            return cls.TWF_LARGE_T
        return cls.TWF_THREE_PION

    @classmethod
    def parse(cls, value) -> Model:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for member in cls:
            if member.value == key:
                return member
        raise ValidationError(f"unknown model {value!r}")
