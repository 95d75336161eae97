"""Neutral-kaon decay under the Weisskopf-Wigner and temporal-wave-function models."""

from .errors import KaonTwfError, NumericalError, ValidationError
from .params import KaonPhysics, load_physics
from .states import Channel, Flavor, Model, TwfVariant

__version__ = "0.1.0"

__all__ = [
    "Channel",
    "Flavor",
    "KaonPhysics",
    "KaonTwfError",
    "Model",
    "NumericalError",
    "TwfVariant",
    "ValidationError",
    "load_physics",
]
