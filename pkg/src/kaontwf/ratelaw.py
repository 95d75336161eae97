"""Closed-form rate laws built from the two complex energies.

Every production rate of both models has the shape

    rate(t) = sum_k  w_k |A_k exp(-i E_S t) + B_k exp(-i E_L t)|^2

with w_k >= 0, so rates are non-negative by construction and their time
integrals are available in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .params import ComplexEnergy


def check_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(np.isnan(t)):
        raise DomainError("time must not be NaN")
    if np.any(t < 0):
        raise DomainError(f"time must be >= 0, got min {float(np.min(t))}")
    return t


@dataclass(frozen=True)
class RateLaw:
    terms: tuple[tuple[float, complex, complex], ...]
    e_s: ComplexEnergy
    e_l: ComplexEnergy

    def __call__(self, t):
        t = check_time(t)
        ps = self.e_s.propagator(t)
        pl = self.e_l.propagator(t)
        out = np.zeros(np.shape(t))
        for w, a, b in self.terms:
            out = out + w * np.abs(a * ps + b * pl) ** 2
        return out if out.ndim else float(out)

    def _antiderivative_tail(self, t):
        """Integral of the rate from t to infinity (t may be +inf)."""
        t = np.asarray(t, dtype=float)
        gs, gl = self.e_s.width, self.e_l.width
        # exp(-i (E_S - conj(E_L)) t)
        z = self.e_s.value - np.conj(self.e_l.value)
        finite = np.isfinite(t)
        tt = np.where(finite, t, 0.0)
        fs = np.where(finite, np.exp(-gs * tt) / gs, 0.0)
        fl = np.where(finite, np.exp(-gl * tt) / gl, 0.0)
        fx = np.where(finite, np.exp(-1j * z * tt) / (1j * z), 0.0)
        out = np.zeros(np.shape(t))
        for w, a, b in self.terms:
            out = out + w * (abs(a) ** 2 * fs + abs(b) ** 2 * fl
                             + 2.0 * np.real(a * np.conj(b) * fx))
        return out

    def integral(self, t0, t1):
        """Integral of the rate over [t0, t1]; broadcasts, t1 may be inf."""
        t0 = check_time(t0)
        t1 = check_time(t1)
        out = self._antiderivative_tail(t0) - self._antiderivative_tail(t1)
        return out if np.ndim(out) else float(out)

    def scaled(self, factor: float) -> RateLaw:
        return RateLaw(tuple((w * factor, a, b) for w, a, b in self.terms), self.e_s, self.e_l)

    def __add__(self, other: RateLaw) -> RateLaw:
        return RateLaw(self.terms + other.terms, self.e_s, self.e_l)
