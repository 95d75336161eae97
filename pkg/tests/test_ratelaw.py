import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from kaontwf import wwa
from kaontwf.errors import DomainError
from kaontwf.params import load_physics
from kaontwf.ratelaw import check_time


def test_check_time_rejects_nan_and_negative():
    with pytest.raises(DomainError):
        check_time(float("nan"))
    with pytest.raises(DomainError):
        check_time([0.0, -1e-9])


def test_scalar_in_scalar_out(physics):
    law = wwa.rate_law("K0", "2pi", physics)
    assert isinstance(law(1.0), float)
    assert law(np.array([1.0, 2.0])).shape == (2,)


@given(t0=st.floats(0, 30), span=st.floats(0.01, 50), channel=st.sampled_from(["2pi", "3pi", "l+", "l-"]),
       flavor=st.sampled_from(["K0", "K0bar"]), dm=st.floats(0.0, 2.0))
def test_integral_matches_quadrature(t0, span, channel, flavor, dm):
    p = load_physics({"delta_m_times_tau_s": dm}, use_defaults=True)
    law = wwa.rate_law(flavor, channel, p)
    ref, _ = quad(law, t0, t0 + span, limit=400, epsabs=1e-15, epsrel=1e-11)
    assert law.integral(t0, t0 + span) == pytest.approx(ref, rel=1e-8, abs=1e-14)


def test_integral_to_infinity(physics):
    law = wwa.rate_law("K0", "2pi", physics)
    ref = law.integral(0, 60) + quad(law, 60, np.inf, epsabs=1e-15)[0]
    assert law.integral(0.0, np.inf) == pytest.approx(ref, rel=1e-9)


def test_sum_and_scale(physics):
    a = wwa.rate_law("K0", "l+", physics)
    b = wwa.rate_law("K0", "l-", physics)
    t = np.linspace(0, 30, 7)
    assert np.allclose((a + b)(t), a(t) + b(t), rtol=1e-14)
    assert np.allclose(a.scaled(3.0)(t), 3 * a(t), rtol=1e-14)
