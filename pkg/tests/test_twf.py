import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

import _oracle as orc
from kaontwf import twf, wwa
from kaontwf.errors import DomainError, SingularPreparationError, UnsupportedRegimeError, ValidationError
from kaontwf.params import derive, load_physics
from kaontwf.states import Flavor, TwfVariant

S2 = 1 / math.sqrt(2)
ZERO = twf.TwfParams(0j, 0j)


def test_constrain_eps_l(physics):
    for v in TwfVariant:
        p = twf.constrain(physics, v)
        assert abs(p.eps_l_tilde) == pytest.approx(2.228e-3 * math.sqrt(5.17e-8 / 8.92e-11), rel=1e-12)
        assert abs(p.eps_l_tilde) == pytest.approx(5.37e-2, rel=2e-3)
        assert np.angle(p.eps_l_tilde) == pytest.approx(np.angle(physics.epsilon))


def test_constrain_variants(physics):
    assert twf.constrain(physics, "large-t").eps_s_tilde == physics.epsilon
    three = twf.constrain(physics, "three-pion").eps_s_tilde
    assert three == pytest.approx(physics.epsilon * math.sqrt(8.92e-11 / 5.17e-8), rel=1e-12)


def test_constrain_zero(physics0):
    assert twf.constrain(physics0, "large-t").is_cp_conserving


def test_prepare_cp_conserving():
    k0 = twf.prepare(Flavor.K0, ZERO)
    assert (k0.alpha, k0.beta) == pytest.approx((S2, S2))
    k0bar = twf.prepare(Flavor.K0BAR, ZERO)
    assert (k0bar.alpha, k0bar.beta) == pytest.approx((S2, -S2))


def test_prepare_against_identities(physics):
    p = twf.constrain(physics, "large-t")
    es, el = p.eps_s_tilde, p.eps_l_tilde
    d = 1 - es * el
    k0 = twf.prepare("K0", p)
    assert k0.alpha == pytest.approx((1 - el) / (math.sqrt(2) * d), rel=1e-14)
    assert k0.beta == pytest.approx((1 - es) / (math.sqrt(2) * d), rel=1e-14)
    k0bar = twf.prepare("K0bar", p)
    assert k0bar.alpha == pytest.approx((1 + el) / (math.sqrt(2) * d), rel=1e-14)
    assert k0bar.beta == pytest.approx(-(1 + es) / (math.sqrt(2) * d), rel=1e-14)
    a, b = orc.twf_prep("K0", *orc.twf_eps("large-t"))
    assert k0.alpha == pytest.approx(complex(a), rel=1e-12)
    assert k0.beta == pytest.approx(complex(b), rel=1e-12)


def test_singular_preparation():
    with pytest.raises(SingularPreparationError):
        twf.TwfParams(0.5, 2.0)
    with pytest.raises(ValidationError):
        twf.TwfParams(1.2, 0.0)


def test_amplitude_cp_conserving(physics):
    d = derive(physics)
    prep = twf.Preparation(0.3 + 0.1j, -0.2j)
    t = np.array([0.0, 1.0, 4.0])
    amp = twf.twf_amplitude(prep, ZERO, t, d)
    assert np.allclose(amp.plus, prep.alpha * np.exp(-0.5 * t), rtol=1e-14)


def test_amplitude_ks_like_at_zero(physics):
    d = derive(physics)
    p = twf.constrain(physics, "large-t")
    amp = twf.twf_amplitude(twf.prepare("KS", p), p, 0.0, d)
    n = math.sqrt(1 + abs(p.eps_s_tilde) ** 2)
    assert complex(amp.plus) == pytest.approx(1 / n, rel=1e-14)
    assert complex(amp.minus) == pytest.approx(p.eps_s_tilde / n, rel=1e-14)


def test_amplitude_against_oracle(physics):
    p = twf.constrain(physics, "large-t")
    amp = twf.twf_amplitude(twf.prepare("K0", p), p, 3.0, derive(physics))
    plus, minus = orc.twf_amplitudes("K0", mp.mpf(3), *orc.twf_eps("large-t"))
    assert complex(amp.plus) == pytest.approx(complex(plus), rel=1e-12)
    assert complex(amp.minus) == pytest.approx(complex(minus), rel=1e-12)


def test_amplitude_negative_time(physics):
    with pytest.raises(DomainError):
        twf.twf_amplitude(twf.Preparation(1, 0), ZERO, -1.0, derive(physics))


def test_two_pion_cp_conserving_equals_wwa(physics0):
    t = np.linspace(0, 20, 50)
    got = twf.twf_two_pion_rate("K0", t, physics0, ZERO)
    assert np.allclose(got, 0.5 * np.exp(-t), rtol=1e-13)
    assert np.allclose(got, wwa.two_pion_rate("K0", t, physics0), rtol=1e-13)


def test_two_pion_pure_states(physics):
    p = twf.constrain(physics, "large-t")
    t = np.array([0.0, 2.0, 7.0])
    gl = physics.tau_s / physics.tau_l
    ks = twf.twf_two_pion_rate("KS", t, physics, p)
    assert np.allclose(ks, np.exp(-t) / (1 + abs(p.eps_s_tilde) ** 2), rtol=1e-13)
    kl = twf.twf_two_pion_rate("KL", t, physics, p)
    e2 = abs(p.eps_l_tilde) ** 2
    assert np.allclose(kl, e2 / (1 + e2) * gl * np.exp(-gl * t), rtol=1e-12)


def test_three_pion(physics, physics0):
    g3 = physics.gamma_k2_to_3pi * physics.tau_s
    gl = physics.tau_s / physics.tau_l
    t = np.array([0.0, 30.0, 300.0])
    assert np.allclose(twf.twf_three_pion_rate("K0", t, physics0, ZERO), g3 / 2 * np.exp(-gl * t), rtol=1e-13)
    p = twf.constrain(physics, "three-pion")
    ks = twf.twf_three_pion_rate("KS", t, physics, p)
    es2 = abs(p.eps_s_tilde) ** 2
    assert np.allclose(ks, g3 / gl * es2 / (1 + es2) * np.exp(-t), rtol=1e-12)
    ref = orc.twf_rate("K0bar", "3pi", mp.mpf(1), "three-pion")
    assert twf.twf_three_pion_rate("K0bar", 1.0, physics, p) == pytest.approx(float(ref), rel=1e-11)


def test_semileptonic_needs_cp_conservation(physics):
    with pytest.raises(UnsupportedRegimeError):
        twf.twf_semileptonic_rate("K0", "+", 1.0, physics, twf.constrain(physics, "large-t"))


def test_semileptonic_matches_wwa(physics0):
    gsl = physics0.gamma_semileptonic * physics0.tau_s
    assert twf.twf_semileptonic_rate("K0", "+", 0.0, physics0, ZERO) == pytest.approx(gsl, rel=1e-14)
    assert twf.twf_semileptonic_rate("K0", "-", 0.0, physics0, ZERO) == pytest.approx(0.0, abs=1e-20)
    t = np.linspace(0, 20, 101)
    for sign in "+-":
        for f in ("K0", "K0bar"):
            assert np.allclose(twf.twf_semileptonic_rate(f, sign, t, physics0, ZERO),
                               wwa.semileptonic_rate(f, sign, t, physics0), rtol=1e-12, atol=0)


def test_semileptonic_half_oscillation(physics0):
    dm = physics0.delta_m * physics0.tau_s
    t = math.pi / dm
    gl = physics0.tau_s / physics0.tau_l
    gsl = physics0.gamma_semileptonic * physics0.tau_s
    # at a half period the cosine term reaches -1: (gsl/4)(e^-t + e^-gl t - 2 e^-(1+gl)t/2)
    ref = gsl / 4 * (math.exp(-t) + math.exp(-gl * t) - 2 * math.exp(-(1 + gl) * t / 2))
    assert twf.twf_semileptonic_rate("K0", "+", t, physics0, ZERO) == pytest.approx(ref, rel=1e-12)
    ref_wwa = orc.wwa_rate("K0", "l+", mp.pi / orc.DM, eps=0)
    assert ref == pytest.approx(float(ref_wwa), rel=1e-12)


def test_probability_budget_ks(physics):
    p = twf.constrain(physics, "three-pion")
    d = derive(physics)
    prep = twf.prepare("KS", p)
    total, _ = quad(lambda t: float(twf.twf_amplitude(prep, p, t, d).density), 0, np.inf, epsabs=1e-12)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_models_diverge_at_zero(physics):
    p = twf.constrain(physics, "large-t")
    half = physics.gamma_k1_to_2pi * physics.tau_s / 2
    diff = abs(twf.twf_two_pion_rate("K0", 0.0, physics, p) - wwa.two_pion_rate("K0", 0.0, physics))
    assert diff > 0.05 * half


@given(t=st.floats(0, 3000), mag=st.floats(0, 0.0035), arg=st.floats(-180, 180),
       variant=st.sampled_from(list(TwfVariant)), flavor=st.sampled_from(["K0", "K0bar", "KS", "KL"]),
       channel=st.sampled_from(["2pi", "3pi"]))
def test_positivity(t, mag, arg, variant, flavor, channel):
    phys = load_physics({"abs_epsilon": mag, "arg_epsilon_degrees": arg}, use_defaults=True)
    p = twf.constrain(phys, variant)
    assert twf.rate_law(flavor, channel, phys, p)(t) >= 0
