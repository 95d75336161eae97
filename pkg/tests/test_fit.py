import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from kaontwf import events as ev
from kaontwf import fit
from kaontwf.asymmetry import binned_expectation
from kaontwf.errors import EmptySectorError, ValidationError
from kaontwf.events import BinnedAsymmetry
from kaontwf.states import Model

EDGES = np.arange(1.0, 21.0)


def exact_data(physics, edges=EDGES, sigma=1e-4):
    return BinnedAsymmetry.from_values(edges, binned_expectation(Model.WWA, physics, edges), sigma)


def noisy_data(physics, seed, edges=EDGES, sigma=2e-3):
    rng = np.random.default_rng(seed)
    y = binned_expectation(Model.WWA, physics, edges) + sigma * rng.standard_normal(edges.size - 1)
    return BinnedAsymmetry.from_values(edges, y, sigma)


def test_exact_curve_recovers_epsilon(physics):
    r = fit.fit_epsilon(exact_data(physics), physics)
    assert abs(r.epsilon_hat - physics.epsilon) < 1e-6
    assert r.chi2 < 1e-8 and r.converged and r.ndf == 17


@settings(max_examples=8)
@given(mag=st.floats(5e-4, 8e-3), arg=st.floats(5.0, 85.0))
def test_exact_recovery_property(physics, mag, arg):
    eps = mag * complex(math.cos(math.radians(arg)), math.sin(math.radians(arg)))
    r = fit.fit_epsilon(exact_data(physics.with_epsilon(eps)), physics)
    assert abs(r.epsilon_hat - eps) < 1e-6


def test_zero_data(physics):
    r = fit.fit_epsilon(exact_data(physics.with_epsilon(0)), physics)
    assert abs(r.epsilon_hat) < 1e-6
    assert np.all(np.isfinite(r.covariance))


def test_flat_direction_gets_infinite_variance():
    cov = fit._covariance(lambda x: x[0] ** 2, np.zeros(2))
    assert cov[0, 0] == pytest.approx(1.0)  # 2 / f''
    assert cov[1, 1] == math.inf


def test_sigma_scaling(physics):
    data = noisy_data(physics, 3)
    a = fit.fit_epsilon(data, physics)
    b = fit.fit_epsilon(data.with_sigma(3 * data.sigma), physics)
    assert abs(a.epsilon_hat - b.epsilon_hat) < 1e-8
    assert b.chi2 == pytest.approx(a.chi2 / 9, rel=1e-6)
    assert b.covariance == pytest.approx(9 * a.covariance, rel=1e-3)


def test_chi2_grows_with_extra_bin(physics):
    data = noisy_data(physics, 8)
    short = fit.fit_epsilon(data.subset(np.arange(18) < 17), physics)
    full = fit.fit_epsilon(data, physics)
    assert full.chi2 >= short.chi2 - 1e-9


def test_noisy_fit_within_errors(physics):
    r = fit.fit_epsilon(noisy_data(physics, 21), physics)
    assert abs(r.abs_epsilon - abs(physics.epsilon)) < 4 * r.sigma_abs_epsilon


def test_event_closed_loop(physics):
    samples = [ev.EventSampler(Model.WWA, f, physics, ["2pi"]).draw(1_000_000, 40 + k,
                                                                      normalization="production")
               for k, f in enumerate(("K0", "K0bar"))]
    r = fit.fit_epsilon(ev.bin_asymmetry(*samples, EDGES), physics)
    assert abs(r.abs_epsilon - abs(physics.epsilon)) < 3 * r.sigma_abs_epsilon
    assert r.sigma_abs_epsilon < 0.2 * abs(physics.epsilon)


@pytest.mark.slow
def test_ensemble_unbiased(physics):
    # late bins hold only a few counts at this size, so the bias is judged from
    # the spread of the estimates rather than from per-fit errors
    mags = []
    for seed in range(20):
        samples = [ev.EventSampler(Model.WWA, f, physics, ["2pi"]).draw(
            100_000, 1000 + 2 * seed + k, normalization="production")
            for k, f in enumerate(("K0", "K0bar"))]
        mags.append(fit.fit_epsilon(ev.bin_asymmetry(*samples, EDGES), physics).abs_epsilon)
    mags = np.array(mags)
    assert abs(mags.mean() - abs(physics.epsilon)) < 3 * mags.std(ddof=1) / math.sqrt(mags.size)


def test_model_chi2(physics):
    data = exact_data(physics)
    wwa = fit.model_chi2(Model.WWA, data, physics)
    assert wwa.chi2 < 1e-20 and wwa.ndf == 19 and not wwa.falsified
    twf = fit.model_chi2(Model.twf("large-t"), data, physics)
    assert twf.falsified and twf.to_dict()["verdict"] == "falsified"
    assert wwa.n_sigma == pytest.approx(-19 / math.sqrt(38))


def test_empty_data(physics):
    nan = np.full(19, np.nan)
    data = BinnedAsymmetry(EDGES, nan, nan, np.zeros(19), np.zeros(19))
    with pytest.raises(EmptySectorError):
        fit.fit_epsilon(data, physics)
    with pytest.raises(EmptySectorError):
        fit.model_chi2(Model.WWA, data, physics)
    with pytest.raises(EmptySectorError):
        fit.fit_epsilon(exact_data(physics, np.arange(1.0, 5.0)), physics)


def test_estimator_api(physics):
    est = fit.EpsilonFitter(physics=physics, grid_size=11)
    assert est.get_params()["grid_size"] == 11
    twin = clone(est)
    assert twin.get_params()["physics"] == physics
    X = np.column_stack([EDGES[:-1], EDGES[1:]])
    with pytest.raises(NotFittedError):
        est.predict(X)
    y = binned_expectation(Model.WWA, physics, EDGES)
    est.fit(X, y, sigma=1e-4)
    assert np.allclose(est.predict(X), y, atol=1e-9)
    assert est.score(X, y) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        est.fit(EDGES, y)


def test_fit_json_roundtrip(tmp_path, physics):
    r = fit.fit_epsilon(noisy_data(physics, 2), physics)
    back = fit.read_fit_json(fit.write_fit_json(r, tmp_path / "fit.json"))
    assert back.epsilon_hat == r.epsilon_hat and back.chi2 == r.chi2 and back.ndf == r.ndf
    assert np.array_equal(back.covariance, r.covariance)


def test_verdict_threshold():
    assert fit.verdict(5.0) == "consistent" and fit.verdict(5.01) == "falsified"
