import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from kaontwf import spectral as sp
from kaontwf.errors import ResolutionError, ValidationError

BW1 = sp.BreitWignerParams(0.0, 1.0)


@pytest.fixture(scope="module")
def unit_grid():
    return sp.energy_grid(BW1)


def test_density_peak_and_half_width():
    p = sp.BreitWignerParams(0.3, 2.0)
    assert sp.breit_wigner_density(0.3, p) == pytest.approx(1 / math.pi)
    assert sp.breit_wigner_density(1.3, p) == pytest.approx(0.5 / math.pi)
    assert sp.breit_wigner_density(-0.7, p) == pytest.approx(0.5 / math.pi)


def test_density_quadrature():
    p = sp.BreitWignerParams(1.5, 0.7)
    total, _ = quad(sp.breit_wigner_density, p.m - 50 * p.gamma, p.m + 50 * p.gamma, args=(p,),
                    points=[p.m], limit=200)
    # the Lorentzian tails beyond 50 widths hold 2 atan(1/100)/pi ~ 6.4e-3
    assert total == pytest.approx(1 - 2 * math.atan(0.01) / math.pi, abs=1e-10)
    assert abs(total - 1) < 1e-2


def test_density_quadrature_renormalized():
    grid = sp.energy_grid(BW1, 50.0, 0.01)
    a = sp.EnergyAmplitude.from_density(grid, sp.breit_wigner_density(grid, BW1))
    assert np.trapezoid(a.values, grid) == pytest.approx(1.0, abs=1e-4)


def test_gamma_must_be_positive():
    with pytest.raises(ValidationError):
        sp.BreitWignerParams(0.0, 0.0)


def test_unnormalized_density_rejected():
    grid = np.linspace(-1, 1, 11)
    with pytest.raises(ValidationError):
        sp.EnergyAmplitude(grid, np.ones(11))


def test_survival_at_zero_and_two(unit_grid):
    a = sp.EnergyAmplitude.from_density(unit_grid, sp.breit_wigner_density(unit_grid, BW1))
    assert sp.survival_from_energy_density(a, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert sp.survival_from_energy_density(a, 2.0) == pytest.approx(0.13533528323661269, abs=1e-3)


def test_survival_exponential(unit_grid):
    a = sp.EnergyAmplitude.from_density(unit_grid, sp.breit_wigner_density(unit_grid, BW1))
    t = np.linspace(0, 5, 26)
    assert np.max(np.abs(sp.survival_from_energy_density(a, t) - np.exp(-t))) < 1e-3


def test_nyquist_check():
    grid = sp.energy_grid(BW1, 50.0, 0.5)
    a = sp.EnergyAmplitude.from_density(grid, sp.breit_wigner_density(grid, BW1))
    with pytest.raises(ResolutionError):
        sp.survival_from_energy_density(a, 10.0)


def test_twf_amplitude_values():
    p = sp.BreitWignerParams(0.0, 0.8)
    assert abs(sp.twf_energy_amplitude(0.0, p)) ** 2 == pytest.approx(2 / (math.pi * 0.8))
    # at E = m the amplitude is -i sqrt(G/2pi) / (iG/2): real and negative
    v = sp.twf_energy_amplitude(0.0, p)
    assert v.imag == pytest.approx(0.0, abs=1e-15) and v.real < 0
    assert v == pytest.approx(-math.sqrt(0.8 / (2 * math.pi)) / 0.4)


@given(m=st.floats(-10, 10), g=st.floats(0.01, 100))
def test_twf_density_is_breit_wigner(m, g):
    p = sp.BreitWignerParams(m, g)
    e = m + g * np.linspace(-30, 30, 301)
    ratio = np.abs(sp.twf_energy_amplitude(e, p)) ** 2 / sp.breit_wigner_density(e, p)
    assert np.max(np.abs(ratio - 1)) < 1e-12


def test_equivalence_report_unit():
    r = sp.equivalence_report(BW1)
    assert r.max_density_deviation < 1e-3
    assert r.max_survival_deviation < 1e-3


def test_equivalence_report_degenerate_grid():
    with pytest.raises(ResolutionError):
        sp.equivalence_report(BW1, half_width_over_gamma=0.01, spacing_over_gamma=1.0)


def test_scale_covariance():
    a = sp.equivalence_report(sp.BreitWignerParams(0.0, 0.1))
    b = sp.equivalence_report(sp.BreitWignerParams(0.0, 10.0))
    assert a.max_survival_deviation == pytest.approx(b.max_survival_deviation, rel=1e-6)
    assert a.max_survival_deviation < 1e-3 and b.max_survival_deviation < 1e-3


def test_time_domain_consistency(unit_grid):
    # -dS/dt of the standard pathway and |Psi(t)|^2 of the temporal one both equal G e^{-Gt}
    a = sp.EnergyAmplitude.from_density(unit_grid, sp.breit_wigner_density(unit_grid, BW1))
    t = np.linspace(0.5, 5.0, 46)
    h = 0.05
    dsdt = -(sp.survival_from_energy_density(a, t + h) - sp.survival_from_energy_density(a, t - h)) / (2 * h)
    assert np.max(np.abs(dsdt - np.exp(-t))) < 1e-3
    amp = sp.twf_energy_amplitude(unit_grid, BW1)
    amp = amp / math.sqrt(np.trapezoid(np.abs(amp) ** 2, unit_grid))
    times, psi = sp.twf_time_amplitude(sp.EnergyAmplitude(unit_grid, amp, "amplitude"), 5.0)
    mask = times >= 0.5
    assert np.max(np.abs(np.abs(psi[mask]) ** 2 - np.exp(-times[mask]))) < 1e-3


def test_negative_times_excluded(unit_grid):
    amp = sp.EnergyAmplitude(unit_grid, sp.twf_energy_amplitude(unit_grid, BW1), "amplitude")
    with pytest.raises(ValidationError):
        sp.twf_survival(amp, -1.0, 40.0)


def test_csv_exports(tmp_path):
    r = sp.equivalence_report(BW1, t_grid=np.linspace(0, 5, 11))
    lines = sp.write_survival_csv(r, tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "t,standard,twf,exponential" and len(lines) == 12
    lines = sp.write_density_csv(BW1, np.linspace(-5, 5, 21), tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "energy,breit_wigner,twf_density"
