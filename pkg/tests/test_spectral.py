import math
import warnings

import numpy as np
import pytest
from scipy.special import bernoulli

from dhosim import spectral
from dhosim.spectral import SpectralModel


def laurent_coth(x, terms=50):
    """Oracle: Laurent series of coth about 0 (radius of convergence pi)."""
    b = bernoulli(2 * terms)
    return 1 / x + sum(2 ** (2 * n) * b[2 * n] * x ** (2 * n - 1) / math.factorial(2 * n)
                       for n in range(1, terms + 1))


@pytest.fixture
def model():
    return SpectralModel.from_ratio(0.1, 0.045, 80.0)


def test_invariants():
    with pytest.raises(ValueError):
        SpectralModel(omega_c=0.0, temperature_scaled=80, coupling_g=0.045)
    with pytest.raises(ValueError):
        SpectralModel(omega_c=1.0, temperature_scaled=-1, coupling_g=0.045)
    m = SpectralModel(omega_c=0.3, temperature_scaled=80, coupling_g=0.045, omega0=2.0)
    assert m.r == 0.15
    assert m.kT == 160.0


def test_spectral_density_values(model):
    wc = model.omega_c
    assert spectral.spectral_density(0.0, model) == 0
    assert spectral.spectral_density(wc, model) == pytest.approx(wc / math.pi)
    assert spectral.spectral_density(3 * wc, model) == pytest.approx(0.6 * wc / math.pi)
    w = np.linspace(0, 10 * wc, 10001)
    assert w[np.argmax(spectral.spectral_density(w, model))] == pytest.approx(wc, rel=1e-3)
    with pytest.raises(ValueError):
        spectral.spectral_density(-1.0, model)


def test_distribution_zero_limit(model):
    assert spectral.spectral_distribution(0.0, model) == pytest.approx(2 * model.kT / math.pi)
    tiny = spectral.spectral_distribution(1e-9, model)
    assert tiny == pytest.approx(2 * model.kT / math.pi, rel=1e-12)


def test_distribution_coth_value():
    # hbar omega / k_B T = 2 at omega = omega_c: the Lorentzian is 1/2, coth(1) remains
    m = SpectralModel(omega_c=1.0, temperature_scaled=0.5, coupling_g=0.045)
    val = spectral.spectral_distribution(1.0, m)
    assert val == pytest.approx(0.5 / math.pi * laurent_coth(1.0), rel=1e-12)


def test_distribution_factorisation(model):
    w = np.geomspace(1e-3, 10, 50)
    ratio = spectral.spectral_distribution(w, model) / spectral.spectral_density(w, model)
    np.testing.assert_allclose(ratio, spectral.mode_population(w, model) + 0.5, rtol=1e-12)


def test_high_temperature_branch(model):
    w = np.linspace(1e-4, 2.0, 400)
    hi = spectral.spectral_distribution(w, model, high_temperature=True)
    np.testing.assert_allclose(hi, 2 * model.kT / math.pi * model.omega_c**2 / (model.omega_c**2 + w**2))
    full = spectral.spectral_distribution(w, model)
    assert np.max(np.abs(full - hi) / hi) < 0.01
    assert np.all(np.diff(full) < 0)


def test_mode_population_high_t_limit(model):
    w = np.linspace(0.01, 0.1, 10) * model.kT
    # n_e + 1/2 approaches k_B T / omega (n_e alone is off by 1/2)
    np.testing.assert_allclose(spectral.mode_population(w, model) + 0.5, model.kT / w, rtol=1e-3)
    assert np.all(spectral.mode_population(w, model) >= 0)


def test_extreme_temperatures_finite():
    for theta in (10.0, 1e4):
        m = SpectralModel(omega_c=0.1, temperature_scaled=theta, coupling_g=0.045)
        v = spectral.spectral_distribution(np.array([1e-12, 1e-3, 1.0, 1e3]), m)
        assert np.all(np.isfinite(v)) and np.all(v > 0)


@pytest.mark.parametrize("omega_c", [0.05, 0.1, 1.0, 10.0])
def test_normalization(omega_c):
    m = SpectralModel(omega_c=omega_c, temperature_scaled=80, coupling_g=0.045)
    assert spectral.normalization(m) == omega_c**2
    assert spectral.normalization_quadrature(m) == pytest.approx(omega_c**2, rel=1e-8)


def test_normalization_finite_upper():
    m = SpectralModel(omega_c=1.0, temperature_scaled=80, coupling_g=0.045)
    part = spectral.normalization_quadrature(m, upper=100.0)
    assert abs(part - 1.0) < 1e-2
    assert 1.0 - part == pytest.approx(1 - 2 / math.pi * math.atan(100), rel=1e-8)


def test_drive_coupling(model):
    assert model.drive_coupling_sq == pytest.approx(2 * 0.045**2 * 0.01)


def test_high_temperature_guard():
    with pytest.raises(spectral.HighTemperatureError):
        spectral.require_high_temperature(SpectralModel(0.1, 5.0, 0.045))
    with pytest.warns(UserWarning):
        spectral.require_high_temperature(SpectralModel(0.1, 20.0, 0.045))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        spectral.require_high_temperature(SpectralModel(0.1, 80.0, 0.045))
