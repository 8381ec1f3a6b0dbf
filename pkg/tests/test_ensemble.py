import math

import numpy as np
import pytest
from scipy.integrate import quad

from dhosim import closed_drive as cd
from dhosim import ensemble, exact, quadrature
from dhosim.ensemble import BAND_PRESETS, FrequencyBand, PhaseMode, averaged_heating
from dhosim.spectral import SpectralModel

# Frozen with scipy.integrate.quad (split at omega0, epsrel 1e-12) of the
# high-temperature weight times the phase-averaged kernel, band [0, 1.2].
BAND_D_REFERENCE = {10.0: 0.0709752356941963, 30.0: 0.1256802792692312}


def eq17_phase_quadrature(t, x, n=256):
    phis = 2 * np.pi * np.arange(n) / n
    return np.mean([cd.heating_single(t, cd.DriveSpec.from_kappa(1.0, x, p)) for p in phis])


class TestIntegrand:
    def test_zero_time(self):
        np.testing.assert_array_equal(ensemble.phase_averaged_integrand(0.0, np.linspace(0, 3, 7)), 0)

    def test_zero_frequency(self):
        t = np.linspace(0, 20, 41)
        np.testing.assert_allclose(ensemble.phase_averaged_integrand(t, 0.0), 1 - np.cos(t), atol=1e-15)
        assert ensemble.phase_averaged_integrand(3.3, 0.0) == pytest.approx(eq17_phase_quadrature(3.3, 0.0),
                                                                            rel=1e-10)

    def test_half_frequency(self):
        assert ensemble.phase_averaged_integrand(7.0, 0.5) == pytest.approx(
            eq17_phase_quadrature(7.0, 0.5), rel=1e-10)

    def test_printed_closed_form(self):
        t, x = 4.2, 0.63
        printed = ((1 + x**2) * (1 - math.cos(t) * math.cos(x * t))
                   - 2 * x * math.sin(x * t) * math.sin(t)) / (1 - x**2) ** 2
        assert ensemble.phase_averaged_integrand(t, x) == pytest.approx(printed, rel=1e-12)

    def test_random_points(self):
        rng = np.random.default_rng(19)
        for _ in range(20):
            t, x = rng.uniform(0, 30), rng.uniform(0, 2)
            if abs(x - 1) < 0.01:
                continue
            assert ensemble.phase_averaged_integrand(t, x) == pytest.approx(
                eq17_phase_quadrature(t, x), rel=1e-10)

    def test_resonance(self):
        t = np.linspace(0, 30, 61)
        np.testing.assert_allclose(ensemble.phase_averaged_integrand(t, 1.0),
                                   t**2 / 4 + np.sin(t) ** 2 / 4, rtol=1e-13)
        near = ensemble.phase_averaged_integrand(t[1:], 1 + 1e-7)
        np.testing.assert_allclose(near, t[1:] ** 2 / 4 + np.sin(t[1:]) ** 2 / 4, rtol=1e-5)

    def test_fixed_kernel_matches_heating(self):
        for x, phi in [(0.3, 0.0), (1.4, 2.0), (0.0, 1.0)]:
            k = ensemble.fixed_phase_kernel(5.5, x, phi)
            assert k == pytest.approx(cd.heating_single(5.5, cd.DriveSpec.from_kappa(1.0, x, phi)), rel=1e-10)


class TestBands:
    def test_validation(self):
        with pytest.raises(ValueError):
            FrequencyBand(0.5, 0.5)
        with pytest.raises(ValueError):
            FrequencyBand(-0.1, 1.0)
        with pytest.raises(ValueError):
            FrequencyBand(0.0, 150.0)
        assert FrequencyBand(0.0, math.inf).hi == ensemble.BAND_CUTOFF

    def test_phase_mode(self):
        assert PhaseMode.averaged().is_averaged
        assert PhaseMode.fixed(-math.pi).fixed_phase == pytest.approx(math.pi)


class TestAveragedHeating:
    @pytest.mark.parametrize("t, ref", sorted(BAND_D_REFERENCE.items()))
    def test_frozen_values(self, narrow_bath, t, ref):
        s = averaged_heating([t], BAND_PRESETS["d"], model=narrow_bath)
        assert s.values[0] == pytest.approx(ref, rel=1e-7)

    def test_series_invariants(self, narrow_bath, time_grid):
        s = averaged_heating(time_grid, BAND_PRESETS["d"], model=narrow_bath)
        s.check()
        assert s.values[0] == 0
        assert s.meta["phase_mode"] == "averaged"

    def test_band_additivity(self, narrow_bath, time_grid):
        whole = averaged_heating(time_grid, FrequencyBand(0.0, 1.2), model=narrow_bath).values
        parts = averaged_heating(time_grid, [FrequencyBand(0.0, 0.55), FrequencyBand(0.55, 1.2)],
                                 model=narrow_bath).values
        assert np.max(np.abs(whole - parts)) <= 3e-8 * np.max(whole)

    def test_full_band_equals_exact(self, narrow_bath, time_grid):
        sim = averaged_heating(time_grid, FrequencyBand(0.0, math.inf), model=narrow_bath)
        ex = exact.exact_heating(time_grid, narrow_bath)
        bound = ensemble.tail_bound(ensemble.BAND_CUTOFF, 0.0, narrow_bath)
        assert np.max(np.abs(sim.values - ex.values)) <= bound + 1e-8 * ex.peak

    def test_band_extension_converges(self, narrow_bath, time_grid):
        vals = [averaged_heating(time_grid, FrequencyBand(0.0, hi), model=narrow_bath).values
                for hi in (1.2, 10.0, 100.0)]
        inc = [np.max(np.abs(b - a)) for a, b in zip(vals, vals[1:])]
        assert inc[1] < inc[0]
        assert inc[1] < 0.005 * np.max(vals[-1])

    def test_tail_bound_holds(self, narrow_bath):
        t = np.array([5.0, 30.0])
        a = averaged_heating(t, FrequencyBand(0.0, 10.0), model=narrow_bath).values
        b = averaged_heating(t, FrequencyBand(0.0, 100.0), model=narrow_bath).values
        assert np.all(b - a <= ensemble.tail_bound(10.0, 0.0, narrow_bath))

    def test_deterministic_across_workers(self, narrow_bath):
        t = np.linspace(0, 30, 300)
        one = averaged_heating(t, BAND_PRESETS["d"], model=narrow_bath, workers=1).values
        four = averaged_heating(t, BAND_PRESETS["d"], model=narrow_bath, workers=4).values
        np.testing.assert_array_equal(one, four)

    def test_scipy_oracle_fixed_phase(self, narrow_bath):
        w = lambda x: ensemble.spectral_weight(np.array([x]), narrow_bath, True)[0]  # noqa: E731
        k = lambda x: float(ensemble.fixed_phase_kernel(12.0, x, 0.0))  # noqa: E731
        ref = sum(quad(lambda x: w(x) * k(x), lo, hi, limit=400, epsrel=1e-12)[0]
                  for lo, hi in [(0, 1), (1, 1.2)])
        got = averaged_heating([12.0], BAND_PRESETS["d"], PhaseMode.fixed(0.0), narrow_bath).values[0]
        assert got == pytest.approx(ref, rel=1e-7)

    def test_finite_temperature_weight(self, narrow_bath):
        t = [10.0]
        hi = averaged_heating(t, BAND_PRESETS["d"], model=narrow_bath).values[0]
        full = averaged_heating(t, BAND_PRESETS["d"], model=narrow_bath, high_temperature=False).values[0]
        assert full == pytest.approx(hi, rel=0.01)

    def test_cold_model_rejected(self):
        from dhosim.spectral import HighTemperatureError
        with pytest.raises(HighTemperatureError):
            averaged_heating([1.0], BAND_PRESETS["d"], model=SpectralModel(0.1, 2.0, 0.045))

    def test_non_convergence_surfaces(self, narrow_bath):
        with pytest.raises(quadrature.QuadratureError):
            averaged_heating([30.0], BAND_PRESETS["d"], model=narrow_bath, tol=1e-15, max_panels=10)

    def test_markovian_full_band_matches_exact(self):
        m = SpectralModel.from_ratio(25.0, 0.045, 80.0)
        t = np.linspace(0, 30, 120)
        sim = averaged_heating(t, FrequencyBand(0.0, math.inf), model=m).values
        ex = exact.exact_heating(t, m).values
        assert np.max(np.abs(sim - ex)) <= 1e-4 * ex.max()


class TestDensityMatrix:
    def test_zero_time(self, narrow_bath):
        rho = ensemble.averaged_density_matrix(0.0, model=narrow_bath)
        np.testing.assert_allclose(rho.populations, np.eye(8)[0], atol=1e-15)

    @pytest.mark.parametrize("t", [2.0, 10.0, 30.0])
    def test_thermal_form(self, narrow_bath, t):
        rho = ensemble.averaged_density_matrix(t, model=narrow_bath)
        rho.check()
        n = averaged_heating([t], BAND_PRESETS["d"], model=narrow_bath).values[0]
        assert rho.trace == pytest.approx(1.0, abs=1e-10)
        assert rho.purity < 1
        assert rho.purity == pytest.approx(1 - 2 * n, abs=4 * n**2)
        p = rho.populations
        assert p[0] == pytest.approx(1 - n, abs=n**2)
        assert p[1] == pytest.approx(n, abs=2 * n**2)
        assert p[2] == pytest.approx(n**2, abs=3 * n**3)

    def test_non_secular_coherences(self, narrow_bath):
        rho = ensemble.averaged_density_matrix(8.0, model=narrow_bath, secular=False)
        assert abs(rho.elements[1, 0]) < 1e-10
        assert abs(rho.elements[2, 0]) > 1e-4
        np.testing.assert_allclose(rho.elements, rho.elements.conj().T, atol=1e-15)

    def test_weak_coupling_guard(self):
        strong = SpectralModel.from_ratio(0.1, 0.3, 80.0)
        with pytest.raises(ensemble.WeakCouplingError):
            ensemble.averaged_density_matrix(30.0, model=strong)


class TestRho20:
    def test_phase_average_of_beta_squared(self):
        phis = 2 * np.pi * np.arange(32) / 32
        b2 = [cd.coherent_amplitude(4.0, cd.DriveSpec.from_kappa(0.1, 0.8, p)) ** 2 for p in phis]
        p, q = cd.amplitude_terms(4.0, 0.8)
        assert np.mean(b2) == pytest.approx(0.5 * 0.01 * p * q, rel=1e-12)

    def test_closed_form_vs_quadrature(self, narrow_bath):
        for t in (0.5, 6.0, 19.0):
            assert ensemble.rho20_quadrature(t, narrow_bath) == pytest.approx(
                complex(ensemble.rho20_closed_form(t, narrow_bath)), rel=1e-6)

    def test_closed_form_vanishes_at_zero(self, narrow_bath):
        assert ensemble.rho20_closed_form(0.0, narrow_bath) == 0

    def test_secular_report(self, narrow_bath):
        rep = ensemble.rho20_secular_check(10.0, narrow_bath)
        assert rep.secular == 0
        assert rep.peak >= abs(rep.full)
        assert rep.bound == pytest.approx(0.1 * rep.peak)


class TestEntropy:
    def test_pure(self):
        from dhosim.states import FockDensityMatrix
        assert ensemble.von_neumann_entropy(FockDensityMatrix(np.diag([1.0, 0, 0]))) == 0

    def test_thermal_one_quantum(self):
        rho = exact.thermal_populations(1.0, 80)
        assert ensemble.von_neumann_entropy(rho) == pytest.approx(math.log(4), abs=1e-10)
        assert ensemble.thermal_entropy(1.0) == pytest.approx(math.log(4))

    def test_coherent_state_pure(self):
        rho = cd.pure_state_density_matrix(0.2 + 0.1j, 12)
        assert ensemble.von_neumann_entropy(rho) < 1e-10

    def test_rejects_non_psd(self):
        from dhosim.states import FockDensityMatrix, StateError
        with pytest.raises(StateError):
            ensemble.von_neumann_entropy(FockDensityMatrix(np.diag([1.1, -0.1])))
