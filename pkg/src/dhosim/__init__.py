"""Driven harmonic oscillator as a simulator of a damped (open) oscillator."""

from .closed_drive import (
    DerivedCouplings,
    DriveSpec,
    OscillatorParams,
    ResonanceError,
    TruncationError,
    coherent_amplitude,
    heating_adiabatic,
    heating_resonant,
    heating_single,
    pure_state_density_matrix,
)
from .ensemble import (
    BAND_PRESETS,
    FrequencyBand,
    PhaseMode,
    averaged_density_matrix,
    averaged_heating,
    phase_averaged_integrand,
    rho20_secular_check,
    von_neumann_entropy,
)
from .exact import diffusion_coefficient, exact_heating, qcf_verify, thermal_populations
from .series import HeatingSeries
from .spectral import SpectralModel, normalization, spectral_density, spectral_distribution
from .states import FockDensityMatrix

__version__ = "0.1.0"
