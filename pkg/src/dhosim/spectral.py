"""Ohmic environment with a Lorentz-Drude cutoff.

Frequencies are in the same units as ``SpectralModel.omega0`` and ``hbar = 1``,
so the thermal energy ``k_B T`` is ``temperature_scaled * omega0`` in
frequency units.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import quadrature

HIGH_T_MIN = 10.0
HIGH_T_WARN = 50.0
# Below this hbar*omega/k_B T the small-argument limit of coth is returned.
_COTH_LIMIT = 1e-6


class HighTemperatureError(ValueError):
    """High-temperature formula requested for a cold reservoir."""


@dataclass(frozen=True)
class SpectralModel:
    """Reservoir parameters: cutoff, temperature ``k_B T / hbar omega0``, coupling."""

    omega_c: float
    temperature_scaled: float
    coupling_g: float
    omega0: float = 1.0
    r: float = field(init=False)

    def __post_init__(self):
        if not self.omega_c > 0:
            raise ValueError(f"omega_c must be positive, got {self.omega_c}")
        if not self.temperature_scaled > 0:
            raise ValueError(f"temperature_scaled must be positive, got {self.temperature_scaled}")
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if self.coupling_g < 0:
            raise ValueError(f"coupling_g must be non-negative, got {self.coupling_g}")
        object.__setattr__(self, "r", self.omega_c / self.omega0)

    @classmethod
    def from_ratio(cls, r: float, coupling_g: float, temperature_scaled: float,
                   omega0: float = 1.0) -> "SpectralModel":
        return cls(omega_c=r * omega0, temperature_scaled=temperature_scaled,
                   coupling_g=coupling_g, omega0=omega0)

    @property
    def kT(self) -> float:
        return self.temperature_scaled * self.omega0

    @property
    def drive_coupling_sq(self) -> float:
        """Square of the dimensionless drive coupling that reproduces this bath.

        Averaging single-drive heating with weight ``I(omega)/N`` gives
        ``kappa**2 / N`` times a spectral integral, while the second-order
        master equation gives ``2 g**2`` times the same integral (per unit
        ``omega0``). Matching the two fixes ``kappa**2 = 2 g**2 N / omega0**2``.
        """
        return 2.0 * self.coupling_g**2 * normalization(self) / self.omega0**2

    @property
    def drive_coupling(self) -> float:
        return math.sqrt(self.drive_coupling_sq)


def require_high_temperature(model: SpectralModel) -> None:
    if model.temperature_scaled < HIGH_T_MIN:
        raise HighTemperatureError(
            f"k_B T / hbar omega0 = {model.temperature_scaled} is below {HIGH_T_MIN}; "
            "the high-temperature reservoir formulas do not apply"
        )
    if model.temperature_scaled < HIGH_T_WARN:
        warnings.warn(
            f"k_B T / hbar omega0 = {model.temperature_scaled} < {HIGH_T_WARN}: "
            "high-temperature approximation is marginal",
            stacklevel=3,
        )


def _lorentzian(omega, model):
    wc2 = model.omega_c**2
    return wc2 / (wc2 + omega**2)


def _check_nonnegative(omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("omega must be non-negative")
    return omega


def _out(v):
    return v[()] if np.ndim(v) == 0 else v


def spectral_density(omega, model: SpectralModel):
    """``J(omega) = (2 omega / pi) * omega_c**2 / (omega_c**2 + omega**2)``."""
    omega = _check_nonnegative(omega)
    return _out(2 * omega / np.pi * _lorentzian(omega, model))


def mode_population(omega, model: SpectralModel):
    """Bose occupation of the reservoir mode at ``omega`` (``omega > 0``)."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("mode population needs omega > 0")
    return _out(1.0 / np.expm1(omega / model.kT))


def spectral_distribution(omega, model: SpectralModel, *, high_temperature: bool = False):
    """Thermally weighted spectral density ``I(omega) = J(omega) (n_e + 1/2)``.

    The finite-temperature form is ``(omega/pi) L(omega) coth(omega / 2 k_B T)``
    with ``L`` the Lorentz-Drude factor; ``coth(y/2)`` is evaluated as
    ``1 + 2/expm1(y)``. With ``high_temperature=True`` the leading term
    ``(2 k_B T / pi) L(omega)`` is returned, which is also the ``omega -> 0``
    limit of the exact form.
    """
    omega = _check_nonnegative(omega)
    lor = _lorentzian(omega, model)
    limit = 2 * model.kT / np.pi * lor
    if high_temperature:
        return _out(limit)
    y = omega / model.kT
    tiny = y < _COTH_LIMIT
    ys = np.where(tiny, 1.0, y)
    exact = omega / np.pi * lor * (1.0 + 2.0 / np.expm1(ys))
    return _out(np.where(tiny, limit, exact))


def normalization(model: SpectralModel) -> float:
    """Averaging normalisation ``omega_c (2/pi) * int_0^inf L(omega) d omega = omega_c**2``."""
    return model.omega_c**2


def normalization_integrand(omega, model: SpectralModel):
    return model.omega_c * 2 / np.pi * _lorentzian(omega, model)


def normalization_quadrature(model: SpectralModel, upper: float = math.inf,
                             rel_tol: float = 1e-12) -> float:
    """Numerical value of the normalisation integral over ``[0, upper]``."""
    res = quadrature.integrate(lambda w: normalization_integrand(w, model), 0.0, upper,
                               rel_peak_tol=rel_tol, breakpoints=[model.omega_c])
    return float(res.value)


def normalization_tail(model: SpectralModel, upper: float) -> float:
    """Part of the normalisation integral above ``upper``."""
    return model.omega_c**2 * (1.0 - 2.0 / math.pi * math.atan(upper / model.omega_c))
