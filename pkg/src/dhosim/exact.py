"""Exact benchmark: secular, second-order master equation of the damped oscillator.

At high temperature the dissipation coefficient is neglected and the heating
function is the time integral of the diffusion coefficient. The state stays
thermal at all times; :func:`qcf_verify` checks that numerically through the
quantum characteristic function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import quadrature
from .series import HeatingSeries
from .spectral import SpectralModel, require_high_temperature
from .states import FockDensityMatrix


@dataclass(frozen=True)
class MasterEqCoefficients:
    delta: float
    gamma: float = 0.0


def markovian_rate(model: SpectralModel) -> float:
    """Long-time value of the diffusion coefficient (frequency units)."""
    r = model.r
    return 2 * model.coupling_g**2 * model.kT * r**2 / (1 + r**2)


def diffusion_coefficient(t, model: SpectralModel):
    """Time-dependent diffusion coefficient ``Delta(t)`` (high temperature)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    tau = model.omega0 * t
    r = model.r
    bracket = 1 - np.exp(-r * tau) * (np.cos(tau) - np.sin(tau) / r)
    out = markovian_rate(model) * bracket
    return out[()] if out.ndim == 0 else out


def master_equation_coefficients(t: float, model: SpectralModel) -> MasterEqCoefficients:
    return MasterEqCoefficients(delta=float(diffusion_coefficient(t, model)), gamma=0.0)


def integrated_diffusion(t, model: SpectralModel):
    """Closed-form antiderivative ``int_0^t Delta(s) ds``.

    Uses ``int_0^tau e^{-r s} cos s ds = [r - e^{-r tau}(r cos tau - sin tau)] / (1 + r^2)``
    and ``int_0^tau e^{-r s} sin s ds = [1 - e^{-r tau}(r sin tau + cos tau)] / (1 + r^2)``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    tau = model.omega0 * t
    r = model.r
    decay = np.exp(-r * tau)
    c, s = np.cos(tau), np.sin(tau)
    int_cos = (r - decay * (r * c - s)) / (1 + r**2)
    int_sin = (1 - decay * (r * s + c)) / (1 + r**2)
    # markovian_rate carries frequency units and tau = omega0 t, hence the 1/omega0
    out = markovian_rate(model) / model.omega0 * (tau - int_cos + int_sin / r)
    return out[()] if out.ndim == 0 else out


def exact_heating(times, model: SpectralModel) -> HeatingSeries:
    """Benchmark heating function for an initial ground state."""
    require_high_temperature(model)
    times = np.asarray(times, dtype=float)
    values = np.atleast_1d(integrated_diffusion(times, model))
    return HeatingSeries(
        times=model.omega0 * times,
        values=values,
        meta={"source": "exact", "r": model.r, "g": model.coupling_g,
              "temperature_scaled": model.temperature_scaled},
    )


def thermal_populations(n_mean: float, dim: int = 8) -> FockDensityMatrix:
    """Thermal (geometric) state with mean occupation ``n_mean``, truncated to ``dim``."""
    if n_mean < 0:
        raise ValueError(f"n_mean must be non-negative, got {n_mean}")
    ratio = n_mean / (n_mean + 1)
    pops = ratio ** np.arange(dim) / (n_mean + 1)
    return FockDensityMatrix(np.diag(pops).astype(complex), tail_bound=ratio**dim)


@dataclass
class QCFState:
    """Characteristic-function data at time ``t``: ``Gamma`` and ``Delta_Gamma``."""

    Gamma: float
    DeltaGamma: float
    chi0: Callable[[complex], complex] = field(
        default=lambda xi: np.exp(-abs(xi) ** 2 / 2), repr=False)

    def chi(self, xi):
        """``chi_t(xi) = exp(-Delta_Gamma |xi|^2) * chi0(exp(-Gamma/2) xi)``."""
        xi = np.asarray(xi, dtype=complex)
        return np.exp(-self.DeltaGamma * np.abs(xi) ** 2) * self.chi0(np.exp(-self.Gamma / 2) * xi)

    def heating(self) -> float:
        """``<n> = (e^{-Gamma} - 1)/2 + Delta_Gamma`` for an initial ground state."""
        return 0.5 * (math.exp(-self.Gamma) - 1) + self.DeltaGamma


def qcf_state(t: float, model: SpectralModel, *,
              delta_fn: Callable[[np.ndarray], np.ndarray] | None = None,
              gamma_fn: Callable[[np.ndarray], np.ndarray] | None = None) -> QCFState:
    """Assemble ``Gamma(t)`` and ``Delta_Gamma(t)`` by quadrature.

    ``delta_fn``/``gamma_fn`` map an array of times to coefficient values and
    default to the high-temperature ``Delta`` and ``gamma = 0``.
    """
    if delta_fn is None:
        delta_fn = lambda s: diffusion_coefficient(s, model)  # noqa: E731
    if t == 0:
        return QCFState(Gamma=0.0, DeltaGamma=0.0)
    if gamma_fn is None:
        big_gamma = lambda s: np.zeros_like(s)  # noqa: E731
    else:
        def big_gamma(s):
            s = np.atleast_1d(s)
            out = np.empty_like(s)
            for i, si in enumerate(s):
                out[i] = 0.0 if si == 0 else 2 * quadrature.integrate(
                    gamma_fn, 0.0, si, rel_peak_tol=1e-13).value
            return out
    Gamma = float(big_gamma(np.array([t]))[0])
    res = quadrature.integrate(lambda s: np.exp(big_gamma(s)) * delta_fn(s), 0.0, t,
                               rel_peak_tol=1e-13, abs_tol=1e-300, initial_panels=8)
    return QCFState(Gamma=Gamma, DeltaGamma=math.exp(-Gamma) * float(res.value))


def thermal_qcf(xi, n_bar: float):
    """Characteristic function of a thermal state with mean occupation ``n_bar``."""
    xi = np.asarray(xi, dtype=complex)
    return np.exp(-(n_bar + 0.5) * np.abs(xi) ** 2)


@dataclass
class QCFReport:
    t: float
    n_mean: float
    passed: bool
    max_residual: float
    identity_residual: float
    residuals: np.ndarray


def qcf_verify(t: float, model: SpectralModel, xi_samples: Sequence[complex], *,
               tol: float = 1e-9, delta_fn=None) -> QCFReport:
    """Compare the evolved characteristic function with the thermal form.

    The evolved side is built from quadratures of the master-equation
    coefficients; the thermal side uses the closed-form heating function.
    Residuals are relative. ``delta_fn`` substitutes the diffusion coefficient
    on the evolved side only (used to confirm the check can fail).
    """
    require_high_temperature(model)
    state = qcf_state(t, model, delta_fn=delta_fn)
    n_mean = float(integrated_diffusion(t, model))
    xi = np.asarray(xi_samples, dtype=complex)
    evolved = state.chi(xi)
    thermal = thermal_qcf(xi, n_mean)
    residuals = np.abs(evolved - thermal) / np.abs(thermal)
    identity = abs((n_mean + 0.5) - (state.DeltaGamma + 0.5 * math.exp(-state.Gamma)))
    identity_rel = identity / (n_mean + 0.5)
    worst = float(max(residuals.max(initial=0.0), identity_rel))
    return QCFReport(t=t, n_mean=n_mean, passed=worst <= tol, max_residual=worst,
                     identity_residual=identity_rel, residuals=residuals)
