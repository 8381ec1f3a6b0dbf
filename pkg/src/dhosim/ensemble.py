"""Averaging single-drive results over drive phase and frequency.

The simulated heating function is

    <n>(t) = (kappa**2 / N) * int_band d omega I(omega) * f(t, omega)

where ``f`` is the single-drive heating per unit ``kappa**2``, either averaged
over the drive phase (closed form) or evaluated at a fixed phase. With the
bath-matched coupling ``kappa**2 = 2 g**2 N / omega0**2`` the prefactor is
``2 g**2 / omega0 * int dx I(omega0 x) f`` with ``x = omega / omega0``.

All integrals are taken in ``x`` with ``x = 1`` as a panel edge; both
integrands are written so that the removable pole at resonance never
appears in floating point.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import quadrature
from .closed_drive import OscillatorParams, amplitude_terms
from .exact import thermal_populations
from .series import HeatingSeries
from .spectral import SpectralModel, require_high_temperature, spectral_distribution
from .states import FockDensityMatrix, StateError

BAND_CUTOFF = 100.0        # finite stand-in for an infinite upper limit, in units of omega0
DEFAULT_TOL = 1e-8
WEAK_COUPLING_MAX = 0.2
TIME_CHUNK = 64            # fixed so results do not depend on the worker count
TRACE_DEFICIT = 1e-12      # population allowed above the automatic Fock cutoff
PHASE_SAMPLES = 64         # even, so that phi and phi + pi pair up exactly


class WeakCouplingError(ValueError):
    """Averaged occupation too large for the second-order state reconstruction."""


@dataclass(frozen=True)
class FrequencyBand:
    """Integration range ``[omega_lo, omega_hi]`` in units of ``omega0``.

    ``omega_hi = math.inf`` is accepted and mapped to :data:`BAND_CUTOFF`;
    the neglected part is bounded by :func:`tail_bound`.
    """

    omega_lo: float
    omega_hi: float

    def __post_init__(self):
        if self.omega_lo < 0:
            raise ValueError(f"omega_lo must be non-negative, got {self.omega_lo}")
        if not self.omega_hi > self.omega_lo:
            raise ValueError(f"empty band [{self.omega_lo}, {self.omega_hi}]")
        if math.isfinite(self.omega_hi) and self.omega_hi > BAND_CUTOFF:
            raise ValueError(f"finite omega_hi must be <= {BAND_CUTOFF} omega0")

    @property
    def hi(self) -> float:
        return min(self.omega_hi, BAND_CUTOFF)

    def label(self) -> str:
        return f"[{self.omega_lo:g}, {self.omega_hi:g}]"


BAND_PRESETS: dict[str, tuple[FrequencyBand, ...]] = {
    "a": (FrequencyBand(0.0, 0.2),),
    "b": (FrequencyBand(0.8, 1.2),),
    "c": (FrequencyBand(0.0, 0.2), FrequencyBand(0.8, 1.2)),
    "d": (FrequencyBand(0.0, 1.2),),
}


@dataclass(frozen=True)
class PhaseMode:
    """Either the analytic phase average or a fixed phase ``phi0``."""

    fixed_phase: float | None = None

    def __post_init__(self):
        if self.fixed_phase is not None:
            object.__setattr__(self, "fixed_phase", float(self.fixed_phase) % (2 * math.pi))

    @classmethod
    def averaged(cls) -> "PhaseMode":
        return cls(None)

    @classmethod
    def fixed(cls, phi0: float = 0.0) -> "PhaseMode":
        return cls(phi0)

    @property
    def is_averaged(self) -> bool:
        return self.fixed_phase is None

    def label(self) -> str:
        return "averaged" if self.is_averaged else f"fixed({self.fixed_phase:g})"


def _one_minus_cos_over_sq(eps, tau):
    """``(1 - cos(eps*tau)) / eps**2`` without the 0/0 at ``eps = 0``."""
    return 0.5 * tau**2 * np.sinc(eps * tau / (2 * np.pi)) ** 2


def phase_averaged_kernel(tau, x):
    """Phase-averaged heating per unit ``kappa**2`` as a function of ``tau`` and ``x``.

    Equal to ``[(1 + x^2)(1 - cos tau cos x tau) - 2 x sin x tau sin tau] / (1 - x^2)^2``,
    rewritten as the sum of the counter- and co-rotating parts
    ``[(1 - cos((1+x)tau))/(1+x)^2 + (1 - cos((1-x)tau))/(1-x)^2] / 2``, which is
    finite at ``x = 1`` (``tau^2/4 + sin^2(tau)/4``).
    """
    tau = np.asarray(tau, dtype=float)
    x = np.asarray(x, dtype=float)
    return 0.5 * (_one_minus_cos_over_sq(1 + x, tau) + _one_minus_cos_over_sq(1 - x, tau))


def fixed_phase_kernel(tau, x, phi):
    """Heating per unit ``kappa**2`` for phase ``phi`` (resonance-safe)."""
    p, q = amplitude_terms(tau, x)
    psi = np.asarray(x) * np.asarray(tau) + phi
    return 0.25 * np.abs(np.exp(1j * psi) * p + np.exp(-1j * psi) * q) ** 2


def phase_averaged_integrand(t, omega, osc: OscillatorParams = OscillatorParams()):
    """Analytic phase average of the single-drive heating per unit ``kappa**2``.

    ``t`` and ``omega`` broadcast against each other. The coupling and the
    spectral weight are applied by the caller.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("omega must be non-negative")
    out = phase_averaged_kernel(osc.omega0 * t, omega / osc.omega0)
    return out[()] if out.ndim == 0 else out


def spectral_weight(x, model: SpectralModel, high_temperature: bool):
    """``2 g^2 / omega0 * I(omega0 x)``: the measure multiplying the kernel in ``dx``."""
    intensity = spectral_distribution(model.omega0 * np.asarray(x), model,
                                      high_temperature=high_temperature)
    return 2 * model.coupling_g**2 / model.omega0 * intensity


def _band_breakpoints(band: FrequencyBand) -> list[float]:
    pts = [1.0] if band.omega_lo < 1.0 < band.hi else []
    return pts


def _band_integral(tau: np.ndarray, band: FrequencyBand, mode: PhaseMode, model: SpectralModel,
                   high_temperature: bool, tol: float, max_panels: int) -> quadrature.QuadratureResult:
    def integrand(x):
        w = spectral_weight(x, model, high_temperature)[:, None]
        if mode.is_averaged:
            k = phase_averaged_kernel(tau[None, :], x[:, None])
        else:
            k = fixed_phase_kernel(tau[None, :], x[:, None], mode.fixed_phase)
        return w * k

    # start with panels no wider than ~one oscillation of the longest pulse
    width = band.hi - band.omega_lo
    n0 = int(np.clip(np.ceil(width * max(float(tau.max()), 1.0) / (2 * np.pi)), 1, 64))
    return quadrature.integrate(integrand, band.omega_lo, band.hi, rel_peak_tol=tol,
                                max_panels=max_panels, breakpoints=_band_breakpoints(band),
                                initial_panels=n0)


def averaged_heating(
    times,
    band: FrequencyBand | Sequence[FrequencyBand],
    mode: PhaseMode = PhaseMode(),
    model: SpectralModel | None = None,
    osc: OscillatorParams = OscillatorParams(),
    *,
    tol: float = DEFAULT_TOL,
    max_panels: int = quadrature.DEFAULT_MAX_PANELS,
    high_temperature: bool = True,
    workers: int = 1,
) -> HeatingSeries:
    """Simulated heating function averaged over drives in ``band``.

    Parameters
    ----------
    times : array_like
        Pulse durations ``t`` (same units as ``1/osc.omega0``), ascending.
    band : FrequencyBand or sequence of FrequencyBand
        Several bands are summed (e.g. preset ``"c"``).
    mode : PhaseMode
        Analytic phase average (default) or fixed phase.
    model : SpectralModel
        Reservoir to emulate; defaults to ``r = 0.1, g = 0.045, k_B T = 80 hbar omega0``.
    tol : float
        Quadrature error target relative to the peak of each time chunk.
    high_temperature : bool
        Weight with the high-temperature spectral distribution (default) or the
        full ``coth`` form.
    workers : int
        Threads used for independent chunks of time points. Chunks have a
        fixed size, so the result does not depend on ``workers``.

    Returns
    -------
    HeatingSeries
        ``times`` are ``omega0 * t``.

    Raises
    ------
    quadrature.QuadratureError
        If a chunk does not converge within ``max_panels``.
    """
    if model is None:
        model = SpectralModel.from_ratio(0.1, 0.045, 80.0, osc.omega0)
    if model.omega0 != osc.omega0:
        raise ValueError("model.omega0 and osc.omega0 differ")
    if high_temperature:
        require_high_temperature(model)
    bands = (band,) if isinstance(band, FrequencyBand) else tuple(band)
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be non-negative")
    tau = osc.omega0 * times
    chunks = [tau[i:i + TIME_CHUNK] for i in range(0, len(tau), TIME_CHUNK)]

    def run(chunk):
        total = np.zeros(len(chunk))
        for b in bands:
            total += np.atleast_1d(_band_integral(chunk, b, mode, model, high_temperature,
                                                  tol, max_panels).value)
        return total

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    values = np.concatenate(parts) if parts else np.zeros(0)
    meta = {
        "bands": [b.label() for b in bands],
        "phase_mode": mode.label(),
        "r": model.r,
        "g": model.coupling_g,
        "temperature_scaled": model.temperature_scaled,
        "high_temperature": high_temperature,
    }
    return HeatingSeries(times=tau, values=values, meta=meta)


def tail_bound(omega_hi: float, t: float, model: SpectralModel,
               osc: OscillatorParams = OscillatorParams()) -> float:
    """Upper bound on the heating contributed by ``omega > omega_hi`` (``omega_hi > omega0``).

    Uses ``f <= 2 / (x - 1)^2`` (each part is at most ``2/(1 -+ x)^2``, halved)
    and the high-temperature weight ``(4 g^2 k_B T / pi omega0^2) r^2 / x^2``.
    The bound is independent of ``t``; the argument is kept for symmetry.
    """
    del t
    x = omega_hi / osc.omega0
    if x <= 1:
        raise ValueError("tail bound needs omega_hi above resonance")
    pref = 4 * model.coupling_g**2 * model.temperature_scaled / math.pi * model.r**2
    # int_X^inf 2 / (x^2 (x - 1)^2) dx, closed form
    integral = 2 * (1 / (x - 1) + 1 / x - 2 * math.log(x / (x - 1)))
    return pref * integral


# --- density matrix ----------------------------------------------------------

def _leading_coherences(tau: float, band: FrequencyBand, model: SpectralModel,
                        high_temperature: bool, tol: float):
    """Weighted averages of ``rho_{1,0}`` and ``rho_{2,0}`` of the coherent states.

    ``rho_{1,0}`` is averaged over a uniform phase grid (exact pairing of
    ``phi`` and ``phi + pi``); ``rho_{2,0}`` uses the analytic phase average
    of ``beta**2 / sqrt(2)``.
    """
    kappa = model.drive_coupling
    phis = 2 * np.pi * np.arange(PHASE_SAMPLES) / PHASE_SAMPLES

    def integrand(x):
        w = spectral_weight(x, model, high_temperature) / model.drive_coupling_sq
        p, q = amplitude_terms(tau, x)
        psi = x[:, None] * tau + phis[None, :]
        beta = -0.5 * kappa * (np.exp(1j * psi) * p[:, None] + np.exp(-1j * psi) * q[:, None])
        r10 = (np.exp(-np.abs(beta) ** 2) * beta).mean(axis=1)
        r20 = kappa**2 * p * q / (2 * math.sqrt(2))
        return w[:, None] * np.column_stack([r10.real, r10.imag, r20.real, r20.imag])

    res = quadrature.integrate(integrand, band.omega_lo, band.hi, rel_peak_tol=tol,
                               abs_tol=1e-15, breakpoints=_band_breakpoints(band),
                               initial_panels=8)
    v = res.value
    return complex(v[0], v[1]), complex(v[2], v[3])


def thermal_dim(n_mean: float, minimum: int = 8, deficit: float = TRACE_DEFICIT) -> int:
    """Smallest cutoff ``>= minimum`` whose thermal trace deficit is at most ``deficit``."""
    if n_mean <= 0:
        return minimum
    q = n_mean / (n_mean + 1)
    return max(minimum, int(math.ceil(math.log(deficit) / math.log(q))))


def averaged_density_matrix(
    t: float,
    band: FrequencyBand = BAND_PRESETS["d"][0],
    model: SpectralModel | None = None,
    osc: OscillatorParams = OscillatorParams(),
    dim: int | None = None,
    *,
    secular: bool = True,
    max_mean: float = WEAK_COUPLING_MAX,
    high_temperature: bool = True,
    tol: float = DEFAULT_TOL,
) -> FockDensityMatrix:
    """State of the simulator after averaging drives of duration ``t``.

    With ``secular=True`` (default) coherences are dropped and the thermal
    form is populated from the averaged ``<n>``. With ``secular=False`` the
    second-order coherences ``rho_{1,0}`` and ``rho_{2,0}`` (and their
    conjugates) are added to the same diagonal. ``dim=None`` picks the
    cutoff with :func:`thermal_dim`, so the trace is 1 to within 1e-12.

    Raises
    ------
    WeakCouplingError
        If ``<n> > max_mean``.
    """
    if model is None:
        model = SpectralModel.from_ratio(0.1, 0.045, 80.0, osc.omega0)
    series = averaged_heating([t], band, PhaseMode.averaged(), model, osc, tol=tol,
                              high_temperature=high_temperature)
    n_mean = max(float(series.values[0]), 0.0)
    if n_mean > max_mean:
        raise WeakCouplingError(
            f"<n> = {n_mean:.4g} exceeds the weak-coupling limit {max_mean}")
    rho = thermal_populations(n_mean, thermal_dim(n_mean) if dim is None else dim)
    if secular or t == 0:
        return rho
    r10, r20 = _leading_coherences(osc.omega0 * t, band, model, high_temperature, tol)
    el = rho.elements.copy()
    el[1, 0], el[0, 1] = r10, np.conj(r10)
    el[2, 0], el[0, 2] = r20, np.conj(r20)
    return FockDensityMatrix(el, tail_bound=rho.tail_bound)


def averaged_coherences(t: float, band: FrequencyBand, model: SpectralModel,
                        osc: OscillatorParams = OscillatorParams(), *,
                        high_temperature: bool = True, tol: float = 1e-10):
    """Numerically averaged ``(rho_{1,0}, rho_{2,0})`` at pulse duration ``t``."""
    return _leading_coherences(osc.omega0 * t, band, model, high_temperature, tol)


# --- rho_{2,0} and the secular approximation ----------------------------------

def rho20_closed_form(t, model: SpectralModel, osc: OscillatorParams = OscillatorParams()):
    """Frequency-integrated second-order ``rho_{2,0}`` over ``[0, inf)`` (high temperature).

    ``sqrt(2) g^2 (k_B T / hbar omega0) r / (1 + r^2) * e^{i tau}
    [cos tau - r sin tau - e^{-r tau}]`` in the interaction picture, obtained
    by contour integration of the phase-averaged ``beta**2 / sqrt(2)`` against
    the Lorentz-Drude weight.
    """
    tau = osc.omega0 * np.asarray(t, dtype=float)
    r = model.r
    pref = math.sqrt(2) * model.coupling_g**2 * model.temperature_scaled * r / (1 + r**2)
    out = pref * np.exp(1j * tau) * (np.cos(tau) - r * np.sin(tau) - np.exp(-r * tau))
    return out[()] if out.ndim == 0 else out


def rho20_quadrature(t: float, model: SpectralModel, osc: OscillatorParams = OscillatorParams(),
                     *, tol: float = 1e-12) -> complex:
    """Direct frequency quadrature of the phase-averaged ``beta**2 / sqrt(2)`` over ``[0, inf)``."""
    tau = osc.omega0 * t

    def integrand(x):
        w = spectral_weight(x, model, True)
        p, q = amplitude_terms(tau, x)
        v = w * p * q / (2 * math.sqrt(2))
        return np.column_stack([v.real, v.imag])

    res = quadrature.integrate(integrand, 0.0, np.inf, rel_peak_tol=tol, abs_tol=1e-300,
                               breakpoints=[1.0, model.r], initial_panels=16,
                               max_panels=20000)
    return complex(res.value[0], res.value[1])


@dataclass
class SecularReport:
    t: float
    full: complex
    secular: complex
    period_average: complex
    peak: float
    bound: float
    passed: bool


def rho20_secular_check(t: float, model: SpectralModel,
                        osc: OscillatorParams = OscillatorParams(), *,
                        samples: int = 2048) -> SecularReport:
    """Period average of ``rho_{2,0}`` against ``r`` times its peak.

    The average is taken over ``[t, t + 2 pi / omega0]`` (trapezoid rule on
    the closed form) and the peak over ``[0, t + 2 pi / omega0]``. The
    secular value is 0 by construction.
    """
    require_high_temperature(model)
    period = 2 * math.pi / osc.omega0
    grid = np.linspace(t, t + period, samples + 1)
    vals = rho20_closed_form(grid, model, osc)
    avg = complex(np.trapezoid(vals, grid) / period)
    peak_grid = np.linspace(0.0, t + period, 8 * samples + 1)
    peak = float(np.max(np.abs(rho20_closed_form(peak_grid, model, osc))))
    bound = model.r * peak
    return SecularReport(t=t, full=complex(rho20_closed_form(t, model, osc)), secular=0j,
                         period_average=avg, peak=peak, bound=bound,
                         passed=abs(avg) <= bound)


def von_neumann_entropy(rho: FockDensityMatrix, *, psd_tol: float = 1e-10) -> float:
    """``S = -Tr(rho ln rho)`` from the eigenvalues, with ``0 ln 0 = 0``."""
    lam = rho.eigenvalues()
    if lam.min() < -psd_tol:
        raise StateError(f"density matrix has eigenvalue {lam.min():.3e} < 0")
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log(lam))) + 0.0  # no negative zero


def thermal_entropy(n_mean: float) -> float:
    """Entropy of the untruncated thermal state with mean occupation ``n_mean``."""
    if n_mean == 0:
        return 0.0
    return (n_mean + 1) * math.log(n_mean + 1) - n_mean * math.log(n_mean)


def entropy_series(series: HeatingSeries, dim: int | None = None,
                   max_mean: float = WEAK_COUPLING_MAX) -> tuple[np.ndarray, np.ndarray]:
    """Entropy and purity of the secular states along an averaged heating series."""
    s = np.empty(len(series))
    purity = np.empty(len(series))
    for i, n in enumerate(series.values):
        n = max(float(n), 0.0)
        if n > max_mean:
            raise WeakCouplingError(f"<n> = {n:.4g} exceeds {max_mean} at index {i}")
        rho = thermal_populations(n, thermal_dim(n) if dim is None else dim)
        s[i] = von_neumann_entropy(rho)
        purity[i] = rho.purity
    return s, purity


def band_union(names: Iterable[str]) -> tuple[FrequencyBand, ...]:
    out: list[FrequencyBand] = []
    for n in names:
        out.extend(BAND_PRESETS[n])
    return tuple(out)
