"""Named invariant checks with a machine-readable report."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import closed_drive as cd
from . import ensemble, exact, ion, oracle, quadrature, spectral
from .spectral import SpectralModel

NARROW_BATH = dict(r=0.1, g=0.045, temperature_scaled=80.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0


def _narrow_bath_model() -> SpectralModel:
    return SpectralModel.from_ratio(NARROW_BATH["r"], NARROW_BATH["g"], NARROW_BATH["temperature_scaled"])


def check_phase_average_identity(rng):
    worst = 0.0
    phis = 2 * np.pi * np.arange(256) / 256
    for _ in range(20):
        t = rng.uniform(0.1, 30)
        x = rng.uniform(0.0, 2.0)
        while abs(x - 1) < 0.01:
            x = rng.uniform(0.0, 2.0)
        vals = [cd.heating_single(t, cd.DriveSpec.from_kappa(1.0, x, p)) for p in phis]
        num = float(np.mean(vals))
        ana = float(ensemble.phase_averaged_integrand(t, x))
        worst = max(worst, abs(num - ana) / abs(ana))
    return worst, 1e-10, "20 random (t, x) vs 256-point phase trapezoid"


def check_amplitude_vs_heating(rng):
    worst = 0.0
    for _ in range(50):
        t, x, p = rng.uniform(0, 30), rng.uniform(0, 3), rng.uniform(0, 2 * np.pi)
        if abs(x - 1) < 1e-2:
            continue
        d = cd.DriveSpec.from_kappa(0.3, x, p)
        n = cd.heating_single(t, d)
        b = cd.coherent_amplitude(t, d)
        worst = max(worst, abs(abs(b) ** 2 - n) / max(n, 1e-300))
    return worst, 1e-10, "|beta|^2 vs closed-form heating, 50 random points"


def check_constant_field(rng):
    kappa = 0.7
    t = rng.uniform(0, 50, 100)
    n = cd.heating_single(t, cd.DriveSpec.from_kappa(kappa, 0.0, 0.0))
    return float(np.max(np.abs(n - 2 * kappa**2 * (1 - np.cos(t))))), 1e-12, "omega = 0, phi = 0"


def check_resonant_amplitude(rng):
    t = rng.uniform(0, 30, 50)
    d = cd.DriveSpec.from_kappa(1.0, 1.0, 0.0)
    b2 = np.abs(cd.coherent_amplitude(t, d)) ** 2
    n = cd.heating_resonant(t, d)
    return float(np.max(np.abs(b2 - n) / n)), 1e-12, "|beta|^2 on resonance vs resonant closed form"


def check_adiabatic_convergence(rng):
    t = np.linspace(0, 30, 3001)
    gaps = []
    for x in (0.2, 0.1, 0.05, 0.025):
        d = cd.DriveSpec.from_kappa(1.0, x)
        gaps.append(float(np.max(np.abs(cd.heating_adiabatic(t, d) - cd.heating_single(t, d)))))
    ok = all(b < a for a, b in zip(gaps, gaps[1:]))
    return (0.0 if ok else 1.0), 0.0, "sup gaps " + ", ".join(f"{g:.3g}" for g in gaps)


def check_normalization(rng):
    worst = 0.0
    for wc in (0.05, 0.1, 1.0, 10.0):
        m = SpectralModel(omega_c=wc, temperature_scaled=80.0, coupling_g=0.045)
        q = spectral.normalization_quadrature(m)
        worst = max(worst, abs(q - spectral.normalization(m)) / spectral.normalization(m))
    return worst, 1e-8, "omega_c in {0.05, 0.1, 1, 10}"


def check_antiderivative(rng):
    m = _narrow_bath_model()
    worst = 0.0
    for t in rng.uniform(0.5, 30, 10):
        q = quadrature.integrate(lambda s: exact.diffusion_coefficient(s, m), 0.0, t,
                                 rel_peak_tol=1e-13, initial_panels=8).value
        c = exact.integrated_diffusion(t, m)
        worst = max(worst, abs(q - c) / abs(c))
    return worst, 1e-9, "closed antiderivative vs quadrature of Delta"


def check_qcf(rng, *, flip_delta=False):
    m = _narrow_bath_model()
    xi = [0.0, 0.5 + 0.2j, 1 + 1j, -1.5j, 2.0 - 0.7j]
    delta_fn = (lambda s: -exact.diffusion_coefficient(s, m)) if flip_delta else None
    worst = 0.0
    for t in (0.0, 2.0, 7.5, 15.0, 30.0):
        rep = exact.qcf_verify(t, m, xi, delta_fn=delta_fn)
        worst = max(worst, rep.max_residual)
    detail = "5 x 5 (t, xi) grid" + (" [diffusion sign flipped]" if flip_delta else "")
    return worst, 1e-9, detail


def check_rho10(rng):
    m = _narrow_bath_model()
    worst = 0.0
    for t in (3.0, 11.0, 27.0):
        r10, _ = ensemble.averaged_coherences(t, ensemble.BAND_PRESETS["d"][0], m)
        worst = max(worst, abs(r10))
    return worst, 1e-10, "|phase-averaged rho_10|, band [0, 1.2]"


def check_rho20_closed_form(rng):
    m = _narrow_bath_model()
    worst = 0.0
    for t in (2.0, 9.0, 25.0):
        q = ensemble.rho20_quadrature(t, m)
        c = complex(ensemble.rho20_closed_form(t, m))
        worst = max(worst, abs(q - c) / abs(c))
    return worst, 1e-6, "frequency quadrature vs closed form, full band"


def check_rho20_phase_cancellation(rng):
    # e^{2i phi} and e^{-2i phi} parts of beta^2 integrate to zero over a period
    phis = 2 * np.pi * np.arange(64) / 64
    d = [cd.DriveSpec.from_kappa(0.1, 0.37, p) for p in phis]
    b2 = np.array([cd.coherent_amplitude(5.0, di) ** 2 for di in d])
    p, q = cd.amplitude_terms(5.0, 0.37)
    ref = 0.5 * 0.1**2 * p * q
    return float(abs(b2.mean() - ref) / abs(ref)), 1e-12, "phase average of beta^2 keeps only the cross term"


def check_simulator_vs_exact(rng):
    m = _narrow_bath_model()
    t = np.linspace(0, 30, 600)
    sim = ensemble.averaged_heating(t, ensemble.BAND_PRESETS["d"], model=m)
    ex = exact.exact_heating(t, m)
    return float(np.max(np.abs(sim.values - ex.values)) / ex.peak), 0.03, "band [0, 1.2], max gap / peak"


def check_diffusion_negative(rng):
    m = _narrow_bath_model()
    t = np.linspace(math.pi / 2, 3 * math.pi, 4000)
    dmin = float(np.min(exact.diffusion_coefficient(t, m)))
    return (0.0 if dmin < 0 else 1.0), 0.0, f"min Delta on (pi/2, 3 pi) = {dmin:.3g}"


def check_pure_state(rng):
    worst = 0.0
    for _ in range(10):
        beta = complex(*rng.normal(0, 0.2, 2))
        rho = cd.pure_state_density_matrix(beta, 8)
        rho.check()
        worst = max(worst, max(0.0, 1 - rho.purity - 2 * rho.tail_bound))
    return worst, 1e-12, "purity of truncated coherent states"


def check_thermal_entropy(rng):
    rho = exact.thermal_populations(1.0, 80)
    s = ensemble.von_neumann_entropy(rho)
    return abs(s - math.log(4)), 1e-10, "<n> = 1 thermal state, 80 levels"


def check_ion_plan(rng):
    m = _narrow_bath_model()
    be = ion.IonParams.beryllium9()
    plan = ion.build_plan(m, be)
    est = ion.discrete_heating(plan, m, be)
    count_ok = len(plan) == 225
    return (est.relative_gap if count_ok else math.inf), 0.03, f"{len(plan)} frequencies, gap / peak"


def check_rescaling(rng):
    m = _narrow_bath_model()
    be = ion.IonParams.beryllium9()
    p1 = ion.build_plan(m, be, n_durations=100)
    p2 = ion.build_plan(m, be, n_durations=100, amplitudes=rng.uniform(0.01, 1.0, len(p1)))
    a = ion.discrete_heating(p1, m, be, compare=False).values
    b = ion.discrete_heating(p2, m, be, compare=False).values
    return float(np.max(np.abs(a - b)) / np.max(a)), 1e-12, "uniform vs random per-set fields"


def check_oracle(rng):
    drives = [(0.0, 0.0), (0.55, 2.0), (1.0, 0.0), (1.3, 1.0)]
    res = oracle.propagate([1.0, 2.5], drives, 0.2, dim=40)
    worst = 0.0
    for j, (x, p) in enumerate(drives):
        b = cd.coherent_amplitude(res.taus, cd.DriveSpec.from_kappa(0.2, x, p))
        worst = max(worst, float(np.max(np.abs(res.mean_number[:, j] - np.abs(b) ** 2) / np.abs(b) ** 2)))
    return worst, 1e-6, "split-step Schrodinger integration, 40 levels, step 1e-4"


CHECKS: dict[str, Callable] = {
    "phase_average_identity": check_phase_average_identity,
    "amplitude_vs_heating": check_amplitude_vs_heating,
    "constant_field_identity": check_constant_field,
    "resonant_amplitude": check_resonant_amplitude,
    "adiabatic_convergence": check_adiabatic_convergence,
    "normalization_quadrature": check_normalization,
    "exact_antiderivative": check_antiderivative,
    "qcf_thermal_state": check_qcf,
    "rho10_cancellation": check_rho10,
    "rho20_closed_form": check_rho20_closed_form,
    "rho20_phase_cancellation": check_rho20_phase_cancellation,
    "simulator_vs_exact": check_simulator_vs_exact,
    "diffusion_negativity": check_diffusion_negative,
    "pure_state_purity": check_pure_state,
    "thermal_entropy": check_thermal_entropy,
    "ion_plan_gap": check_ion_plan,
    "ion_rescaling_invariance": check_rescaling,
    "schrodinger_oracle": check_oracle,
}


def run_all(*, flip_delta: bool = False, seed: int = 20240601,
            only: list[str] | None = None) -> list[CheckResult]:
    """Run every named check (or those in ``only``).

    ``flip_delta`` negates the diffusion coefficient fed to the
    characteristic-function check, which must then fail.
    """
    results = []
    for name, fn in CHECKS.items():
        if only and name not in only:
            continue
        rng = np.random.default_rng(seed)
        start = time.perf_counter()
        try:
            kwargs = {"flip_delta": True} if (flip_delta and name == "qcf_thermal_state") else {}
            residual, tol, detail = fn(rng, **kwargs)
            passed = bool(residual <= tol)
        except Exception as exc:  # a crashing check is a failed check
            residual, tol, detail, passed = math.inf, math.nan, f"{type(exc).__name__}: {exc}", False
        results.append(CheckResult(name, passed, float(residual), float(tol), detail,
                                   time.perf_counter() - start))
    return results


def report(results: list[CheckResult]) -> dict:
    return {
        "passed": all(r.passed for r in results),
        "n_checks": len(results),
        "n_failed": sum(not r.passed for r in results),
        "checks": [asdict(r) for r in results],
    }
