"""Trapped-ion implementation: frequency grids, field calibration, discrete averaging.

A reservoir is emulated by a finite set of drive frequencies. Each set is run
with its own field amplitude and a ladder of pulse durations; the measured
heating of each set is rescaled to a common reference coupling and weighted
by the spectral distribution, turning the frequency integral into a midpoint
sum over the grid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import constants

from .closed_drive import OscillatorParams
from .ensemble import (
    FrequencyBand,
    PhaseMode,
    averaged_heating,
    fixed_phase_kernel,
    phase_averaged_kernel,
    spectral_weight,
)
from .spectral import SpectralModel

PHASE_POLICIES = ("random-per-shot", "fixed")
PLAN_FORMAT = "dhosim-plan-v1"
BERYLLIUM9_MASS_U = 9.012182


class PlanError(ValueError):
    """Inconsistent experiment plan."""


@dataclass(frozen=True)
class IonParams:
    trap_frequency_hz: float
    ion_mass: float
    ion_charge: float

    def __post_init__(self):
        for name in ("trap_frequency_hz", "ion_mass", "ion_charge"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def beryllium9(cls, trap_frequency_hz: float = 11e6) -> "IonParams":
        """Singly charged 9Be+ (electron mass neglected)."""
        return cls(trap_frequency_hz, BERYLLIUM9_MASS_U * constants.atomic_mass,
                   constants.elementary_charge)

    @property
    def omega0(self) -> float:
        """Angular trap frequency in rad/s."""
        return 2 * math.pi * self.trap_frequency_hz

    def oscillator(self) -> OscillatorParams:
        """Dimensionless oscillator used by the closed forms (``omega0 = 1``)."""
        return OscillatorParams()

    def scaled_time(self, t_seconds):
        return self.omega0 * np.asarray(t_seconds, dtype=float)

    def seconds(self, tau):
        return np.asarray(tau, dtype=float) / self.omega0


def _field_scale(ion: IonParams) -> float:
    return math.sqrt(2 * ion.ion_mass * constants.hbar * ion.omega0**3)


def coupling_from_field(E, ion: IonParams):
    """Dimensionless coupling ``e E / sqrt(2 m hbar omega0^3)`` for field ``E`` in V/m."""
    E = np.asarray(E, dtype=float)
    if np.any(E < 0):
        raise ValueError("field amplitude must be non-negative")
    out = ion.ion_charge * E / _field_scale(ion)
    return out[()] if out.ndim == 0 else out


def field_for_coupling(kappa, ion: IonParams):
    """Field amplitude in V/m giving dimensionless coupling ``kappa``."""
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa < 0):
        raise ValueError("coupling must be non-negative")
    out = kappa * _field_scale(ion) / ion.ion_charge
    return out[()] if out.ndim == 0 else out


def frequency_count(f_min: float, f_max: float, step: float) -> int:
    """Number of grid frequencies: ``step`` spacing from ``f_min`` with ``f_max`` appended.

    A span that is an exact multiple of ``step`` (to 1e-9 of a step) does
    not gain an extra point.
    """
    if not f_max > f_min:
        raise PlanError(f"need f_min < f_max, got {f_min}, {f_max}")
    if not step > 0:
        raise PlanError(f"step must be positive, got {step}")
    return int(math.ceil((f_max - f_min) / step - 1e-9)) + 1


def frequency_grid(f_min: float, f_max: float, step: float) -> np.ndarray:
    n = frequency_count(f_min, f_max, step)
    grid = f_min + step * np.arange(n, dtype=float)
    grid[-1] = f_max
    return grid


def midpoint_widths(freqs: np.ndarray) -> np.ndarray:
    """Widths of the midpoint-rule cells, clipped to ``[freqs[0], freqs[-1]]``."""
    edges = np.concatenate([[freqs[0]], 0.5 * (freqs[1:] + freqs[:-1]), [freqs[-1]]])
    return np.diff(edges)


@dataclass
class ExperimentPlan:
    """Drive schedule for the ion implementation.

    ``durations`` is ``(n_frequencies, n_durations)`` in seconds,
    ``amplitudes`` the field per set in V/m and ``rescale`` the factor that
    maps each set's measured heating to the reference coupling
    ``kappa_ref``.
    """

    frequencies_hz: np.ndarray
    step_hz: float
    durations: np.ndarray
    amplitudes: np.ndarray
    rescale: np.ndarray
    kappa_ref: float
    trap_frequency_hz: float
    phase_policy: str = "random-per-shot"
    ambient_heating_rate: float = 0.0
    seed: int | None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frequencies_hz = np.asarray(self.frequencies_hz, dtype=float)
        self.durations = np.atleast_2d(np.asarray(self.durations, dtype=float))
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        self.rescale = np.asarray(self.rescale, dtype=float)
        n = len(self.frequencies_hz)
        if np.any(np.diff(self.frequencies_hz) <= 0):
            raise PlanError("frequencies must be strictly ascending")
        if self.durations.shape[0] != n or self.amplitudes.shape != (n,) or self.rescale.shape != (n,):
            raise PlanError("per-set arrays must have one entry per frequency")
        if np.any(np.diff(self.durations, axis=1) <= 0):
            raise PlanError("durations must be ascending within every set")
        if np.any(self.amplitudes <= 0):
            raise PlanError("field amplitudes must be positive")
        if self.phase_policy not in PHASE_POLICIES:
            raise PlanError(f"phase_policy must be one of {PHASE_POLICIES}")

    def __len__(self) -> int:
        return len(self.frequencies_hz)

    # -- structured form -------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": PLAN_FORMAT,
            "trap_frequency_hz": self.trap_frequency_hz,
            "step_hz": self.step_hz,
            "phase_policy": self.phase_policy,
            "seed": self.seed,
            "kappa_ref": self.kappa_ref,
            "ambient_heating_rate": self.ambient_heating_rate,
            "notes": self.notes,
            "sets": [
                {
                    "frequency_hz": float(f),
                    "amplitude_v_per_m": float(a),
                    "rescale": float(s),
                    "durations_s": [float(d) for d in ds],
                }
                for f, a, s, ds in zip(self.frequencies_hz, self.amplitudes, self.rescale,
                                       self.durations)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentPlan":
        if data.get("format") != PLAN_FORMAT:
            raise PlanError(f"unsupported plan format {data.get('format')!r}")
        sets = data["sets"]
        return cls(
            frequencies_hz=[s["frequency_hz"] for s in sets],
            step_hz=data["step_hz"],
            durations=[s["durations_s"] for s in sets],
            amplitudes=[s["amplitude_v_per_m"] for s in sets],
            rescale=[s["rescale"] for s in sets],
            kappa_ref=data["kappa_ref"],
            trap_frequency_hz=data["trap_frequency_hz"],
            phase_policy=data["phase_policy"],
            ambient_heating_rate=data["ambient_heating_rate"],
            seed=data["seed"],
            notes=dict(data.get("notes", {})),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentPlan":
        return cls.from_dict(json.loads(text))

    # -- line-oriented form ------------------------------------------------

    _HEADER_KEYS = ("trap_frequency_hz", "step_hz", "phase_policy", "seed", "kappa_ref",
                    "ambient_heating_rate")

    def to_text(self) -> str:
        """Header of ``key = value`` lines, then one line per set.

        Set lines are ``frequency_hz amplitude_v_per_m rescale d_1 ... d_n``
        with durations in seconds; floats use 17 significant digits so the
        text form round-trips exactly.
        """
        lines = [f"# {PLAN_FORMAT}"]
        for key in self._HEADER_KEYS:
            value = getattr(self, key)
            if isinstance(value, float):
                value = f"{value:.17g}"
            lines.append(f"{key} = {value}")
        lines.append("# frequency_hz amplitude_v_per_m rescale durations_s...")
        for f, a, s, ds in zip(self.frequencies_hz, self.amplitudes, self.rescale, self.durations):
            nums = [f, a, s, *ds]
            lines.append(" ".join(f"{v:.17g}" for v in nums))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentPlan":
        lines = text.splitlines()
        if not lines or lines[0].strip() != f"# {PLAN_FORMAT}":
            raise PlanError("missing plan format header")
        header: dict[str, str] = {}
        rows = []
        for line in lines[1:]:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" in line:
                key, value = (p.strip() for p in line.split("=", 1))
                header[key] = value
            else:
                rows.append([float(v) for v in line.split()])
        missing = [k for k in cls._HEADER_KEYS if k not in header]
        if missing:
            raise PlanError(f"plan header lacks {missing}")
        rows_arr = np.array(rows)
        seed = None if header["seed"] == "None" else int(header["seed"])
        return cls(
            frequencies_hz=rows_arr[:, 0],
            step_hz=float(header["step_hz"]),
            durations=rows_arr[:, 3:],
            amplitudes=rows_arr[:, 1],
            rescale=rows_arr[:, 2],
            kappa_ref=float(header["kappa_ref"]),
            trap_frequency_hz=float(header["trap_frequency_hz"]),
            phase_policy=header["phase_policy"],
            ambient_heating_rate=float(header["ambient_heating_rate"]),
            seed=seed,
        )


def build_plan(
    target: SpectralModel,
    ion: IonParams,
    f_min: float = 0.0,
    f_max: float = 12.3e6,
    step: float = 55e3,
    n_durations: int = 600,
    *,
    t_max_scaled: float = 30.0,
    amplitudes: Sequence[float] | None = None,
    phase_policy: str = "random-per-shot",
    expected_count: int | None = None,
    ambient_heating_rate: float = 0.0,
    seed: int | None = None,
) -> ExperimentPlan:
    """Experiment plan emulating ``target`` with the trapped ion ``ion``.

    The reference coupling is the bath-matched ``kappa`` of ``target``; by
    default every set uses the field producing it. Custom ``amplitudes``
    (V/m, one per set) are allowed, the plan then stores
    ``rescale = (kappa_ref / kappa_set)**2``.

    Durations are ``n_durations`` values of ``omega0 t`` spread uniformly
    over ``(0, t_max_scaled]``, converted to seconds.

    Raises
    ------
    PlanError
        On an invalid grid or if ``expected_count`` is given and differs.
    """
    freqs = frequency_grid(f_min, f_max, step)
    if expected_count is not None and len(freqs) != expected_count:
        raise PlanError(f"grid has {len(freqs)} frequencies, expected {expected_count}")
    if n_durations < 1:
        raise PlanError("n_durations must be at least 1")
    kappa_ref = target.drive_coupling
    if amplitudes is None:
        amps = np.full(len(freqs), float(field_for_coupling(kappa_ref, ion)))
    else:
        amps = np.asarray(amplitudes, dtype=float)
        if amps.shape != freqs.shape:
            raise PlanError("need one amplitude per frequency")
        if np.any(amps <= 0):
            raise PlanError("field amplitudes must be positive")
    rescale = (kappa_ref / coupling_from_field(amps, ion)) ** 2
    taus = np.linspace(t_max_scaled / n_durations, t_max_scaled, n_durations)
    durations = np.tile(ion.seconds(taus), (len(freqs), 1))
    return ExperimentPlan(
        frequencies_hz=freqs, step_hz=step, durations=durations, amplitudes=amps,
        rescale=np.atleast_1d(rescale), kappa_ref=kappa_ref,
        trap_frequency_hz=ion.trap_frequency_hz, phase_policy=phase_policy,
        ambient_heating_rate=ambient_heating_rate, seed=seed,
        notes={"r": target.r, "g": target.coupling_g,
               "temperature_scaled": target.temperature_scaled},
    )


@dataclass
class DiscreteHeatingEstimate:
    times: np.ndarray          # omega0 t
    values: np.ndarray
    continuum: np.ndarray
    quadrature_gap: float
    continuum_peak: float
    times_s: np.ndarray

    @property
    def relative_gap(self) -> float:
        return self.quadrature_gap / self.continuum_peak


def set_heating(plan: ExperimentPlan, ion: IonParams) -> np.ndarray:
    """Heating each set would show, ``(n_frequencies, n_durations)``.

    Computed from the closed forms at the set's own field amplitude,
    standing in for the measured values.
    """
    kappa = np.atleast_1d(coupling_from_field(plan.amplitudes, ion))
    x = plan.frequencies_hz / ion.trap_frequency_hz
    tau = ion.scaled_time(plan.durations)
    if plan.phase_policy == "fixed":
        kern = fixed_phase_kernel(tau, x[:, None], 0.0)
    else:
        kern = phase_averaged_kernel(tau, x[:, None])
    return kappa[:, None] ** 2 * kern


def discrete_heating(plan: ExperimentPlan, target: SpectralModel, ion: IonParams, *,
                     measured: np.ndarray | None = None,
                     compare: bool = True) -> DiscreteHeatingEstimate:
    """Midpoint-rule average of the per-set heating, compared with the continuum.

    ``measured`` defaults to :func:`set_heating`. All sets must share one
    duration ladder. The continuum reference integrates the same band
    ``[f_min, f_max]`` with the same phase treatment.
    """
    if ion.trap_frequency_hz != plan.trap_frequency_hz:
        raise PlanError("plan was built for a different trap frequency")
    if np.any(plan.durations != plan.durations[0]):
        raise PlanError("discrete averaging needs a shared duration ladder")
    if measured is None:
        measured = set_heating(plan, ion)
    x = plan.frequencies_hz / ion.trap_frequency_hz
    weights = spectral_weight(x, target, True) * midpoint_widths(x)
    normalized = measured * plan.rescale[:, None] / plan.kappa_ref**2
    values = weights @ normalized
    taus = ion.scaled_time(plan.durations[0])
    if compare:
        mode = PhaseMode.fixed(0.0) if plan.phase_policy == "fixed" else PhaseMode.averaged()
        band = FrequencyBand(float(x[0]), float(x[-1]))
        cont = averaged_heating(taus, band, mode, target).values
        gap = float(np.max(np.abs(values - cont)))
        peak = float(np.max(cont))
    else:
        cont = np.full_like(values, np.nan)
        gap, peak = math.nan, math.nan
    return DiscreteHeatingEstimate(times=taus, values=values, continuum=cont,
                                   quadrature_gap=gap, continuum_peak=peak,
                                   times_s=plan.durations[0].copy())
