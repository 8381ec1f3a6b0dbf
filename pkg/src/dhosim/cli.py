"""Command-line interface: figure data, comparisons, entropy, ion plans, self-check.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 self-check failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import closed_drive as cd
from . import ensemble, exact, ion, selfcheck
from .quadrature import QuadratureError
from .series import default_time_grid
from .spectral import HighTemperatureError, SpectralModel
from .states import StateError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_SELFCHECK = 0, 1, 2, 3
OUTPUT_ENV = "DHOSIM_OUTPUT_DIR"
CSV_FORMAT = ".12g"

_FREQ_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_FREQ_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zA-Z]*)\s*$")


class UsageError(Exception):
    """Invalid command-line or configuration input."""


def parse_frequency(text: str | float) -> float:
    """Parse ``"110kHz"``, ``"12.3 MHz"`` or a bare number (Hz)."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _FREQ_RE.match(text)
    if not m or m.group(2).lower() not in ("", *_FREQ_UNITS):
        raise UsageError(f"cannot parse frequency {text!r}")
    unit = m.group(2).lower()
    return float(m.group(1)) * (_FREQ_UNITS[unit] if unit else 1.0)


def parse_float_list(text: str | list) -> list[float]:
    if isinstance(text, list):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def read_config(path: str | os.PathLike) -> dict[str, str]:
    """Read ``key = value`` lines (UTF-8); ``#`` starts a comment.

    Keys are case-sensitive, ``-`` and ``_`` are interchangeable, and
    surrounding whitespace is stripped. Later duplicates win.
    """
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise UsageError(f"{path}:{lineno}: empty key")
        out[key.replace("-", "_")] = value
    return out


# name -> (default, converter)
COMMON: dict[str, tuple[Any, Callable]] = {
    "r": (0.1, float),
    "g": (0.045, float),
    "temperature": (80.0, float),
    "n_times": (600, int),
    "t_max": (30.0, float),
    "workers": (1, int),
}
COMMAND_OPTIONS: dict[str, dict[str, tuple[Any, Callable]]] = {
    "single-drive": {
        "omega_ratio": ("0,0.1,0.2,1.0", parse_float_list),
        "kappa": (1.0, float),
        "phi": (0.0, float),
        "weight": (1.0, float),
    },
    "compare": {
        "band": ("a,b,c,d", str),
        "fixed_phase": (0.0, float),
        "extend_band": (None, float),
    },
    "entropy": {
        "band": ("d", str),
        "dim": (None, int),
    },
    "plan-ion": {
        "f_min": ("0", parse_frequency),
        "f_max": ("12.3MHz", parse_frequency),
        "step": ("55kHz", parse_frequency),
        "trap_frequency": ("11MHz", parse_frequency),
        "n_durations": (600, int),
        "phase_policy": ("random-per-shot", str),
        "seed": (None, int),
        "expected_count": (None, int),
        "format": ("both", str),
    },
    "selfcheck": {
        "flip_delta": (False, lambda v: str(v).lower() in ("1", "true", "yes", "on")),
    },
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dhosim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--output-dir", help=f"output directory (default ${OUTPUT_ENV} or .)")
        p.add_argument("--r", type=float, help="cutoff ratio omega_c / omega0 (0.1)")
        p.add_argument("--g", type=float, help="system-bath coupling (0.045)")
        p.add_argument("--temperature", type=float, help="k_B T / hbar omega0 (80)")
        p.add_argument("--n-times", type=int, help="time-grid points (600)")
        p.add_argument("--t-max", type=float, help="largest omega0 t (30)")
        p.add_argument("--workers", type=int, help="threads for the averaging engine (1)")

    p = sub.add_parser("single-drive", help="closed-oscillator heating for single drives")
    common(p)
    p.add_argument("--omega-ratio", help="comma list of omega/omega0 (0,0.1,0.2,1.0)")
    p.add_argument("--kappa", type=float, help="dimensionless drive coupling (1)")
    p.add_argument("--phi", type=float, help="drive phase at switch-on (0)")
    p.add_argument("--weight", type=float, help="multiplier for resonant series (1)")

    p = sub.add_parser("compare", help="simulator vs exact benchmark per band")
    common(p)
    p.add_argument("--band", help="comma list of presets a,b,c,d,full (a,b,c,d)")
    p.add_argument("--fixed-phase", type=float, help="phase of the fixed-phase column (0)")
    p.add_argument("--extend-band", type=float,
                   help="replace the 1.2 upper edge of bands b-d by this value (omega0 units)")

    p = sub.add_parser("entropy", help="entropy and purity of the averaged state")
    common(p)
    p.add_argument("--band", help="one preset (d)")
    p.add_argument("--dim", type=int, help="Fock cutoff (automatic: >= 8 levels, trace deficit <= 1e-12)")

    p = sub.add_parser("plan-ion", help="trapped-ion experiment plan and discrete-sum report")
    common(p)
    p.add_argument("--f-min", help="lowest drive frequency, e.g. 0 or 100kHz (0)")
    p.add_argument("--f-max", help="highest drive frequency (12.3MHz)")
    p.add_argument("--step", help="frequency spacing (55kHz)")
    p.add_argument("--trap-frequency", help="omega0 / 2 pi (11MHz)")
    p.add_argument("--n-durations", type=int, help="pulse durations per set (600)")
    p.add_argument("--phase-policy", help="random-per-shot or fixed")
    p.add_argument("--seed", type=int, help="seed recorded with a random phase policy")
    p.add_argument("--expected-count", type=int, help="fail unless the grid has this many points")
    p.add_argument("--format", help="json, text or both (both)")

    p = sub.add_parser("selfcheck", help="run the invariant suite")
    common(p)
    p.add_argument("--flip-delta", action="store_const", const=True,
                   help="debug: negate the diffusion coefficient in the QCF check")
    return parser


def resolve(args: argparse.Namespace) -> dict[str, Any]:
    """Merge flags > config file > defaults and convert every value."""
    options = {**COMMON, **COMMAND_OPTIONS[args.command]}
    file_values = read_config(args.config) if args.config else {}
    # keys of other subcommands are allowed so one file can serve all of them
    known = set(COMMON).union(*COMMAND_OPTIONS.values(), {"output_dir"})
    unknown = sorted(set(file_values) - known)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    cfg: dict[str, Any] = {}
    for key, (default, conv) in options.items():
        flag = getattr(args, key, None)
        raw = flag if flag is not None else file_values.get(key, default)
        try:
            cfg[key] = None if raw is None else conv(raw)
        except (ValueError, TypeError) as exc:
            raise UsageError(f"invalid value for {key}: {raw!r}") from exc
    out = args.output_dir or file_values.get("output_dir") or os.environ.get(OUTPUT_ENV) or "."
    cfg["output_dir"] = Path(out)
    _validate(args.command, cfg)
    return cfg


def _validate(command: str, cfg: dict) -> None:
    if cfg["n_times"] < 2:
        raise UsageError("n_times must be at least 2")
    if not cfg["t_max"] > 0:
        raise UsageError("t_max must be positive")
    if cfg["workers"] < 1:
        raise UsageError("workers must be at least 1")
    if not (cfg["r"] > 0 and cfg["temperature"] > 0 and cfg["g"] >= 0):
        raise UsageError("need r > 0, temperature > 0 and g >= 0")
    if command in ("compare", "entropy"):
        names = [b.strip() for b in cfg["band"].split(",") if b.strip()]
        bad = [b for b in names if b not in BANDS]
        if bad or not names:
            raise UsageError(f"unknown band preset(s) {bad}; choose from {sorted(BANDS)}")
        if command == "entropy" and len(names) != 1:
            raise UsageError("entropy takes exactly one band preset")
        if cfg.get("extend_band") is not None and not 1.2 < cfg["extend_band"] <= ensemble.BAND_CUTOFF:
            raise UsageError(f"extend_band must lie in (1.2, {ensemble.BAND_CUTOFF}]")
    if command == "single-drive":
        if any(x < 0 for x in cfg["omega_ratio"]) or not cfg["omega_ratio"]:
            raise UsageError("omega_ratio values must be non-negative")
        if cfg["kappa"] < 0:
            raise UsageError("kappa must be non-negative")
    if command == "entropy" and cfg["dim"] is not None and cfg["dim"] < 2:
        raise UsageError("dim must be at least 2")
    if command == "plan-ion":
        if cfg["phase_policy"] not in ion.PHASE_POLICIES:
            raise UsageError(f"phase_policy must be one of {ion.PHASE_POLICIES}")
        if cfg["format"] not in ("json", "text", "both"):
            raise UsageError("format must be json, text or both")
        if not cfg["f_max"] > cfg["f_min"] >= 0 or not cfg["step"] > 0:
            raise UsageError("need 0 <= f_min < f_max and step > 0")


BANDS = {**ensemble.BAND_PRESETS, "full": (ensemble.FrequencyBand(0.0, math.inf),)}


def _model(cfg) -> SpectralModel:
    return SpectralModel.from_ratio(cfg["r"], cfg["g"], cfg["temperature"])


def _times(cfg) -> np.ndarray:
    return default_time_grid(cfg["n_times"], cfg["t_max"])


def write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([format(float(v), CSV_FORMAT) for v in row])


def write_json(path: Path, data: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def _ratio_tag(x: float) -> str:
    return format(x, "g").replace(".", "p")


def cmd_single_drive(cfg) -> int:
    tau = _times(cfg)
    written = []
    for x in cfg["omega_ratio"]:
        drive = cd.DriveSpec.from_kappa(cfg["kappa"], x, cfg["phi"])
        if abs(x - 1) < cd.RESONANCE_EPS:
            n = np.abs(cd.coherent_amplitude(tau, drive)) ** 2 * cfg["weight"]
        else:
            n = cd.heating_single(tau, drive)
        path = cfg["output_dir"] / f"single_drive_x{_ratio_tag(x)}.csv"
        write_csv(path, ["omega0_t", "n_mean"], [tau, n])
        written.append(str(path))
        print(f"omega/omega0 = {x:g}: max <n> = {np.max(n):.6g} -> {path}")
    return EXIT_OK


def _bands_for(name: str, extend: float | None) -> tuple[ensemble.FrequencyBand, ...]:
    bands = BANDS[name]
    if extend is None:
        return bands
    return tuple(ensemble.FrequencyBand(b.omega_lo, extend) if b.omega_hi == 1.2 else b
                 for b in bands)


def cmd_compare(cfg) -> int:
    model = _model(cfg)
    tau = _times(cfg)
    ex = exact.exact_heating(tau, model)
    summary: dict[str, Any] = {"parameters": {k: cfg[k] for k in ("r", "g", "temperature")},
                               "bands": {}}
    for name in [b.strip() for b in cfg["band"].split(",") if b.strip()]:
        bands = _bands_for(name, cfg["extend_band"])
        sim = ensemble.averaged_heating(tau, bands, ensemble.PhaseMode.averaged(), model,
                                        workers=cfg["workers"])
        fixed = ensemble.averaged_heating(tau, bands, ensemble.PhaseMode.fixed(cfg["fixed_phase"]),
                                          model, workers=cfg["workers"])
        path = cfg["output_dir"] / f"compare_{name}.csv"
        write_csv(path, ["omega0_t", "n_sim", "n_exact", "n_fixed_phase"],
                  [tau, sim.values, ex.values, fixed.values])
        gap = float(np.max(np.abs(sim.values - ex.values)) / ex.peak)
        late = (2.0 * cfg["t_max"] / 3.0, cfg["t_max"])
        entry: dict[str, Any] = {
            "bands": sim.meta["bands"],
            "csv": str(path),
            "max_gap_over_exact_peak": gap,
            "slope_sim": sim.linear_fit(*late)[0],
            "slope_exact": ex.linear_fit(*late)[0],
            "slope_fixed_phase": fixed.linear_fit(*late)[0],
            "fit_window": list(late),
        }
        sel = tau > 0.05
        entry["max_rel_diff_fixed_vs_averaged"] = float(
            np.max(np.abs(fixed.values[sel] - sim.values[sel]) / np.abs(sim.values[sel])))
        if name == "a":
            entry["local_extrema"] = int(len(sim.local_extrema()))
            entry["pass"] = entry["local_extrema"] >= 3
        elif name == "b":
            entry["r_squared_10_30"] = sim.linear_fit(10.0, 30.0)[2]
            entry["pass"] = entry["r_squared_10_30"] >= 0.999
        elif name == "c":
            entry["pass"] = gap <= 0.10
        elif name in ("d", "full"):
            entry["pass"] = gap <= 0.03
        summary["bands"][name] = entry
        verdict = {True: "PASS", False: "FAIL"}[entry["pass"]]
        print(f"band {name}: max gap / exact peak = {gap:.4g} [{verdict}]")
    write_json(cfg["output_dir"] / "compare_summary.json", summary)
    return EXIT_OK


def cmd_entropy(cfg) -> int:
    model = _model(cfg)
    tau = _times(cfg)
    series = ensemble.averaged_heating(tau, BANDS[cfg["band"].strip()], model=model,
                                       workers=cfg["workers"])
    s, purity = ensemble.entropy_series(series, cfg["dim"])
    path = cfg["output_dir"] / "entropy.csv"
    write_csv(path, ["omega0_t", "S", "n_mean", "purity"], [tau, s, series.values, purity])
    print(f"max S = {np.max(s):.6g}, min purity = {np.min(purity):.6g} -> {path}")
    return EXIT_OK


def cmd_plan_ion(cfg) -> int:
    model = _model(cfg)
    trap = ion.IonParams.beryllium9(cfg["trap_frequency"])
    plan = ion.build_plan(model, trap, cfg["f_min"], cfg["f_max"], cfg["step"], cfg["n_durations"],
                          t_max_scaled=cfg["t_max"], phase_policy=cfg["phase_policy"],
                          expected_count=cfg["expected_count"], seed=cfg["seed"])
    out = cfg["output_dir"]
    out.mkdir(parents=True, exist_ok=True)
    if cfg["format"] in ("json", "both"):
        (out / "plan.json").write_text(plan.to_json() + "\n", encoding="utf-8")
    if cfg["format"] in ("text", "both"):
        (out / "plan.txt").write_text(plan.to_text(), encoding="utf-8")
    est = ion.discrete_heating(plan, model, trap)
    write_csv(out / "plan_heating.csv", ["omega0_t", "t_seconds", "n_discrete", "n_continuum"],
              [est.times, est.times_s, est.values, est.continuum])
    rep = {
        "n_frequencies": len(plan),
        "step_hz": plan.step_hz,
        "field_v_per_m": float(plan.amplitudes[0]),
        "kappa_ref": plan.kappa_ref,
        "quadrature_gap": est.quadrature_gap,
        "gap_over_continuum_peak": est.relative_gap,
        "t_max_seconds": float(est.times_s[-1]),
        "pass": est.relative_gap <= 0.03,
    }
    write_json(out / "plan_report.json", rep)
    print(f"{len(plan)} frequencies, gap / peak = {est.relative_gap:.3g}, "
          f"omega0 t = {est.times[-1]:g} is {est.times_s[-1] * 1e6:.4g} us")
    return EXIT_OK


def cmd_selfcheck(cfg) -> int:
    results = selfcheck.run_all(flip_delta=bool(cfg["flip_delta"]))
    rep = selfcheck.report(results)
    write_json(cfg["output_dir"] / "selfcheck.json", rep)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: residual {r.residual:.3g} "
              f"(tol {r.tolerance:.3g}) {r.detail}")
    return EXIT_OK if rep["passed"] else EXIT_SELFCHECK


COMMANDS = {
    "single-drive": cmd_single_drive,
    "compare": cmd_compare,
    "entropy": cmd_entropy,
    "plan-ion": cmd_plan_ion,
    "selfcheck": cmd_selfcheck,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except (UsageError, HighTemperatureError, ion.PlanError, cd.TruncationError) as exc:
        print(f"dhosim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, ensemble.WeakCouplingError, StateError, FloatingPointError) as exc:
        print(f"dhosim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
