import math

import numpy as np
import pytest

from dhosim import ion
from dhosim.closed_drive import DriveSpec, heating_single

# Field for a coupling of 0.045 with 9Be+ at 11 MHz, evaluated by hand from
# CODATA 2022: 0.045 * sqrt(2 m hbar omega0^3) / e.
CODATA_U = 1.66053906892e-27
CODATA_HBAR = 1.054571817e-34
CODATA_E = 1.602176634e-19
FIELD_FOR_0P045 = 0.28671707307824


@pytest.fixture(scope="module")
def be():
    return ion.IonParams.beryllium9(11e6)


def test_params_validation():
    with pytest.raises(ValueError):
        ion.IonParams(0.0, 1e-26, 1e-19)


def test_field_regression(be):
    hand = 0.045 * math.sqrt(2 * 9.012182 * CODATA_U * CODATA_HBAR * (2 * math.pi * 11e6) ** 3) / CODATA_E
    assert hand == pytest.approx(FIELD_FOR_0P045, rel=1e-9)
    assert ion.field_for_coupling(0.045, be) == pytest.approx(FIELD_FOR_0P045, rel=1e-9)


def test_coupling_linear_in_field(be):
    assert ion.coupling_from_field(0.0, be) == 0
    g1 = ion.coupling_from_field(0.3, be)
    assert ion.coupling_from_field(0.6, be) == pytest.approx(2 * g1)
    assert ion.field_for_coupling(g1, be) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        ion.coupling_from_field(-1.0, be)


@pytest.mark.parametrize("f_min, f_max, step, expected", [
    (0.0, 12.3e6, 55e3, 225),
    (0.0, 12.3e6, 110e3, 113),
    (0.0, 1.0, 1.0, 2),
    (0.0, 1.0, 0.25, 5),
])
def test_frequency_count(f_min, f_max, step, expected):
    assert ion.frequency_count(f_min, f_max, step) == expected
    grid = ion.frequency_grid(f_min, f_max, step)
    assert len(grid) == expected and grid[0] == f_min and grid[-1] == f_max


def test_frequency_count_random_triples():
    rng = np.random.default_rng(10)
    for _ in range(10):
        f_min = rng.uniform(0, 1e6)
        f_max = f_min + rng.uniform(1e5, 2e7)
        step = rng.uniform(1e3, 1e5)
        n = ion.frequency_count(f_min, f_max, step)
        # every grid spacing except the last equals the step; the last is in (0, step]
        grid = ion.frequency_grid(f_min, f_max, step)
        assert len(grid) == n
        np.testing.assert_allclose(np.diff(grid)[:-1], step, rtol=1e-9)
        assert 0 < grid[-1] - grid[-2] <= step * (1 + 1e-9)


def test_midpoint_widths_cover_band():
    f = ion.frequency_grid(0.0, 12.3e6, 55e3)
    w = ion.midpoint_widths(f)
    assert w.sum() == pytest.approx(12.3e6)
    assert w[0] == pytest.approx(27.5e3)


def test_build_plan_defaults(narrow_bath, be):
    plan = ion.build_plan(narrow_bath, be)
    assert len(plan) == 225
    assert plan.durations.shape == (225, 600)
    assert plan.durations[0, -1] == pytest.approx(30.0 / be.omega0)
    np.testing.assert_allclose(plan.rescale, 1.0)
    assert ion.coupling_from_field(plan.amplitudes[0], be) == pytest.approx(narrow_bath.drive_coupling)
    assert plan.phase_policy == "random-per-shot"


def test_build_plan_errors(narrow_bath, be):
    with pytest.raises(ion.PlanError, match="expected"):
        ion.build_plan(narrow_bath, be, expected_count=224)
    with pytest.raises(ion.PlanError):
        ion.build_plan(narrow_bath, be, f_min=1e6, f_max=1e6)
    with pytest.raises(ion.PlanError):
        ion.build_plan(narrow_bath, be, step=0.0)
    with pytest.raises(ion.PlanError):
        ion.build_plan(narrow_bath, be, amplitudes=[1.0, 2.0])


def test_single_frequency_recovers_constant_field(narrow_bath, be):
    plan = ion.build_plan(narrow_bath, be, f_min=0.0, f_max=1.0, step=1.0, n_durations=50)
    measured = ion.set_heating(plan, be)
    kappa = ion.coupling_from_field(plan.amplitudes[0], be)
    tau = be.scaled_time(plan.durations[0])
    # the random-per-shot policy averages cos^2 of the switch-on phase to 1/2
    np.testing.assert_allclose(measured[0], kappa**2 * (1 - np.cos(tau)), rtol=1e-10)
    fixed = ion.build_plan(narrow_bath, be, f_min=0.0, f_max=1.0, step=1.0, n_durations=50,
                           phase_policy="fixed")
    np.testing.assert_allclose(ion.set_heating(fixed, be)[0], 2 * measured[0], rtol=1e-10)


def test_fixed_policy_uses_phase_zero(narrow_bath, be):
    plan = ion.build_plan(narrow_bath, be, n_durations=20, phase_policy="fixed")
    measured = ion.set_heating(plan, be)
    j = 37
    kappa = float(ion.coupling_from_field(plan.amplitudes[j], be))
    x = plan.frequencies_hz[j] / be.trap_frequency_hz
    ref = heating_single(be.scaled_time(plan.durations[j]), DriveSpec.from_kappa(kappa, x, 0.0))
    np.testing.assert_allclose(measured[j], ref, rtol=1e-9)


def test_gap_shrinks_with_refinement(narrow_bath, be):
    gaps = []
    for step in (110e3, 55e3, 27.5e3):
        plan = ion.build_plan(narrow_bath, be, step=step, n_durations=300)
        gaps.append(ion.discrete_heating(plan, narrow_bath, be).quadrature_gap)
    assert gaps[0] > gaps[1] > gaps[2]


def test_unit_round_trip(narrow_bath, be):
    plan = ion.build_plan(narrow_bath, be, n_durations=40)
    est = ion.discrete_heating(plan, narrow_bath, be)
    np.testing.assert_allclose(be.seconds(be.scaled_time(est.times_s)), est.times_s, rtol=1e-15)
    np.testing.assert_allclose(est.times, be.scaled_time(est.times_s), rtol=1e-15)
    np.testing.assert_allclose(est.times[-1], 30.0, rtol=1e-12)


def test_plan_time_scale(be):
    assert be.seconds(30.0) == pytest.approx(0.434e-6, rel=1e-3)


@pytest.fixture
def odd_plan(narrow_bath, be):
    rng = np.random.default_rng(2)
    return ion.build_plan(narrow_bath, be, step=1.1e6, n_durations=7, seed=99,
                          amplitudes=rng.uniform(0.1, 2.0, 13), ambient_heating_rate=12.5)


def test_json_round_trip(odd_plan):
    back = ion.ExperimentPlan.from_json(odd_plan.to_json())
    for name in ("frequencies_hz", "durations", "amplitudes", "rescale"):
        np.testing.assert_array_equal(getattr(back, name), getattr(odd_plan, name))
    assert back.seed == 99 and back.ambient_heating_rate == 12.5
    assert list(odd_plan.to_dict())[:3] == ["format", "trap_frequency_hz", "step_hz"]


def test_text_round_trip(odd_plan):
    text = odd_plan.to_text()
    assert text.splitlines()[0] == "# dhosim-plan-v1"
    back = ion.ExperimentPlan.from_text(text)
    for name in ("frequencies_hz", "durations", "amplitudes", "rescale"):
        np.testing.assert_array_equal(getattr(back, name), getattr(odd_plan, name))
    assert back.to_text() == text


def test_text_rejects_bad_header():
    with pytest.raises(ion.PlanError):
        ion.ExperimentPlan.from_text("not a plan\n")


def test_plan_invariants():
    with pytest.raises(ion.PlanError):
        ion.ExperimentPlan([2.0, 1.0], 1.0, [[1e-9], [1e-9]], [1, 1], [1, 1], 0.1, 1e6)
    with pytest.raises(ion.PlanError):
        ion.ExperimentPlan([1.0], 1.0, [[2e-9, 1e-9]], [1], [1], 0.1, 1e6)
    with pytest.raises(ion.PlanError):
        ion.ExperimentPlan([1.0], 1.0, [[1e-9]], [1], [1], 0.1, 1e6, phase_policy="chaotic")
