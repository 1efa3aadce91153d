#!/usr/bin/env python3
"""
Tests for time averages, empirical measures and attractor distances
"""
import math
import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

# Add the lab directory to Python path
sys.path.insert(0, str(Path(__file__).parent))

from config.run_config import HistoryConfig, ObservableConfig
from errors import NumericalError, ValidationError
from models.history import HistorySegment
from models.ndde import NddeSystem, integrate, linear_ndde, semigroup
from models.system_manager import system_manager
from services.certify import contraction_constants
from services.measure import (
    Observable,
    attractor_distance,
    cesaro_limit,
    constant_observable,
    default_burn_in,
    default_suite,
    empirical_measure,
    ensemble_average,
    expect,
    hausdorff_semidistance,
    invariance_defect,
    point_square,
    point_value,
    running_average,
    snapshot_measure,
    snapshots_frame,
    time_average,
    trajectory_rng,
)


def relaxation_system():
    """x' = -(x - 2) without delay coupling"""
    return NddeSystem(dim=1, tau=1.0, B=[[0.0]], g=lambda u, v: -(u - 2.0), label="relaxation")


def contracting_system():
    """d/dt (x - 0.5 x(t - 1)) = -2x + 1 with equilibrium 0.5"""
    return linear_ndde([[0.5]], 2.0, 1.0)


def test_constant_observable_average():
    traj = integrate(relaxation_system(), HistorySegment.constant(0.0, 1.0, 8), T=5.0, h=0.05)
    assert time_average(traj, constant_observable(3.0)) == pytest.approx(3.0, rel=1e-12)
    series = running_average(traj, constant_observable(3.0))
    assert np.allclose(series["average"], 3.0, rtol=1e-12)


def test_relaxation_average_matches_closed_form():
    traj = integrate(relaxation_system(), HistorySegment.constant(0.0, 1.0, 8), T=20.0, h=0.01)
    expected = 2.0 - 2.0 * (1.0 - math.exp(-20.0)) / 20.0
    assert time_average(traj, point_value(0.0), burn_in=0.0) == pytest.approx(expected, abs=1e-4)


def test_contracting_average_approaches_equilibrium():
    traj = integrate(contracting_system(), HistorySegment.constant(0.0, 1.0, 8), T=200.0, h=0.05)
    average = time_average(traj, point_value(0.0))
    assert abs(average - 0.5) <= 1e-3
    assert average == pytest.approx(0.5 - 0.125 / 200.0, abs=1e-5)


def test_running_average_ends_at_time_average():
    traj = integrate(relaxation_system(), HistorySegment.constant(0.0, 1.0, 8), T=20.0, h=0.05)
    obs = point_value(0.0)
    series = running_average(traj, obs)
    assert list(series.columns) == ["T", "average"]
    assert series["average"].iloc[-1] == pytest.approx(time_average(traj, obs), rel=1e-12)

    def gap(T):
        at = series["average"].to_numpy()
        times = series["T"].to_numpy()
        return abs(np.interp(T, times, at) - np.interp(2.0 * T, times, at))

    assert gap(8.0) < gap(4.0) < gap(2.0)


def test_burn_in_must_leave_room():
    traj = integrate(relaxation_system(), HistorySegment.constant(0.0, 1.0, 8), T=5.0, h=0.05)
    with pytest.raises(ValidationError):
        time_average(traj, point_value(0.0), burn_in=5.0)


def test_cesaro_limit_verdicts():
    T = np.linspace(1.0, 100.0, 500)
    steady = cesaro_limit(pd.DataFrame({"T": T, "average": 1.0 + 1e-9 / T}))
    assert steady.converged
    assert steady.status == "converged"

    wobbly = cesaro_limit(pd.DataFrame({"T": T, "average": np.sin(T)}))
    assert not wobbly.converged
    assert wobbly.status.startswith("nonconvergent")
    assert wobbly.value == pytest.approx(math.sin(100.0))


def test_non_finite_observable_is_reported():
    traj = integrate(relaxation_system(), HistorySegment.constant(0.0, 1.0, 8), T=2.0, h=0.05)
    bad = Observable("bad", lambda seg: math.inf)
    with pytest.raises(NumericalError):
        time_average(traj, bad)


def test_default_burn_in():
    phi = HistorySegment.constant(0.0, 1.0, 8)
    assert default_burn_in(contracting_system(), phi) == 29.0
    assert default_burn_in(relaxation_system(), phi) == 20.0

    # c = exp(-5), c0 = 1 and r = sqrt(2 (1 - exp(-10))): one delay step reaches the ball
    cert = contraction_constants(1.0, 0.0, 1.0, 0.0, 10.0)
    assert cert.satisfied
    unit = HistorySegment.constant(1.0, 1.0, 8)
    assert default_burn_in(contracting_system(), unit, cert) == 10.0
    assert default_burn_in(contracting_system(), phi, cert) == 0.0


def test_single_snapshot_measure():
    mu = empirical_measure(contracting_system(), HistorySegment.constant(0.0, 1.0, 8), T=10.0, h=0.05,
                           burn_in=5.0, stride=5.0)
    assert len(mu.snapshots) == 1
    assert mu.weights.tolist() == [1.0]
    assert expect(mu, point_value(0.0)) == mu.snapshots[0].eval(0.0)[0]


def test_equilibrium_snapshots_and_mean():
    sys_ = contracting_system()
    phi = HistorySegment.constant(0.5, 1.0, 8)
    mu = empirical_measure(sys_, phi, T=12.0, h=0.05, burn_in=2.0, stride=1.0)
    assert len(mu.snapshots) == 10
    for seg in mu.snapshots:
        assert np.allclose(seg.values, 0.5, atol=1e-14)

    obs = point_square(-0.5)
    values = [obs(seg) for seg in mu.snapshots]
    assert expect(mu, obs) == pytest.approx(np.mean(values), rel=1e-14)

    report = invariance_defect(mu, sys_, 1.0, 0.05, default_suite(1.0))
    assert report.max <= 1e-12

    assert attractor_distance(mu, [HistorySegment.constant(0.5, 1.0, 8)]) <= 1e-14
    assert attractor_distance(mu, [HistorySegment.constant(1.5, 1.0, 8)]) == pytest.approx(1.0)


def test_stride_beyond_horizon():
    with pytest.raises(ValidationError):
        empirical_measure(contracting_system(), HistorySegment.constant(0.0, 1.0, 8), T=10.0, h=0.05,
                          burn_in=9.0, stride=2.0)


def test_burn_in_reduces_invariance_defect():
    sys_ = contracting_system()
    phi = HistorySegment.constant(0.0, 1.0, 8)
    suite = [point_value(0.0), point_square(0.0), point_value(-1.0)]
    traj = integrate(sys_, phi, T=60.0, h=0.05)

    burned = snapshot_measure(traj, default_burn_in(sys_, phi), 1.0)
    early = snapshot_measure(traj, 0.0, 1.0, T=20.0)
    settled = invariance_defect(burned, sys_, 1.0, 0.05, suite)
    transient = invariance_defect(early, sys_, 1.0, 0.05, suite)
    assert settled.max <= 1e-3
    assert transient.max > settled.max


def test_snapshot_frame_layout():
    traj = integrate(contracting_system(), HistorySegment.constant(0.0, 1.0, 8), T=4.0, h=0.25)
    mu = snapshot_measure(traj, 1.0, 1.0)
    frame = snapshots_frame(mu)
    assert list(frame.columns) == ["snapshot", "t", "theta", "x1"]
    assert len(frame) == len(mu.snapshots) * (traj.points_per_delay + 1)


def test_trajectory_streams_are_independent_and_reproducible():
    a = trajectory_rng(42, 0).random(4)
    b = trajectory_rng(42, 1).random(4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, trajectory_rng(42, 0).random(4))


def test_point_mass_ensemble_equals_time_average():
    sys_ = contracting_system()
    phi = HistorySegment.constant(1.0, 1.0, 8)
    obs = point_value(0.0)
    direct = time_average(integrate(sys_, phi, T=20.0, h=0.05), obs, burn_in=5.0)
    result = ensemble_average(sys_, lambda rng: phi, 3, 20.0, 0.05, obs, 5.0, seed=7)
    assert result.mean == pytest.approx(direct, rel=1e-12)
    assert result.stderr == pytest.approx(0.0, abs=1e-15)
    assert result.n_traj == 3


def test_ensemble_is_deterministic_across_threads():
    sys_ = contracting_system()

    def sampler(rng):
        return system_manager.random_history(rng, 1, 1.0, 16)

    obs = point_square(0.0)
    one = ensemble_average(sys_, sampler, 4, 15.0, 0.05, obs, 5.0, seed=3, threads=1)
    two = ensemble_average(sys_, sampler, 4, 15.0, 0.05, obs, 5.0, seed=3, threads=2)
    assert one == two


def test_two_samplers_agree_for_contracting_system():
    sys_ = contracting_system()
    obs = point_value(0.0)

    def near(rng):
        return system_manager.random_history(rng, 1, 1.0, 16, amplitude=0.5)

    def far(rng):
        return system_manager.random_history(rng, 1, 1.0, 16, amplitude=3.0, center=2.0)

    a = ensemble_average(sys_, near, 5, 60.0, 0.05, obs, 29.0, seed=1)
    b = ensemble_average(sys_, far, 5, 60.0, 0.05, obs, 29.0, seed=2)
    assert abs(a.mean - b.mean) <= 3.0 * (a.stderr + b.stderr) + 1e-6


def test_ensemble_needs_members():
    with pytest.raises(ValidationError):
        ensemble_average(contracting_system(), lambda rng: None, 0, 1.0, 0.05, point_value(0.0), 0.0, seed=0)


def test_hausdorff_semidistance():
    zero = HistorySegment.constant(0.0, 1.0, 4)
    one = HistorySegment.constant(1.0, 1.0, 4)
    two = HistorySegment.constant(2.0, 1.0, 4)
    assert hausdorff_semidistance([zero], [zero, one]) == 0.0
    assert hausdorff_semidistance([two], [zero]) == 2.0
    assert hausdorff_semidistance([zero, two], [zero]) == 2.0
    assert hausdorff_semidistance([zero], [zero, two]) == 0.0


def test_hausdorff_uses_sup_norm_over_theta():
    ramp = HistorySegment.from_function(lambda th: -th, 1.0, 4, 1)
    fine_zero = HistorySegment.constant(0.0, 1.0, 8)
    assert hausdorff_semidistance([ramp], [fine_zero]) == 1.0
    with pytest.raises(ValidationError):
        hausdorff_semidistance([ramp], [HistorySegment.constant(0.0, 2.0, 4)])


def test_chained_half_advances_match_full_advance():
    sys_ = contracting_system()
    traj = integrate(sys_, HistorySegment.constant(0.0, 1.0, 8), T=40.0, h=0.05)
    mu = snapshot_measure(traj, default_burn_in(sys_, HistorySegment.constant(0.0, 1.0, 8)), 1.0)
    for seg in mu.snapshots:
        full = semigroup(sys_, seg, 1.0, 0.05)
        chained = semigroup(sys_, semigroup(sys_, seg, 0.5, 0.05), 0.5, 0.05)
        assert np.allclose(chained.values, full.values, rtol=0.0, atol=1e-12)


def test_invariance_defect_over_default_suite():
    sys_ = contracting_system()
    phi = HistorySegment.constant(0.0, 1.0, 8)
    mu = empirical_measure(sys_, phi, T=60.0, h=0.05)
    suite = default_suite(sys_.tau)
    assert "|x_t|" in [obs.label for obs in suite]
    report = invariance_defect(mu, sys_, sys_.tau, 0.05, suite)
    assert set(report.defects) == {obs.label for obs in suite}
    assert report.max <= 1e-3


def test_cesaro_limit_agrees_with_time_average():
    sys_ = contracting_system()
    phi = HistorySegment.constant(0.0, 1.0, 8)
    traj = integrate(sys_, phi, T=80.0, h=0.05)
    burn_in = default_burn_in(sys_, phi)
    for obs in default_suite(sys_.tau):
        limit = cesaro_limit(running_average(traj, obs, burn_in))
        assert limit.converged, obs.label
        assert abs(limit.value - time_average(traj, obs, burn_in)) <= 1e-6


def test_history_builder_checks_dimension():
    sys_ = NddeSystem(dim=2, tau=1.0, B=np.zeros((2, 2)), g=lambda u, v: -u)
    assert system_manager.build_history(HistoryConfig(value=[1.0]), sys_).values.shape[1] == 2
    with pytest.raises(ValidationError, match="history.value"):
        system_manager.build_history(HistoryConfig(value=[1.0, 2.0, 3.0]), sys_)
    with pytest.raises(ValidationError, match="history.slope"):
        system_manager.build_history(HistoryConfig(kind="linear", value=[0.0], slope=[1.0, 2.0, 3.0]), sys_)
    with pytest.raises(ValidationError, match="history.values"):
        system_manager.build_history(HistoryConfig(kind="values", values=[[0.0], [1.0], [2.0]]), sys_)


def test_observable_builder_checks_component():
    seg = HistorySegment.constant([1.0, 2.0], 1.0, 4)
    assert system_manager.build_observable(ObservableConfig(component=1), 1.0, 2)(seg) == 2.0
    with pytest.raises(ValidationError, match="component"):
        system_manager.build_observable(ObservableConfig(kind="square", component=2), 1.0, 2)
    sup = system_manager.build_observable(ObservableConfig(kind="sup_norm", component=5), 1.0, 2)
    assert sup(seg) == pytest.approx(math.sqrt(5.0))
