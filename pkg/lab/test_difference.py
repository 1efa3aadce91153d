#!/usr/bin/env python3
"""
Tests for continuous-time difference equations and their decay rates
"""
import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import ortho_group

# Add the lab directory to Python path
sys.path.insert(0, str(Path(__file__).parent))

from errors import ValidationError
from models.difference import (
    DifferenceSystem,
    compatibility_defect,
    fit_decay,
    measure_decay_rate,
    project_to_kernel,
    solve_difference,
)
from models.history import HistorySegment


def random_history(dim, tau=1.0, N=16, seed=0):
    rng = np.random.default_rng(seed)
    return HistorySegment(tau, rng.uniform(-1.0, 1.0, size=(N + 1, dim)))


def test_recursion_is_exact():
    sys_ = DifferenceSystem(dim=2, tau=1.0, B=[[0.2, -0.3], [0.7, 0.1]], f=[1.0, -0.5])
    phi = random_history(2)
    traj = solve_difference(sys_, phi, steps=5)
    N = phi.n_intervals
    X = traj.states
    for i in range(N + 1, len(X)):
        assert np.array_equal(X[i], sys_.B @ X[i - N] + sys_.f)


def test_nilpotent_matrix_settles_in_two_delays():
    E = 2.5
    sys_ = DifferenceSystem(dim=2, tau=1.0, B=[[0.0, 0.0], [1.0, 0.0]], f=[E, 0.0])
    traj = solve_difference(sys_, random_history(2, seed=3), steps=4)
    late = traj.times > 1.0 + 1e-12
    assert np.all(traj.states[late] == E)


def test_fixed_point_history_stays_constant():
    B = np.array([[0.0, 0.4], [0.9, 0.0]])
    f = np.array([1.0, 2.0])
    fixed = np.linalg.solve(np.eye(2) - B, f)
    sys_ = DifferenceSystem(dim=2, tau=1.0, B=B, f=f)
    phi = HistorySegment.constant(fixed, 1.0, 8)
    traj = solve_difference(sys_, phi, steps=6)
    assert np.allclose(traj.states, fixed, atol=1e-14)
    assert compatibility_defect(sys_, phi) <= 1e-14


def test_compatibility_defect_and_jumps():
    sys_ = DifferenceSystem(dim=2, tau=1.0, B=np.zeros((2, 2)), f=[1.0, 0.0])
    phi = HistorySegment.constant([0.0, 0.0], 1.0, 4)
    assert compatibility_defect(sys_, phi) == 1.0

    sys_ = DifferenceSystem(dim=2, tau=1.0, B=[[0.5, 0.0], [0.0, -0.5]], f=[0.0, 0.0])
    phi = random_history(2, seed=5)
    traj = solve_difference(sys_, phi, steps=3)
    assert np.linalg.norm(traj.jumps[0]) == pytest.approx(compatibility_defect(sys_, phi))
    assert np.allclose(traj.jumps[1], sys_.B @ traj.jumps[0])


def test_breakpoint_nodes_hold_left_limits():
    sys_ = DifferenceSystem(dim=1, tau=1.0, B=[[0.5]], f=[0.0])
    phi = HistorySegment.from_function(lambda th: 1.0 + th, 1.0, 4, 1)
    traj = solve_difference(sys_, phi, steps=2)
    assert traj.state_at(0.0)[0] == 1.0
    assert traj.state_at(1.0)[0] == 0.5
    assert np.allclose(traj.times[traj.breakpoints], [0.0, 1.0, 2.0])


def test_project_to_kernel():
    B = np.array([[0.3, 0.1], [0.0, 0.6]])
    phi = random_history(2, seed=7)
    projected = project_to_kernel(phi, B)
    homogeneous = DifferenceSystem(dim=2, tau=1.0, B=B, f=[0.0, 0.0])
    assert compatibility_defect(homogeneous, projected) == 0.0
    assert np.array_equal(projected.values[0], phi.values[0])
    assert np.allclose(project_to_kernel(projected, B).values, projected.values, atol=1e-15)

    flat = project_to_kernel(HistorySegment.constant(2.0, 1.0, 4), np.zeros((1, 1)))
    assert flat.values[-1, 0] == 0.0
    assert flat.values[0, 0] == 2.0


def test_scalar_decay_rate():
    sys_ = DifferenceSystem(dim=1, tau=1.0, B=[[0.5]], f=[0.0])
    phi = project_to_kernel(random_history(1, seed=11), sys_.B)
    assert measure_decay_rate(sys_, phi, 20) == pytest.approx(math.log(0.5), abs=0.05)


def test_zero_matrix_decays_to_minus_infinity():
    sys_ = DifferenceSystem(dim=2, tau=1.0, B=np.zeros((2, 2)), f=[0.0, 0.0])
    phi = project_to_kernel(random_history(2), sys_.B)
    assert measure_decay_rate(sys_, phi, 8) == float("-inf")


def test_off_diagonal_decay_rate():
    B = np.array([[0.0, 0.4], [0.9, 0.0]])
    sys_ = DifferenceSystem(dim=2, tau=2.0, B=B, f=[0.0, 0.0])
    phi = project_to_kernel(random_history(2, tau=2.0, seed=13), B)
    assert measure_decay_rate(sys_, phi, 24) <= math.log(0.6) / 2.0 + 0.05


def test_decay_follows_spectral_radius_in_higher_dimension():
    rho = 0.7
    Q = ortho_group.rvs(4, random_state=17)
    B = rho * Q
    sys_ = DifferenceSystem(dim=4, tau=1.0, B=B, f=np.zeros(4))
    phi = project_to_kernel(random_history(4, seed=19), B)
    fit = fit_decay(sys_, phi, 16)
    assert fit.rate == pytest.approx(math.log(rho), abs=0.05)
    assert fit.constant > 0


def test_decay_needs_kernel_history():
    sys_ = DifferenceSystem(dim=1, tau=1.0, B=[[0.5]], f=[0.0])
    with pytest.raises(ValidationError):
        measure_decay_rate(sys_, HistorySegment.constant(1.0, 1.0, 4), 8)
    with pytest.raises(ValidationError):
        measure_decay_rate(sys_, HistorySegment.constant(0.0, 1.0, 4), 2)


def test_scalar_jump_at_each_breakpoint():
    sys_ = DifferenceSystem(dim=1, tau=1.0, B=[[0.5]], f=[0.3])
    phi = HistorySegment.from_function(lambda th: 1.0 + th, 1.0, 8, 1)
    traj = solve_difference(sys_, phi, steps=5)
    assert compatibility_defect(sys_, phi) == pytest.approx(0.7)
    d = -0.7
    N = phi.n_intervals
    for k in range(5):
        i = (k + 1) * N
        # the solution is affine on each interval, so extrapolate the right limit
        right = 2.0 * traj.states[i + 1, 0] - traj.states[i + 2, 0]
        assert right - traj.states[i, 0] == pytest.approx(0.5 ** k * d, abs=1e-12)
        assert traj.jumps[k, 0] == pytest.approx(0.5 ** k * d, abs=1e-15)


def test_decay_rate_bound_over_seeded_matrices():
    rng = np.random.default_rng(23)
    for b in range(10):
        rho = rng.uniform(0.1, 0.9)
        eigenvalues = rng.uniform(-rho, rho, size=3)
        eigenvalues[0] = rho * rng.choice([-1.0, 1.0])
        Q = ortho_group.rvs(3, random_state=100 + b)
        B = Q @ np.diag(eigenvalues) @ Q.T
        sys_ = DifferenceSystem(dim=3, tau=1.5, B=B, f=np.zeros(3))
        for seed in range(10):
            phi = project_to_kernel(random_history(3, tau=1.5, seed=seed), B)
            assert measure_decay_rate(sys_, phi, 20) <= math.log(rho) / 1.5 + 0.05, (b, seed)
