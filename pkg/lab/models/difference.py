"""
Continuous-time difference equations x(t) = B x(t - tau) + f
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats

from errors import NumericalError, ValidationError
from models.history import HistorySegment
from models.trajectory import Trajectory

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DifferenceSystem:
    """D0 x_t = f with D0 phi = phi(0) - B phi(-tau)"""

    dim: int
    tau: float
    B: np.ndarray
    f: np.ndarray
    label: str = "difference"

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        f = np.broadcast_to(np.asarray(self.f, dtype=float), (self.dim,)).copy()
        if not np.isfinite(self.tau) or self.tau <= 0:
            raise ValidationError(f"tau must be positive, got {self.tau}")
        if B.shape != (self.dim, self.dim):
            raise ValidationError(f"B must be {self.dim}x{self.dim}, got {B.shape}")
        if not (np.all(np.isfinite(B)) and np.all(np.isfinite(f))):
            raise ValidationError("B and f must be finite")
        B.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "f", f)

    def homogeneous(self) -> "DifferenceSystem":
        return DifferenceSystem(self.dim, self.tau, self.B, np.zeros(self.dim), label=f"{self.label}/homogeneous")


class DecayFit(NamedTuple):
    rate: float
    intercept: float
    constant: float


def _check_history(sys: DifferenceSystem, phi: HistorySegment) -> None:
    if abs(phi.tau - sys.tau) > 1e-12 * sys.tau:
        raise ValidationError(f"history tau={phi.tau} does not match system tau={sys.tau}")
    if phi.dim != sys.dim:
        raise ValidationError(f"history dim={phi.dim} does not match system dim={sys.dim}")


def solve_difference(sys: DifferenceSystem, phi: HistorySegment, steps: int) -> Trajectory:
    """Exact recursion x(t) = B x(t - tau) + f through ``steps`` delay intervals.

    Grid nodes at multiples of tau hold left limits; the jump at each
    breakpoint is recorded separately in ``jumps``.
    """
    _check_history(sys, phi)
    if steps < 1:
        raise ValidationError(f"steps must be at least 1, got {steps}")
    N = phi.n_intervals
    total = (steps + 1) * N + 1
    X = np.empty((total, sys.dim))
    X[:N + 1] = phi.values
    B, f = sys.B, sys.f
    for i in range(N + 1, total):
        X[i] = B @ X[i - N] + f
    if not np.all(np.isfinite(X)):
        raise NumericalError(f"{sys.label}: non-finite state in difference recursion")

    jumps = np.empty((steps + 1, sys.dim))
    jumps[0] = B @ phi.values[0] + f - phi.values[-1]
    for k in range(1, steps + 1):
        jumps[k] = B @ jumps[k - 1]

    offsets = np.arange(total) - N
    times = offsets * phi.step
    breakpoints = (offsets >= 0) & (offsets % N == 0)
    return Trajectory(
        label=sys.label,
        h=phi.step,
        spacing=phi.step,
        times=times,
        states=X,
        tau=sys.tau,
        points_per_delay=N,
        breakpoints=breakpoints,
        jumps=jumps,
    )


def compatibility_defect(sys: DifferenceSystem, phi: HistorySegment) -> float:
    """|B phi(-tau) + f - phi(0)|, zero iff the solution is continuous at t = 0"""
    _check_history(sys, phi)
    return float(np.linalg.norm(sys.B @ phi.values[0] + sys.f - phi.values[-1]))


def project_to_kernel(phi: HistorySegment, B) -> HistorySegment:
    """Ramp correction into the null space of D0, keeping phi(-tau) fixed"""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    defect = phi.values[-1] - B @ phi.values[0]
    ramp = (phi.nodes + phi.tau) / phi.tau
    ramp[0] = 0.0
    ramp[-1] = 1.0
    values = phi.values - ramp[:, None] * defect[None, :]
    values[-1] = B @ phi.values[0]
    return HistorySegment(phi.tau, values)


def interval_maxima(traj: Trajectory, intervals: int) -> np.ndarray:
    """Sup-norm of x over each delay interval ((k-1) tau, k tau], k = 1..intervals"""
    N = traj.points_per_delay
    norms = np.linalg.norm(traj.states, axis=1)
    return np.array([norms[k * N + 1:(k + 1) * N + 1].max() for k in range(1, intervals + 1)])


def fit_decay(sys: DifferenceSystem, phi: HistorySegment, intervals: int) -> DecayFit:
    """Least-squares fit log M_k ~ intercept + slope * k over interval maxima.

    Returns the exponent slope / tau, the intercept, and the constant
    exp(intercept) of the envelope M_k <= C exp(rate * k * tau).
    """
    if intervals < 4:
        raise ValidationError(f"need at least 4 intervals, got {intervals}")
    homogeneous = sys.homogeneous()
    defect = compatibility_defect(homogeneous, phi)
    if defect >= 1e-10:
        raise ValidationError(f"initial history is not in the kernel of D0 (defect {defect:.3e})")
    traj = solve_difference(homogeneous, phi, intervals)
    maxima = interval_maxima(traj, intervals)
    if np.any(maxima == 0.0):
        return DecayFit(float("-inf"), float("-inf"), 0.0)
    k = np.arange(1, intervals + 1, dtype=float)
    fit = stats.linregress(k, np.log(maxima))
    rate = float(fit.slope) / sys.tau
    logger.debug(f"{sys.label}: decay rate {rate:.6g}, intercept {fit.intercept:.6g}")
    return DecayFit(rate, float(fit.intercept), float(np.exp(fit.intercept)))


def measure_decay_rate(sys: DifferenceSystem, phi: HistorySegment, intervals: int) -> float:
    """Empirical decay exponent of the homogeneous semigroup on X_{D0}"""
    return fit_decay(sys, phi, intervals).rate
