"""
Lossless transmission line reduced to travelling waves phi, psi.

With wave speed c = 1/sqrt(LC) and transit delay tau = sqrt(LC),
V = (phi(t - x/c) + psi(t + x/c)) / 2 and I = sqrt(C/L) (phi - psi) / 2.
The boundary conditions turn the wave pair x = (phi, psi~), psi~(s) = psi(s + tau),
into x(t) = B x(t - tau) + f.
"""
from __future__ import annotations

import logging
import math
from enum import Enum
from typing import Callable, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from errors import RangeError, ValidationError
from models.difference import DifferenceSystem, compatibility_defect, solve_difference
from models.history import HistorySegment
from models.ndde import NddeSystem
from models.trajectory import Trajectory

logger = logging.getLogger(__name__)

Profile = Callable[[float], float]


class BoundaryKind(str, Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


class TelegraphLine(BaseModel):
    """Line constants and the x = 0 source termination"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    L: float = Field(gt=0)
    C: float = Field(gt=0)
    R0: float = Field(default=0.0, ge=0)
    E: float = 0.0
    boundary: BoundaryKind = BoundaryKind.STATIC

    @property
    def c(self) -> float:
        return 1.0 / math.sqrt(self.L * self.C)

    @property
    def tau(self) -> float:
        return math.sqrt(self.L * self.C)

    @property
    def impedance(self) -> float:
        return math.sqrt(self.L / self.C)

    @property
    def r(self) -> float:
        return self.R0 * math.sqrt(self.C / self.L)


class CrossValidationReport(BaseModel):
    max_residual: float
    boundary_residual: float
    characteristic_residual: float
    compatibility_defect: float
    compatible: bool
    jump: float
    steady_state_residual: Optional[float] = None


def wave_matrix(line: TelegraphLine) -> Tuple[np.ndarray, np.ndarray]:
    """B and f of the wave pair (phi, psi~) for the source termination"""
    r = line.r
    B = np.array([[0.0, -(1.0 - r) / (1.0 + r)], [1.0, 0.0]])
    f = np.array([2.0 * line.E / (1.0 + r), 0.0])
    return B, f


def decompose(V0: Profile, I0: Profile, line: TelegraphLine, N: int) -> Tuple[HistorySegment, HistorySegment]:
    """Initial waves on [-tau, 0] from the line state at t = 0"""
    z, c = line.impedance, line.c

    def phi(theta: float) -> float:
        x = min(max(-c * theta, 0.0), 1.0)
        return V0(x) + z * I0(x)

    def psi_tilde(theta: float) -> float:
        x = min(max(c * theta + 1.0, 0.0), 1.0)
        return V0(x) - z * I0(x)

    return (
        HistorySegment.from_function(phi, line.tau, N, 1),
        HistorySegment.from_function(psi_tilde, line.tau, N, 1),
    )


def stack_waves(phi: HistorySegment, psi_tilde: HistorySegment) -> HistorySegment:
    return HistorySegment(phi.tau, np.hstack([phi.values, psi_tilde.values]))


def split_waves(traj: Trajectory) -> Tuple[Trajectory, Trajectory]:
    """Separate a two-component wave trajectory into phi and psi~ trajectories"""
    parts = []
    for k, name in enumerate(("phi", "psi_tilde")):
        parts.append(Trajectory(
            label=f"{traj.label}/{name}",
            h=traj.h,
            spacing=traj.spacing,
            times=traj.times.copy(),
            states=traj.states[:, k:k + 1].copy(),
            tau=traj.tau,
            points_per_delay=traj.points_per_delay,
            breakpoints=None if traj.breakpoints is None else traj.breakpoints.copy(),
        ))
    return parts[0], parts[1]


def boundary_to_difference(line: TelegraphLine) -> DifferenceSystem:
    """Static source termination as a continuous-time difference equation"""
    if line.boundary is not BoundaryKind.STATIC:
        raise ValidationError("boundary_to_difference needs a static boundary")
    B, f = wave_matrix(line)
    return DifferenceSystem(dim=2, tau=line.tau, B=B, f=f, label="telegraph")


def boundary_to_ndde(line: TelegraphLine) -> NddeSystem:
    """Dynamic termination: d/dt D0 x_t = f"""
    if line.boundary is not BoundaryKind.DYNAMIC:
        raise ValidationError("boundary_to_ndde needs a dynamic boundary")
    B, f = wave_matrix(line)
    f.setflags(write=False)

    def g(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return f.copy()

    return NddeSystem(dim=2, tau=line.tau, B=B, g=g, label="telegraph_dynamic")


def with_integration_constant(waves: HistorySegment, line: TelegraphLine, value) -> HistorySegment:
    """Shift the wave history by a ramp so that D0 x_0 equals ``value``.

    The dynamic termination fixes D0 x_t only up to this constant.
    """
    B, _ = wave_matrix(line)
    target = np.broadcast_to(np.asarray(value, dtype=float), (2,))
    defect = waves.values[-1] - B @ waves.values[0] - target
    ramp = (waves.nodes + waves.tau) / waves.tau
    ramp[0], ramp[-1] = 0.0, 1.0
    values = waves.values - ramp[:, None] * defect[None, :]
    return HistorySegment(waves.tau, values)


def reconstruct(
    phi_traj: Trajectory,
    psi_traj: Trajectory,
    line: TelegraphLine,
    x: float,
    t: float,
) -> Tuple[float, float]:
    """Voltage and current at (x, t) from the wave trajectories"""
    if not -1e-12 <= x <= 1.0 + 1e-12:
        raise RangeError(f"position x={x} outside [0, 1]")
    forward = float(phi_traj.state_at(t - x / line.c)[0])
    backward = float(psi_traj.state_at(t + x / line.c - line.tau)[0])
    V = 0.5 * (forward + backward)
    I = 0.5 * math.sqrt(line.C / line.L) * (forward - backward)
    return V, I


def field_frame(
    phi_traj: Trajectory,
    psi_traj: Trajectory,
    line: TelegraphLine,
    nx: int,
    times: np.ndarray,
) -> pd.DataFrame:
    """Field CSV layout: t, x, V, I"""
    xs = np.linspace(0.0, 1.0, nx + 1)
    rows = []
    for t in times:
        for x in xs:
            V, I = reconstruct(phi_traj, psi_traj, line, float(x), float(t))
            rows.append((float(t), float(x), V, I))
    return pd.DataFrame(rows, columns=["t", "x", "V", "I"])


def steady_state_residual(phi_traj: Trajectory, psi_traj: Trajectory, line: TelegraphLine, start: float, nx: int = 8) -> float:
    """max |V - E| + |I| over grid times beyond ``start``"""
    xs = np.linspace(0.0, 1.0, nx + 1)
    worst = 0.0
    for t in phi_traj.times[phi_traj.times > start]:
        for x in xs:
            V, I = reconstruct(phi_traj, psi_traj, line, float(x), float(t))
            worst = max(worst, abs(V - line.E) + abs(I))
    return worst


def cross_validate(
    V0: Profile,
    I0: Profile,
    line: TelegraphLine,
    T: float,
    h: float,
    tol: float = 1e-10,
) -> CrossValidationReport:
    """Evolve the waves and check boundary conditions and characteristic transport"""
    N = max(2, int(round(line.tau / h)))
    phi, psi = decompose(V0, I0, line, N)
    waves = stack_waves(phi, psi)
    sys = boundary_to_difference(line)
    defect = compatibility_defect(sys, waves)
    compatible = defect <= tol
    if not compatible:
        logger.warning(f"telegraph data incompatible at t=0: defect {defect:.3e}")

    steps = max(1, int(math.ceil(T / line.tau - 1e-9)))
    traj = solve_difference(sys, waves, steps)
    phi_traj, psi_traj = split_waves(traj)
    jump = float(np.linalg.norm(traj.jumps[0]))

    step = phi.step
    times = traj.times[(traj.times > 0) & (traj.times <= T + 1e-12)]

    boundary = 0.0
    for t in times:
        V, I = reconstruct(phi_traj, psi_traj, line, 0.0, float(t))
        boundary = max(boundary, abs(V + line.R0 * I - line.E))
        _, I_end = reconstruct(phi_traj, psi_traj, line, 1.0, float(t))
        boundary = max(boundary, abs(I_end))

    # Riemann invariants V +- zI are transported along x -+ ct = const
    z = line.impedance
    dx = line.c * step
    nx = max(1, int(math.floor(1.0 / dx + 1e-9)))
    characteristic = 0.0
    for t in times[times + step <= traj.horizon]:
        for i in range(nx):
            x0, x1 = i * dx, (i + 1) * dx
            V_a, I_a = reconstruct(phi_traj, psi_traj, line, x0, float(t))
            V_b, I_b = reconstruct(phi_traj, psi_traj, line, x1, float(t) + step)
            characteristic = max(characteristic, abs((V_a + z * I_a) - (V_b + z * I_b)))
            V_c, I_c = reconstruct(phi_traj, psi_traj, line, x1, float(t))
            V_d, I_d = reconstruct(phi_traj, psi_traj, line, x0, float(t) + step)
            characteristic = max(characteristic, abs((V_c - z * I_c) - (V_d - z * I_d)))

    settled = None
    if abs(line.r - 1.0) <= 1e-12 and T > 2.0 * line.tau:
        settled = steady_state_residual(phi_traj, psi_traj, line, 2.0 * line.tau)

    report = CrossValidationReport(
        max_residual=max(boundary, characteristic),
        boundary_residual=boundary,
        characteristic_residual=characteristic,
        compatibility_defect=defect,
        compatible=compatible,
        jump=jump,
        steady_state_residual=settled,
    )
    logger.info(f"telegraph cross-validation: max residual {report.max_residual:.3e}")
    return report
