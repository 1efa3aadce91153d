"""
Mode-truncated Jeffery-type system with memory

    du/dt = -nu Lambda u - Conv(t) - B(u, u) + F
    Conv_k(t) = lambda_k * int_0^min(t, s_max) kappa(s) u_k(t - s) ds
    B(u, u)_i = sum_{j,k} c[j, i, k] u_j u_k, with c[i, j, k] = -c[i, k, j]

The initial history is zero, so u vanishes for negative times.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config.settings import settings
from errors import BlowupError, NumericalError, ValidationError
from models.memory.kernels import MemoryKernel
from models.trajectory import Trajectory

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GalerkinMemorySystem:
    eigenvalues: np.ndarray
    nu: float
    forcing: np.ndarray
    structure: np.ndarray
    kernel: MemoryKernel
    label: str = "galerkin_memory"

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float).ravel()
        m = lam.size
        F = np.broadcast_to(np.asarray(self.forcing, dtype=float), (m,)).copy()
        c = np.zeros((m, m, m)) if self.structure is None else np.asarray(self.structure, dtype=float)
        if m < 1 or np.any(lam <= 0) or np.any(np.diff(lam) <= 0):
            raise ValidationError("eigenvalues must be positive and strictly increasing")
        if not self.nu > 0:
            raise ValidationError(f"nu must be positive, got {self.nu}")
        if c.shape != (m, m, m):
            raise ValidationError(f"structure constants must have shape ({m},{m},{m})")
        if not np.all(c + c.transpose(0, 2, 1) == 0.0):
            raise ValidationError("structure constants must satisfy c[i,j,k] = -c[i,k,j] exactly")
        for arr in (lam, F, c):
            arr.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "forcing", F)
        object.__setattr__(self, "structure", c)

    @property
    def modes(self) -> int:
        return self.eigenvalues.size

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])

    def nonlinear(self, u: np.ndarray) -> np.ndarray:
        """B(u, u)_i = sum_{j,k} c[j, i, k] u_j u_k"""
        return np.einsum("jik,j,k->i", self.structure, u, u)

    def forcing_dual_sq(self) -> float:
        """|F|^2 in V' = sum F_k^2 / lambda_k"""
        return float(np.sum(self.forcing ** 2 / self.eigenvalues))


def random_structure_constants(m: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Gaussian structure constants made exactly antisymmetric in the last two indices"""
    raw = scale * rng.standard_normal((m, m, m))
    return (raw - raw.transpose(0, 2, 1)) / 2.0


def _trapezoid_weights(count: int, h: float) -> np.ndarray:
    w = np.full(count, h)
    w[0] = w[-1] = 0.5 * h
    return w


def integrate_memory(
    sys: GalerkinMemorySystem,
    u0,
    T: float,
    h: float,
    blowup_threshold: Optional[float] = None,
) -> Trajectory:
    """Explicit RK4 with the memory convolution frozen at the start of each step"""
    u0 = np.asarray(u0, dtype=float).ravel()
    if u0.shape != (sys.modes,):
        raise ValidationError(f"u0 must have {sys.modes} entries")
    if not (h > 0 and T > 0):
        raise ValidationError("T and h must be positive")
    threshold = settings.blowup_threshold if blowup_threshold is None else blowup_threshold

    n_steps = max(1, int(math.ceil(T / h - 1e-9)))
    U = np.zeros((n_steps + 1, sys.modes))
    U[0] = u0
    lam, nu, F = sys.eigenvalues, sys.nu, sys.forcing
    max_lag = min(n_steps, int(math.floor(sys.kernel.s_max / h + 1e-9)))
    kappa_nodes = sys.kernel.kappa(np.arange(max_lag + 1) * h)

    def field(u: np.ndarray, conv: np.ndarray) -> np.ndarray:
        return -nu * lam * u - conv - sys.nonlinear(u) + F

    for n in range(n_steps):
        J = min(n, max_lag)
        if J == 0:
            conv = np.zeros(sys.modes)
        else:
            weights = _trapezoid_weights(J + 1, h) * kappa_nodes[:J + 1]
            conv = lam * (weights @ U[n - J:n + 1][::-1])
        u = U[n]
        k1 = field(u, conv)
        k2 = field(u + 0.5 * h * k1, conv)
        k3 = field(u + 0.5 * h * k2, conv)
        k4 = field(u + h * k3, conv)
        U[n + 1] = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        norm = float(np.linalg.norm(U[n + 1]))
        t = (n + 1) * h
        if not math.isfinite(norm):
            raise NumericalError(f"non-finite Galerkin state at t={t:.6g}", time=t)
        if norm > threshold:
            raise BlowupError(f"Galerkin state norm exceeded {threshold:.3g} at t={t:.6g}", time=t)

    logger.debug(f"{sys.label}: integrated {n_steps} steps of h={h:.6g}")
    return Trajectory(
        label=sys.label,
        h=h,
        spacing=h,
        times=np.arange(n_steps + 1) * h,
        states=U,
        metadata={"modes": sys.modes},
    )
