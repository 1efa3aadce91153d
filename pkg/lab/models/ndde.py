"""
Neutral delay differential equations d/dt (x(t) - B x(t - tau)) = g(x(t), x(t - tau))
integrated by the method of steps
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from config.settings import settings
from errors import BlowupError, NumericalError, ValidationError
from models.history import HistorySegment
from models.trajectory import Trajectory

logger = logging.getLogger(__name__)

VectorField = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class NddeSystem:
    """Parameter bundle (B, tau, g) of a neutral delay system

    g must be continuously differentiable for well-posedness. This cannot be
    checked here and stays with the caller.
    """

    dim: int
    tau: float
    B: np.ndarray
    g: VectorField
    label: str = "ndde"

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if not np.isfinite(self.tau) or self.tau <= 0:
            raise ValidationError(f"tau must be positive, got {self.tau}")
        if B.shape != (self.dim, self.dim):
            raise ValidationError(f"B must be {self.dim}x{self.dim}, got {B.shape}")
        if not np.all(np.isfinite(B)):
            raise ValidationError("B has non-finite entries")
        B.setflags(write=False)
        object.__setattr__(self, "B", B)

    def d0(self, phi: HistorySegment) -> np.ndarray:
        """Difference operator D0 phi = phi(0) - B phi(-tau)"""
        return phi.values[-1] - self.B @ phi.values[0]


def _steps_per_delay(tau: float, h: float) -> int:
    if h <= 0:
        raise ValidationError(f"step h must be positive, got {h}")
    ratio = tau / h
    nearest = round(ratio)
    if nearest > 0 and abs(ratio - nearest) <= 1e-9 * ratio:
        return int(nearest)
    return int(math.ceil(ratio))


def integrate(
    sys: NddeSystem,
    phi: HistorySegment,
    T: float,
    h: float,
    blowup_threshold: Optional[float] = None,
) -> Trajectory:
    """Method-of-steps RK4 solve on [0, T].

    Advances y(t) = x(t) - B x(t - tau) with the classical four-stage scheme.
    Values are stored at spacing h/2 so that every delayed stage argument is a
    stored node. The half-step node of each step comes from cubic Hermite
    interpolation of y.

    Args:
        sys: the neutral system
        phi: initial history on [-tau, 0]
        T: horizon
        h: requested step, rounded down to tau / ceil(tau / h)
        blowup_threshold: state norm treated as blowup (settings default)

    Returns:
        Trajectory on [-tau, T'] with T' >= T the first grid time past T
    """
    if abs(phi.tau - sys.tau) > 1e-12 * sys.tau:
        raise ValidationError(f"history tau={phi.tau} does not match system tau={sys.tau}")
    if phi.dim != sys.dim:
        raise ValidationError(f"history dim={phi.dim} does not match system dim={sys.dim}")
    if not T > 0:
        raise ValidationError(f"horizon T must be positive, got {T}")
    n_tau = _steps_per_delay(sys.tau, h)
    if n_tau < 4:
        raise ValidationError(f"tau/h must be at least 4, got {sys.tau / h:.6g}")
    h = sys.tau / n_tau
    threshold = settings.blowup_threshold if blowup_threshold is None else blowup_threshold

    M = 2 * n_tau
    hh = 0.5 * h
    n_steps = max(1, int(math.ceil(T / h - 1e-9)))
    total = M + 2 * n_steps + 1

    X = np.empty((total, sys.dim))
    X[:M + 1] = phi.resample(M).values
    B = sys.B
    g = sys.g

    def rhs(u: np.ndarray, v: np.ndarray, t: float) -> np.ndarray:
        out = np.asarray(g(u, v), dtype=float)
        if not np.all(np.isfinite(out)):
            raise NumericalError(f"non-finite vector field output at t={t:.6g}", time=t)
        return out

    f0 = rhs(X[M], X[0], 0.0)
    for step in range(n_steps):
        i = M + 2 * step
        t = step * h
        xd0, xd_half, xd1 = X[i - M], X[i - M + 1], X[i - M + 2]
        y0 = X[i] - B @ xd0

        k1 = f0
        k2 = rhs(y0 + hh * k1 + B @ xd_half, xd_half, t + hh)
        k3 = rhs(y0 + hh * k2 + B @ xd_half, xd_half, t + hh)
        k4 = rhs(y0 + h * k3 + B @ xd1, xd1, t + h)
        y1 = y0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        x1 = y1 + B @ xd1
        f1 = rhs(x1, xd1, t + h)
        y_mid = 0.5 * (y0 + y1) + (h / 8.0) * (k1 - f1)
        X[i + 1] = y_mid + B @ xd_half
        X[i + 2] = x1
        f0 = f1

        norm = float(np.linalg.norm(x1))
        if not np.isfinite(norm):
            raise NumericalError(f"non-finite state at t={t + h:.6g}", time=t + h)
        if norm > threshold:
            logger.warning(f"{sys.label}: blowup at t={t + h:.6g} (|x|={norm:.3e})")
            raise BlowupError(f"state norm exceeded {threshold:.3g} at t={t + h:.6g}", time=t + h)

    offsets = np.arange(total) - M
    times = offsets * hh
    breakpoints = (offsets >= 0) & (offsets % M == 0)
    logger.debug(f"{sys.label}: integrated {n_steps} steps of h={h:.6g} to T={n_steps * h:.6g}")
    return Trajectory(
        label=sys.label,
        h=h,
        spacing=hh,
        times=times,
        states=X,
        tau=sys.tau,
        points_per_delay=M,
        breakpoints=breakpoints,
    )


def semigroup(sys: NddeSystem, phi: HistorySegment, t: float, h: float) -> HistorySegment:
    """S(t) phi: the segment theta -> x(t + theta)"""
    if t < 0:
        raise ValidationError(f"t must be nonnegative, got {t}")
    n_tau = _steps_per_delay(sys.tau, h)
    if t == 0:
        return phi.resample(2 * n_tau)
    traj = integrate(sys, phi, t, h)
    return traj.segment(t)


def brayton_miranker(
    q: float,
    m: float,
    p: float,
    b: float,
    c: float,
    alphas: Sequence[float],
    tau: float = 1.0,
) -> NddeSystem:
    """Lossless transmission line with nonlinear terminations.

    B = [[0, q], [m, 0]] and g(u, v) = (p - b u1 + F1, -c u2 + F2) with
    F_i(u, v) = -alpha_i u_i / (1 + |v|^2).
    """
    if not 0 < q < 1:
        raise ValidationError("q must lie in (0,1)")
    if not 0 < m < 1:
        raise ValidationError("m must lie in (0,1)")
    if not b > 0:
        raise ValidationError("b must be positive")
    if not c > 0:
        raise ValidationError("c must be positive")
    if len(alphas) != 2 or min(alphas) <= 0:
        raise ValidationError("alphas must be two positive reals")
    a1, a2 = float(alphas[0]), float(alphas[1])

    def g(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        s = 1.0 / (1.0 + float(v @ v))
        return np.array([p - b * u[0] - a1 * u[0] * s, -c * u[1] - a2 * u[1] * s])

    B = np.array([[0.0, q], [m, 0.0]])
    return NddeSystem(dim=2, tau=tau, B=B, g=g, label="brayton_miranker")


def linear_ndde(B, a, p, tau: float = 1.0) -> NddeSystem:
    """Linear system with g(u, v) = -a u + p (a scalar or matrix)"""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n = B.shape[0]
    A = np.asarray(a, dtype=float)
    A = A * np.eye(n) if A.ndim == 0 else np.atleast_2d(A)
    p_vec = np.broadcast_to(np.asarray(p, dtype=float), (n,)).copy()
    if A.shape != (n, n):
        raise ValidationError(f"a must be scalar or {n}x{n}")

    def g(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return -(A @ u) + p_vec

    return NddeSystem(dim=n, tau=tau, B=B, g=g, label="linear")
