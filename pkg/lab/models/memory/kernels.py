"""
Memory kernel pairs (mu, kappa) with kappa(s) the tail mass of mu beyond s
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Optional, Sequence

import numpy as np
from pydantic import BaseModel
from scipy import integrate as quadrature

from config.settings import settings
from errors import ValidationError

logger = logging.getLogger(__name__)

KernelMap = Callable[[np.ndarray], np.ndarray]


class KernelFamily(str, Enum):
    EXPONENTIAL = "exponential"
    PIECEWISE_CONSTANT = "piecewise_constant"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class MemoryKernel:
    """Nonincreasing density mu with kappa(s) = integral of mu over (s, inf)"""

    family: KernelFamily
    params: Dict[str, float]
    kappa0: float
    s_max: float
    mu_fn: KernelMap = field(repr=False)
    kappa_fn: KernelMap = field(repr=False)
    kappa_tail_fn: KernelMap = field(repr=False)
    beta_nec: Optional[float] = None
    K: Optional[float] = None
    delta: Optional[float] = None
    breaks: tuple = ()

    def mu(self, s):
        return self.mu_fn(np.asarray(s, dtype=float))

    def kappa(self, s):
        return self.kappa_fn(np.asarray(s, dtype=float))

    def kappa_tail(self, s):
        """Integral of kappa over (s, inf)"""
        return self.kappa_tail_fn(np.asarray(s, dtype=float))

    @property
    def mu0(self) -> float:
        return float(self.mu(0.0))

    @property
    def mu_l1(self) -> float:
        return self.kappa0

    def s_grid(self, points: Optional[int] = None) -> np.ndarray:
        return np.linspace(0.0, self.s_max, points or settings.kernel_grid_points)

    def describe(self) -> dict:
        return {
            "family": self.family.value,
            "params": dict(self.params),
            "kappa0": self.kappa0,
            "beta_nec": self.beta_nec,
            "K": self.K,
            "delta": self.delta,
        }


class KernelResidual(BaseModel):
    max_residual: float
    relative: float
    holds: bool


def kernel_exponential(mu0: float, delta: float, tail_epsilon: Optional[float] = None) -> MemoryKernel:
    """mu(s) = mu0 exp(-delta s), kappa(s) = (mu0/delta) exp(-delta s)"""
    if not (mu0 > 0 and delta > 0):
        raise ValidationError("exponential kernel needs mu0 > 0 and delta > 0")
    eps = settings.tail_epsilon if tail_epsilon is None else tail_epsilon
    kappa0 = mu0 / delta
    return MemoryKernel(
        family=KernelFamily.EXPONENTIAL,
        params={"mu0": mu0, "delta": delta},
        kappa0=kappa0,
        s_max=math.log(1.0 / eps) / delta,
        mu_fn=lambda s: mu0 * np.exp(-delta * s),
        kappa_fn=lambda s: kappa0 * np.exp(-delta * s),
        kappa_tail_fn=lambda s: (kappa0 / delta) * np.exp(-delta * s),
        beta_nec=1.0 / delta,
        K=1.0,
        delta=delta,
    )


def kernel_piecewise(mu0: float, t_star: float, delta: Optional[float] = None) -> MemoryKernel:
    """mu = mu0 on [0, t*] and 0 beyond; kappa(s) = (1 - s/t*) kappa0 with kappa0 = mu0 t*.

    The decay condition holds for any delta with K = exp(delta t*); delta
    defaults to 1/t*.
    """
    if not (mu0 > 0 and t_star > 0):
        raise ValidationError("piecewise kernel needs mu0 > 0 and t_star > 0")
    delta = 1.0 / t_star if delta is None else delta
    kappa0 = mu0 * t_star

    def mu(s):
        return np.where(s <= t_star, mu0, 0.0)

    def kappa(s):
        return kappa0 * np.clip(1.0 - s / t_star, 0.0, None)

    def kappa_tail(s):
        return kappa0 * np.clip(t_star - s, 0.0, None) ** 2 / (2.0 * t_star)

    return MemoryKernel(
        family=KernelFamily.PIECEWISE_CONSTANT,
        params={"mu0": mu0, "t_star": t_star},
        kappa0=kappa0,
        s_max=t_star,
        mu_fn=mu,
        kappa_fn=kappa,
        kappa_tail_fn=kappa_tail,
        beta_nec=t_star,
        K=math.exp(delta * t_star),
        delta=delta,
        breaks=(t_star,),
    )


def kernel_tabulated(grid: Sequence[float], values: Sequence[float]) -> MemoryKernel:
    """Piecewise-linear mu through (grid, values), zero past the last node"""
    g = np.asarray(grid, dtype=float)
    v = np.asarray(values, dtype=float)
    if g.ndim != 1 or g.shape != v.shape or g.size < 2:
        raise ValidationError("tabulated kernel needs matching 1-D grid and values with at least 2 nodes")
    if g[0] != 0.0 or np.any(np.diff(g) <= 0):
        raise ValidationError("tabulated grid must start at 0 and increase strictly")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise ValidationError("tabulated kernel values must be finite and nonnegative")
    if np.any(np.diff(v) > 0):
        j = int(np.flatnonzero(np.diff(v) > 0)[0])
        raise ValidationError(f"tabulated kernel values increase between nodes {j} and {j + 1}")

    cells = np.diff(g) * (v[:-1] + v[1:]) / 2.0
    node_tail = np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]])
    kappa0 = float(node_tail[0])

    def mu(s):
        return np.interp(s, g, v, right=0.0)

    def kappa(s):
        s = np.asarray(s, dtype=float)
        j = np.clip(np.searchsorted(g, s, side="right") - 1, 0, g.size - 2)
        inside = (s >= 0) & (s < g[-1])
        mu_s = np.interp(s, g, v)
        partial = (g[j + 1] - s) * (mu_s + v[j + 1]) / 2.0
        return np.where(inside, node_tail[j + 1] + partial, np.where(s < 0, kappa0, 0.0))

    fine = np.linspace(0.0, g[-1], settings.kernel_grid_points)
    fine_kappa = kappa(fine)
    tail_from_right = quadrature.cumulative_trapezoid(fine_kappa[::-1], -fine[::-1], initial=0.0)[::-1]

    def kappa_tail(s):
        return np.interp(s, fine, tail_from_right, right=0.0)

    positive = v > 0
    beta = None
    if np.any(positive):
        ratios = kappa(fine) / np.maximum(mu(fine), np.finfo(float).tiny)
        ratios = ratios[mu(fine) > 0]
        beta = float(np.max(ratios)) if ratios.size else None

    return MemoryKernel(
        family=KernelFamily.TABULATED,
        params={"nodes": float(g.size)},
        kappa0=kappa0,
        s_max=float(g[-1]),
        mu_fn=mu,
        kappa_fn=kappa,
        kappa_tail_fn=kappa_tail,
        beta_nec=beta,
        breaks=tuple(float(x) for x in g[1:-1]),
    )


def tail_mass_residual(kernel: MemoryKernel, points: int = 33) -> KernelResidual:
    """Compare kappa(s) with an adaptive quadrature of mu over (s, inf)"""
    residual = 0.0
    for s in np.linspace(0.0, kernel.s_max, points):
        if kernel.family is KernelFamily.EXPONENTIAL:
            mass, _ = quadrature.quad(lambda x: float(kernel.mu(x)), s, np.inf)
        else:
            inner = [b for b in kernel.breaks if s < b < kernel.s_max]
            mass, _ = quadrature.quad(
                lambda x: float(kernel.mu(x)), s, kernel.s_max, points=inner or None, limit=200
            )
        residual = max(residual, abs(float(kernel.kappa(s)) - mass))
    scale = kernel.kappa0 if kernel.kappa0 > 0 else 1.0
    relative = residual / scale
    return KernelResidual(max_residual=residual, relative=relative, holds=relative <= 1e-8)
