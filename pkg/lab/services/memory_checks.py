"""
Kernel conditions, history-variable diagnostics and energy inequalities
for the Galerkin memory system
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel
from scipy import integrate as quadrature

from config.settings import settings
from errors import ValidationError
from models.memory.kernels import KernelFamily, MemoryKernel
from models.trajectory import Trajectory

logger = logging.getLogger(__name__)


class DecayConditionReport(BaseModel):
    holds: bool
    max_defect: float
    witness_s: Optional[float] = None
    witness_sigma: Optional[float] = None


class NecReport(BaseModel):
    holds: bool
    max_defect: float
    witness_s: Optional[float] = None
    tail_holds: bool
    tail_max_defect: float


class InequalityCheck(BaseModel):
    max_residual: float
    tol: float
    holds: bool
    worst_time: Optional[float] = None


class AbsorbingBoundReport(BaseModel):
    gamma_rate: float
    Lambda: float
    c_fit: float
    violated: bool
    max_ratio: float
    bound_series: List[float]


@dataclass(frozen=True)
class MemoryDiagnostics:
    """Energy-type series sampled along a Galerkin trajectory"""

    t: np.ndarray
    u_sq: np.ndarray
    grad_sq: np.ndarray
    eta_sq: np.ndarray
    gamma1: np.ndarray
    t_eta_sq: np.ndarray
    tail: np.ndarray
    eigenvalues: np.ndarray
    h: float

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else self.h

    @property
    def energy(self) -> np.ndarray:
        return self.u_sq + self.eta_sq

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": self.t,
            "u_sq": self.u_sq,
            "grad_sq": self.grad_sq,
            "eta_sq": self.eta_sq,
            "gamma1": self.gamma1,
            "t_eta_sq": self.t_eta_sq,
            "tail": self.tail,
        })


# Kernel conditions

def check_decay_condition(
    kernel: MemoryKernel,
    K: float,
    delta: float,
    grid: Optional[Sequence[float]] = None,
) -> DecayConditionReport:
    """max over (s, sigma) of mu(s + sigma) - K exp(-delta sigma) mu(s)"""
    if not K >= 1:
        raise ValidationError(f"K must be at least 1, got {K}")
    if not delta > 0:
        raise ValidationError(f"delta must be positive, got {delta}")
    grid = kernel.s_grid(201) if grid is None else np.asarray(grid, dtype=float)
    s = grid[:, None]
    sigma = grid[None, :]
    defect = kernel.mu(s + sigma) - K * np.exp(-delta * sigma) * kernel.mu(s)
    i, j = np.unravel_index(int(np.argmax(defect)), defect.shape)
    worst = float(defect[i, j])
    holds = worst <= 1e-12 * kernel.mu0
    return DecayConditionReport(
        holds=holds,
        max_defect=worst,
        witness_s=None if holds else float(grid[i]),
        witness_sigma=None if holds else float(grid[j]),
    )


def check_nec(kernel: MemoryKernel, beta: float, grid: Optional[Sequence[float]] = None) -> NecReport:
    """kappa(s) <= beta mu(s), together with kappa(s) <= kappa0 exp(-s/beta)"""
    if not beta > 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    grid = kernel.s_grid() if grid is None else np.asarray(grid, dtype=float)
    kappa = kernel.kappa(grid)
    defect = kappa - beta * kernel.mu(grid)
    j = int(np.argmax(defect))
    tail_defect = float(np.max(kappa - kernel.kappa0 * np.exp(-grid / beta)))
    tol = 1e-12 * max(kernel.kappa0, np.finfo(float).tiny)
    holds = float(defect[j]) <= tol
    return NecReport(
        holds=holds and tail_defect <= tol,
        max_defect=float(defect[j]),
        witness_s=None if holds else float(grid[j]),
        tail_holds=tail_defect <= tol,
        tail_max_defect=tail_defect,
    )


# History-variable diagnostics

def _dyadic_sigmas(s_max: float) -> List[float]:
    sigmas = [1.0]
    while sigmas[-1] * 2.0 <= s_max:
        sigmas.append(sigmas[-1] * 2.0)
    return sigmas


def memory_diagnostics(
    traj: Trajectory,
    kernel: MemoryKernel,
    eigenvalues,
    samples: Optional[int] = None,
) -> MemoryDiagnostics:
    """Energy, Gamma and tail functionals from eta^t(s) = int_0^min(s,t) u(t - r) dr.

    The history variable is rebuilt from the stored trajectory at each
    sample time, assuming zero initial history.
    """
    lam = np.asarray(eigenvalues, dtype=float).ravel()
    U = traj.states
    if U.shape[1] != lam.size:
        raise ValidationError("eigenvalues do not match trajectory dimension")
    h = traj.spacing
    samples = settings.diagnostic_samples if samples is None else samples
    stride = max(1, int(math.ceil((len(U) - 1) / max(samples - 1, 1))))
    indices = np.arange(0, len(U), stride)

    W = quadrature.cumulative_trapezoid(U, dx=h, axis=0, initial=0.0)
    sigmas = _dyadic_sigmas(kernel.s_max)
    out = {name: np.zeros(indices.size) for name in ("u_sq", "grad_sq", "eta_sq", "gamma1", "t_eta_sq", "tail")}

    for pos, n in enumerate(indices):
        t = n * h
        u = U[n]
        out["u_sq"][pos] = float(u @ u)
        out["grad_sq"][pos] = float(lam @ u ** 2)
        if n == 0:
            continue
        s = np.arange(n + 1) * h
        eta = W[n] - W[n::-1]
        eta_norm = (eta ** 2) @ lam
        mu = kernel.mu(s)
        kappa = kernel.kappa(s)
        w_sq = float(lam @ W[n] ** 2)
        kappa_t = float(kernel.kappa(t))

        cumulative = quadrature.cumulative_trapezoid(mu * eta_norm, s, initial=0.0)
        out["eta_sq"][pos] = cumulative[-1] + w_sq * kappa_t
        out["gamma1"][pos] = quadrature.trapezoid(kappa * eta_norm, s) + w_sq * float(kernel.kappa_tail(t))
        out["t_eta_sq"][pos] = quadrature.trapezoid(mu * ((U[n::-1] ** 2) @ lam), s)

        def weighted(lo: float, hi: float) -> float:
            grid_part = np.interp(min(hi, t), s, cumulative) - np.interp(min(lo, t), s, cumulative)
            upper = 0.0 if math.isinf(hi) else float(kernel.kappa(max(hi, t)))
            beyond = w_sq * (float(kernel.kappa(max(lo, t))) - upper) if hi > t else 0.0
            return float(grid_part + beyond)

        out["tail"][pos] = max(sg * (weighted(0.0, 1.0 / sg) + weighted(sg, math.inf)) for sg in sigmas)

    return MemoryDiagnostics(
        t=indices * h,
        eigenvalues=lam,
        h=h,
        **out,
    )


# Inequalities

def _default_tol(diag: MemoryDiagnostics, nu: float) -> float:
    peak = float(np.max(diag.energy)) if diag.t.size else 0.0
    return 10.0 * diag.dt * peak * nu


def _central_difference(series: np.ndarray, dt: float) -> np.ndarray:
    return (series[2:] - series[:-2]) / (2.0 * dt)


def forcing_dual_sq(F, eigenvalues) -> float:
    F = np.asarray(F, dtype=float).ravel()
    return float(np.sum(F ** 2 / np.asarray(eigenvalues, dtype=float)))


def check_energy_inequality(
    diag: MemoryDiagnostics,
    nu: float,
    F,
    lambda1: Optional[float] = None,
    tol: Optional[float] = None,
) -> InequalityCheck:
    """Residual of d/dt(|u|^2 + [eta]^2) + nu ||u||^2 <= |F|^2_{V'} / nu"""
    if diag.t.size < 3:
        raise ValidationError("energy inequality needs at least 3 grid points")
    if diag.eigenvalues.size:
        f_sq = forcing_dual_sq(F, diag.eigenvalues)
    else:
        f_sq = float(np.sum(np.asarray(F, dtype=float) ** 2)) / lambda1
    residual = _central_difference(diag.energy, diag.dt) + nu * diag.grad_sq[1:-1] - f_sq / nu
    tol = _default_tol(diag, nu) if tol is None else tol
    j = int(np.argmax(residual))
    worst = float(residual[j])
    return InequalityCheck(max_residual=worst, tol=tol, holds=worst <= tol, worst_time=float(diag.t[j + 1]))


def check_gamma_inequality(
    diag: MemoryDiagnostics,
    kernel: MemoryKernel,
    beta: Optional[float] = None,
    mu_l1: Optional[float] = None,
    nu: float = 1.0,
    tol: Optional[float] = None,
) -> InequalityCheck:
    """Residual of dGamma/dt + (Gamma + beta [eta]^2) / (4 beta) <= 2 beta^2 |mu|_1 ||u||^2"""
    beta = kernel.beta_nec if beta is None else beta
    if beta is None or not check_nec(kernel, beta).holds:
        raise ValidationError(f"beta={beta} does not satisfy the kernel condition kappa <= beta mu")
    if diag.t.size < 3:
        raise ValidationError("Gamma inequality needs at least 3 grid points")
    mu_l1 = kernel.mu_l1 if mu_l1 is None else mu_l1
    residual = (
        _central_difference(diag.gamma1, diag.dt)
        + (diag.gamma1[1:-1] + beta * diag.eta_sq[1:-1]) / (4.0 * beta)
        - 2.0 * beta ** 2 * mu_l1 * diag.grad_sq[1:-1]
    )
    tol = _default_tol(diag, nu) if tol is None else tol
    j = int(np.argmax(residual))
    worst = float(residual[j])
    return InequalityCheck(max_residual=worst, tol=tol, holds=worst <= tol, worst_time=float(diag.t[j + 1]))


def absorbing_constants(nu: float, lambda1: float, beta: float, mu_l1: float) -> tuple:
    """(Lambda, gamma) with Lambda = 1/(4 lambda1 nu) + 2 beta^2 |mu|_1 / nu"""
    Lambda = 1.0 / (4.0 * lambda1 * nu) + 2.0 * beta ** 2 * mu_l1 / nu
    return Lambda, 1.0 / (4.0 * max(beta, Lambda))


def check_absorbing_bound(
    diag: MemoryDiagnostics,
    kernel: MemoryKernel,
    nu: float,
    lambda1: float,
    F,
    x0_norm_sq: float,
    beta: Optional[float] = None,
    c_fit: Optional[float] = None,
) -> AbsorbingBoundReport:
    """|u|^2 + [eta]^2 <= C_fit (exp(-gamma t) |x0|^2 + |F|^2_{V'})"""
    beta = kernel.beta_nec if beta is None else beta
    if beta is None:
        raise ValidationError("absorbing bound needs a kernel condition constant beta")
    c_fit = settings.c_fit if c_fit is None else c_fit
    Lambda, gamma = absorbing_constants(nu, lambda1, beta, kernel.mu_l1)
    bound = c_fit * (np.exp(-gamma * diag.t) * x0_norm_sq + forcing_dual_sq(F, diag.eigenvalues))
    energy = diag.energy
    violated = bool(np.any(energy > bound * (1.0 + 1e-12)))
    positive = bound > 0
    max_ratio = float(np.max(energy[positive] / bound[positive])) if np.any(positive) else 0.0
    if violated:
        logger.warning(f"absorbing bound violated (max ratio {max_ratio:.3g} at C_fit={c_fit:g})")
    return AbsorbingBoundReport(
        gamma_rate=gamma,
        Lambda=Lambda,
        c_fit=c_fit,
        violated=violated,
        max_ratio=max_ratio,
        bound_series=bound.tolist(),
    )


def fit_tail_constant(diag: MemoryDiagnostics) -> float:
    """Smallest C with [T eta]^2 + tail <= C max_{s<=t} ||grad u(s)||^2 along this run.

    The ratio depends on the trajectory; tail_bound_constant gives the kernel constant.
    """
    running = np.maximum.accumulate(diag.grad_sq)
    mask = running > 0
    if not np.any(mask):
        return 0.0
    return float(np.max((diag.t_eta_sq[mask] + diag.tail[mask]) / running[mask]))


class TailBoundReport(BaseModel):
    constant: float
    fitted: float
    sharpness: float
    holds: bool


def _second_moment(kernel: MemoryKernel, lo: float, hi: float) -> float:
    """Integral of s^2 mu(s) over (lo, hi); mu vanishes past s_max except for the exponential family"""
    if kernel.family is not KernelFamily.EXPONENTIAL:
        hi = min(hi, kernel.s_max)
    if not hi > lo:
        return 0.0
    points = [b for b in kernel.breaks if lo < b < hi] or None
    value, _ = quadrature.quad(lambda s: float(kernel.mu(s)) * s * s, lo, hi, points=points, limit=200)
    return float(value)


def tail_bound_constant(kernel: MemoryKernel) -> float:
    """Kernel-only C with [T eta]^2 + tail <= C max_{s<=t} ||grad u(s)||^2 for every trajectory.

    From ||eta^t(s)|| <= s max_{r<=t} ||grad u(r)||: [T eta]^2 is bounded by
    kappa0 and the tail functional by the dyadic second moments of mu.
    """
    tail = max(
        sg * (_second_moment(kernel, 0.0, 1.0 / sg) + _second_moment(kernel, sg, math.inf))
        for sg in _dyadic_sigmas(kernel.s_max)
    )
    return kernel.kappa0 + tail


def check_tail_bound(diag: MemoryDiagnostics, kernel: MemoryKernel) -> TailBoundReport:
    """Tail-functional bound with the kernel constant, and the run's own ratio"""
    constant = tail_bound_constant(kernel)
    fitted = fit_tail_constant(diag)
    holds = fitted <= constant * (1.0 + 1e-9)
    if not holds:
        logger.warning(f"tail functional exceeds its kernel bound: ratio {fitted:.6g} > {constant:.6g}")
    return TailBoundReport(constant=constant, fitted=fitted, sharpness=fitted / constant, holds=holds)
