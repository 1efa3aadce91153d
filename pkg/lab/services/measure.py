"""
Time averages, empirical invariant measures and attractor diagnostics
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel
from scipy import integrate as quadrature

from config.settings import settings
from errors import BlowupError, NumericalError, ValidationError
from models.history import HistorySegment
from models.ndde import NddeSystem, integrate, semigroup
from models.trajectory import Trajectory
from services.certify import DissipativityCertificate, absorption_time, rightmost_exponent

logger = logging.getLogger(__name__)

Sampler = Callable[[np.random.Generator], HistorySegment]


@dataclass(frozen=True)
class Observable:
    """Real functional on phase space.

    bounded_hint records whether the caller asserts boundedness; it is not verified.
    """

    label: str
    fn: Callable[[HistorySegment], float]
    bounded_hint: bool = False

    def __call__(self, seg: HistorySegment, time: Optional[float] = None) -> float:
        value = float(self.fn(seg))
        if not math.isfinite(value):
            where = f" at t={time:.6g}" if time is not None else ""
            raise NumericalError(f"observable '{self.label}' is non-finite{where}", time=time)
        return value


def point_value(theta: float = 0.0, component: int = 0) -> Observable:
    return Observable(f"x{component + 1}({theta:g})", lambda seg: seg.eval(theta)[component])


def point_square(theta: float = 0.0, component: int = 0) -> Observable:
    return Observable(f"x{component + 1}({theta:g})^2", lambda seg: seg.eval(theta)[component] ** 2)


def sup_norm_observable() -> Observable:
    return Observable("|x_t|", lambda seg: seg.sup_norm())


def constant_observable(value: float) -> Observable:
    return Observable(f"const({value:g})", lambda seg: value, bounded_hint=True)


def default_suite(tau: float, component: int = 0) -> List[Observable]:
    """x(0), x(0)^2, x(-tau) and |x_t|"""
    return [
        point_value(0.0, component),
        point_square(0.0, component),
        point_value(-tau, component),
        sup_norm_observable(),
    ]


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniformly weighted snapshots x_{t_i} of one trajectory"""

    snapshots: List[HistorySegment]
    burn_in: float
    stride: float
    times: List[float] = field(default_factory=list)
    source: Dict[str, object] = field(default_factory=dict)

    @property
    def weights(self) -> np.ndarray:
        return np.full(len(self.snapshots), 1.0 / len(self.snapshots))


class InvarianceReport(BaseModel):
    t_star: float
    defects: Dict[str, float]
    max: float


class EnsembleResult(BaseModel):
    mean: float
    stderr: float
    n_traj: int
    values: List[float]


class CesaroResult(BaseModel):
    converged: bool
    value: float
    deviation: float
    horizon: float
    status: str


# Time averages

def _observable_series(traj: Trajectory, obs: Observable, start: float) -> tuple:
    idx = traj.segment_times(start)
    if idx.size < 2:
        raise ValidationError(f"burn-in {start} leaves fewer than two grid points before {traj.horizon}")
    times = traj.times[idx]
    values = np.array([obs(traj.segment(float(traj.times[j])), float(traj.times[j])) for j in idx])
    return times, values


def time_average(traj: Trajectory, obs: Observable, burn_in: float = 0.0) -> float:
    """Trapezoid value of (1/(T - burn_in)) times the integral of obs(x_t) dt"""
    if burn_in >= traj.horizon:
        raise ValidationError(f"burn_in={burn_in} must be below the horizon {traj.horizon}")
    times, values = _observable_series(traj, obs, max(burn_in, 0.0))
    return float(quadrature.trapezoid(values, times) / (times[-1] - times[0]))


def running_average(traj: Trajectory, obs: Observable, burn_in: float = 0.0) -> pd.DataFrame:
    """Cumulative trapezoid averages A_T at every post-burn-in grid point"""
    if burn_in >= traj.horizon:
        raise ValidationError(f"burn_in={burn_in} must be below the horizon {traj.horizon}")
    times, values = _observable_series(traj, obs, max(burn_in, 0.0))
    cumulative = quadrature.cumulative_trapezoid(values, times, initial=0.0)
    elapsed = times - times[0]
    averages = np.empty_like(values)
    averages[0] = values[0]
    averages[1:] = cumulative[1:] / elapsed[1:]
    return pd.DataFrame({"T": times, "average": averages})


def cesaro_limit(series: pd.DataFrame, tol: Optional[float] = None) -> CesaroResult:
    """Cauchy test over the last decade of T; the Cesaro value stands in for the limit"""
    tol = settings.cauchy_tolerance if tol is None else tol
    T = series["T"].to_numpy()
    A = series["average"].to_numpy()
    start, end = T[0], T[-1]
    decade = (T - start) >= 0.1 * (end - start)
    deviation = float(np.max(np.abs(A[decade] - A[-1])))
    converged = deviation <= tol
    value = float(A[-1])
    if converged:
        status = "converged"
        logger.info(f"running average converged to {value:.12g} (deviation {deviation:.3e})")
    else:
        status = f"nonconvergent - average at horizon T={end:.6g}"
        logger.warning(f"running average {status} (deviation {deviation:.3e} > {tol:.1e})")
    return CesaroResult(converged=converged, value=value, deviation=deviation, horizon=float(end), status=status)


# Empirical measures

def default_burn_in(
    sys: NddeSystem,
    phi: HistorySegment,
    certificate: Optional[DissipativityCertificate] = None,
) -> float:
    """Absorption time when certified, else a multiple of the decay time of D0"""
    if certificate is not None and certificate.satisfied:
        t_absorb = absorption_time(certificate, phi.sup_norm())
        if math.isfinite(t_absorb):
            return t_absorb
    exponent = rightmost_exponent(sys.B, sys.tau)
    if math.isfinite(exponent) and exponent < 0:
        raw = settings.burn_in_rate_multiple / abs(exponent)
        return math.ceil(raw / sys.tau - 1e-9) * sys.tau
    return settings.default_burn_in_delays * sys.tau


def empirical_measure(
    sys: NddeSystem,
    phi: HistorySegment,
    T: float,
    h: float,
    burn_in: Optional[float] = None,
    stride: Optional[float] = None,
    certificate: Optional[DissipativityCertificate] = None,
) -> EmpiricalMeasure:
    """Snapshots x_{burn_in + j stride}, j >= 1, up to T"""
    burn_in = default_burn_in(sys, phi, certificate) if burn_in is None else burn_in
    stride = sys.tau if stride is None else stride
    if not stride > 0:
        raise ValidationError(f"stride must be positive, got {stride}")
    if burn_in + stride > T * (1 + 1e-12):
        raise ValidationError(f"burn_in + stride = {burn_in + stride} exceeds T = {T}")
    traj = integrate(sys, phi, T, h)
    return snapshot_measure(traj, burn_in, stride, T)


def snapshot_measure(traj: Trajectory, burn_in: float, stride: float, T: Optional[float] = None) -> EmpiricalMeasure:
    """Empirical measure from an existing trajectory"""
    T = traj.horizon if T is None else T
    if burn_in + stride > T * (1 + 1e-12):
        raise ValidationError(f"burn_in + stride = {burn_in + stride} exceeds T = {T}")
    count = int(math.floor((T - burn_in) / stride + 1e-9))
    times = [burn_in + j * stride for j in range(1, count + 1)]
    snapshots = [traj.segment(t) for t in times]
    logger.info(f"{traj.label}: empirical measure with {len(snapshots)} snapshots after burn-in {burn_in:.6g}")
    return EmpiricalMeasure(
        snapshots=snapshots,
        burn_in=burn_in,
        stride=stride,
        times=times,
        source={"system": traj.label, "h": traj.h, "T": T},
    )


def expect(mu: EmpiricalMeasure, obs: Observable) -> float:
    """Weighted mean of obs over the snapshots"""
    values = np.array([obs(seg, t) for seg, t in zip(mu.snapshots, mu.times or [None] * len(mu.snapshots))])
    return float(mu.weights @ values)


def invariance_defect(
    mu: EmpiricalMeasure,
    sys: NddeSystem,
    t_star: float,
    h: float,
    obs_suite: Sequence[Observable],
) -> InvarianceReport:
    """|E_mu[phi] - E_mu[phi o S(t_star)]| for each observable"""
    if not t_star > 0:
        raise ValidationError(f"t_star must be positive, got {t_star}")
    advanced = [semigroup(sys, seg, t_star, h) for seg in mu.snapshots]
    pushed = EmpiricalMeasure(snapshots=advanced, burn_in=mu.burn_in + t_star, stride=mu.stride, source=mu.source)
    defects = {obs.label: abs(expect(mu, obs) - expect(pushed, obs)) for obs in obs_suite}
    worst = max(defects.values()) if defects else 0.0
    logger.info(f"invariance defect at t*={t_star:.6g}: max {worst:.3e}")
    return InvarianceReport(t_star=t_star, defects=defects, max=worst)


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Independent PRNG stream for ensemble member ``index``"""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def ensemble_average(
    sys: NddeSystem,
    sampler: Sampler,
    n_traj: int,
    T: float,
    h: float,
    obs: Observable,
    burn_in: float,
    seed: int,
    threads: int = 1,
) -> EnsembleResult:
    """Mean of time averages over initial histories drawn from the sampler"""
    if n_traj < 1:
        raise ValidationError(f"n_traj must be at least 1, got {n_traj}")

    def run_member(index: int) -> float:
        phi = sampler(trajectory_rng(seed, index))
        try:
            traj = integrate(sys, phi, T, h)
        except BlowupError as e:
            raise BlowupError(f"ensemble trajectory {index}: {e}", time=e.time, index=index) from e
        return time_average(traj, obs, burn_in)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        values = list(executor.map(run_member, range(n_traj)))

    arr = np.array(values)
    mean = float(np.sum(arr) / n_traj)
    stderr = float(np.std(arr, ddof=1) / math.sqrt(n_traj)) if n_traj > 1 else 0.0
    return EnsembleResult(mean=mean, stderr=stderr, n_traj=n_traj, values=values)


# Attractor diagnostics

def hausdorff_semidistance(E: Sequence[HistorySegment], F: Sequence[HistorySegment]) -> float:
    """sup over E of inf over F of the sup-norm distance"""
    if not E or not F:
        raise ValidationError("Hausdorff semi-distance needs two nonempty sets")
    reference = E[0]
    for seg in list(E) + list(F):
        if abs(seg.tau - reference.tau) > 1e-12 * reference.tau or seg.dim != reference.dim:
            raise ValidationError("segments must share tau and dim")
    N = reference.n_intervals
    A = np.stack([seg.resample(N).values for seg in E])
    C = np.stack([seg.resample(N).values for seg in F])
    distances = np.max(np.linalg.norm(A[:, None] - C[None, :], axis=-1), axis=-1)
    return float(np.max(np.min(distances, axis=1)))


def attractor_distance(mu: EmpiricalMeasure, reference: Sequence[HistorySegment]) -> float:
    return hausdorff_semidistance(mu.snapshots, reference)


def snapshots_frame(mu: EmpiricalMeasure) -> pd.DataFrame:
    """One row per snapshot node: snapshot, t, theta, x1..xn"""
    frames = []
    for i, seg in enumerate(mu.snapshots):
        data = {
            "snapshot": np.full(len(seg.nodes), i),
            "t": np.full(len(seg.nodes), mu.times[i] if mu.times else np.nan),
            "theta": seg.nodes,
        }
        for k in range(seg.dim):
            data[f"x{k + 1}"] = seg.values[:, k]
        frames.append(pd.DataFrame(data))
    return pd.concat(frames, ignore_index=True)
