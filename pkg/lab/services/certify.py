"""
Stability and dissipativity certificates for neutral delay systems
"""
from __future__ import annotations

import logging
import math
from itertools import product
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field
from scipy import linalg

from config.settings import settings
from errors import NumericalError, ValidationError
from models.ndde import brayton_miranker

logger = logging.getLogger(__name__)


class Check(BaseModel):
    """One named verdict inside a certificate"""

    name: str
    passed: bool
    detail: str = ""


class StabilityReport(BaseModel):
    rho: float
    r_a0: Optional[float] = Field(default=None, description="ln(rho)/tau; None encodes -inf")
    schur_cohn_stable: bool


class DissipativityCertificate(BaseModel):
    """Closed-form constants of the large-delay dissipation estimate"""

    alpha: float
    beta: float
    gamma: float
    b_norm: float
    tau: float
    frak_c: float
    frak_c0: float
    r: float
    r_abs: Optional[float] = None
    tau_star: Optional[float] = None
    satisfied: bool
    checks: List[Check] = Field(default_factory=list)


class DissipationReport(BaseModel):
    max_defect: float
    witness: Optional[Tuple[List[float], List[float]]] = None
    samples_evaluated: int

    @computed_field
    @property
    def falsified(self) -> bool:
        return self.max_defect > 0.0


class BmValidation(BaseModel):
    """Verdicts of the Brayton-Miranker attractor proposition"""

    model_config = ConfigDict(populate_by_name=True)

    alpha_eps: float
    beta_eps: float
    k: float
    k_bound: Optional[float] = None
    tau_star: Optional[float] = None
    gamma_fitted: float
    radius: float
    explicit_alpha: Optional[float] = None
    explicit_beta: Optional[float] = None
    gamma_explicit: Optional[float] = None
    checks: List[Check] = Field(default_factory=list)
    passed: bool = Field(alias="pass")


# Spectra

def spectral_radius(B) -> float:
    """Largest eigenvalue modulus of B"""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if not np.all(np.isfinite(B)):
        raise ValidationError("B has non-finite entries")
    if not np.any(B):
        return 0.0
    return float(np.max(np.abs(linalg.eigvals(B))))


def operator_norm(B) -> float:
    """Operator 2-norm, the largest singular value"""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if not np.any(B):
        return 0.0
    return float(linalg.svdvals(B)[0])


def rightmost_exponent(B, tau: float) -> float:
    """Sup of real parts of the roots of det(I - B exp(-lambda tau)) = 0"""
    if not tau > 0:
        raise ValidationError(f"tau must be positive, got {tau}")
    rho = spectral_radius(B)
    if rho == 0.0:
        return float("-inf")
    return math.log(rho) / tau


def stability_report(B, tau: float) -> StabilityReport:
    rho = spectral_radius(B)
    exponent = rightmost_exponent(B, tau)
    return StabilityReport(
        rho=rho,
        r_a0=exponent if math.isfinite(exponent) else None,
        schur_cohn_stable=rho < 1.0,
    )


# Dissipativity constants

def _decay_factors(alpha: float, tau: float) -> Tuple[float, float]:
    """exp(-alpha tau) and (1 - exp(-alpha tau)) / alpha"""
    return math.exp(-alpha * tau), -math.expm1(-alpha * tau) / alpha


def contraction_constant(alpha: float, beta: float, b_norm: float, tau: float) -> float:
    """The contraction constant c alone"""
    E, S = _decay_factors(alpha, tau)
    radicand = (1.0 + b_norm) ** 2 * E + 2.0 * (beta + alpha * b_norm ** 2) * S
    if radicand < 0.0:
        logger.warning(f"negative radicand {radicand:.3e} in contraction constant clamped to 0")
        radicand = 0.0
    return b_norm + math.sqrt(radicand)


def dissipation_polynomial(x: float, alpha: float, beta: float) -> float:
    """P(x) = -[(x - 1)^2 + 2 (beta/alpha - 1)]"""
    return -((x - 1.0) ** 2 + 2.0 * (beta / alpha - 1.0))


def critical_delay(alpha: float, beta: float, b_norm: float) -> float:
    """Delay beyond which the contraction constant drops below one"""
    if not alpha > 0:
        raise ValidationError(f"alpha must be positive, got {alpha}")
    if not 2.0 * beta < alpha:
        raise ValidationError("large-delay dissipation requires 2β<α")
    bound = math.sqrt(2.0 * (1.0 - beta / alpha)) - 1.0
    if not 0.0 <= b_norm < bound:
        raise ValidationError(f"b_norm={b_norm} must lie in [0, {bound:.12g}) = [0, sqrt(2(1-β/α))-1)")
    ratio = dissipation_polynomial(b_norm + 2.0, alpha, beta) / dissipation_polynomial(b_norm, alpha, beta)
    tau_star = -math.log(ratio) / alpha
    return tau_star if tau_star > 0.0 else 0.0


def contraction_constants(
    alpha: float,
    beta: float,
    gamma: float,
    b_norm: float,
    tau: float,
) -> DissipativityCertificate:
    """Evaluate c, c0, r and the absorbing radius for given dissipation constants"""
    if not alpha > 0:
        raise ValidationError(f"alpha must be positive, got {alpha}")
    if not gamma >= 0:
        raise ValidationError(f"gamma must be nonnegative, got {gamma}")
    if not b_norm >= 0:
        raise ValidationError(f"b_norm must be nonnegative, got {b_norm}")
    if not tau > 0:
        raise ValidationError(f"tau must be positive, got {tau}")
    if not all(math.isfinite(x) for x in (alpha, beta, gamma, b_norm, tau)):
        raise ValidationError("dissipation constants must be finite")

    E, S = _decay_factors(alpha, tau)
    frak_c = contraction_constant(alpha, beta, b_norm, tau)
    radicand0 = (1.0 + b_norm) ** 2 + 2.0 * (beta + alpha * b_norm ** 2) * S
    frak_c0 = math.sqrt(max(radicand0, 0.0)) + b_norm
    r = math.sqrt(2.0 * gamma * S)
    satisfied = frak_c < 1.0
    r_abs = 2.0 * r / math.sqrt(1.0 - frak_c) if satisfied else None

    checks = [
        Check(name="contraction", passed=satisfied, detail=f"c = {frak_c:.17g} {'<' if satisfied else '>='} 1"),
    ]
    tau_star = None
    try:
        tau_star = critical_delay(alpha, beta, b_norm)
        checks.append(Check(name="critical_delay", passed=tau > tau_star, detail=f"tau* = {tau_star:.17g}"))
    except ValidationError as e:
        checks.append(Check(name="critical_delay", passed=False, detail=str(e)))

    return DissipativityCertificate(
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        b_norm=b_norm,
        tau=tau,
        frak_c=frak_c,
        frak_c0=frak_c0,
        r=r,
        r_abs=r_abs,
        tau_star=tau_star,
        satisfied=satisfied,
        checks=checks,
    )


def absorption_time(cert: DissipativityCertificate, phi_norm: float) -> float:
    """Smallest k tau with c^k c0 |phi| <= r c / (1 - c)"""
    if not cert.satisfied:
        raise ValidationError("absorption time needs a satisfied certificate")
    if phi_norm <= 0.0:
        return 0.0
    target = cert.r * cert.frak_c / (1.0 - cert.frak_c)
    start = cert.frak_c0 * phi_norm
    if start <= target:
        return 0.0
    if target <= 0.0:
        return float("inf")
    k = math.ceil(math.log(target / start) / math.log(cert.frak_c) - 1e-12)
    return max(k, 0) * cert.tau


def induction_bound(cert: DissipativityCertificate, phi_norm: float, t: float) -> float:
    """c^k c0 |phi| + r sum_{j<=k} c^j for t in (k tau, (k+1) tau]"""
    if t <= 0:
        return phi_norm
    k = max(math.ceil(t / cert.tau - 1e-9) - 1, 0)
    c = cert.frak_c
    geometric = (k + 1) if c == 1.0 else (1.0 - c ** (k + 1)) / (1.0 - c)
    return c ** k * cert.frak_c0 * phi_norm + cert.r * geometric


# Dissipation inequality sampling

def _ball_samples(n: int, radius: float, samples: int, rng: np.random.Generator) -> np.ndarray:
    directions = rng.standard_normal((samples, n))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    radii = radius * rng.random((samples, 1)) ** (1.0 / n)
    return directions / norms * radii


def _grid_points(n: int, radius: float) -> List[np.ndarray]:
    points = [np.zeros(n)]
    for i in range(n):
        for sign in (1.0, -1.0):
            e = np.zeros(n)
            e[i] = sign * radius
            points.append(e)
    if n <= 4:
        for signs in product((1.0, -1.0), repeat=n):
            points.append(np.array(signs) * radius / math.sqrt(n))
    return points


def dissipation_samples(n: int, radius: float, samples: int, seed: int) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Axis/corner grid pairs followed by seeded uniform-ball pairs"""
    if not radius > 0:
        raise ValidationError(f"radius must be positive, got {radius}")
    if samples < 1:
        raise ValidationError(f"samples must be at least 1, got {samples}")
    grid = _grid_points(n, radius)
    for u in grid:
        for v in grid:
            yield u, v
    rng = np.random.default_rng(seed)
    us = _ball_samples(n, radius, samples, rng)
    vs = _ball_samples(n, radius, samples, rng)
    yield from zip(us, vs)


def _pairing(g: Callable, B: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
    out = np.asarray(g(u, v), dtype=float)
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"non-finite vector field output at u={u.tolist()}, v={v.tolist()}")
    return float((u - B @ v) @ out)


def falsify_dissipation(
    g: Callable,
    B,
    alpha: float,
    beta: float,
    gamma: float,
    radius: float,
    samples: int,
    seed: int,
) -> DissipationReport:
    """Search for (u, v) with <u - Bv, g(u, v)> > gamma - alpha|u|^2 + beta|v|^2.

    A positive maximum falsifies the constants; a nonpositive one is evidence only.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n = B.shape[0]
    best, witness, count = float("-inf"), None, 0
    for u, v in dissipation_samples(n, radius, samples, seed):
        defect = _pairing(g, B, u, v) - (gamma - alpha * float(u @ u) + beta * float(v @ v))
        count += 1
        if defect > best:
            best, witness = defect, (u.tolist(), v.tolist())
    if best > 0.0:
        logger.info(f"dissipation inequality falsified: defect {best:.6g} at {witness}")
    return DissipationReport(max_defect=best, witness=witness if best > 0.0 else None, samples_evaluated=count)


def fit_gamma(
    g: Callable,
    B,
    alpha: float,
    beta: float,
    radius: float,
    samples: int,
    seed: int,
    margin: float = 1e-9,
) -> float:
    """Smallest gamma making the sampled dissipation defect nonpositive"""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n = B.shape[0]
    worst = 0.0
    for u, v in dissipation_samples(n, radius, samples, seed):
        worst = max(worst, _pairing(g, B, u, v) + alpha * float(u @ u) - beta * float(v @ v))
    return worst * (1.0 + margin) + margin


# Brayton-Miranker

def bm_dissipation_constants(
    q: float,
    m: float,
    p: float,
    b: float,
    c: float,
    alphas: Sequence[float],
    epsilon: float,
) -> Tuple[float, float, float]:
    """Explicit (alpha, beta, gamma) from Young's inequality term by term.

    Valid for 0 < epsilon < min(b, c) / 2.
    """
    if not 0 < epsilon < 0.5 * min(b, c):
        raise ValidationError(f"epsilon must lie in (0, min(b,c)/2) = (0, {0.5 * min(b, c):.6g})")
    a1, a2 = alphas
    alpha = 0.5 * min(b, c) - epsilon
    beta = 0.5 * max(q * q * (b + a1), m * m * (c + a2)) + epsilon
    gamma = p * p * (1.0 + q * q) / (4.0 * epsilon)
    return alpha, beta, gamma


def validate_bm(
    q: float,
    m: float,
    p: float,
    b: float,
    c: float,
    alphas: Sequence[float],
    alpha_prime: float,
    epsilon: float,
    radius: float = 10.0,
    samples: Optional[int] = None,
    seed: int = 0,
) -> BmValidation:
    """Check the attractor hypotheses for the Brayton-Miranker system.

    gamma_fitted is the sampled gamma for (alpha_eps, beta_eps) on the ball
    of the given radius. gamma_explicit is the Young constant that goes with
    (explicit_alpha, explicit_beta) from bm_dissipation_constants.
    """
    if not 0 < q < 1:
        raise ValidationError("q must lie in (0,1)")
    if not 0 < m < 1:
        raise ValidationError("m must lie in (0,1)")
    if not (b > 0 and c > 0):
        raise ValidationError("b and c must be positive")
    if len(alphas) != 2 or min(alphas) <= 0:
        raise ValidationError("alphas must be two positive reals")
    if not epsilon > 0:
        raise ValidationError("epsilon must be positive")

    alpha_eps = 0.5 * min(b, c) + alpha_prime - epsilon
    beta_eps = 0.5 * max(b, c) + epsilon
    k = max(q, m)
    checks: List[Check] = []

    lhs, rhs = max(b, c), 0.5 * min(b, c) + alpha_prime
    checks.append(Check(
        name="max(b,c) < min(b,c)/2 + alpha'",
        passed=lhs < rhs,
        detail=f"{lhs:.17g} vs {rhs:.17g}",
    ))
    checks.append(Check(
        name="2*beta_eps < alpha_eps",
        passed=2.0 * beta_eps < alpha_eps,
        detail=f"{2.0 * beta_eps:.17g} vs {alpha_eps:.17g}",
    ))

    k_bound = None
    if alpha_eps > 0 and beta_eps < alpha_eps:
        k_bound = math.sqrt(2.0 * (1.0 - beta_eps / alpha_eps)) - 1.0
        checks.append(Check(
            name="k < -1 + sqrt(2(1 - beta_eps/alpha_eps))",
            passed=k < k_bound,
            detail=f"{k:.17g} vs {k_bound:.17g}",
        ))
    else:
        checks.append(Check(
            name="k < -1 + sqrt(2(1 - beta_eps/alpha_eps))",
            passed=False,
            detail="bound undefined for beta_eps >= alpha_eps",
        ))

    passed = all(check.passed for check in checks)
    tau_star = critical_delay(alpha_eps, beta_eps, k) if passed else None

    system = brayton_miranker(q, m, p, b, c, alphas)
    samples = settings.falsify_samples if samples is None else samples
    gamma_fitted = fit_gamma(system.g, system.B, alpha_eps, beta_eps, radius, samples, seed)

    explicit_alpha = explicit_beta = gamma_explicit = None
    if epsilon < 0.5 * min(b, c):
        explicit_alpha, explicit_beta, gamma_explicit = bm_dissipation_constants(q, m, p, b, c, alphas, epsilon)

    for check in checks:
        if not check.passed:
            logger.info(f"Brayton-Miranker check failed: {check.name} ({check.detail})")
    return BmValidation(
        alpha_eps=alpha_eps,
        beta_eps=beta_eps,
        k=k,
        k_bound=k_bound,
        tau_star=tau_star,
        gamma_fitted=gamma_fitted,
        radius=radius,
        explicit_alpha=explicit_alpha,
        explicit_beta=explicit_beta,
        gamma_explicit=gamma_explicit,
        checks=checks,
        passed=passed,
    )
