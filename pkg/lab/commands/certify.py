"""
certify: closed-form dissipativity certificate, optional falsification
and Brayton-Miranker validation
"""
import logging
from typing import Optional

from commands import CommandResult
from config.run_config import BraytonMirankerSystem, CertifyConfig
from config.settings import settings
from errors import ValidationError
from models.system_manager import system_manager
from services.certify import (
    BmValidation,
    Check,
    DissipationReport,
    DissipativityCertificate,
    StabilityReport,
    bm_dissipation_constants,
    contraction_constants,
    falsify_dissipation,
    fit_gamma,
    operator_norm,
    stability_report,
    validate_bm,
)
from services.output_manager import OutputManager

logger = logging.getLogger(__name__)


class CertificateDocument(DissipativityCertificate):
    """certificate.json layout"""

    stability: Optional[StabilityReport] = None
    falsification: Optional[DissipationReport] = None
    brayton_miranker: Optional[BmValidation] = None


def run(config: CertifyConfig, out: OutputManager, seed: int, threads: int = 1) -> CommandResult:
    system = system_manager.build_system(config.system) if config.system is not None else None
    bm = config.system if isinstance(config.system, BraytonMirankerSystem) else None

    B = config.B if config.B is not None else (system.B if system is not None else None)
    b_norm = config.b_norm if config.b_norm is not None else (operator_norm(B) if B is not None else None)
    tau = config.tau if config.tau is not None else (system.tau if system is not None else None)
    if b_norm is None or tau is None:
        raise ValidationError("certify needs b_norm (or B, or a system) and tau")

    alpha, beta, gamma = config.alpha, config.beta, config.gamma
    if alpha is None or beta is None:
        if bm is None or config.brayton_miranker is None:
            raise ValidationError("alpha and beta are required unless a brayton_miranker system is validated")
        alpha, beta, gamma = bm_dissipation_constants(
            bm.q, bm.m, bm.p, bm.b, bm.c, bm.alphas, config.brayton_miranker.epsilon
        )
        logger.info(f"explicit Brayton-Miranker constants alpha={alpha:.6g}, beta={beta:.6g}, gamma={gamma:.6g}")

    if config.fit_gamma:
        if system is None:
            raise ValidationError("fit_gamma needs a system")
        radius = config.falsify.radius if config.falsify else 10.0
        samples = config.falsify.samples if config.falsify else settings.falsify_samples
        gamma = fit_gamma(system.g, system.B, alpha, beta, radius, samples, seed)
        logger.info(f"fitted gamma={gamma:.6g}")

    cert = contraction_constants(alpha, beta, gamma, b_norm, tau)
    document = CertificateDocument(**cert.model_dump())
    exit_code = 0 if cert.satisfied else 2

    if B is not None:
        document.stability = stability_report(B, tau)

    if config.falsify is not None:
        if system is None:
            raise ValidationError("falsify needs a system")
        report = falsify_dissipation(
            system.g, system.B, alpha, beta, gamma, config.falsify.radius, config.falsify.samples, seed
        )
        document.falsification = report
        document.checks.append(Check(
            name="dissipation_inequality",
            passed=not report.falsified,
            detail=f"max defect {report.max_defect:.17g} over {report.samples_evaluated} samples",
        ))
        if report.falsified:
            exit_code = 2

    if config.brayton_miranker is not None:
        if bm is None:
            raise ValidationError("brayton_miranker validation needs a brayton_miranker system")
        validation = validate_bm(
            bm.q, bm.m, bm.p, bm.b, bm.c, bm.alphas,
            config.brayton_miranker.alpha_prime, config.brayton_miranker.epsilon,
            radius=config.falsify.radius if config.falsify else 10.0,
            samples=config.falsify.samples if config.falsify else settings.falsify_samples,
            seed=seed,
        )
        document.brayton_miranker = validation
        if not validation.passed:
            exit_code = 2

    path = out.write_json("certificate", document)
    verdict = "satisfied" if exit_code == 0 else "FAILED"
    summary = f"certify: c={cert.frak_c:.6g}, r_abs={cert.r_abs}, tau*={cert.tau_star} -> {verdict}"
    if exit_code:
        logger.warning(f"certificate failed: {[c.name for c in document.checks if not c.passed]}")
    return CommandResult(summary=summary, exit_code=exit_code, files={"certificate": str(path)})
