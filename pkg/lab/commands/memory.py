"""
memory: Galerkin system with a memory kernel, energy diagnostics and bounds
"""
import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel

from commands import CommandResult
from config.run_config import KernelConfig, MemoryConfig
from errors import ValidationError
from models.memory.galerkin import GalerkinMemorySystem, integrate_memory, random_structure_constants
from models.memory.kernels import (
    KernelFamily,
    KernelResidual,
    MemoryKernel,
    kernel_exponential,
    kernel_piecewise,
    kernel_tabulated,
    tail_mass_residual,
)
from services.memory_checks import (
    AbsorbingBoundReport,
    DecayConditionReport,
    InequalityCheck,
    NecReport,
    TailBoundReport,
    check_absorbing_bound,
    check_decay_condition,
    check_energy_inequality,
    check_gamma_inequality,
    check_nec,
    check_tail_bound,
    memory_diagnostics,
)
from services.output_manager import OutputManager

logger = logging.getLogger(__name__)


class MemoryDocument(BaseModel):
    """memory.json layout"""

    modes: int
    nu: float
    T: float
    h: float
    forcing_dual_sq: float
    tail_mass: KernelResidual
    decay_condition: Optional[DecayConditionReport] = None
    nec: Optional[NecReport] = None
    energy: InequalityCheck
    gamma: Optional[InequalityCheck] = None
    absorbing: Optional[AbsorbingBoundReport] = None
    tail_bound: TailBoundReport


def build_kernel(config: KernelConfig) -> MemoryKernel:
    if config.family is KernelFamily.EXPONENTIAL:
        if config.delta is None:
            raise ValidationError("exponential kernel needs delta")
        return kernel_exponential(config.mu0, config.delta)
    if config.family is KernelFamily.PIECEWISE_CONSTANT:
        if config.t_star is None:
            raise ValidationError("piecewise_constant kernel needs t_star")
        return kernel_piecewise(config.mu0, config.t_star, config.delta)
    return kernel_tabulated(config.grid, config.values)


def run(config: MemoryConfig, out: OutputManager, seed: int, threads: int = 1) -> CommandResult:
    rng = np.random.default_rng(seed)
    m = len(config.eigenvalues)
    kernel = build_kernel(config.kernel)
    if config.structure.kind == "random":
        structure = random_structure_constants(m, rng, config.structure.scale)
    else:
        structure = np.zeros((m, m, m))
    system = GalerkinMemorySystem(
        eigenvalues=np.asarray(config.eigenvalues, dtype=float),
        nu=config.nu,
        forcing=np.asarray(config.forcing or [0.0] * m, dtype=float),
        structure=structure,
        kernel=kernel,
    )
    if config.u0 is not None:
        u0 = np.asarray(config.u0, dtype=float)
    else:
        u0 = config.u0_scale * rng.standard_normal(m)

    traj = integrate_memory(system, u0, config.T, config.h, blowup_threshold=config.tolerances.blowup_threshold)
    diag = memory_diagnostics(traj, kernel, system.eigenvalues, config.samples)

    decay = None
    if kernel.K is not None and kernel.delta is not None:
        decay = check_decay_condition(kernel, kernel.K, kernel.delta)
    nec = check_nec(kernel, kernel.beta_nec) if kernel.beta_nec is not None else None

    energy = check_energy_inequality(diag, system.nu, system.forcing)
    gamma = None
    absorbing = None
    if nec is not None and nec.holds:
        gamma = check_gamma_inequality(diag, kernel, nu=system.nu)
        absorbing = check_absorbing_bound(
            diag, kernel, system.nu, system.lambda1, system.forcing,
            float(u0 @ u0), c_fit=config.tolerances.c_fit,
        )
    else:
        logger.warning("kernel condition kappa <= beta mu unavailable; Gamma and absorbing checks skipped")

    tail_bound = check_tail_bound(diag, kernel)

    document = MemoryDocument(
        modes=m,
        nu=system.nu,
        T=config.T,
        h=config.h,
        forcing_dual_sq=system.forcing_dual_sq(),
        tail_mass=tail_mass_residual(kernel),
        decay_condition=decay,
        nec=nec,
        energy=energy,
        gamma=gamma,
        absorbing=absorbing,
        tail_bound=tail_bound,
    )
    files = {
        "diagnostics": str(out.write_csv("diagnostics", diag.to_frame())),
        "kernel": str(out.write_json("kernel", kernel.describe())),
        "memory": str(out.write_json("memory", document)),
    }

    failed = [
        name for name, ok in (
            ("energy", energy.holds),
            ("gamma", gamma is None or gamma.holds),
            ("absorbing", absorbing is None or not absorbing.violated),
            ("tail", tail_bound.holds),
        ) if not ok
    ]
    exit_code = 2 if failed else 0
    if failed:
        logger.warning(f"memory checks failed: {failed}")
    summary = (
        f"memory {m} modes: max energy {float(np.max(diag.energy)):.6g}, "
        f"energy residual {energy.max_residual:.3e} -> {'FAILED ' + ','.join(failed) if failed else 'ok'}"
    )
    return CommandResult(summary=summary, exit_code=exit_code, files=files)
