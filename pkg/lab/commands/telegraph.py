"""
telegraph: transmission line as travelling waves, with field reconstruction
"""
import logging
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel

from commands import CommandResult
from config.run_config import TelegraphConfig
from config.settings import settings
from models.difference import solve_difference
from models.ndde import integrate
from models.system_manager import system_manager
from models.telegraph import (
    BoundaryKind,
    CrossValidationReport,
    TelegraphLine,
    boundary_to_difference,
    boundary_to_ndde,
    cross_validate,
    decompose,
    field_frame,
    split_waves,
    stack_waves,
    wave_matrix,
    with_integration_constant,
)
from services.output_manager import OutputManager

logger = logging.getLogger(__name__)


class TelegraphDocument(BaseModel):
    """telegraph.json layout"""

    line: TelegraphLine
    c: float
    tau: float
    r: float
    B: list
    f: list
    cross_validation: Optional[CrossValidationReport] = None


def run(config: TelegraphConfig, out: OutputManager, seed: int, threads: int = 1) -> CommandResult:
    line = TelegraphLine(L=config.L, C=config.C, R0=config.R0, E=config.E, boundary=config.boundary)
    V0 = system_manager.build_profile(config.V0)
    I0 = system_manager.build_profile(config.I0)
    N = max(2, int(round(line.tau / config.h)))
    waves = stack_waves(*decompose(V0, I0, line, N))

    report = None
    if line.boundary is BoundaryKind.STATIC:
        system = boundary_to_difference(line)
        report = cross_validate(V0, I0, line, config.T, config.h)
        steps = max(1, int(math.ceil(config.T / line.tau - 1e-9)))
        traj = solve_difference(system, waves, steps)
    else:
        system = boundary_to_ndde(line)
        if config.integration_constant is not None:
            waves = with_integration_constant(waves, line, config.integration_constant)
        traj = integrate(system, waves, config.T, config.h, blowup_threshold=config.tolerances.blowup_threshold)

    phi_traj, psi_traj = split_waves(traj)
    B, f = wave_matrix(line)
    count = max(1, int(math.floor(config.T / config.h + 1e-9)))
    times = np.arange(count + 1) * config.h
    field = field_frame(phi_traj, psi_traj, line, config.nx, times)

    document = TelegraphDocument(
        line=line, c=line.c, tau=line.tau, r=line.r,
        B=np.asarray(B).tolist(), f=np.asarray(f).tolist(),
        cross_validation=report,
    )
    files = {
        "field": str(out.write_csv("field", field)),
        "telegraph": str(out.write_json("telegraph", document)),
    }

    summary = f"telegraph {line.boundary.value}: tau={line.tau:.6g}, r={line.r:.6g}, {len(field)} field rows"
    if report is not None:
        summary += f", max residual {report.max_residual:.3e}"
        if report.compatible and report.max_residual > settings.cauchy_tolerance:
            logger.warning(f"compatible data but residual {report.max_residual:.3e} on the field grid")
    return CommandResult(summary=summary, files=files)
