"""
simulate: integrate one NDDE trajectory and write it as CSV
"""
import logging

import numpy as np

from commands import CommandResult
from config.run_config import SimulateConfig
from errors import ValidationError
from models.ndde import integrate
from models.system_manager import system_manager
from models.telegraph import BoundaryKind, TelegraphLine, with_integration_constant
from services.output_manager import OutputManager

logger = logging.getLogger(__name__)


def run(config: SimulateConfig, out: OutputManager, seed: int, threads: int = 1) -> CommandResult:
    system = system_manager.build_system(config.system)
    phi = system_manager.build_history(config.history, system, np.random.default_rng(seed))

    if config.integration_constant is not None:
        if config.system.preset != "telegraph_dynamic":
            raise ValidationError("integration_constant applies to the telegraph_dynamic preset only")
        line = TelegraphLine(
            L=config.system.L, C=config.system.C, R0=config.system.R0, E=config.system.E,
            boundary=BoundaryKind.DYNAMIC,
        )
        phi = with_integration_constant(phi, line, config.integration_constant)

    traj = integrate(system, phi, config.T, config.h, blowup_threshold=config.tolerances.blowup_threshold)
    path = out.write_csv("trajectory", traj.to_frame())
    final = float(np.linalg.norm(traj.states[-1]))
    summary = f"simulate {system.label}: {len(traj.times)} rows to t={traj.horizon:.6g}, |x(T)|={final:.6g}"
    return CommandResult(summary=summary, files={"trajectory": str(path)})
