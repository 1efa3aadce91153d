"""
measure: time averages, running averages, empirical measure and invariance defect
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel

from commands import CommandResult
from config.run_config import MeasureConfig
from models.ndde import integrate
from models.system_manager import system_manager
from services.measure import (
    CesaroResult,
    EnsembleResult,
    InvarianceReport,
    cesaro_limit,
    default_burn_in,
    default_suite,
    ensemble_average,
    expect,
    invariance_defect,
    running_average,
    snapshot_measure,
    snapshots_frame,
    time_average,
)
from services.output_manager import OutputManager

logger = logging.getLogger(__name__)


class ObservableSummary(BaseModel):
    """mean is the ensemble mean when an ensemble ran, else the time average"""

    label: str
    mean: float
    stderr: Optional[float] = None
    time_average: float
    measure_average: float
    cesaro: CesaroResult
    ensemble: Optional[EnsembleResult] = None


class MeasureDocument(BaseModel):
    """measure.json layout"""

    system: str
    T: float
    h: float
    burn_in: float
    stride: float
    snapshots: int
    observables: List[ObservableSummary]
    invariance: InvarianceReport
    snapshots_file: Optional[str] = None


def run(config: MeasureConfig, out: OutputManager, seed: int, threads: int = 1) -> CommandResult:
    system = system_manager.build_system(config.system)
    phi = system_manager.build_history(config.history, system, np.random.default_rng(seed))
    traj = integrate(system, phi, config.T, config.h, blowup_threshold=config.tolerances.blowup_threshold)

    burn_in = default_burn_in(system, phi) if config.burn_in is None else config.burn_in
    burn_in = min(burn_in, max(config.T - system.tau, 0.0))
    stride = system.tau if config.stride is None else config.stride
    mu = snapshot_measure(traj, burn_in, stride)

    if config.observables:
        suite = [system_manager.build_observable(o, system.tau, system.dim) for o in config.observables]
    else:
        suite = default_suite(system.tau)

    def sampler(rng: np.random.Generator):
        return system_manager.build_history(config.ensemble.sampler, system, rng)

    summaries = []
    for obs in suite:
        series = running_average(traj, obs, burn_in)
        ensemble = None
        if config.ensemble is not None:
            ensemble = ensemble_average(
                system, sampler, config.ensemble.n_traj, config.T, config.h, obs, burn_in, seed, threads
            )
        average = time_average(traj, obs, burn_in)
        summaries.append(ObservableSummary(
            label=obs.label,
            mean=ensemble.mean if ensemble is not None else average,
            stderr=ensemble.stderr if ensemble is not None else None,
            time_average=average,
            measure_average=expect(mu, obs),
            cesaro=cesaro_limit(series, config.tolerances.cauchy_tolerance),
            ensemble=ensemble,
        ))

    t_star = system.tau if config.t_star is None else config.t_star
    invariance = invariance_defect(mu, system, t_star, config.h, suite)

    files: Dict[str, str] = {}
    if config.dump_snapshots:
        files["snapshots"] = str(out.write_csv("snapshots", snapshots_frame(mu)))

    document = MeasureDocument(
        system=system.label,
        T=config.T,
        h=config.h,
        burn_in=burn_in,
        stride=stride,
        snapshots=len(mu.snapshots),
        observables=summaries,
        invariance=invariance,
        snapshots_file=Path(files["snapshots"]).name if "snapshots" in files else None,
    )
    files["measure"] = str(out.write_json("measure", document))

    head = summaries[0]
    summary = (
        f"measure {system.label}: {len(mu.snapshots)} snapshots, "
        f"<{head.label}> = {head.time_average:.6g}, invariance defect {invariance.max:.3e}"
    )
    return CommandResult(summary=summary, files=files)
