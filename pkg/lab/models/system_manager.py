"""
System Manager - builds systems, histories and observables from run configs
"""
import logging
import math
from typing import Any, Callable, Dict, List

import numpy as np

from config.settings import settings
from config.run_config import (
    BraytonMirankerSystem,
    HistoryConfig,
    HistoryKind,
    LinearSystem,
    ObservableConfig,
    ProfileConfig,
    ProfileKind,
    TelegraphDynamicSystem,
)
from errors import ValidationError
from models.difference import project_to_kernel
from models.history import HistorySegment
from models.ndde import NddeSystem, brayton_miranker, linear_ndde
from models.telegraph import BoundaryKind, TelegraphLine, boundary_to_ndde
from services.measure import (
    Observable,
    constant_observable,
    point_square,
    point_value,
    sup_norm_observable,
)

logger = logging.getLogger(__name__)


class SystemManager:
    """Registry of NDDE presets and the builders used by the commands"""

    def __init__(self):
        self.presets: Dict[str, Callable[[Any], NddeSystem]] = {
            "brayton_miranker": self._build_brayton_miranker,
            "linear": self._build_linear,
            "telegraph_dynamic": self._build_telegraph_dynamic,
        }

    def get_available_presets(self) -> List[str]:
        return list(self.presets.keys())

    def build_system(self, config) -> NddeSystem:
        if config.preset not in self.presets:
            raise ValidationError(f"Preset {config.preset} not available; choose from {self.get_available_presets()}")
        system = self.presets[config.preset](config)
        logger.info(f"Built {config.preset} system (dim={system.dim}, tau={system.tau:g})")
        return system

    @staticmethod
    def _build_brayton_miranker(config: BraytonMirankerSystem) -> NddeSystem:
        return brayton_miranker(config.q, config.m, config.p, config.b, config.c, config.alphas, tau=config.tau)

    @staticmethod
    def _build_linear(config: LinearSystem) -> NddeSystem:
        a = config.a if isinstance(config.a, float) else np.asarray(config.a)
        return linear_ndde(config.B, a, config.p, tau=config.tau)

    @staticmethod
    def _build_telegraph_dynamic(config: TelegraphDynamicSystem) -> NddeSystem:
        line = TelegraphLine(L=config.L, C=config.C, R0=config.R0, E=config.E, boundary=BoundaryKind.DYNAMIC)
        return boundary_to_ndde(line)

    # Histories

    def build_history(
        self,
        config: HistoryConfig,
        system: NddeSystem,
        rng: np.random.Generator = None,
    ) -> HistorySegment:
        """Initial history on [-tau, 0] for ``system``"""
        n, tau = system.dim, system.tau
        N = config.nodes or settings.history_nodes
        value = self._per_component("history.value", config.value, n)

        if config.kind is HistoryKind.CONSTANT:
            phi = HistorySegment.constant(value, tau, N)
        elif config.kind is HistoryKind.LINEAR:
            slope = self._per_component("history.slope", config.slope or [0.0], n)
            phi = HistorySegment.from_function(lambda th: value + slope * th, tau, N, n)
        elif config.kind is HistoryKind.SINE:
            omega = 2.0 * math.pi * config.frequency / tau
            phi = HistorySegment.from_function(
                lambda th: value + config.amplitude * np.sin(omega * th + np.arange(n)), tau, N, n
            )
        elif config.kind is HistoryKind.RANDOM:
            if rng is None:
                raise ValidationError("random history needs a seeded generator")
            phi = self.random_history(rng, n, tau, N, config.amplitude, value)
        else:
            if not config.values:
                raise ValidationError("history kind 'values' needs explicit values")
            phi = HistorySegment.from_values(tau, config.values)
            if phi.dim != n:
                raise ValidationError(f"history.values rows have {phi.dim} components, system has {n}")

        if config.project_to_kernel:
            phi = project_to_kernel(phi, system.B)
        return phi

    @staticmethod
    def _per_component(name: str, values: List[float], n: int) -> np.ndarray:
        """One value per component; a single value is broadcast"""
        array = np.asarray(values, dtype=float)
        if array.shape not in ((1,), (n,)):
            raise ValidationError(f"{name} has {array.size} entries, system dimension is {n}")
        return np.broadcast_to(array, (n,))

    @staticmethod
    def random_history(
        rng: np.random.Generator,
        dim: int,
        tau: float,
        N: int,
        amplitude: float = 1.0,
        center=0.0,
    ) -> HistorySegment:
        """Random trigonometric history with a few smooth modes"""
        thetas = np.linspace(-tau, 0.0, N + 1)
        thetas[-1] = 0.0
        coeffs = rng.uniform(-1.0, 1.0, size=(4, dim))
        phases = rng.uniform(0.0, 2.0 * math.pi, size=(4, dim))
        modes = np.arange(4)[:, None, None]
        waves = coeffs[:, None, :] * np.cos(math.pi * modes * thetas[None, :, None] / tau + phases[:, None, :])
        values = np.asarray(center) + amplitude * waves.sum(axis=0) / 4.0
        return HistorySegment(tau, values)

    # Observables and profiles

    @staticmethod
    def build_observable(config: ObservableConfig, tau: float, dim: int) -> Observable:
        if config.kind in ("point", "square") and config.component >= dim:
            raise ValidationError(f"observable component {config.component} out of range for dimension {dim}")
        theta = max(min(config.theta, 0.0), -tau)
        if config.kind == "point":
            return point_value(theta, config.component)
        if config.kind == "square":
            return point_square(theta, config.component)
        if config.kind == "sup_norm":
            return sup_norm_observable()
        return constant_observable(config.value)

    @staticmethod
    def build_profile(config: ProfileConfig) -> Callable[[float], float]:
        if config.kind is ProfileKind.CONSTANT:
            return lambda x: config.value
        if config.kind is ProfileKind.POLYNOMIAL:
            coefficients = list(config.coefficients)
            return lambda x: float(sum(a * x ** k for k, a in enumerate(coefficients)))
        return lambda x: config.offset + config.amplitude * math.sin(config.mode * math.pi * x)


# Global system manager instance
system_manager = SystemManager()
