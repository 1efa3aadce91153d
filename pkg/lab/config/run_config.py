"""
Pydantic schemas for command-line run configurations
"""
import json
from enum import Enum
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Type, TypeVar, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError as PydanticValidationError

from errors import ConfigError
from models.memory.kernels import KernelFamily
from models.telegraph import BoundaryKind


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class HistoryKind(str, Enum):
    CONSTANT = "constant"
    LINEAR = "linear"
    SINE = "sine"
    RANDOM = "random"
    VALUES = "values"


class ProfileKind(str, Enum):
    CONSTANT = "constant"
    POLYNOMIAL = "polynomial"
    SINE = "sine"


class ToleranceOverrides(StrictModel):
    blowup_threshold: Optional[float] = Field(default=None, gt=0)
    cauchy_tolerance: Optional[float] = Field(default=None, gt=0)
    c_fit: Optional[float] = Field(default=None, gt=0)


class CommonConfig(StrictModel):
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    precision: int = Field(default=17, ge=1, le=17)
    tolerances: ToleranceOverrides = Field(default_factory=ToleranceOverrides)


# Systems and histories

class BraytonMirankerSystem(StrictModel):
    preset: Literal["brayton_miranker"]
    q: float
    m: float
    p: float = 0.0
    b: float
    c: float
    alphas: List[float] = Field(min_length=2, max_length=2)
    tau: float = Field(default=1.0, gt=0)


class LinearSystem(StrictModel):
    preset: Literal["linear"]
    B: List[List[float]]
    a: Union[float, List[List[float]]] = 1.0
    p: Union[float, List[float]] = 0.0
    tau: float = Field(default=1.0, gt=0)


class TelegraphDynamicSystem(StrictModel):
    preset: Literal["telegraph_dynamic"]
    L: float = Field(gt=0)
    C: float = Field(gt=0)
    R0: float = Field(default=0.0, ge=0)
    E: float = 0.0


SystemConfig = Annotated[
    Union[BraytonMirankerSystem, LinearSystem, TelegraphDynamicSystem],
    Field(discriminator="preset"),
]


class HistoryConfig(StrictModel):
    """Initial history: constant, linear ramp, sine, seeded random or explicit values"""

    kind: HistoryKind = HistoryKind.CONSTANT
    value: List[float] = Field(default_factory=lambda: [0.0])
    slope: List[float] = Field(default_factory=list)
    amplitude: float = 1.0
    frequency: float = 1.0
    values: List[List[float]] = Field(default_factory=list)
    nodes: Optional[int] = Field(default=None, ge=2)
    project_to_kernel: bool = False


class ObservableConfig(StrictModel):
    kind: Literal["point", "square", "sup_norm", "constant"] = "point"
    theta: float = 0.0
    component: int = Field(default=0, ge=0)
    value: float = 0.0


# Commands

class SimulateConfig(CommonConfig):
    system: SystemConfig
    history: HistoryConfig = Field(default_factory=HistoryConfig)
    T: float = Field(gt=0)
    h: float = Field(gt=0)
    integration_constant: Optional[List[float]] = None


class FalsifyConfig(StrictModel):
    radius: float = Field(default=10.0, gt=0)
    samples: int = Field(default=10000, ge=1)


class BmValidationConfig(StrictModel):
    alpha_prime: float
    epsilon: float = Field(gt=0)


class CertifyConfig(CommonConfig):
    alpha: Optional[float] = None
    beta: Optional[float] = None
    gamma: float = Field(default=0.0, ge=0)
    b_norm: Optional[float] = Field(default=None, ge=0)
    B: Optional[List[List[float]]] = None
    tau: Optional[float] = Field(default=None, gt=0)
    system: Optional[SystemConfig] = None
    falsify: Optional[FalsifyConfig] = None
    brayton_miranker: Optional[BmValidationConfig] = None
    fit_gamma: bool = False


class EnsembleConfig(StrictModel):
    n_traj: int = Field(ge=1)
    sampler: HistoryConfig = Field(default_factory=lambda: HistoryConfig(kind=HistoryKind.RANDOM))


class MeasureConfig(CommonConfig):
    system: SystemConfig
    history: HistoryConfig = Field(default_factory=HistoryConfig)
    T: float = Field(gt=0)
    h: float = Field(gt=0)
    burn_in: Optional[float] = Field(default=None, ge=0)
    stride: Optional[float] = Field(default=None, gt=0)
    t_star: Optional[float] = Field(default=None, gt=0)
    observables: List[ObservableConfig] = Field(default_factory=list)
    ensemble: Optional[EnsembleConfig] = None
    dump_snapshots: bool = False


class ProfileConfig(StrictModel):
    """V0 or I0 on [0, 1]: constant, polynomial coefficients, or a sine mode"""

    kind: ProfileKind = ProfileKind.CONSTANT
    value: float = 0.0
    coefficients: List[float] = Field(default_factory=list)
    amplitude: float = 1.0
    mode: float = 1.0
    offset: float = 0.0


class TelegraphConfig(CommonConfig):
    L: float = Field(gt=0)
    C: float = Field(gt=0)
    R0: float = Field(default=0.0, ge=0)
    E: float = 0.0
    boundary: BoundaryKind = BoundaryKind.STATIC
    V0: ProfileConfig = Field(default_factory=ProfileConfig)
    I0: ProfileConfig = Field(default_factory=ProfileConfig)
    T: float = Field(gt=0)
    h: float = Field(gt=0)
    nx: int = Field(default=10, ge=1)
    integration_constant: Optional[List[float]] = None


class KernelConfig(StrictModel):
    family: KernelFamily
    mu0: float = 1.0
    delta: Optional[float] = None
    t_star: Optional[float] = None
    grid: List[float] = Field(default_factory=list)
    values: List[float] = Field(default_factory=list)


class StructureConfig(StrictModel):
    kind: Literal["zero", "random"] = "zero"
    scale: float = 1.0


class MemoryConfig(CommonConfig):
    eigenvalues: List[float] = Field(min_length=1)
    nu: float = Field(gt=0)
    forcing: List[float] = Field(default_factory=list)
    structure: StructureConfig = Field(default_factory=StructureConfig)
    kernel: KernelConfig
    u0: Optional[List[float]] = None
    u0_scale: float = 1.0
    T: float = Field(gt=0)
    h: float = Field(gt=0)
    samples: Optional[int] = Field(default=None, ge=3)


ConfigT = TypeVar("ConfigT", bound=BaseModel)


def load_config(path: Path, schema: Type[ConfigT]) -> ConfigT:
    """Read a JSON config file and validate it against ``schema``"""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON in {path} at line {e.lineno}, column {e.colno}: {e.msg}") from e
    try:
        return schema.model_validate(raw)
    except PydanticValidationError as e:
        raise ConfigError(f"invalid config {path}: {e}") from e
