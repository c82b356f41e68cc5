# run_config.py
"""
Pydantic models validating lab run configurations (JSON file or CLI flags).
Unknown keys are rejected everywhere.
"""
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from CGM_Engine.tolerance_rules import JetRules, SamplingRules, SuiteTolerances

from .moebius_map import MoebiusMap
from .surface_spec import SurfaceSpec

COMMANDS = ("verify", "energy", "duality", "invariance", "neck-scan", "sweep")


class SurfaceSpecConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["sphere", "torus", "perturbed-sphere", "patch-r2xs2", "patch-rxs3"]
    radius: float = 1.0
    center: List[float] = Field(default_factory=lambda: [0.0] * 5)
    major_radius: float = 2.0
    minor_radius: float = 1.0
    amplitude: float = 0.0
    perturbation: str = "x1x2"
    length: float = 1.0
    normal_sign: Literal[1, -1] = 1

    def to_spec(self) -> SurfaceSpec:
        spec = SurfaceSpec.from_dict(self.model_dump())
        spec.validate()
        return spec


class MoebiusPrimitiveConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["translation", "rotation", "dilation", "inversion"]
    value: float | List[float] | List[List[float]]


class MoebiusConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    primitives: List[MoebiusPrimitiveConfig] = Field(default_factory=list)

    def to_map(self) -> MoebiusMap:
        return MoebiusMap.from_dict(self.model_dump())


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    path: Optional[str] = None
    format: Literal["json", "csv", "xlsx"] = "json"


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: Literal["verify", "energy", "duality", "invariance", "neck-scan", "sweep"]
    surface: SurfaceSpecConfig = Field(default_factory=lambda: SurfaceSpecConfig(kind="torus"))
    level: int = Field(default=2, ge=0, le=8)
    order: int = Field(default=4, ge=3, le=JetRules.MAX_ORDER)
    moebius: Optional[MoebiusConfig] = None
    output: OutputConfig = Field(default_factory=OutputConfig)
    seed: int = SamplingRules.DEFAULT_SEED
    points: int = Field(default=SamplingRules.DEFAULT_POINTS, ge=1)
    neck_lengths: List[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0])
    tolerances: Dict[str, float] = Field(default_factory=dict)

    @field_validator("tolerances")
    @classmethod
    def _known_suites(cls, value: Dict[str, float]) -> Dict[str, float]:
        try:
            SuiteTolerances.merged(value)
        except KeyError as e:
            raise ValueError(e.args[0]) from e
        return value

    @field_validator("neck_lengths")
    @classmethod
    def _positive_lengths(cls, value: List[float]) -> List[float]:
        if not value or any(not L > 0 for L in value):
            raise ValueError("neck lengths must be positive")
        return value

    def tolerance_table(self) -> Dict[str, float]:
        return SuiteTolerances.merged(self.tolerances)
