"""Request and response models of the HTTP API."""

from __future__ import annotations

from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, Field

Coordinate = Union[int, float, str]


class PointModel(BaseModel):
    t: Coordinate
    x: list[Coordinate]


class TaskInputModel(BaseModel):
    point: PointModel
    cardinality: int


class MapRowModel(BaseModel):
    m: list[int]
    returns: list[int] = Field(default_factory=list)


class TaskModel(BaseModel):
    dimension: Optional[int] = None
    start: PointModel
    inputs: list[TaskInputModel] = Field(default_factory=list)
    returns: list[PointModel]
    map: list[MapRowModel]
    forbidden: list[list[int]] = Field(default_factory=list)


class HealthResponse(BaseModel):
    status: str
    version: str


class ValidateRequest(BaseModel):
    task: TaskModel


class ValidateResponse(BaseModel):
    valid: bool
    violations: list[str]


class CheckRequest(BaseModel):
    task: TaskModel


class ScreenModel(BaseModel):
    name: str
    passed: bool
    witness: Any = None
    informational: bool = False


class CheckResponse(BaseModel):
    valid: bool
    violations: list[str]
    variant: Optional[str] = None
    regime: Optional[str] = None
    possible: Optional[bool] = None
    reason: str = ""
    screens: list[ScreenModel] = Field(default_factory=list)
    witness: Any = None


class SynthesizeRequest(BaseModel):
    task: TaskModel
    secret_dim: int = 3


class SynthesizeResponse(BaseModel):
    plan: dict


class RunRequest(BaseModel):
    task: TaskModel
    seed: int = 0
    assignment: Optional[list[int]] = None
    exhaustive: bool = False
    mode: Literal["quantum", "classical_token", "classical_simulate"] = "quantum"
    include_trace: bool = False
    jobs: Optional[int] = None
    secret_dim: int = 3


class RunResponse(BaseModel):
    mode: str
    plan: Optional[dict] = None
    rows: list[dict]
    min_fidelity: Optional[float] = None
    mismatches: Optional[int] = None
    audit_ok: bool


class GenerateRequest(BaseModel):
    scenario: str
    seed: Optional[int] = None
    params: dict = Field(default_factory=dict)


class GenerateResponse(BaseModel):
    scenario: str
    task: dict


class RefusalDetail(BaseModel):
    kind: Literal["refused", "unsupported"]
    reason: str
    witness: Any = None
