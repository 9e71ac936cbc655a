"""Pydantic request/response models shared by the HTTP service and the CLI."""

from __future__ import annotations

from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field


class EigenRequest(BaseModel):
    p: float
    a: float = 0.0
    b: float = 1.0
    tol: float = 1e-10


class MeshPoint(BaseModel):
    x: float
    v: float
    dv: float


class EigenResponse(BaseModel):
    p: float
    a: float
    b: float
    eta: float
    pi_p: float
    eta_from_pi_p: float
    endpoint_residual: float
    mesh: List[MeshPoint]


class BoxSchema(BaseModel):
    a: List[float]
    b: List[float]


class GridSchema(BaseModel):
    n: List[int]


class SolveOptions(BaseModel):
    eps: Optional[float] = None
    alpha: Optional[List[float]] = None
    M: Optional[float] = None
    tol: float = 1e-4
    reg: float = 1e-8
    check_tol: float = 1e-3
    max_outer: int = 200


class SolveConfig(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    p: List[float]
    q: float
    lam: float = Field(alias="lambda")
    omega: BoxSchema
    grid: GridSchema
    options: SolveOptions = SolveOptions()


class ValidateResponse(BaseModel):
    sum_inv_p: float
    picondition_ok: bool
    p_star: Optional[float]
    p_infinity: Optional[float]
    regime: str
    compact_embedding_ok: Optional[bool]
    p_sorted: List[float]


class BarrierSummary(BaseModel):
    regime: str
    eps: float
    alpha: List[float]
    M: float
    delta: Optional[float]
    lambda_star_sub: float
    lambda_star_super: float
    nonexistence_bound: Optional[float] = None
    inner: BoxSchema
    outer: BoxSchema


class CheckSummary(BaseModel):
    kind: str
    passed: bool
    worst: float
    tol: float
    worst_nodes: List[dict]


class SolveResponse(BaseModel):
    regime: str
    barrier: BarrierSummary
    report: dict
    checks: List[CheckSummary]
    sandwich: dict
    poincare: dict
    all_checks_passed: bool


class ScanRequest(BaseModel):
    config: SolveConfig
    lo: float
    hi: float
    steps: int


class ScanResponse(BaseModel):
    points: List[dict]
    bracket: List[Optional[float]]
    mass_floor: float
    nonexistence_bound: Optional[float] = None
    successes_below_bound: List[float] = []
