"""FastAPI service exposing the toolkit."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import service
from .errors import (
    AnisolapError,
    CertificationError,
    ContainmentError,
    ContractError,
    InvalidExponentError,
    NoAdmissibleEpsilonError,
    NonconvergenceError,
    RegimeError,
    SearchFailureError,
)
from .schemas import (
    EigenRequest,
    EigenResponse,
    ScanRequest,
    ScanResponse,
    SolveConfig,
    SolveResponse,
    ValidateResponse,
)

app = FastAPI(
    title="anisolap",
    description=(
        "Sub/supersolution toolkit for the orthotropic p-Laplacian "
        "eigenvalue-type problem"
    ),
)

_STATUS = {
    RegimeError: (409, "regime"),
    NoAdmissibleEpsilonError: (409, "no-admissible-parameter"),
    CertificationError: (409, "certification"),
    ContainmentError: (422, "containment"),
    ContractError: (422, "contract"),
    InvalidExponentError: (422, "invalid-exponent"),
    SearchFailureError: (500, "search-failure"),
    NonconvergenceError: (500, "nonconvergence"),
}


@app.exception_handler(AnisolapError)
async def anisolap_error_handler(request: Request, exc: AnisolapError):
    status, code = 400, "error"
    for cls, (st, cd) in _STATUS.items():
        if isinstance(exc, cls):
            status, code = st, cd
            break
    return JSONResponse(status_code=status, content={"error": code, "detail": str(exc)})


@app.exception_handler(ValueError)
async def value_error_handler(request: Request, exc: ValueError):
    return JSONResponse(status_code=422, content={"error": "value", "detail": str(exc)})


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/eigen1d", response_model=EigenResponse)
def eigen1d(req: EigenRequest) -> EigenResponse:
    return service.run_eigen1d(req)


@app.post("/validate", response_model=ValidateResponse)
def validate(cfg: SolveConfig) -> ValidateResponse:
    return service.run_validate(cfg)


@app.post("/solve", response_model=SolveResponse)
def solve(cfg: SolveConfig) -> SolveResponse:
    resp, _, _, _ = service.run_solve(cfg)
    return resp


@app.post("/lambda-scan", response_model=ScanResponse)
def lambda_scan(req: ScanRequest) -> ScanResponse:
    return service.run_lambda_scan(req)
