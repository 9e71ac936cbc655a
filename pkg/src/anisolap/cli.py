"""Command-line frontend.

A thin client over the service layer: each subcommand builds the same
pydantic request the HTTP API accepts and either calls the service
in-process (default) or posts it to a running server via ``--url``.

Exit codes: 0 success, 1 numeric failure / failed verification,
2 usage error, 3 regime error.
"""

from __future__ import annotations

import csv
import json
import os
import sys
from pathlib import Path

import click

from . import service
from .errors import (
    AnisolapError,
    NoAdmissibleEpsilonError,
    NonconvergenceError,
    RegimeError,
    SearchFailureError,
)
from .schemas import EigenRequest, ScanRequest, SolveConfig

OUTDIR_ENV = "ANISOLAP_OUTDIR"


def _outdir(out):
    d = Path(out or os.environ.get(OUTDIR_ENV, "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_json(path: Path, payload):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_field_csv(path: Path, gridfield):
    dim = gridfield.grid.dim
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"i{k}" for k in range(dim)]
                   + [f"x{k}" for k in range(dim)] + ["value"])
        for idx, x, v in gridfield.rows():
            w.writerow([*idx, *(f"{xi:.17g}" for xi in x), f"{v:.17g}"])


class _RemoteClient:
    def __init__(self, url):
        import httpx

        self.url = url.rstrip("/")
        self._client = httpx.Client(timeout=600.0)

    def post(self, endpoint, payload):
        r = self._client.post(self.url + endpoint, json=payload)
        if r.status_code >= 400:
            detail = r.json() if "json" in r.headers.get("content-type", "") else r.text
            code = detail.get("error") if isinstance(detail, dict) else None
            if code == "regime":
                raise RegimeError(str(detail))
            raise click.ClickException(f"server error {r.status_code}: {detail}")
        return r.json()


@click.group()
@click.option("--url", default=None, metavar="URL",
              help="Base URL of a running anisolap server; default runs in-process.")
@click.option("--out", default=None, metavar="DIR",
              help=f"Output directory (default: ${OUTDIR_ENV} or cwd).")
@click.pass_context
def main(ctx, url, out):
    """Sub/supersolution toolkit for the orthotropic p-Laplacian problem."""
    ctx.ensure_object(dict)
    ctx.obj["remote"] = _RemoteClient(url) if url else None
    ctx.obj["out"] = out


def _load_config(path) -> SolveConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read config {path}: {exc}")
    try:
        return SolveConfig.model_validate(raw)
    except Exception as exc:
        raise click.UsageError(f"invalid config {path}: {exc}")


@main.command("eigen1d")
@click.option("--p", "p", type=float, required=True)
@click.option("--a", "a", type=float, default=0.0, show_default=True)
@click.option("--b", "b", type=float, default=1.0, show_default=True)
@click.option("--tol", type=float, default=1e-10, show_default=True)
@click.pass_context
def eigen1d_cmd(ctx, p, a, b, tol):
    """Principal 1D p-Laplacian eigenpair on (a, b)."""
    if p <= 1.0:
        raise click.UsageError(f"--p must exceed 1, got {p}")
    if a >= b:
        raise click.UsageError(f"--a must be below --b, got [{a}, {b}]")
    req = EigenRequest(p=p, a=a, b=b, tol=tol)
    try:
        if ctx.obj["remote"]:
            rec = ctx.obj["remote"].post("/eigen1d", req.model_dump())
        else:
            rec = service.run_eigen1d(req).model_dump()
    except (SearchFailureError, AnisolapError) as exc:
        click.echo(f"eigenpair solve failed: {exc}", err=True)
        sys.exit(1)
    outdir = _outdir(ctx.obj["out"])
    _write_json(outdir / "eigenpair.json", rec)
    with (outdir / "eigenpair.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "v", "dv"])
        for m in rec["mesh"]:
            w.writerow([f"{m['x']:.17g}", f"{m['v']:.17g}", f"{m['dv']:.17g}"])
    click.echo(f"eta = {rec['eta']:.12g}")
    click.echo(
        f"pi_p cross-check: pi_p = {rec['pi_p']:.12g}, "
        f"(p-1)(pi_p/L)^p = {rec['eta_from_pi_p']:.12g}, "
        f"relative gap = {abs(rec['eta'] - rec['eta_from_pi_p']) / rec['eta']:.3e}"
    )


@main.command("solve")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.pass_context
def solve_cmd(ctx, config_path):
    """Build barriers, run the monotone iteration, verify the result."""
    cfg = _load_config(config_path)
    outdir = _outdir(ctx.obj["out"])
    try:
        if ctx.obj["remote"]:
            rec = ctx.obj["remote"].post(
                "/solve", cfg.model_dump(by_alias=True)
            )
            _write_json(outdir / "report.json", rec)
            click.echo("remote solve: report.json written (field CSVs are "
                       "produced in local mode only)")
            sys.exit(0 if rec["all_checks_passed"] else 1)
        resp, solution, lower, upper = service.run_solve(cfg)
    except RegimeError as exc:
        click.echo(f"regime error: {exc}", err=True)
        sys.exit(3)
    except (NonconvergenceError, NoAdmissibleEpsilonError, AnisolapError) as exc:
        click.echo(f"solve failed: {exc}", err=True)
        sys.exit(1)
    rec = resp.model_dump()
    _write_json(outdir / "report.json", rec)
    _write_field_csv(outdir / "solution.csv", solution)
    _write_field_csv(outdir / "barrier_sub.csv", lower)
    _write_field_csv(outdir / "barrier_super.csv", upper)
    click.echo(
        f"converged in {rec['report']['iterations']} outer iterations, "
        f"residual {rec['report']['final_residual']:.3e}, "
        f"positive mass {rec['report']['positive_mass']:.6g}"
    )
    click.echo(f"verification checks passed: {rec['all_checks_passed']}")
    sys.exit(0 if rec["all_checks_passed"] else 1)


@main.command("lambda-scan")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--lo", type=float, required=True)
@click.option("--hi", type=float, required=True)
@click.option("--steps", type=int, default=12, show_default=True)
@click.pass_context
def lambda_scan_cmd(ctx, config_path, lo, hi, steps):
    """Classify a geometric lambda ladder and bracket the threshold."""
    if lo >= hi:
        raise click.UsageError(f"--lo must be below --hi, got [{lo}, {hi}]")
    if steps < 2:
        raise click.UsageError("--steps must be at least 2")
    cfg = _load_config(config_path)
    req = ScanRequest(config=cfg, lo=lo, hi=hi, steps=steps)
    try:
        if ctx.obj["remote"]:
            rec = ctx.obj["remote"].post(
                "/lambda-scan", req.model_dump(by_alias=True)
            )
        else:
            rec = service.run_lambda_scan(req).model_dump()
    except RegimeError as exc:
        click.echo(f"regime error: {exc}", err=True)
        sys.exit(3)
    except AnisolapError as exc:
        click.echo(f"scan failed: {exc}", err=True)
        sys.exit(1)
    outdir = _outdir(ctx.obj["out"])
    with (outdir / "ladder.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "classified", "positive_mass", "residual",
                    "route", "outer_iterations"])
        for pt in rec["points"]:
            w.writerow([f"{pt['lambda']:.17g}", pt["classified"],
                        f"{pt['positive_mass']:.17g}", f"{pt['residual']:.17g}",
                        pt["route"], pt["outer_iterations"]])
    _write_json(outdir / "bracket.json", {
        "bracket": rec["bracket"],
        "mass_floor": rec["mass_floor"],
        "nonexistence_bound": rec["nonexistence_bound"],
        "successes_below_bound": rec["successes_below_bound"],
    })
    click.echo(f"bracket: {rec['bracket']}")
    if rec["nonexistence_bound"] is not None:
        click.echo(f"nonexistence bound (q = p_1): {rec['nonexistence_bound']:.6g}")
        if rec["successes_below_bound"]:
            click.echo(
                f"WARNING: classifications contradict the bound at "
                f"{rec['successes_below_bound']}", err=True)
            sys.exit(1)
    sys.exit(0)


@main.command("validate")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.pass_context
def validate_cmd(ctx, config_path):
    """Exponent diagnostics for a config."""
    cfg = _load_config(config_path)
    if ctx.obj["remote"]:
        rec = ctx.obj["remote"].post("/validate", cfg.model_dump(by_alias=True))
    else:
        rec = service.run_validate(cfg).model_dump()
    click.echo(json.dumps(rec, indent=2, sort_keys=True))


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve_cmd(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("anisolap.api:app", host=host, port=port)


if __name__ == "__main__":
    main()
