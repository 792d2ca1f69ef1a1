"""HTTP front end for the job store.

All endpoints live under /api and speak JSON; errors use a uniform
{error, detail} body (422 for validation, 404 for unknown ids). A built
front-end bundle can be mounted at / for the interactive explorer.
"""
from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .jobs import JobNotFound, JobStore, JobValidationError
from .systems import catalog

__all__ = ["create_app"]


def _parse_axis_filters(values: list[str]) -> list[tuple[str, float, float]]:
    filters = []
    for raw in values:
        parts = raw.rsplit(":", 2)
        if len(parts) != 3:
            raise JobValidationError(f"axis filter must be name:lo:hi, got {raw!r}")
        name, lo_s, hi_s = parts
        try:
            filters.append((name, float(lo_s), float(hi_s)))
        except ValueError:
            raise JobValidationError(f"axis filter bounds must be numbers, got {raw!r}") from None
    return filters


def create_app(
    data_dir: str = "./chaoscope-data",
    workers: int = 2,
    store: Optional[JobStore] = None,
    ui_dist: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="chaoscope", docs_url="/api/docs", openapi_url="/api/openapi.json")
    app.state.store = store if store is not None else JobStore(data_dir, workers=workers)

    @app.exception_handler(JobValidationError)
    async def _validation(_req: Request, exc: JobValidationError):
        return JSONResponse(status_code=422, content={"error": "validation", "detail": str(exc)})

    @app.exception_handler(JobNotFound)
    async def _not_found(_req: Request, exc: JobNotFound):
        return JSONResponse(status_code=404, content={"error": "not_found", "detail": str(exc)})

    @app.get("/api/systems")
    def systems():
        return catalog()

    @app.post("/api/jobs")
    async def create_job(request: Request):
        body = await request.json()
        job_id = app.state.store.create_job(body)
        return {"id": job_id}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        return app.state.store.get_job(job_id)

    @app.get("/api/jobs/{job_id}/samples")
    def get_samples(job_id: str, request: Request):
        filters = _parse_axis_filters(request.query_params.getlist("axis"))
        return app.state.store.get_samples(job_id, filters)

    @app.post("/api/jobs/{job_id}/refine")
    async def refine(job_id: str, request: Request):
        body = await request.json()
        if not isinstance(body, dict) or "box" not in body:
            raise JobValidationError("refine body must be an object with a 'box' list")
        new_id = app.state.store.refine_job(job_id, body["box"])
        return {"id": new_id}

    @app.get("/api/jobs/{job_id}/results.csv")
    def results_csv(job_id: str):
        path = app.state.store.results_csv_path(job_id)
        return FileResponse(path, media_type="text/csv", filename=f"{job_id}.csv")

    @app.get("/api/jobs/{job_id}/result.json")
    def result_json(job_id: str):
        return app.state.store.result_json(job_id)

    if ui_dist and Path(ui_dist).is_dir():
        app.mount("/", StaticFiles(directory=ui_dist, html=True), name="ui")

    return app
