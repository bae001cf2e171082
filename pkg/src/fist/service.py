"""HTTP API backing the review UI.

A thin, stateless adapter over the pipeline run store: every mutation is
delegated to the pipeline module (which serializes writers per run), so
the service can be restarted at any time. JSON field names here are
frozen; see docs/api.md.
"""

from __future__ import annotations

import os
from pathlib import Path

from fastapi import Depends, FastAPI, Header, HTTPException, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import monitor
from .errors import (
    BudgetExhausted,
    CurationIncomplete,
    FistError,
    IllegalState,
    IllegalTransition,
    ProviderUnavailable,
    StaleRevision,
    UnknownItem,
    ValidationFailure,
)
from .pipeline import HUMAN_LABELS, Pipeline

__all__ = ["create_app", "error_payload"]

_STATUS_BY_CODE = {
    "bad_request": 400,
    "not_found": 404,
    "conflict": 409,
    "provider_unavailable": 503,
    "internal": 500,
}


def _code_for(exc: Exception) -> str:
    if isinstance(exc, UnknownItem):
        return "not_found"
    if isinstance(exc, (IllegalTransition, IllegalState, CurationIncomplete, StaleRevision)):
        return "conflict"
    if isinstance(exc, (ProviderUnavailable, BudgetExhausted)):
        return "provider_unavailable"
    if isinstance(exc, (ValidationFailure, ValueError)):
        return "bad_request"
    return "internal"


def error_payload(exc: Exception) -> tuple[int, dict]:
    code = _code_for(exc)
    detail: dict = {}
    if isinstance(exc, StaleRevision):
        detail["stale_items"] = exc.stale_items
    if isinstance(exc, ValidationFailure) and exc.line is not None:
        detail["line"] = exc.line
    payload = {"error": {"code": code, "message": str(exc), "detail": detail}}
    return _STATUS_BY_CODE[code], payload


class LabelIn(BaseModel):
    item_id: str
    human_label: str
    edited_completion: str | None = None
    revision: int = Field(ge=0)


class LabelsBody(BaseModel):
    labels: list[LabelIn]


def _run_summary(run) -> dict:
    return {
        "run_id": run.run_id,
        "state": run.state,
        "created_at": run.created_at,
        "updated_at": run.updated_at,
        "stage1_model": run.stage1_model,
        "stage2_model": run.stage2_model,
        "eval_summary": dict(run.eval_summary),
        "remaining_unreviewed": run.remaining_unreviewed,
        "review_item_count": len(run.review_items),
    }


def create_app(
    run_root: str | Path = "runs",
    ui_dir: str | Path | None = None,
    api_token: str | None = None,
    pipeline: Pipeline | None = None,
) -> FastAPI:
    pipe = pipeline or Pipeline(root=run_root)
    token = api_token if api_token is not None else os.environ.get("FIST_API_TOKEN")
    app = FastAPI(title="fist review service", version="1")

    def check_auth(authorization: str | None = Header(default=None)) -> None:
        if token and authorization != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or bad bearer token")

    @app.exception_handler(FistError)
    async def _fist_error(_request: Request, exc: FistError) -> JSONResponse:
        status, payload = error_payload(exc)
        return JSONResponse(status_code=status, content=payload)

    @app.get("/health")
    @app.get("/v1/health")
    async def health() -> dict:
        return {"status": "ok"}

    @app.get("/v1/runs", dependencies=[Depends(check_auth)])
    async def list_runs() -> dict:
        return {"runs": [_run_summary(r) for r in pipe.list_runs()]}

    @app.get("/v1/runs/{run_id}", dependencies=[Depends(check_auth)])
    async def get_run(run_id: str) -> dict:
        return pipe.load_run(run_id).to_dict()

    @app.get("/v1/runs/{run_id}/review-items", dependencies=[Depends(check_auth)])
    async def review_items(
        run_id: str,
        state: str = Query(default="all", pattern="^(all|unreviewed|labeled)$"),
    ) -> dict:
        run = pipe.load_run(run_id)
        items = run.review_items
        if state == "unreviewed":
            items = [i for i in items if i.human_label == "unreviewed"]
        elif state == "labeled":
            items = [i for i in items if i.human_label != "unreviewed"]
        return {"run_id": run_id, "state": run.state, "items": [i.to_dict() for i in items]}

    @app.post("/v1/runs/{run_id}/labels", dependencies=[Depends(check_auth)])
    async def post_labels(run_id: str, body: LabelsBody) -> dict:
        for label in body.labels:
            if label.human_label not in HUMAN_LABELS:
                raise ValidationFailure(f"unknown label {label.human_label!r}")
        remaining = pipe.curation_apply(
            run_id,
            [
                (l.item_id, l.human_label, l.edited_completion, l.revision)
                for l in body.labels
            ],
            check_revisions=True,
        )
        run = pipe.load_run(run_id)
        return {"run_id": run_id, "remaining": remaining, "state": run.state,
                "applied": len(body.labels)}

    @app.post("/v1/runs/{run_id}/advance", dependencies=[Depends(check_auth)])
    async def advance(run_id: str) -> dict:
        run = pipe.advance(run_id)
        return _run_summary(run)

    @app.get("/v1/runs/{run_id}/scatter", dependencies=[Depends(check_auth)])
    async def scatter(
        run_id: str,
        metric: str = Query(default="ce", pattern="^(ce|asls)$"),
    ) -> PlainTextResponse:
        records = pipe.load_eval_records(run_id)
        if not records:
            raise UnknownItem(f"run {run_id} has no evaluation records yet")
        path = pipe.run_dir(run_id) / "exports" / f"scatter_{metric}.csv"
        monitor.export_scatter(records, metric, path, run_labels=[run_id] * len(records))
        return PlainTextResponse(path.read_text(encoding="utf-8"), media_type="text/csv")

    if ui_dir is not None and Path(ui_dir).exists():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
