"""HTTP facade over the orchestrator: sessions, turns, cart, approval, routes.

Error bodies are always the ApiError shape {code, message, retryable} with
codes drawn from ERROR_CODES; clients may switch on them. Turn responses
carry exactly the in-process AssistantTurn fields, so a transcript driven
over HTTP matches one driven in-process field for field.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .catalog import CatalogImportError, UserProfile
from .gateway import BackendError
from .navigation import ShelfMap, route_for_products
from .orchestrator import (
    EmptyCartError,
    Orchestrator,
    SessionFinalizedError,
    SessionNotFoundError,
    snapshot_cart,
)

ERROR_CODES = {
    "bad_request": 400,
    "session_not_found": 404,
    "session_finalized": 409,
    "empty_cart": 409,
    "catalog_rejected": 422,
    "backend_unavailable": 502,
}

_RETRYABLE = {"backend_unavailable"}


def api_error(code: str, message: str) -> JSONResponse:
    if code not in ERROR_CODES:
        raise ValueError(f"unregistered error code {code!r}")
    return JSONResponse(
        status_code=ERROR_CODES[code],
        content={"code": code, "message": message, "retryable": code in _RETRYABLE},
    )


class SessionCreateBody(BaseModel):
    profile: dict = {}


class MessageBody(BaseModel):
    text: str


def create_app(orchestrator: Orchestrator, shelf_map: ShelfMap) -> FastAPI:
    app = FastAPI(title="aislebot", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return api_error("bad_request", "malformed request body")

    @app.exception_handler(SessionNotFoundError)
    async def session_missing(request: Request, exc: SessionNotFoundError):
        return api_error("session_not_found", f"no session {exc.session_id}")

    @app.exception_handler(SessionFinalizedError)
    async def session_finalized(request: Request, exc: SessionFinalizedError):
        return api_error("session_finalized", str(exc))

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionCreateBody):
        try:
            profile = UserProfile.from_dict(body.profile)
        except (TypeError, ValueError, AttributeError):
            return api_error("bad_request", "malformed profile")
        state = orchestrator.new_session(profile)
        return {"session_id": state.session_id}

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody):
        if not body.text.strip():
            return api_error("bad_request", "message text must be non-empty")
        try:
            turn = orchestrator.handle_message(session_id, body.text)
        except BackendError as exc:
            return api_error("backend_unavailable", str(exc))
        if turn.error_code == "backend_unavailable":
            return api_error("backend_unavailable", turn.text)
        return turn.to_dict()

    @app.get("/sessions/{session_id}/cart")
    def get_cart(session_id: str):
        state = orchestrator.get_session(session_id)
        return snapshot_cart(state.cart, orchestrator.catalog)

    @app.post("/sessions/{session_id}/approve")
    def approve(session_id: str):
        try:
            final = orchestrator.approve(session_id)
        except EmptyCartError as exc:
            return api_error("empty_cart", str(exc))
        plan, unroutable = route_for_products(
            [line.product_id for line in final.lines], orchestrator.catalog, shelf_map
        )
        return {
            "final_list": final.to_dict(),
            "route_plan": plan.to_dict(),
            "unroutable": [{"shelf_id": s, "products": list(pids)} for s, pids in unroutable],
        }

    @app.post("/catalog/import")
    async def import_catalog_route(request: Request):
        raw = await request.body()
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError:
            return api_error("bad_request", "catalog body must be UTF-8 CSV")
        try:
            summary = orchestrator.import_catalog_text(text)
        except CatalogImportError as exc:
            return api_error("catalog_rejected", str(exc))
        return summary.to_dict()

    @app.get("/healthz")
    def healthz():
        return {
            "ok": True,
            "catalog_version": orchestrator.catalog.version,
            "index_version": orchestrator.index.catalog_version,
        }

    return app
