"""HTTP JSON service exposing a fitted network for interactive what-if queries.

The model (and optional ensemble summary) is loaded once at startup and never
mutated; every response carries the model file's sha256 fingerprint. Request
bodies are parsed as raw JSON and validated by the shared api module, so the
service and the CLI return byte-identical documents for identical inputs.

Errors use {code, message, detail}: 400 for malformed bodies or unknown
variable/state names, 422 only for evidence with probability zero.
"""

from __future__ import annotations

import json
import re

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response

from . import api
from .errors import ImpossibleEvidence, MalformedRequest, SurveyBnError
from .jsonio import canonical_dumps, read_json
from .model import network_from_json
from .structure import EnsembleSummary


def _error_code(exc: Exception) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", "_", type(exc).__name__).lower()


def _json_response(doc: dict, status: int = 200) -> Response:
    return Response(
        content=canonical_dumps(doc),
        media_type="application/json",
        status_code=status,
    )


def _error_response(exc: Exception, status: int) -> Response:
    return _json_response(
        {
            "code": _error_code(exc),
            "message": str(exc),
            "detail": type(exc).__name__,
        },
        status,
    )


def create_app(model_path: str, ensemble_path: str | None = None) -> FastAPI:
    net = network_from_json(read_json(model_path))
    fingerprint = api.fingerprint_file(model_path)
    summary = (
        EnsembleSummary.from_json(read_json(ensemble_path)) if ensemble_path else None
    )

    app = FastAPI(title="surveybn", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(SurveyBnError)
    async def domain_error(_request: Request, exc: SurveyBnError) -> Response:
        status = 422 if isinstance(exc, ImpossibleEvidence) else 400
        return _error_response(exc, status)

    @app.exception_handler(RequestValidationError)
    async def validation_error(_request: Request, exc: RequestValidationError) -> Response:
        return _error_response(MalformedRequest(str(exc)), 400)

    async def _body(request: Request) -> dict:
        try:
            return json.loads(await request.body())
        except json.JSONDecodeError as exc:
            raise MalformedRequest(f"request body is not valid JSON: {exc}") from exc

    @app.get("/healthz")
    async def healthz() -> Response:
        return _json_response({"status": "ok", "model_fingerprint": fingerprint})

    @app.get("/variables")
    async def variables() -> Response:
        return _json_response(api.variables_payload(net, fingerprint))

    @app.get("/graph")
    async def graph() -> Response:
        return _json_response(api.graph_payload(net, summary, fingerprint))

    @app.post("/query")
    async def query(request: Request) -> Response:
        return _json_response(api.handle_query(net, fingerprint, await _body(request)))

    @app.post("/whatif")
    async def whatif(request: Request) -> Response:
        return _json_response(api.handle_whatif(net, fingerprint, await _body(request)))

    return app
