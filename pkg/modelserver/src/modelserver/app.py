"""FastAPI application exposing the /v1/query wire protocol.

Malformed request bodies return 400; well-formed bodies with the wrong
vector length or out-of-range value indexes return 422. Every request is
logged with its latency.
"""

from __future__ import annotations

import logging
import time

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .model import ServedModel

logger = logging.getLogger("modelserver")


class QueryBody(BaseModel):
    values: list[int]


class QueryBatchBody(BaseModel):
    values_batch: list[list[int]]


def create_app(model: ServedModel) -> FastAPI:
    app = FastAPI(title="modelserver", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.middleware("http")
    async def log_latency(request: Request, call_next):
        start = time.perf_counter()
        response = await call_next(request)
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        logger.info("%s %s -> %d (%.2f ms)", request.method,
                    request.url.path, response.status_code, elapsed_ms)
        return response

    def predict_or_422(values: list[int]):
        try:
            return model.predict_proba(values).tolist(), None
        except ValueError as exc:
            return None, JSONResponse(status_code=422, content={"error": str(exc)})

    @app.get("/v1/info")
    async def info():
        return {"num_classes": model.num_classes,
                "num_features": model.num_features}

    @app.post("/v1/query")
    async def query(body: QueryBody):
        probs, err = predict_or_422(body.values)
        return err if err else {"probs": probs}

    @app.post("/v1/query_batch")
    async def query_batch(body: QueryBatchBody):
        probs_batch = []
        for values in body.values_batch:
            probs, err = predict_or_422(values)
            if err:
                return err
            probs_batch.append(probs)
        return {"probs_batch": probs_batch}

    return app
