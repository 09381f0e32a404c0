"""HTTP surface of the adapter: POST /generate and GET /info.

The response body is produced by the wire codec directly rather than
FastAPI's serializer, so what goes on the wire is byte-identical to
what encode_response returns.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, Request, Response
from fastapi.concurrency import run_in_threadpool
from fastapi.responses import JSONResponse

from .config import AdapterConfig
from .engines import QuestionEngine, build_engine
from .protocol import ProtocolError, decode_request, encode_response


def create_app(config: AdapterConfig, engine: QuestionEngine | None = None) -> FastAPI:
    app = FastAPI(title="qgen-adapter", docs_url=None, redoc_url=None)
    app.state.config = config
    app.state.engine = engine if engine is not None else build_engine(config)
    # One decode in flight per model instance; callers get an immediate
    # 503 instead of queueing behind a long generation.
    app.state.gate = threading.BoundedSemaphore(1)

    @app.get("/info")
    def info() -> dict:
        return {
            "model_id": config.model_id,
            "beam_size": config.beam_size,
            "max_new_tokens": config.max_new_tokens,
        }

    @app.post("/generate")
    async def generate(request: Request) -> Response:
        raw = await request.body()
        try:
            req = decode_request(raw, default_max_new_tokens=config.max_new_tokens)
        except ProtocolError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        if not app.state.gate.acquire(blocking=False):
            return JSONResponse({"error": "model busy, retry"}, status_code=503)
        try:
            question = await run_in_threadpool(
                app.state.engine.generate, req.context, req.answer, req.max_new_tokens
            )
            body = encode_response(question, config.model_id)
        except Exception as exc:
            return JSONResponse({"error": f"inference failed: {exc}"}, status_code=500)
        finally:
            app.state.gate.release()
        return Response(content=body, media_type="application/json")

    return app
