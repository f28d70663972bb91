"""FastAPI application implementing the embedding wire protocol."""

from __future__ import annotations

from contextlib import asynccontextmanager
from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .encoder import SentenceEncoder


@dataclass(frozen=True)
class ServiceConfig:
    model: str
    device: str = "cpu"
    max_batch_size: int = 64
    port: int = 8316


def create_app(config: ServiceConfig, preload: bool = True) -> FastAPI:
    """Build the service app. With preload the model loads eagerly;
    otherwise it loads on server startup and endpoints answer 503 until
    then."""

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        load_model()
        yield

    app = FastAPI(title="embed-service", version="0.1.0", lifespan=lifespan)
    app.state.config = config
    app.state.encoder = None

    def load_model() -> None:
        if app.state.encoder is None:
            app.state.encoder = SentenceEncoder(config.model, config.device)

    app.state.load_model = load_model
    if preload:
        load_model()

    @app.get("/health")
    def health():
        encoder = app.state.encoder
        if encoder is None:
            return JSONResponse({"error": "model not loaded yet"}, status_code=503)
        return {"status": "ok", "model": encoder.model_id, "dim": encoder.dim}

    @app.post("/embed")
    async def embed(request: Request):
        encoder = app.state.encoder
        if encoder is None:
            return JSONResponse({"error": "model not loaded yet"}, status_code=503)
        try:
            payload = await request.json()
        except Exception:
            return JSONResponse({"error": "body must be a JSON object"}, status_code=400)
        texts = payload.get("texts") if isinstance(payload, dict) else None
        if (
            not isinstance(texts, list)
            or not texts
            or any(not isinstance(t, str) or not t.strip() for t in texts)
        ):
            return JSONResponse(
                {"error": "texts must be a nonempty list of nonempty strings"},
                status_code=400,
            )
        if len(texts) > config.max_batch_size:
            return JSONResponse(
                {"error": f"batch of {len(texts)} exceeds maximum {config.max_batch_size}"},
                status_code=413,
            )
        vectors = encoder.encode(texts)
        return {
            "model": encoder.model_id,
            "dim": encoder.dim,
            "vectors": vectors.tolist(),
        }

    return app
