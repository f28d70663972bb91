"""Command-line launcher: `embed-service --model roberta-base --port 8316`."""

from __future__ import annotations

import argparse

import uvicorn

from .app import ServiceConfig, create_app


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="embed-service",
        description="Serve mean-pooled sentence embeddings from a pretrained encoder.",
    )
    parser.add_argument(
        "--model",
        default="roberta-base",
        help="transformers model id or local checkpoint path",
    )
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--port", type=int, default=8316)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--max-batch", type=int, default=64)
    args = parser.parse_args(argv)

    config = ServiceConfig(
        model=args.model,
        device=args.device,
        max_batch_size=args.max_batch,
        port=args.port,
    )
    app = create_app(config, preload=False)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
