"""Sentence-embedding HTTP service.

Hosts a pretrained masked-LM encoder and serves mean-pooled sentence
vectors over the embedding wire protocol:

    POST /embed {"texts": [...]} -> {"model": str, "dim": int, "vectors": [[...], ...]}
    GET  /health                 -> {"status": "ok", "model": str, "dim": int}
"""

__version__ = "0.1.0"

from .app import ServiceConfig, create_app
from .encoder import SentenceEncoder

__all__ = ["SentenceEncoder", "ServiceConfig", "create_app"]
