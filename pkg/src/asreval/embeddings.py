"""Uniform sentence-embedding contract with three backends.

* stub   — deterministic hashed bag-of-words mean; the test oracle that
           stands in for the pretrained contextual model.
* cache  — JSONL file of precomputed {"text", "vector"} entries, keyed by
           the exact raw sentence text.
* remote — HTTP client for the embedding service protocol:
           POST /embed {"texts": [...]} -> {"model", "dim", "vectors"},
           GET /health -> {"status", "model", "dim"}.

Backends receive raw (original-case) sentences; tokenization and pooling
are backend responsibilities, and the gateway only ever sees pooled
sentence vectors.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import requests

from .corpus import normalize
from .errors import BackendError, CacheMissError, ContractError, InputError, TransportError

DEFAULT_DIM = 768


@dataclass(frozen=True)
class SentenceEmbedding:
    """Fixed-dimension real vector for one sentence. Components must be
    finite and the vector must have a nonzero norm."""

    dim: int
    values: np.ndarray

    def __post_init__(self) -> None:
        array = np.asarray(self.values, dtype=np.float64)
        if array.ndim != 1 or array.shape[0] != self.dim or self.dim <= 0:
            raise ContractError(f"embedding must be a 1-d vector of length {self.dim}")
        if not np.all(np.isfinite(array)):
            raise ContractError("embedding contains NaN or Inf components")
        if float(np.linalg.norm(array)) == 0.0:
            raise ContractError("zero-norm embeddings are rejected")
        array.flags.writeable = False
        object.__setattr__(self, "values", array)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class EmbeddingBackendDescriptor:
    """What a backend is: its kind, output dimension, and identity
    (model name, stub seed, or cache path)."""

    kind: str  # "stub" | "cache" | "remote"
    dim: int
    identity: str


def stable_hash64(*parts: object) -> int:
    """Stable 64-bit hash of the given parts, portable across runs and
    platforms (unlike builtin hash)."""
    digest = hashlib.blake2b(
        "\x1f".join(str(p) for p in parts).encode("utf-8"), digest_size=8
    )
    return int.from_bytes(digest.digest(), "big")


def stub_token_vector(token: str, seed: int, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Deterministic unit-norm vector for one token.

    A PCG64 generator is seeded with a stable 64-bit hash of (seed, token),
    draws ``dim`` standard normals, and the result is normalized to unit
    length.
    """
    if not token:
        raise InputError("stub token must be nonempty")
    rng = np.random.default_rng(stable_hash64(seed, token))
    vector = rng.standard_normal(dim)
    return vector / np.linalg.norm(vector)


def _check_sentences(sentences: Sequence[str]) -> None:
    for index, sentence in enumerate(sentences):
        if not sentence or not sentence.strip():
            raise InputError(f"sentence at position {index} is empty after trimming")


class StubBackend:
    """Order-insensitive bag-of-words mean of hashed token vectors."""

    def __init__(self, seed: int = 0, dim: int = DEFAULT_DIM):
        self.seed = seed
        self.dim = dim
        self.descriptor = EmbeddingBackendDescriptor("stub", dim, f"stub:seed={seed},dim={dim}")

    def embed_batch(self, sentences: Sequence[str]) -> list[SentenceEmbedding]:
        _check_sentences(sentences)
        embeddings = []
        for sentence in sentences:
            tokens = normalize(sentence).tokens
            if not tokens:
                raise InputError(f"sentence {sentence!r} has no tokens after normalization")
            stacked = np.stack([stub_token_vector(tok, self.seed, self.dim) for tok in tokens])
            embeddings.append(SentenceEmbedding(self.dim, stacked.mean(axis=0)))
        return embeddings


class CacheBackend:
    """Serves embeddings from a cache file; misses are errors."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.entries = read_cache(self.path)
        dims = {vector.shape[0] for vector in self.entries.values()}
        if len(dims) > 1:
            raise ContractError(f"cache {self.path} mixes dimensions: {sorted(dims)}")
        self.dim = dims.pop() if dims else DEFAULT_DIM
        self.descriptor = EmbeddingBackendDescriptor("cache", self.dim, str(self.path))

    def embed_batch(self, sentences: Sequence[str]) -> list[SentenceEmbedding]:
        _check_sentences(sentences)
        missing = tuple(s for s in sentences if s not in self.entries)
        if missing:
            shown = ", ".join(repr(s) for s in missing[:5])
            raise CacheMissError(
                f"{len(missing)} sentence(s) not in cache {self.path}: {shown}",
                missing=missing,
            )
        return [SentenceEmbedding(self.dim, self.entries[s]) for s in sentences]


class RemoteBackend:
    """HTTP client for the embedding service, with bounded in-flight
    batch parallelism and bounded retries on 503 (model still loading)."""

    def __init__(
        self,
        url: str,
        dim: int | None = None,
        batch_size: int = 32,
        max_in_flight: int = 1,
        timeout: float = 30.0,
        retries: int = 3,
        retry_wait: float = 0.5,
    ):
        self.url = url.rstrip("/")
        self.batch_size = max(1, batch_size)
        self.max_in_flight = max(1, max_in_flight)
        self.timeout = timeout
        self.retries = retries
        self.retry_wait = retry_wait
        identity, discovered_dim = self._health()
        self.dim = dim if dim is not None else discovered_dim
        if self.dim != discovered_dim:
            raise ContractError(
                f"service at {self.url} reports dim {discovered_dim}, expected {self.dim}"
            )
        self.descriptor = EmbeddingBackendDescriptor("remote", self.dim, identity)

    def _health(self) -> tuple[str, int]:
        payload = self._request("GET", "/health")
        try:
            return str(payload["model"]), int(payload["dim"])
        except (KeyError, TypeError, ValueError) as exc:
            raise TransportError(
                f"malformed health response from {self.url}: {payload!r}",
                url=self.url,
                attempts=1,
            ) from exc

    def _request(self, method: str, route: str, body: dict | None = None) -> dict:
        import time

        url = self.url + route
        last_error: Exception | None = None
        for attempt in range(1, self.retries + 1):
            try:
                response = requests.request(method, url, json=body, timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = exc
                time.sleep(self.retry_wait * attempt)
                continue
            if response.status_code == 503:
                last_error = TransportError(
                    f"service unavailable (503) at {url}", url=url,
                    attempts=attempt, retryable=True,
                )
                time.sleep(self.retry_wait * attempt)
                continue
            if response.status_code != 200:
                detail = ""
                try:
                    detail = response.json().get("error", "")
                except Exception:
                    detail = response.text[:200]
                raise BackendError(f"HTTP {response.status_code} from {url}: {detail}")
            try:
                return response.json()
            except ValueError as exc:
                raise TransportError(
                    f"non-JSON response from {url}", url=url, attempts=attempt
                ) from exc
        raise TransportError(
            f"could not reach embedding service at {url} after {self.retries} attempts: {last_error}",
            url=url,
            attempts=self.retries,
            retryable=True,
        )

    def _embed_chunk(self, chunk: Sequence[str]) -> list[np.ndarray]:
        payload = self._request("POST", "/embed", {"texts": list(chunk)})
        try:
            dim = int(payload["dim"])
            vectors = payload["vectors"]
        except (KeyError, TypeError, ValueError) as exc:
            raise TransportError(
                f"malformed embed response from {self.url}", url=self.url, attempts=1
            ) from exc
        if dim != self.dim:
            raise ContractError(f"service returned dim {dim}, descriptor says {self.dim}")
        if len(vectors) != len(chunk):
            raise ContractError(
                f"service returned {len(vectors)} vectors for {len(chunk)} texts"
            )
        return [np.asarray(v, dtype=np.float64) for v in vectors]

    def embed_batch(self, sentences: Sequence[str]) -> list[SentenceEmbedding]:
        _check_sentences(sentences)
        chunks = [
            sentences[start : start + self.batch_size]
            for start in range(0, len(sentences), self.batch_size)
        ]
        if self.max_in_flight == 1 or len(chunks) <= 1:
            results = [self._embed_chunk(chunk) for chunk in chunks]
        else:
            with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
                results = list(pool.map(self._embed_chunk, chunks))
        return [
            SentenceEmbedding(self.dim, vector)
            for chunk_vectors in results
            for vector in chunk_vectors
        ]


Backend = StubBackend | CacheBackend | RemoteBackend


def embed_batch(backend: Backend, sentences: Sequence[str]) -> list[SentenceEmbedding]:
    """One embedding per sentence, order-aligned with the input."""
    embeddings = backend.embed_batch(sentences)
    expected_dim = backend.descriptor.dim
    for embedding in embeddings:
        if embedding.dim != expected_dim:
            raise ContractError(
                f"backend {backend.descriptor.identity} emitted dim {embedding.dim}, "
                f"descriptor says {expected_dim}"
            )
    return embeddings


def write_cache(path: str | Path, entries: Mapping[str, np.ndarray | Iterable[float]]) -> None:
    """Persist a sentence -> vector map as JSONL; dims must be consistent."""
    arrays = {text: np.asarray(vector, dtype=np.float64) for text, vector in entries.items()}
    dims = {a.shape[0] for a in arrays.values()}
    if len(dims) > 1:
        raise ContractError(f"inconsistent dims in cache entries: {sorted(dims)}")
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8") as handle:
            for text, array in arrays.items():
                handle.write(json.dumps({"text": text, "vector": array.tolist()}))
                handle.write("\n")
    except OSError as exc:
        raise InputError(f"cannot write cache to {path}: {exc}") from exc


def read_cache(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"cache file not found: {path}")
    entries: dict[str, np.ndarray] = {}
    with path.open("r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"cache line {line_no}: invalid JSON ({exc.msg})") from exc
            try:
                entries[record["text"]] = np.asarray(record["vector"], dtype=np.float64)
            except (KeyError, TypeError) as exc:
                raise InputError(f"cache line {line_no}: malformed entry") from exc
    return entries


def parse_backend(spec: str, jobs: int = 1) -> Backend:
    """Build a backend from a URI-like string.

    Forms: ``stub:seed=N,dim=D`` (both optional), ``cache:PATH``,
    ``http:URL`` / ``https:URL``.
    """
    kind, _, rest = spec.partition(":")
    if kind == "stub":
        seed, dim = 0, DEFAULT_DIM
        if rest:
            for part in rest.split(","):
                key, _, value = part.partition("=")
                if key == "seed":
                    seed = int(value)
                elif key == "dim":
                    dim = int(value)
                else:
                    raise InputError(f"unknown stub backend option {key!r}")
        return StubBackend(seed=seed, dim=dim)
    if kind == "cache":
        if not rest:
            raise InputError("cache backend needs a path: cache:PATH")
        return CacheBackend(rest)
    if kind in ("http", "https"):
        # the one environment override the CLI honors
        timeout = float(os.environ.get("ASREVAL_HTTP_TIMEOUT", "30"))
        return RemoteBackend(f"{kind}:{rest}", max_in_flight=jobs, timeout=timeout)
    raise InputError(f"unknown backend spec {spec!r} (expected stub:|cache:|http:)")
