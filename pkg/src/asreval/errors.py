"""Exception hierarchy shared across the toolkit.

Three families, mirroring the CLI exit codes: input/IO problems (exit 1),
contract or verification violations (exit 2), and backend/transport
failures (exit 3).
"""

from __future__ import annotations


class AsrEvalError(Exception):
    """Base class for all toolkit errors."""


class InputError(AsrEvalError):
    """Malformed or missing input data (files, records, arguments)."""


class CorpusFormatError(InputError):
    """A corpus/annotation file violates the JSONL record contract."""


class ContractError(AsrEvalError):
    """An operation was called outside its contract or produced an
    out-of-contract result."""


class UndefinedMetricError(ContractError):
    """A metric has no defined value for this input (e.g. WER with an
    empty reference, correlation with zero variance)."""


class VerificationError(ContractError):
    """A generated artifact failed its post-generation check."""


class InfeasibleBudgetError(VerificationError):
    """A perturbation budget cannot fit the reference at all."""

    def __init__(self, message: str, utterance_id: str | None = None):
        super().__init__(message)
        self.utterance_id = utterance_id


class UnsatisfiableBudgetError(VerificationError):
    """Perturbation retries were exhausted without matching the budget."""

    def __init__(self, message: str, utterance_id: str | None = None, retries: int = 0):
        super().__init__(message)
        self.utterance_id = utterance_id
        self.retries = retries


class BackendError(AsrEvalError):
    """An embedding backend failed to produce embeddings."""


class CacheMissError(BackendError):
    """A sentence was not found in an embedding cache."""

    def __init__(self, message: str, missing: tuple[str, ...] = ()):
        super().__init__(message)
        self.missing = missing


class TransportError(BackendError):
    """The remote embedding service could not be reached or answered
    with a non-protocol response. Carries retry metadata."""

    def __init__(self, message: str, url: str = "", attempts: int = 0, retryable: bool = False):
        super().__init__(message)
        self.url = url
        self.attempts = attempts
        self.retryable = retryable
