"""Pretrained encoder wrapper: tokenize, forward, mean-pool.

Pooling averages final-layer vectors over content positions only;
special begin/end tokens and padding are excluded, which is the
convention for sentence embeddings from masked-LM encoders.
"""

from __future__ import annotations

import threading

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer


class SentenceEncoder:
    """Wraps a transformers checkpoint for deterministic batched encoding.

    Inference runs under a lock so concurrent requests are serialized;
    the model stays in eval mode and gradients are never tracked.
    """

    def __init__(self, model_id: str, device: str = "cpu"):
        self.model_id = model_id
        self.device = torch.device(device)
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModel.from_pretrained(model_id).to(self.device).eval()
        self.dim = int(self.model.config.hidden_size)
        self._max_length = int(
            min(
                getattr(self.model.config, "max_position_embeddings", 512),
                getattr(self.tokenizer, "model_max_length", 512) or 512,
            )
        )
        self._lock = threading.Lock()

    def encode(self, texts: list[str]) -> np.ndarray:
        """Float32 array of shape (len(texts), dim)."""
        with self._lock, torch.no_grad():
            batch = self.tokenizer(
                texts,
                padding=True,
                truncation=True,
                max_length=self._max_length,
                return_tensors="pt",
                return_special_tokens_mask=True,
            )
            special = batch.pop("special_tokens_mask").to(self.device)
            batch = {k: v.to(self.device) for k, v in batch.items()}
            hidden = self.model(**batch).last_hidden_state

            attention = batch["attention_mask"]
            content = attention * (1 - special)
            # a text that tokenizes to special tokens only falls back to
            # pooling over all attended positions
            content = torch.where(
                content.sum(dim=1, keepdim=True) > 0, content, attention
            )
            weights = content.unsqueeze(-1).to(hidden.dtype)
            pooled = (hidden * weights).sum(dim=1) / weights.sum(dim=1)
            return pooled.to(torch.float32).cpu().numpy()
