from __future__ import annotations

import socket
import threading
import time

import pytest
import torch
import uvicorn
from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors
from transformers import BertConfig, BertModel, BertTokenizerFast

from embed_service.app import ServiceConfig, create_app

VOCAB_WORDS = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "this", "is", "a", "an", "the", "cat", "cap", "dog", "hat",
    "she", "he", "so", "cute", "call", "john", "please", "remind",
    "me", "to", "turn", "on", "lights", "play", "jazz", "music",
    "much", "longer", "sentence", "about", "and", "unrelated", "ok", "x",
] + [chr(c) for c in range(ord("a"), ord("z") + 1)] + ["##" + chr(c) for c in range(ord("a"), ord("z") + 1)]


@pytest.fixture(scope="session")
def checkpoint_dir(tmp_path_factory):
    """Deterministic tiny masked-LM checkpoint: real transformer weights
    (seeded), real WordPiece tokenizer, saved to disk like any pretrained
    model."""
    vocab_map = {token: index for index, token in enumerate(VOCAB_WORDS)}
    wordpiece = Tokenizer(models.WordPiece(vocab=vocab_map, unk_token="[UNK]"))
    wordpiece.normalizer = normalizers.BertNormalizer(lowercase=True)
    wordpiece.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    wordpiece.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab_map["[CLS]"]), ("[SEP]", vocab_map["[SEP]"])],
    )
    tokenizer = BertTokenizerFast(
        tokenizer_object=wordpiece,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )
    torch.manual_seed(20260810)
    config = BertConfig(
        vocab_size=len(VOCAB_WORDS),
        hidden_size=64,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=128,
        max_position_embeddings=64,
    )
    model = BertModel(config)
    model.eval()
    out = tmp_path_factory.mktemp("ckpt") / "model"
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    return str(out)


@pytest.fixture(scope="session")
def service_config(checkpoint_dir):
    return ServiceConfig(model=checkpoint_dir, device="cpu", max_batch_size=16)


@pytest.fixture(scope="session")
def live_service(service_config):
    """The app served over real HTTP on an ephemeral port."""
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    app = create_app(service_config, preload=True)
    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=port, log_level="warning")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 30
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("service did not start within 30 s")
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=10)
