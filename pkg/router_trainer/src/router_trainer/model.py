"""Model construction and checkpoint I/O.

`base_model_id` is either a pretrained encoder id/path understood by
transformers (used with its own tokenizer) or the sentinel "fresh-tiny",
which builds a small randomly-initialized RoBERTa-style classifier over a
word-level vocabulary derived from the training set. The fresh variant is
the offline fallback for environments without access to pretrained weights;
everything downstream (loss, schedule, serving contract) is identical.
"""

from pathlib import Path
from typing import Tuple

from transformers import RobertaConfig, RobertaForSequenceClassification

from .config import TrainerConfig
from .data import PAD_ID, WordVocab

VOCAB_FILE = "vocab.json"
TRAINER_CONFIG_FILE = "trainer_config.json"


def build_fresh_model(cfg: TrainerConfig, vocab: WordVocab):
    model_config = RobertaConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=cfg.max_seq_len + PAD_ID + 2,
        pad_token_id=PAD_ID,
        num_labels=2,
    )
    return RobertaForSequenceClassification(model_config)


def build_model(cfg: TrainerConfig, vocab: WordVocab):
    if cfg.base_model_id == "fresh-tiny":
        return build_fresh_model(cfg, vocab)
    return RobertaForSequenceClassification.from_pretrained(
        cfg.base_model_id, num_labels=2)


def save_artifact(model, vocab: WordVocab, cfg: TrainerConfig, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    vocab.save(out_dir / VOCAB_FILE)
    cfg.save(out_dir / TRAINER_CONFIG_FILE)


def load_artifact(artifact_dir) -> Tuple[
        RobertaForSequenceClassification, WordVocab, TrainerConfig]:
    artifact_dir = Path(artifact_dir)
    model = RobertaForSequenceClassification.from_pretrained(artifact_dir)
    model.eval()
    vocab = WordVocab.load(artifact_dir / VOCAB_FILE)
    cfg = TrainerConfig.load(artifact_dir / TRAINER_CONFIG_FILE)
    return model, vocab, cfg
