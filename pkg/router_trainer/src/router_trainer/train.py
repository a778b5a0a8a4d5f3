"""Training loop for the binary router classifier."""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import torch
from torch.optim import AdamW
from transformers import get_linear_schedule_with_warmup

from .config import TrainerConfig
from .data import PAD_ID, WORD_RE, LabeledQuestion, WordVocab
from .loss import tversky_loss
from .model import build_model, save_artifact

log = logging.getLogger(__name__)


@dataclass
class TrainMetrics:
    initial_loss: float
    epoch_losses: List[float]
    train_accuracy: float
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    loss_curve: List[float] = field(default_factory=list)


def _encode_batch(vocab: WordVocab, texts: Sequence[str], max_len: int):
    ids = torch.tensor([vocab.encode(t, max_len) for t in texts],
                       dtype=torch.long)
    mask = (ids != PAD_ID).long()
    return ids, mask


@torch.no_grad()
def predict_probs(model, vocab: WordVocab, texts: Sequence[str],
                  max_len: int) -> torch.Tensor:
    model.eval()
    ids, mask = _encode_batch(vocab, texts, max_len)
    logits = model(input_ids=ids, attention_mask=mask).logits
    return torch.softmax(logits, dim=-1)[:, 1]


def train(dataset: List[LabeledQuestion], cfg: TrainerConfig,
          out_dir: Optional[str] = None) -> TrainMetrics:
    if not dataset:
        raise ValueError("dataset is empty")
    labels_present = {q.label for q in dataset}
    if labels_present != {0, 1}:
        raise ValueError(f"dataset must contain both classes, got {labels_present}")

    torch.manual_seed(cfg.seed)
    vocab = WordVocab.build([q.text for q in dataset])
    model = build_model(cfg, vocab)
    model.train()

    steps_per_epoch = (len(dataset) + cfg.batch_size - 1) // cfg.batch_size
    total_steps = steps_per_epoch * cfg.epochs
    optimizer = AdamW(model.parameters(), lr=cfg.lr_peak,
                      weight_decay=cfg.weight_decay)
    warmup_steps = max(1, int(total_steps * cfg.warmup_fraction))
    scheduler = get_linear_schedule_with_warmup(optimizer, warmup_steps,
                                                total_steps)

    max_len = min(cfg.max_seq_len, max(1, max(
        len(WORD_RE.findall(q.text)) for q in dataset)))
    texts = [q.text for q in dataset]
    labels = torch.tensor([q.label for q in dataset], dtype=torch.long)

    initial_loss = None
    epoch_losses = []
    loss_curve = []
    for epoch in range(cfg.epochs):
        order = torch.randperm(len(dataset))
        batch_losses = []
        for start in range(0, len(dataset), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            ids, mask = _encode_batch(vocab, [texts[i] for i in idx], max_len)
            logits = model(input_ids=ids, attention_mask=mask).logits
            probs = torch.softmax(logits, dim=-1)[:, 1]
            loss = tversky_loss(probs, labels[idx], cfg.tversky_alpha,
                                cfg.tversky_beta, cfg.label_smoothing_eps)
            if initial_loss is None:
                initial_loss = loss.item()
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            scheduler.step()
            batch_losses.append(loss.item())
            loss_curve.append(loss.item())
        epoch_losses.append(sum(batch_losses) / len(batch_losses))
        log.info("epoch %d: mean loss %.4f", epoch + 1, epoch_losses[-1])

    probs = predict_probs(model, vocab, texts, max_len)
    predicted = (probs > 0.5).long()
    tp = int(((predicted == 1) & (labels == 1)).sum())
    fp = int(((predicted == 1) & (labels == 0)).sum())
    fn = int(((predicted == 0) & (labels == 1)).sum())
    tn = int(((predicted == 0) & (labels == 0)).sum())
    metrics = TrainMetrics(
        initial_loss=initial_loss,
        epoch_losses=epoch_losses,
        train_accuracy=(tp + tn) / len(dataset),
        tp=tp, fp=fp, fn=fn, tn=tn,
        loss_curve=loss_curve,
    )
    if out_dir is not None:
        save_artifact(model, vocab, cfg, out_dir)
    return metrics
