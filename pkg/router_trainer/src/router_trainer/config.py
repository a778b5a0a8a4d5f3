"""Trainer configuration."""

import json
from dataclasses import asdict, dataclass
from pathlib import Path


@dataclass(frozen=True)
class TrainerConfig:
    base_model_id: str = "fresh-tiny"
    epochs: int = 2
    batch_size: int = 32
    max_seq_len: int = 512
    weight_decay: float = 0.01
    lr_peak: float = 5e-5
    warmup_fraction: float = 0.01
    tversky_alpha: float = 0.7
    tversky_beta: float = 0.3
    label_smoothing_eps: float = 0.2
    seed: int = 0

    def __post_init__(self):
        for name in ("tversky_alpha", "tversky_beta"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {value}")
        if not 0.0 <= self.label_smoothing_eps < 1.0:
            raise ValueError(
                f"label_smoothing_eps must be in [0, 1), got {self.label_smoothing_eps}")
        if self.epochs < 1 or self.batch_size < 1 or self.max_seq_len < 1:
            raise ValueError("epochs, batch_size, and max_seq_len must be >= 1")

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(asdict(self), sort_keys=True, indent=2) + "\n",
            encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TrainerConfig":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))
