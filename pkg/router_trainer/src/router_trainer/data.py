"""Labeled questions and the word-level tokenizer saved with each checkpoint."""

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence

WORD_RE = re.compile(r"\w+|[^\w\s]")

PAD_ID = 0
UNK_ID = 1


@dataclass(frozen=True)
class LabeledQuestion:
    id: str
    text: str
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


def load_labeled(path) -> List[LabeledQuestion]:
    records = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                rec = LabeledQuestion(id=doc["id"], text=doc["text"],
                                      label=int(doc["label"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad record: {exc}") from exc
            if rec.id in seen:
                raise ValueError(f"{path}:{lineno}: duplicate id {rec.id!r}")
            seen.add(rec.id)
            records.append(rec)
    return records


class WordVocab:
    """Whitespace/punctuation word vocabulary with PAD=0 and UNK=1."""

    def __init__(self, word_to_id: Dict[str, int]):
        self.word_to_id = dict(word_to_id)

    @classmethod
    def build(cls, texts: Sequence[str]) -> "WordVocab":
        words = sorted({w.lower() for t in texts for w in WORD_RE.findall(t)})
        return cls({w: i + 2 for i, w in enumerate(words)})

    def __len__(self) -> int:
        return len(self.word_to_id) + 2

    def encode(self, text: str, max_len: int) -> List[int]:
        ids = [self.word_to_id.get(w.lower(), UNK_ID)
               for w in WORD_RE.findall(text)][:max_len]
        return ids + [PAD_ID] * (max_len - len(ids))

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.word_to_id, sort_keys=True, indent=2) + "\n",
            encoding="utf-8")

    @classmethod
    def load(cls, path) -> "WordVocab":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))
