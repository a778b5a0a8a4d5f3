"""Question datasets and token counting.

Datasets are JSONL, one question per line: {"id", "category", "text",
optionally "sot_suitable"}. The approximate token counter is a deliberately
simple word/punctuation splitter, not a model tokenizer; everything computed
from it is flagged approximate.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

# One "token" per word run or per single punctuation character.
_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


@dataclass(frozen=True)
class QuestionRecord:
    id: str
    category: str
    text: str
    sot_suitable: bool | None = None

    def to_json(self) -> dict:
        doc = {"id": self.id, "category": self.category, "text": self.text}
        if self.sot_suitable is not None:
            doc["sot_suitable"] = self.sot_suitable
        return doc


@dataclass(frozen=True)
class TokenCount:
    value: int
    approximate: bool = True


def approx_tokens(text: str) -> int:
    """Deterministic heuristic count: word runs plus punctuation marks."""
    return len(_TOKEN_RE.findall(text))


def count_tokens(text: str, mode: str = "approximate",
                 backend_usage: int | None = None) -> TokenCount:
    if mode == "backend-usage":
        if backend_usage is None:
            raise ConfigError("backend-usage mode requires a reported count")
        return TokenCount(value=backend_usage, approximate=False)
    if mode == "approximate":
        return TokenCount(value=approx_tokens(text), approximate=True)
    raise ConfigError(f"unknown token-count mode: {mode!r}")


def tokenize(text: str) -> list[str]:
    """Token pieces under the approximate rule, for prefix-sharing math."""
    return _TOKEN_RE.findall(text)


def load_dataset(path: str | Path) -> list[QuestionRecord]:
    path = Path(path)
    records: list[QuestionRecord] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}:{lineno}: malformed JSON: {exc}") from exc
            for key in ("id", "category", "text"):
                if key not in doc:
                    raise ConfigError(f"{path}:{lineno}: missing field {key!r}")
            if not doc["text"]:
                raise ConfigError(f"{path}:{lineno}: empty question text")
            if doc["id"] in seen:
                raise ConfigError(f"{path}:{lineno}: duplicate id {doc['id']!r}")
            seen.add(doc["id"])
            records.append(QuestionRecord(
                id=str(doc["id"]),
                category=str(doc["category"]),
                text=str(doc["text"]),
                sot_suitable=doc.get("sot_suitable"),
            ))
    return records


def save_dataset(records: list[QuestionRecord], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")


def load_labels(path: str | Path) -> dict[str, bool]:
    """Human SoT-suitability labels: JSONL of {"id", "use_sot"}."""
    path = Path(path)
    labels: dict[str, bool] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}:{lineno}: malformed JSON: {exc}") from exc
            if "id" not in doc or "use_sot" not in doc:
                raise ConfigError(f"{path}:{lineno}: expected id and use_sot")
            labels[str(doc["id"])] = bool(doc["use_sot"])
    return labels
