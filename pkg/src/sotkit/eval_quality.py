"""Paired judge evaluation with order-swap debiasing and net win rates.

Each answer pair is judged twice with the presentation order swapped. Each
judgment scores +1/0/-1 from the candidate's perspective; the pair outcome
is the sign of the score sum, so a win in one order and a loss in the other
is a tie. Net win rate over a set of outcomes is (#win - #lose) / total.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .backend import Backend
from .errors import ConfigError, TemplateError, TransportError
from .prompt_kit import ModelProfile, RequestPayload

WIN, TIE, LOSE = 1, 0, -1
VALID_SCORES = (WIN, TIE, LOSE)
OUTCOMES = ("win", "tie", "lose")

# Judge templates use their own placeholder set.
_JUDGE_PLACEHOLDER_RE = re.compile(r"\{(question|answer_1|answer_2)\}")

_VERDICT_RE = re.compile(r"\b(first|second|tie)\b", re.IGNORECASE)

DEFAULT_JUDGE_TEMPLATE = (
    "You are a fair judge. Given a question and two candidate answers, decide "
    "which answer is better overall.\n\n"
    "Question:\n{question}\n\n"
    "Answer 1:\n{answer_1}\n\n"
    "Answer 2:\n{answer_2}\n\n"
    'Reply with exactly one word: "first" if Answer 1 is better, "second" if '
    'Answer 2 is better, or "tie".')


@dataclass(frozen=True)
class PairOutcome:
    question_id: str
    metric_name: str
    outcome: str
    score_ab: int
    score_ba: int
    model: str = ""
    category: str = ""
    parse_failed: bool = False

    def __post_init__(self):
        if self.score_ab not in VALID_SCORES or self.score_ba not in VALID_SCORES:
            raise ConfigError("scores must be one of -1, 0, +1")
        if self.outcome != combine_order_swapped(self.score_ab, self.score_ba):
            raise ConfigError("outcome must match the sign of the score sum")

    def to_json(self) -> dict:
        return {
            "question_id": self.question_id,
            "metric": self.metric_name,
            "model": self.model,
            "category": self.category,
            "outcome": self.outcome,
            "score_ab": self.score_ab,
            "score_ba": self.score_ba,
        }


@dataclass(frozen=True)
class JudgeConfig:
    profile: ModelProfile
    metric_templates: dict[str, str]
    category_overrides: dict[str, str] | None = None
    exclude_categories: tuple[str, ...] = ()
    temperature: float | None = 0.0

    def __post_init__(self):
        if not self.metric_templates:
            raise ConfigError("at least one metric template is required")
        for name, tpl in self.metric_templates.items():
            for match in re.finditer(r"\{(\w+)\}", tpl):
                if match.group(1) not in ("question", "answer_1", "answer_2"):
                    raise TemplateError(
                        f"judge template {name!r}: unknown placeholder "
                        f"{{{match.group(1)}}}")

    @classmethod
    def load(cls, profile: ModelProfile, template_paths: dict[str, str | Path],
             **kwargs) -> "JudgeConfig":
        templates = {name: Path(p).read_text(encoding="utf-8")
                     for name, p in template_paths.items()}
        return cls(profile=profile, metric_templates=templates, **kwargs)


def _render_judge(template: str, q: str, a1: str, a2: str) -> str:
    bindings = {"question": q, "answer_1": a1, "answer_2": a2}
    return _JUDGE_PLACEHOLDER_RE.sub(lambda m: bindings[m.group(1)], template)


def judge_once(cfg: JudgeConfig, q: str, answer_first: str, answer_second: str,
               backend: Backend, metric: str) -> tuple[str, bool]:
    """One judge call; returns (verdict, parse_ok) with verdict in
    first/second/tie. Unparseable replies conservatively count as ties."""
    if not answer_first or not answer_second:
        raise ConfigError("both answers must be non-empty")
    template = cfg.metric_templates.get(metric)
    if template is None:
        raise ConfigError(f"unknown metric {metric!r}")
    prompt = _render_judge(template, q, answer_first, answer_second)
    payload = RequestPayload(
        messages=(("user", prompt),),
        temperature=cfg.temperature,
        model=cfg.profile.model_id,
    )
    try:
        result = backend.complete(payload)
    except TransportError:
        return "tie", False
    match = _VERDICT_RE.search(result.text)
    if not match:
        return "tie", False
    return match.group(1).lower(), True


def combine_order_swapped(s1: int, s2: int) -> str:
    if s1 not in VALID_SCORES or s2 not in VALID_SCORES:
        raise ConfigError("scores must be one of -1, 0, +1")
    total = s1 + s2
    if total > 0:
        return "win"
    if total < 0:
        return "lose"
    return "tie"


def _verdict_to_score(verdict: str, candidate_slot: int) -> int:
    """Score from the candidate's perspective given which slot it occupied."""
    if verdict == "tie":
        return TIE
    won = (verdict == "first") == (candidate_slot == 1)
    return WIN if won else LOSE


def evaluate_pair(cfg: JudgeConfig, q: str, candidate_answer: str,
                  baseline_answer: str, backend: Backend, metric: str,
                  question_id: str = "", model: str = "",
                  category: str = "") -> PairOutcome:
    """Judge a candidate/baseline pair twice with swapped order."""
    template_metric = metric
    if cfg.category_overrides and category in cfg.category_overrides:
        template_metric = cfg.category_overrides[category]
    v1, ok1 = judge_once(cfg, q, candidate_answer, baseline_answer, backend,
                         template_metric)
    v2, ok2 = judge_once(cfg, q, baseline_answer, candidate_answer, backend,
                         template_metric)
    score_ab = _verdict_to_score(v1, candidate_slot=1)
    score_ba = _verdict_to_score(v2, candidate_slot=2)
    return PairOutcome(
        question_id=question_id,
        metric_name=metric,
        outcome=combine_order_swapped(score_ab, score_ba),
        score_ab=score_ab,
        score_ba=score_ba,
        model=model,
        category=category,
        parse_failed=not (ok1 and ok2),
    )


def net_win_rate(outcomes: list[PairOutcome] | list[str]) -> float:
    if not outcomes:
        raise ConfigError("net win rate needs at least one outcome")
    names = [o.outcome if isinstance(o, PairOutcome) else o for o in outcomes]
    for name in names:
        if name not in OUTCOMES:
            raise ConfigError(f"unknown outcome {name!r}")
    wins = names.count("win")
    loses = names.count("lose")
    return (wins - loses) / len(names)


def winrate_breakdown(outcomes: list[PairOutcome],
                      group_key: str) -> list[dict]:
    """Per-group win/tie/lose counts and net win rate."""
    keyers = {
        "model": lambda o: o.model,
        "category": lambda o: o.category,
        "metric": lambda o: o.metric_name,
    }
    if group_key not in keyers:
        raise ConfigError(f"unknown group key {group_key!r}")
    keyer = keyers[group_key]
    groups: dict[str, list[PairOutcome]] = {}
    for outcome in outcomes:
        groups.setdefault(keyer(outcome), []).append(outcome)
    rows = []
    for name in sorted(groups):
        members = groups[name]
        names = [o.outcome for o in members]
        rows.append({
            "group": name,
            "win": names.count("win"),
            "tie": names.count("tie"),
            "lose": names.count("lose"),
            "count": len(members),
            "net_win_rate": net_win_rate(members),
        })
    return rows


def write_outcomes(outcomes: list[PairOutcome], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for outcome in outcomes:
            fh.write(json.dumps(outcome.to_json(), sort_keys=True) + "\n")


def read_outcomes(path: str | Path) -> list[PairOutcome]:
    outcomes = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            outcomes.append(PairOutcome(
                question_id=doc["question_id"],
                metric_name=doc["metric"],
                outcome=doc["outcome"],
                score_ab=doc["score_ab"],
                score_ba=doc["score_ba"],
                model=doc.get("model", ""),
                category=doc.get("category", ""),
            ))
    return outcomes
