"""Decision layer choosing skeleton-first or normal generation per question.

Sources: an LLM asked to classify the question (A/B/C letter reply), a
trained classifier behind an HTTP service, a static human-label file, or an
offline heuristic. Every unparseable or failed route falls back to normal
generation: wrongly triggering the parallel mode hurts answer quality, while
missing a trigger only costs speed.
"""

from __future__ import annotations

import logging
import re
import time
from dataclasses import dataclass, replace

import requests

from .backend import Backend
from .datasets import approx_tokens
from .errors import ConfigError, IntegrityError, SotFallback, TransportError
from .expansion import NormalAnswer, SotAnswer, run_normal, run_sot
from .prompt_kit import ModelProfile, TemplateSet, assemble_router_prompt

log = logging.getLogger(__name__)

ROUTER_SOURCES = ("prompting", "trained", "human-label", "heuristic")

# First standalone A/B/C token, case-sensitive, word-boundary delimited.
_LETTER_RE = re.compile(r"\b([ABC])\b")

_ARITHMETIC_CHARS = set("+-*/=^%")


@dataclass(frozen=True)
class RouterDecision:
    question_id: str
    use_sot: bool
    source: str
    raw: str = ""
    router_latency: float = 0.0
    fallback: bool = False

    def __post_init__(self):
        if self.source not in ROUTER_SOURCES:
            raise ConfigError(f"unknown router source {self.source!r}")
        if self.source in ("prompting", "trained") and not self.raw:
            raise ConfigError("prompting/trained decisions must carry a raw verdict")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def parse_router_letter(text: str) -> bool:
    """A triggers the parallel mode; B, C, or anything else does not."""
    match = _LETTER_RE.search(text)
    return bool(match) and match.group(1) == "A"


def route_prompting(q: str, backend: Backend, question_id: str = "",
                    templates: TemplateSet | None = None) -> RouterDecision:
    payload = assemble_router_prompt(q, templates)
    try:
        result = backend.complete(payload)
    except TransportError as exc:
        log.warning("router call failed (%s); fail-safe to normal", exc)
        return RouterDecision(question_id=question_id, use_sot=False,
                              source="prompting", raw=f"error: {exc}")
    return RouterDecision(
        question_id=question_id,
        use_sot=parse_router_letter(result.text),
        source="prompting",
        raw=result.text or "<empty>",
        router_latency=result.wall_latency,
    )


def route_trained(q: str, service_url: str, question_id: str = "",
                  timeout: float = 10.0) -> RouterDecision:
    url = service_url.rstrip("/") + "/route"
    start = time.time()
    try:
        resp = requests.post(url, json={"question": q}, timeout=timeout)
        resp.raise_for_status()
        doc = resp.json()
        use_sot = bool(doc["use_sot"])
        raw = str(doc.get("score", use_sot))
    except (requests.RequestException, ValueError, KeyError) as exc:
        log.warning("trained-router service unavailable (%s); fail-safe to normal", exc)
        return RouterDecision(question_id=question_id, use_sot=False,
                              source="trained", raw="unavailable",
                              router_latency=time.time() - start)
    return RouterDecision(question_id=question_id, use_sot=use_sot,
                          source="trained", raw=raw,
                          router_latency=time.time() - start)


def route_human(question_id: str, labels: dict[str, bool]) -> RouterDecision:
    if question_id not in labels:
        raise ConfigError(f"no human label for question {question_id!r}")
    return RouterDecision(question_id=question_id, use_sot=labels[question_id],
                          source="human-label")


def route_heuristic(q: str, question_id: str = "",
                    min_tokens: int = 8) -> RouterDecision:
    """Offline stub: long questions without arithmetic characters route to SoT."""
    use_sot = (approx_tokens(q) >= min_tokens
               and not (_ARITHMETIC_CHARS & set(q)))
    return RouterDecision(question_id=question_id, use_sot=use_sot,
                          source="heuristic", raw=q[:40])


def run_sot_r(q: str, profile: ModelProfile, backend: Backend, router_kind: str,
              question_id: str = "", cap: int | None = None,
              service_url: str = "", labels: dict[str, bool] | None = None,
              templates: TemplateSet | None = None,
              heuristic_min_tokens: int = 8,
              ) -> tuple[SotAnswer | NormalAnswer, RouterDecision]:
    """Route, then run exactly one of the two pipelines."""
    if router_kind == "prompting":
        decision = route_prompting(q, backend, question_id, templates)
    elif router_kind == "trained":
        decision = route_trained(q, service_url, question_id)
    elif router_kind == "human":
        decision = route_human(question_id, labels or {})
    elif router_kind == "heuristic":
        decision = route_heuristic(q, question_id, heuristic_min_tokens)
    else:
        raise ConfigError(f"unknown router kind {router_kind!r}")

    if decision.use_sot:
        try:
            kwargs = {} if cap is None else {"cap": cap}
            answer: SotAnswer | NormalAnswer = run_sot(
                q, profile, backend, question_id=question_id,
                templates=templates, **kwargs)
            return answer, decision
        except SotFallback:
            log.warning("empty skeleton for %s; rerunning as normal", question_id)
            decision = replace(decision, fallback=True)
    answer = run_normal(q, profile, backend, question_id=question_id,
                        templates=templates)
    return answer, decision


def confusion(reference: dict[str, bool], candidate: dict[str, bool]) -> ConfusionMatrix:
    """Agreement counts between two decision sets over the same questions."""
    if set(reference) != set(candidate):
        raise IntegrityError("reference and candidate must cover the same question ids")
    tp = fp = fn = tn = 0
    for qid, ref in reference.items():
        cand = candidate[qid]
        if ref and cand:
            tp += 1
        elif not ref and cand:
            fp += 1
        elif ref and not cand:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)
