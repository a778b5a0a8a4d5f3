"""The two-stage pipeline: skeleton call, parallel point expansion, aggregation.

Latency accounting for the parallel stage follows the slowest-call rule:
total = skeleton-call latency + max over point-expanding-call latencies.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .backend import Backend, CompletionResult
from .errors import EmptySkeleton, IntegrityError, SotFallback, TransportError
from .prompt_kit import (
    ModelProfile,
    TemplateSet,
    assemble_normal_request,
    assemble_point_request,
    assemble_skeleton_request,
)
from .skeleton import Skeleton, SkeletonPoint, parse_skeleton

log = logging.getLogger(__name__)

DEFAULT_POINT_CAP = 10


@dataclass(frozen=True)
class ExpansionResult:
    index: int
    point_skeleton: str
    text: str
    latency: float
    prefill_tokens: int
    decode_tokens: int
    prompt_text: str = ""
    degraded: bool = False


@dataclass(frozen=True)
class SotAnswer:
    question_id: str
    skeleton: Skeleton
    expansions: tuple[ExpansionResult, ...]
    final_text: str
    skeleton_latency: float
    max_point_latency: float
    sot_latency: float
    stage1_prefill: int
    stage1_decode: int
    stage2_prefill: int
    stage2_decode: int
    skeleton_prompt_text: str = ""

    def __post_init__(self):
        if abs(self.sot_latency - (self.skeleton_latency + self.max_point_latency)) > 1e-12:
            raise IntegrityError("sot_latency must equal skeleton + slowest point latency")
        if {e.index for e in self.expansions} != {p.index for p in self.skeleton.points}:
            raise IntegrityError("expansions must cover exactly the skeleton point indices")


@dataclass(frozen=True)
class NormalAnswer:
    question_id: str
    text: str
    latency: float
    prefill_tokens: int
    decode_tokens: int


def run_normal(q: str, profile: ModelProfile, backend: Backend,
               question_id: str = "",
               templates: TemplateSet | None = None) -> NormalAnswer:
    payload = assemble_normal_request(q, profile, templates)
    result = backend.complete(payload)
    return NormalAnswer(
        question_id=question_id,
        text=result.text,
        latency=result.wall_latency,
        prefill_tokens=result.prompt_tokens,
        decode_tokens=result.completion_tokens,
    )


def aggregate(skeleton: Skeleton, expansions: list[ExpansionResult] | tuple[ExpansionResult, ...],
              joiner: str = "\n\n", strip_scaffold: bool = False) -> str:
    """Concatenate expansions in skeleton order into the final answer."""
    by_index = {e.index: e for e in expansions}
    blocks: list[str] = []
    for point in skeleton.points:
        exp = by_index.get(point.index)
        if exp is None:
            raise IntegrityError(f"missing expansion for point {point.index}")
        if strip_scaffold:
            blocks.append(exp.text.strip() or point.text)
        else:
            blocks.append(f"{point.index}. {point.text}{exp.text}")
    return joiner.join(blocks)


def _expand_point(q: str, skeleton: Skeleton, point: SkeletonPoint,
                  profile: ModelProfile, backend: Backend,
                  templates: TemplateSet | None) -> ExpansionResult:
    payload = assemble_point_request(q, skeleton.raw, point.index, point.text,
                                     profile, templates)
    try:
        result = backend.complete(payload)
    except TransportError as exc:
        # Degrade to the bare skeleton point rather than aborting the answer.
        log.warning("point %d failed (%s); degrading to its skeleton text",
                    point.index, exc)
        return ExpansionResult(
            index=point.index, point_skeleton=point.text, text="",
            latency=0.0, prefill_tokens=payload.rendered_prompt_token_estimate,
            decode_tokens=0, prompt_text=payload.rendered_prompt, degraded=True)
    return ExpansionResult(
        index=point.index,
        point_skeleton=point.text,
        text=result.text,
        latency=result.wall_latency,
        prefill_tokens=result.prompt_tokens,
        decode_tokens=result.completion_tokens,
        prompt_text=payload.rendered_prompt,
    )


def run_sot(q: str, profile: ModelProfile, backend: Backend,
            cap: int | None = DEFAULT_POINT_CAP, question_id: str = "",
            templates: TemplateSet | None = None, joiner: str = "\n\n",
            strip_scaffold: bool = False) -> SotAnswer:
    skel_payload = assemble_skeleton_request(q, profile, templates)
    skel_result = backend.complete(skel_payload)
    # The backend strips the echoed partial answer, so re-prepend it before
    # parsing: the model's continuation starts mid-line after "1.".
    raw_skeleton = skel_payload.partial_answer + skel_result.text
    try:
        skeleton = parse_skeleton(raw_skeleton, cap=cap)
    except EmptySkeleton as exc:
        raise SotFallback(exc.raw) from exc

    workers = min(len(skeleton.points), backend.max_concurrency)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # pool.map preserves input order, so results arrive in skeleton order
        # regardless of completion order.
        expansions = list(pool.map(
            lambda p: _expand_point(q, skeleton, p, profile, backend, templates),
            skeleton.points))

    max_latency = max(e.latency for e in expansions)
    return SotAnswer(
        question_id=question_id,
        skeleton=skeleton,
        expansions=tuple(expansions),
        final_text=aggregate(skeleton, expansions, joiner=joiner,
                             strip_scaffold=strip_scaffold),
        skeleton_latency=skel_result.wall_latency,
        max_point_latency=max_latency,
        sot_latency=skel_result.wall_latency + max_latency,
        stage1_prefill=skel_result.prompt_tokens,
        stage1_decode=skel_result.completion_tokens,
        stage2_prefill=sum(e.prefill_tokens for e in expansions),
        stage2_decode=sum(e.decode_tokens for e in expansions),
        skeleton_prompt_text=skel_payload.rendered_prompt,
    )
