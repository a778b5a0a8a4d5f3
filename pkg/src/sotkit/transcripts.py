"""Per-question transcript files: the unit of replay, resume, and audit.

One JSON document per question per mode; bytes are deterministic for a fixed
run so repeated benches can be diffed directly.
"""

from __future__ import annotations

import json
from pathlib import Path

from .expansion import ExpansionResult, NormalAnswer, SotAnswer
from .router import RouterDecision
from .skeleton import Skeleton, SkeletonPoint


def _normal_doc(answer: NormalAnswer) -> dict:
    return {
        "kind": "normal",
        "question_id": answer.question_id,
        "text": answer.text,
        "latency": answer.latency,
        "prefill_tokens": answer.prefill_tokens,
        "decode_tokens": answer.decode_tokens,
    }


def _sot_doc(answer: SotAnswer) -> dict:
    return {
        "kind": "sot",
        "question_id": answer.question_id,
        "skeleton": {
            "raw": answer.skeleton.raw,
            "truncated": answer.skeleton.truncated,
            "points": [{"index": p.index, "text": p.text}
                       for p in answer.skeleton.points],
        },
        "skeleton_prompt": answer.skeleton_prompt_text,
        "expansions": [{
            "index": e.index,
            "point_skeleton": e.point_skeleton,
            "text": e.text,
            "latency": e.latency,
            "prefill_tokens": e.prefill_tokens,
            "decode_tokens": e.decode_tokens,
            "prompt": e.prompt_text,
            "degraded": e.degraded,
        } for e in answer.expansions],
        "final_text": answer.final_text,
        "skeleton_latency": answer.skeleton_latency,
        "max_point_latency": answer.max_point_latency,
        "sot_latency": answer.sot_latency,
        "stage_tokens": {
            "stage1_prefill": answer.stage1_prefill,
            "stage1_decode": answer.stage1_decode,
            "stage2_prefill": answer.stage2_prefill,
            "stage2_decode": answer.stage2_decode,
        },
    }


def answer_to_doc(answer: NormalAnswer | SotAnswer,
                  decision: RouterDecision | None = None) -> dict:
    doc = _sot_doc(answer) if isinstance(answer, SotAnswer) else _normal_doc(answer)
    if decision is not None:
        doc["router"] = {
            "use_sot": decision.use_sot,
            "source": decision.source,
            "raw": decision.raw,
            "router_latency": decision.router_latency,
            "fallback": decision.fallback,
        }
    return doc


def transcript_path(directory: str | Path, question_id: str, mode: str) -> Path:
    return Path(directory) / f"{question_id}.{mode}.json"


def write_transcript(directory: str | Path, question_id: str, mode: str,
                     doc: dict) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = transcript_path(directory, question_id, mode)
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")
    return path


def read_transcript(directory: str | Path, question_id: str, mode: str) -> dict:
    return json.loads(
        transcript_path(directory, question_id, mode).read_text(encoding="utf-8"))


def doc_to_answers(doc: dict) -> NormalAnswer | SotAnswer:
    """Rebuild an answer object from a transcript document."""
    if doc["kind"] == "normal":
        return NormalAnswer(
            question_id=doc["question_id"],
            text=doc["text"],
            latency=doc["latency"],
            prefill_tokens=doc["prefill_tokens"],
            decode_tokens=doc["decode_tokens"],
        )
    skeleton = Skeleton(
        raw=doc["skeleton"]["raw"],
        points=tuple(SkeletonPoint(index=p["index"], text=p["text"])
                     for p in doc["skeleton"]["points"]),
        truncated=doc["skeleton"]["truncated"],
    )
    expansions = tuple(ExpansionResult(
        index=e["index"],
        point_skeleton=e["point_skeleton"],
        text=e["text"],
        latency=e["latency"],
        prefill_tokens=e["prefill_tokens"],
        decode_tokens=e["decode_tokens"],
        prompt_text=e["prompt"],
        degraded=e["degraded"],
    ) for e in doc["expansions"])
    tokens = doc["stage_tokens"]
    return SotAnswer(
        question_id=doc["question_id"],
        skeleton=skeleton,
        expansions=expansions,
        final_text=doc["final_text"],
        skeleton_latency=doc["skeleton_latency"],
        max_point_latency=doc["max_point_latency"],
        sot_latency=doc["sot_latency"],
        stage1_prefill=tokens["stage1_prefill"],
        stage1_decode=tokens["stage1_decode"],
        stage2_prefill=tokens["stage2_prefill"],
        stage2_decode=tokens["stage2_decode"],
        skeleton_prompt_text=doc["skeleton_prompt"],
    )
