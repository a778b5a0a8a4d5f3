"""Descriptive statistics and overhead ratios over run records.

Every table is computed within one token-count mode; mixing measured and
approximate counts in a single table is rejected so ratios stay comparable.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass
from pathlib import Path

from .datasets import approx_tokens, tokenize
from .errors import ConfigError, IntegrityError
from .expansion import NormalAnswer, SotAnswer
from .latency_model import SotLatencyEstimate, speedup
from .router import RouterDecision

TOKEN_MODES = ("per-call", "shared-prefix")


@dataclass(frozen=True)
class RunRecord:
    question_id: str
    model_id: str
    category: str
    normal: NormalAnswer | None = None
    sot: SotAnswer | None = None
    sot_r_decision: RouterDecision | None = None
    estimate: SotLatencyEstimate | None = None

    def __post_init__(self):
        if self.normal is None and self.sot is None:
            raise IntegrityError("a run record needs a normal or a SoT run")


def _group(records: list[RunRecord]) -> dict[tuple[str, str], list[RunRecord]]:
    groups: dict[tuple[str, str], list[RunRecord]] = {}
    for rec in records:
        groups.setdefault((rec.model_id, rec.category), []).append(rec)
    return groups


def length_stats(records: list[RunRecord]) -> list[dict]:
    """Point counts, length imbalance, and answer-length ratios per group.

    All lengths use the approximate token counter so numerator and
    denominator of each ratio come from the same rule.
    """
    rows = []
    for (model, category), members in sorted(_group(records).items()):
        with_sot = [r for r in members if r.sot is not None and r.normal is not None]
        if not with_sot:
            continue
        b_values, max_points, stds, final_ratios, max_ratios = [], [], [], [], []
        for rec in with_sot:
            point_lengths = [approx_tokens(f"{e.index}. {e.point_skeleton}{e.text}")
                             for e in rec.sot.expansions]
            normal_len = approx_tokens(rec.normal.text)
            if normal_len == 0:
                continue
            b_values.append(len(rec.sot.expansions))
            max_points.append(max(point_lengths))
            stds.append(statistics.pstdev(point_lengths))
            final_ratios.append(approx_tokens(rec.sot.final_text) / normal_len)
            max_ratios.append(max(point_lengths) / normal_len)
        if not b_values:
            continue
        rows.append({
            "model": model,
            "category": category,
            "count": len(b_values),
            "mean_point_count": statistics.fmean(b_values),
            "mean_max_point_tokens": statistics.fmean(max_points),
            "mean_point_length_std": statistics.fmean(stds),
            "mean_final_to_normal_ratio": statistics.fmean(final_ratios),
            "mean_max_point_to_normal_ratio": statistics.fmean(max_ratios),
            "approximate_tokens": True,
        })
    return rows


def _shared_prefix_prefill(sot: SotAnswer) -> int:
    """Stage-2 prefill with the common token prefix of point prompts counted once."""
    token_lists = [tokenize(e.prompt_text) for e in sot.expansions]
    if not token_lists:
        return 0
    common = 0
    for pieces in zip(*token_lists):
        if all(p == pieces[0] for p in pieces):
            common += 1
        else:
            break
    suffixes = sum(len(tokens) - common for tokens in token_lists)
    return common + suffixes


def token_overhead(records: list[RunRecord], mode: str = "per-call") -> list[dict]:
    """Prefill-token ratio of the two-stage run to the normal run, per record."""
    if mode not in TOKEN_MODES:
        raise ConfigError(f"unknown token-overhead mode {mode!r}")
    rows = []
    for rec in records:
        if rec.sot is None or rec.normal is None:
            continue
        normal_prefill = rec.normal.prefill_tokens
        if normal_prefill == 0:
            raise ConfigError(f"record {rec.question_id}: zero normal prefill tokens")
        if mode == "per-call":
            stage2 = rec.sot.stage2_prefill
        else:
            stage2 = _shared_prefix_prefill(rec.sot)
        rows.append({
            "question_id": rec.question_id,
            "model": rec.model_id,
            "category": rec.category,
            "mode": mode,
            "stage1_prefill": rec.sot.stage1_prefill,
            "stage2_prefill": stage2,
            "normal_prefill": normal_prefill,
            "ratio": (rec.sot.stage1_prefill + stage2) / normal_prefill,
        })
    return rows


def speedup_report(records: list[RunRecord]) -> list[dict]:
    """Arithmetic-mean speed-up per (model, category) group.

    Measured latencies are preferred; records with only analytical estimates
    contribute those instead, and each row names its latency source.
    """
    rows = []
    for (model, category), members in sorted(_group(records).items()):
        ratios = []
        sources = set()
        for rec in members:
            if rec.normal is None:
                continue
            if rec.sot is not None:
                ratios.append(speedup(rec.normal.latency, rec.sot.sot_latency))
                sources.add("measured")
            elif rec.estimate is not None:
                ratios.append(speedup(rec.normal.latency, rec.estimate.total))
                sources.add("estimated")
        if not ratios:
            continue
        rows.append({
            "model": model,
            "category": category,
            "count": len(ratios),
            "mean_speedup": statistics.fmean(ratios),
            "latency_source": "+".join(sorted(sources)),
        })
    return rows


def emit(rows: list[dict], fmt: str, path: str | Path,
         columns: list[str] | None = None) -> None:
    """Write a report deterministically; same rows, same bytes."""
    path = Path(path)
    if fmt == "json":
        path.write_text(json.dumps(rows, sort_keys=True, indent=2) + "\n",
                        encoding="utf-8")
        return
    if fmt != "csv":
        raise ConfigError(f"unknown report format {fmt!r}")
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    path.write_text(buf.getvalue(), encoding="utf-8")
