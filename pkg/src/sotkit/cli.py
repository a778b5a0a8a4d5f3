"""Command-line entry point.

Subcommands: run (single question), bench (dataset sweep with reports),
estimate (analytical latency), judge (paired evaluation of two transcript
sets), route (one routing decision), report (tables from records/outcomes).
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import eval_quality, latency_model, reports, router
from .backend import BackendConfig, MockScript, make_backend
from .datasets import load_dataset, load_labels
from .errors import SotFallback, SotkitError
from .expansion import run_normal, run_sot
from .prompt_kit import ModelProfile, load_profile
from .transcripts import (
    answer_to_doc,
    doc_to_answers,
    read_transcript,
    transcript_path,
    write_transcript,
)

log = logging.getLogger(__name__)


def _load_profile_arg(path: str | None) -> ModelProfile:
    return load_profile(path) if path else ModelProfile()


def _make_backend_arg(path: str | None, concurrency: int | None):
    if path:
        from .backend import load_backend_config
        cfg = load_backend_config(path)
    else:
        cfg = BackendConfig(kind="mock")
    if concurrency:
        from dataclasses import replace
        cfg = replace(cfg, max_concurrency=concurrency)
    return make_backend(cfg)


def _router_kwargs(args) -> dict:
    kwargs: dict = {}
    if getattr(args, "service_url", None):
        kwargs["service_url"] = args.service_url
    if getattr(args, "labels", None):
        kwargs["labels"] = load_labels(args.labels)
    return kwargs


def _run_one(question, mode: str, profile, backend, args) -> dict:
    qid = question.id
    if mode == "normal":
        answer = run_normal(question.text, profile, backend, question_id=qid)
        return answer_to_doc(answer)
    if mode == "sot":
        try:
            answer = run_sot(question.text, profile, backend, question_id=qid)
        except SotFallback:
            if not getattr(args, "fallback_normal", False):
                raise
            answer = run_normal(question.text, profile, backend, question_id=qid)
        return answer_to_doc(answer)
    # sot-r
    answer, decision = router.run_sot_r(
        question.text, profile, backend, args.router, question_id=qid,
        **_router_kwargs(args))
    return answer_to_doc(answer, decision)


def cmd_run(args) -> int:
    profile = _load_profile_arg(args.profile)
    backend = _make_backend_arg(args.backend, None)
    if args.dataset:
        records = [r for r in load_dataset(args.dataset) if r.id == args.id]
        if not records:
            raise SotkitError(f"question id {args.id!r} not in dataset")
        question = records[0]
    else:
        from .datasets import QuestionRecord
        question = QuestionRecord(id=args.id or "q0", category="generic",
                                  text=args.question)
    doc = _run_one(question, args.mode, profile, backend, args)
    if args.out:
        write_transcript(args.out, question.id, args.mode, doc)
    print(doc.get("final_text") or doc.get("text", ""))
    return 0


def cmd_bench(args) -> int:
    profile = _load_profile_arg(args.profile)
    backend = _make_backend_arg(args.backend, args.concurrency)
    questions = load_dataset(args.dataset)
    out_dir = Path(args.out)
    modes = ["normal"] + ([args.mode] if args.mode != "normal" else [])

    def bench_one(question) -> None:
        for mode in modes:
            if transcript_path(out_dir, question.id, mode).exists():
                continue  # resume: completed questions are not re-called
            try:
                doc = _run_one(question, mode, profile, backend, args)
            except SotkitError as exc:
                doc = {"kind": "error", "question_id": question.id,
                       "mode": mode, "error": str(exc)}
            write_transcript(out_dir, question.id, mode, doc)

    workers = max(1, args.concurrency or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(bench_one, questions))

    run_records = []
    for question in questions:
        normal_doc = read_transcript(out_dir, question.id, "normal")
        normal = doc_to_answers(normal_doc) if normal_doc["kind"] == "normal" else None
        sot_answer = None
        if args.mode in ("sot", "sot-r"):
            doc = read_transcript(out_dir, question.id, args.mode)
            if doc["kind"] == "sot":
                sot_answer = doc_to_answers(doc)
        if normal is None and sot_answer is None:
            continue
        run_records.append(reports.RunRecord(
            question_id=question.id, model_id=profile.model_id,
            category=question.category, normal=normal, sot=sot_answer))

    fmt = args.format
    suffix = fmt
    if any(r.sot for r in run_records):
        reports.emit(reports.speedup_report(run_records), fmt,
                     out_dir / f"speedup.{suffix}",
                     columns=["model", "category", "count", "mean_speedup",
                              "latency_source"])
        reports.emit(reports.length_stats(run_records), fmt,
                     out_dir / f"length_stats.{suffix}",
                     columns=["model", "category", "count", "mean_point_count",
                              "mean_max_point_tokens", "mean_point_length_std",
                              "mean_final_to_normal_ratio",
                              "mean_max_point_to_normal_ratio",
                              "approximate_tokens"])
        reports.emit(reports.token_overhead(run_records, args.token_mode), fmt,
                     out_dir / f"token_overhead.{suffix}",
                     columns=["question_id", "model", "category", "mode",
                              "stage1_prefill", "stage2_prefill",
                              "normal_prefill", "ratio"])
    print(f"bench complete: {len(run_records)} records in {out_dir}")
    return 0


def cmd_estimate(args) -> int:
    table = latency_model.load_profiling_table(args.table)
    est = latency_model.estimate_sot(table, args.li_s, args.lo_s,
                                     args.li_pe, args.lo_pe, args.batch)
    doc = {
        "skeleton_latency_ms": est.skeleton_latency,
        "point_latency_ms": est.point_latency,
        "total_ms": est.total,
        "batch": est.batch,
        "clamped": est.clamped,
    }
    print(json.dumps(doc, sort_keys=True, indent=2))
    return 0


def cmd_judge(args) -> int:
    profile = _load_profile_arg(args.judge_profile)
    backend = _make_backend_arg(args.judge_backend, None)
    if args.metric_template:
        template = Path(args.metric_template).read_text(encoding="utf-8")
    else:
        template = eval_quality.DEFAULT_JUDGE_TEMPLATE
    cfg = eval_quality.JudgeConfig(profile=profile,
                                   metric_templates={args.metric: template})
    doc_a = json.loads(Path(args.a).read_text(encoding="utf-8"))
    doc_b = json.loads(Path(args.b).read_text(encoding="utf-8"))
    text_a = doc_a.get("final_text") or doc_a.get("text", "")
    text_b = doc_b.get("final_text") or doc_b.get("text", "")
    outcome = eval_quality.evaluate_pair(
        cfg, args.question, text_a, text_b, backend, args.metric,
        question_id=doc_a.get("question_id", ""), model=profile.model_id,
        category=args.category)
    eval_quality.write_outcomes([outcome], args.out)
    print(json.dumps(outcome.to_json(), sort_keys=True))
    return 0


def cmd_route(args) -> int:
    if args.router == "prompting":
        backend = _make_backend_arg(args.backend, None)
        decision = router.route_prompting(args.question, backend, args.id)
    elif args.router == "trained":
        decision = router.route_trained(args.question, args.service_url, args.id)
    elif args.router == "human":
        decision = router.route_human(args.id, load_labels(args.labels))
    else:
        decision = router.route_heuristic(args.question, args.id)
    print(json.dumps({"question_id": decision.question_id,
                      "use_sot": decision.use_sot,
                      "source": decision.source,
                      "raw": decision.raw}, sort_keys=True))
    return 0


def cmd_report(args) -> int:
    outcomes = eval_quality.read_outcomes(args.outcomes)
    rows = eval_quality.winrate_breakdown(outcomes, args.group_by)
    reports.emit(rows, args.format, args.out,
                 columns=["group", "win", "tie", "lose", "count", "net_win_rate"])
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sotkit")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    run = sub.add_parser("run", help="answer a single question")
    run.add_argument("--question")
    run.add_argument("--dataset")
    run.add_argument("--id", default="")
    run.add_argument("--profile")
    run.add_argument("--backend")
    run.add_argument("--mode", choices=["normal", "sot", "sot-r"], default="sot")
    run.add_argument("--router", choices=["prompting", "trained", "human", "heuristic"],
                     default="heuristic")
    run.add_argument("--service-url", default="")
    run.add_argument("--labels")
    run.add_argument("--out")
    run.add_argument("--fallback-normal", action="store_true")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="run a dataset and emit reports")
    bench.add_argument("--dataset", required=True)
    bench.add_argument("--profile")
    bench.add_argument("--backend")
    bench.add_argument("--mode", choices=["normal", "sot", "sot-r"], default="sot")
    bench.add_argument("--router", choices=["prompting", "trained", "human", "heuristic"],
                       default="heuristic")
    bench.add_argument("--service-url", default="")
    bench.add_argument("--labels")
    bench.add_argument("--out", required=True)
    bench.add_argument("--concurrency", type=int, default=1)
    bench.add_argument("--format", choices=["csv", "json"], default="csv")
    bench.add_argument("--token-mode", choices=["per-call", "shared-prefix"],
                       default="per-call")
    bench.add_argument("--fallback-normal", action="store_true", default=True)
    bench.set_defaults(func=cmd_bench)

    estimate = sub.add_parser("estimate", help="analytical latency estimate")
    estimate.add_argument("--table", required=True)
    estimate.add_argument("--li-s", type=int, required=True)
    estimate.add_argument("--lo-s", type=int, required=True)
    estimate.add_argument("--li-pe", type=int, required=True)
    estimate.add_argument("--lo-pe", type=int, required=True)
    estimate.add_argument("--batch", type=int, required=True)
    estimate.set_defaults(func=cmd_estimate)

    judge = sub.add_parser("judge", help="paired evaluation of two transcripts")
    judge.add_argument("--a", required=True, help="candidate transcript file")
    judge.add_argument("--b", required=True, help="baseline transcript file")
    judge.add_argument("--question", required=True)
    judge.add_argument("--metric", default="general")
    judge.add_argument("--metric-template")
    judge.add_argument("--category", default="generic")
    judge.add_argument("--judge-profile")
    judge.add_argument("--judge-backend")
    judge.add_argument("--out", required=True)
    judge.set_defaults(func=cmd_judge)

    route = sub.add_parser("route", help="one routing decision")
    route.add_argument("--question", required=True)
    route.add_argument("--id", default="q0")
    route.add_argument("--router", choices=["prompting", "trained", "human", "heuristic"],
                       default="heuristic")
    route.add_argument("--backend")
    route.add_argument("--service-url", default="")
    route.add_argument("--labels")
    route.set_defaults(func=cmd_route)

    report = sub.add_parser("report", help="tables from outcome files")
    report.add_argument("--outcomes", required=True)
    report.add_argument("--group-by", choices=["model", "category", "metric"],
                        default="category")
    report.add_argument("--format", choices=["csv", "json"], default="csv")
    report.add_argument("--out", required=True)
    report.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    random.seed(args.seed)
    try:
        return args.func(args)
    except SotkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
