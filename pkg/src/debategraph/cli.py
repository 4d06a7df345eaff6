"""Command line front end: ingest, generate, eval, trajectory, reason, cost."""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path
from typing import Sequence

from .backends import (
    Backend,
    BackendConfig,
    BackendError,
    CostLedger,
    LiveBackend,
    MockBackend,
    MockScript,
)
from .data import (
    DatasetError,
    TaskKind,
    build_scenarios,
    load_crab_csv,
    load_items,
    load_scenarios,
    save_scenarios,
)
from .debate import (
    Aggregation,
    DebateConfig,
    Mode,
    load_run_transcripts,
    run_scenarios,
    write_run_dir,
)
from .graph import GraphError
from .metrics import evaluate_transcripts, report_text, trajectory, trajectory_text
from .reasoning import (
    Heuristic,
    ItemResult,
    ReasonMode,
    ReasoningError,
    compare_results,
    comparison_text,
    load_link_oracle,
    run_item_one_shot,
    run_item_with_graph,
)
from .roles import PromptPack, PromptPackError, RoleKind, default_pack
from .store import atomic_write_json

DIRECT_ROLE_CHOICES = (
    RoleKind.DIRECT.value,
    RoleKind.SINGLE_ALL.value,
    RoleKind.SINGLE_TEMPORAL.value,
    RoleKind.SINGLE_DISCOURSE.value,
    RoleKind.SINGLE_PRECONDITION.value,
    RoleKind.SINGLE_COMMONSENSE.value,
)


class CliError(Exception):
    pass


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(payload, dict):
        raise CliError(f"config file {path} must hold a JSON object")
    return payload


def _resolve(flag_value, config: dict, key: str, default):
    """Flag beats config file beats built-in default."""
    if flag_value is not None:
        return flag_value
    return config.get(key, default)


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("backend")
    group.add_argument("--backend", choices=("live", "mock"), default=None)
    group.add_argument("--mock-script", default=None, help="JSON response script for --backend mock")
    group.add_argument("--base-url", default=None)
    group.add_argument("--model", default=None)
    group.add_argument("--temperature", type=float, default=None)
    group.add_argument("--max-retries", type=int, default=None)
    group.add_argument("--timeout", type=float, default=None)
    group.add_argument(
        "--api-key-env",
        default=None,
        help="environment variable holding the API key (the key itself is never a flag)",
    )


def _build_backend(args, config: dict) -> tuple[Backend, CostLedger, dict]:
    ledger = CostLedger()
    kind = _resolve(args.backend, config, "backend", "live")
    if kind == "mock":
        script_path = _resolve(args.mock_script, config, "mock_script", None)
        if script_path is None:
            raise CliError("--mock-script is required with --backend mock")
        backend: Backend = MockBackend(MockScript.from_file(script_path), ledger)
        snapshot = {"kind": "mock", "mock_script": str(script_path)}
        return backend, ledger, snapshot
    backend_config = BackendConfig(
        base_url=_resolve(args.base_url, config, "base_url", BackendConfig.base_url),
        model=_resolve(args.model, config, "model", BackendConfig.model),
        temperature=_resolve(args.temperature, config, "temperature", BackendConfig.temperature),
        max_retries=_resolve(args.max_retries, config, "max_retries", BackendConfig.max_retries),
        timeout_s=_resolve(args.timeout, config, "timeout", BackendConfig.timeout_s),
        api_key_env=_resolve(args.api_key_env, config, "api_key_env", BackendConfig.api_key_env),
    )
    backend = LiveBackend(backend_config, ledger)
    snapshot = {
        "kind": "live",
        "base_url": backend_config.base_url,
        "model": backend_config.model,
        "temperature": backend_config.temperature,
        "max_retries": backend_config.max_retries,
        "timeout_s": backend_config.timeout_s,
        "api_key_env": backend_config.api_key_env,
    }
    return backend, ledger, snapshot


def _load_pack(args, config: dict) -> PromptPack:
    directory = _resolve(getattr(args, "prompt_pack", None), config, "prompt_pack", None)
    return PromptPack.load(directory) if directory is not None else default_pack()


def _close_backend(backend: Backend) -> None:
    close = getattr(backend, "close", None)
    if callable(close):
        close()


def cmd_ingest(args) -> int:
    records = load_crab_csv(args.raw_csv)
    scenarios, warnings = build_scenarios(records)
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    save_scenarios(scenarios, args.out)
    print(
        f"wrote {len(scenarios)} scenarios to {args.out} "
        f"({len(records)} pair records, {len(warnings)} warnings)"
    )
    return 0


def cmd_generate(args) -> int:
    config = _load_config(args.config)
    debate_config = DebateConfig(
        mode=Mode(_resolve(args.mode, config, "mode", Mode.COLLAB_WITH_EXPERTS.value)),
        max_rounds=_resolve(args.max_rounds, config, "max_rounds", 3),
        n_generic_experts=_resolve(args.experts, config, "experts", 4),
        apply_judge_closure=_resolve(args.closure, config, "closure", False),
        parallelism=_resolve(args.parallelism, config, "parallelism", 1),
        random_seed=_resolve(args.seed, config, "seed", 0),
        aggregation=Aggregation(
            _resolve(args.aggregation, config, "aggregation", Aggregation.JUDGE.value)
        ),
        direct_role=RoleKind(
            _resolve(args.direct_role, config, "direct_role", RoleKind.DIRECT.value)
        ),
    )
    pack = _load_pack(args, config)
    scenarios = load_scenarios(args.scenarios)
    backend, ledger, backend_snapshot = _build_backend(args, config)
    try:
        transcripts = run_scenarios(scenarios, debate_config, backend, pack)
    finally:
        _close_backend(backend)
    snapshot = {
        "debate": debate_config.to_dict(),
        "backend": backend_snapshot,
        "prompt_pack_digest": pack.digest(),
    }
    ledger_payload = dict(ledger.to_dict())
    ledger_payload["token_counts"] = "estimated" if backend.estimates_tokens else "reported"
    write_run_dir(args.out, transcripts, snapshot, ledger_payload)

    stop_counts: dict[str, int] = {}
    anomaly_count = 0
    for transcript in transcripts:
        stop_counts[transcript.stop_reason.value] = (
            stop_counts.get(transcript.stop_reason.value, 0) + 1
        )
        anomaly_count += len(transcript.anomalies)
    stops = ", ".join(f"{reason}={count}" for reason, count in sorted(stop_counts.items()))
    print(f"run complete: {len(transcripts)} scenarios -> {args.out}")
    print(f"stop reasons: {stops}" if stops else "stop reasons: none")
    print(f"model calls: {ledger.calls()}, anomalies: {anomaly_count}")
    return 0


def _run_inputs(args) -> tuple[list, list]:
    transcripts = load_run_transcripts(args.run_dir)
    scenarios = load_scenarios(args.scenarios)
    known = {s.id for s in scenarios}
    for transcript in transcripts:
        if transcript.scenario_id not in known:
            print(
                f"warning: transcript {transcript.scenario_id!r} has no scenario, skipped",
                file=sys.stderr,
            )
    return transcripts, scenarios


def cmd_eval(args) -> int:
    transcripts, scenarios = _run_inputs(args)
    graph_report, pair_report = evaluate_transcripts(
        transcripts, scenarios, with_per_scenario=args.per_scenario
    )
    print(report_text([graph_report, pair_report]), end="")
    if args.out:
        atomic_write_json(args.out, {"graph": graph_report.to_dict(), "pair": pair_report.to_dict()})
        print(f"wrote {args.out}")
    return 0


def cmd_trajectory(args) -> int:
    transcripts, scenarios = _run_inputs(args)
    report = trajectory(transcripts, scenarios)
    print(trajectory_text(report), end="")
    if args.out:
        atomic_write_json(args.out, report.to_dict())
        print(f"wrote {args.out}")
    return 0


def _summarize_results(results: list[ItemResult]) -> dict:
    summary: dict = {}
    for task in TaskKind:
        rows = [r for r in results if r.task is task]
        if not rows:
            continue
        scored = [r for r in rows if r.correct is not None]
        summary[task.value] = {
            "n": len(rows),
            "n_scored": len(scored),
            "n_correct": sum(1 for r in scored if r.correct),
            "accuracy": (
                sum(1 for r in scored if r.correct) / len(scored) if scored else None
            ),
        }
    chains = [r for r in results if r.scores is not None]
    if chains:
        summary["chains"] = {
            "n": len(chains),
            "causality": sum(r.scores.causality for r in chains) / len(chains),
            "informativeness": sum(r.scores.informativeness for r in chains) / len(chains),
            "coherence": sum(r.scores.coherence for r in chains) / len(chains),
            "vacuous": sum(1 for r in chains if r.scores.vacuous),
        }
    return summary


def _summary_text(summary: dict) -> str:
    lines = []
    for key in sorted(summary):
        if key == "chains":
            continue
        row = summary[key]
        accuracy = f"{row['accuracy']:.4f}" if row["accuracy"] is not None else "n/a"
        lines.append(
            f"{key:<14}n={row['n']:<5}scored={row['n_scored']:<5}"
            f"correct={row['n_correct']:<5}accuracy={accuracy}"
        )
    if "chains" in summary:
        row = summary["chains"]
        lines.append(
            f"{'chains':<14}n={row['n']:<5}causality={row['causality']:.4f} "
            f"informativeness={row['informativeness']:.4f} "
            f"coherence={row['coherence']:.4f} vacuous={row['vacuous']}"
        )
    return "\n".join(lines) + "\n" if lines else "no items\n"


def cmd_reason(args) -> int:
    config = _load_config(args.config)
    mode = ReasonMode(_resolve(args.mode, config, "reason_mode", ReasonMode.GRAPH.value))
    heuristic = Heuristic(_resolve(args.heuristic, config, "heuristic", Heuristic.LONGEST.value))
    seed = _resolve(args.seed, config, "seed", 0)
    rng = random.Random(seed)
    oracle = load_link_oracle(args.link_oracle) if args.link_oracle else None
    items = load_items(args.items)
    scenarios = {s.id: s for s in load_scenarios(args.scenarios)}

    graphs = {}
    if mode is ReasonMode.GRAPH:
        if args.run_dir is None:
            raise CliError("--run-dir is required with --mode graph")
        graphs = {t.scenario_id: t.final_graph for t in load_run_transcripts(args.run_dir)}

    pack = _load_pack(args, config)
    backend, ledger, _ = _build_backend(args, config)
    results: list[ItemResult] = []
    try:
        for item in items:
            scenario = scenarios.get(item.scenario_id)
            if scenario is None:
                print(
                    f"warning: item {item.id!r} references unknown scenario "
                    f"{item.scenario_id!r}, skipped",
                    file=sys.stderr,
                )
                continue
            if mode is ReasonMode.GRAPH:
                graph = graphs.get(item.scenario_id)
                if graph is None:
                    print(
                        f"warning: item {item.id!r} has no transcript for scenario "
                        f"{item.scenario_id!r}, skipped",
                        file=sys.stderr,
                    )
                    continue
                results.append(
                    run_item_with_graph(
                        item, scenario, graph, backend, pack,
                        heuristic=heuristic, rng=rng, oracle=oracle,
                    )
                )
            else:
                results.append(
                    run_item_one_shot(
                        item, scenario, backend, pack,
                        heuristic=heuristic, rng=rng, oracle=oracle,
                        with_events=mode is ReasonMode.ONE_SHOT_EVENTS,
                    )
                )
    finally:
        _close_backend(backend)

    summary = _summarize_results(results)
    payload = {
        "mode": mode.value,
        "heuristic": heuristic.value,
        "seed": seed,
        "results": [r.to_dict() for r in results],
        "summary": summary,
    }
    print(_summary_text(summary), end="")
    if args.compare_with:
        baseline_payload = json.loads(Path(args.compare_with).read_text(encoding="utf-8"))
        baseline = [ItemResult.from_dict(r) for r in baseline_payload["results"]]
        report = compare_results(baseline, results)
        print(comparison_text(report), end="")
        payload["comparison"] = report.to_dict()
    if args.out:
        atomic_write_json(args.out, payload)
        print(f"wrote {args.out}")
    print(f"model calls: {ledger.calls()}")
    return 0


def cmd_cost(args) -> int:
    ledger_path = Path(args.run_dir) / "ledger.json"
    payload = json.loads(ledger_path.read_text(encoding="utf-8"))
    header = f"{'scenario':<24}{'calls':>7}{'prompt':>10}{'completion':>12}"
    print(header)
    for scenario_id in sorted(payload.get("scenarios", {})):
        row = payload["scenarios"][scenario_id]
        print(
            f"{scenario_id:<24}{row['calls']:>7}{row['prompt_tokens']:>10}"
            f"{row['completion_tokens']:>12}"
        )
    totals = payload.get("totals", {})
    print(
        f"{'total':<24}{totals.get('calls', 0):>7}{totals.get('prompt_tokens', 0):>10}"
        f"{totals.get('completion_tokens', 0):>12}"
    )
    print(f"token counts are {payload.get('token_counts', 'unknown')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="debategraph",
        description="Causal event graphs from news articles via multi-expert model debate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="convert pairwise CSV annotations to scenario JSONL")
    p_ingest.add_argument("raw_csv", help="CSV with article_id, article_text, event1, event2, score")
    p_ingest.add_argument("out", help="scenario JSONL output path")
    p_ingest.set_defaults(func=cmd_ingest)

    p_generate = sub.add_parser("generate", help="run graph generation over scenarios")
    p_generate.add_argument("--scenarios", required=True, help="scenario JSONL input")
    p_generate.add_argument("--out", required=True, help="run directory to create")
    p_generate.add_argument("--mode", choices=[m.value for m in Mode], default=None)
    p_generate.add_argument("--max-rounds", type=int, default=None)
    p_generate.add_argument(
        "--experts", type=int, default=None, help="generic expert count for collab_no_experts"
    )
    p_generate.add_argument(
        "--closure",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="transitively close the judge's final graph",
    )
    p_generate.add_argument(
        "--aggregation", choices=[a.value for a in Aggregation], default=None
    )
    p_generate.add_argument("--direct-role", choices=DIRECT_ROLE_CHOICES, default=None)
    p_generate.add_argument("--seed", type=int, default=None)
    p_generate.add_argument("--parallelism", type=int, default=None)
    p_generate.add_argument("--prompt-pack", default=None, help="directory of prompt templates")
    p_generate.add_argument("--config", default=None, help="JSON config file (flags win)")
    _add_backend_flags(p_generate)
    p_generate.set_defaults(func=cmd_generate)

    p_eval = sub.add_parser("eval", help="score a run directory against gold scenarios")
    p_eval.add_argument("--run-dir", required=True)
    p_eval.add_argument("--scenarios", required=True)
    p_eval.add_argument("--out", default=None, help="write the report as JSON")
    p_eval.add_argument("--per-scenario", action="store_true")
    p_eval.set_defaults(func=cmd_eval)

    p_trajectory = sub.add_parser("trajectory", help="per-expert opinion dynamics for a run")
    p_trajectory.add_argument("--run-dir", required=True)
    p_trajectory.add_argument("--scenarios", required=True)
    p_trajectory.add_argument("--out", default=None)
    p_trajectory.set_defaults(func=cmd_trajectory)

    p_reason = sub.add_parser("reason", help="decide likelihood items and score explanation chains")
    p_reason.add_argument("--items", required=True, help="likelihood item JSONL")
    p_reason.add_argument("--scenarios", required=True)
    p_reason.add_argument("--mode", choices=[m.value for m in ReasonMode], default=None)
    p_reason.add_argument("--run-dir", default=None, help="run directory with generated graphs")
    p_reason.add_argument("--heuristic", choices=[h.value for h in Heuristic], default=None)
    p_reason.add_argument("--seed", type=int, default=None)
    p_reason.add_argument(
        "--link-oracle", default=None, help="JSON list of pre-judged links (cause, effect, causal)"
    )
    p_reason.add_argument(
        "--compare-with", default=None, help="earlier reason output to compare chain scores against"
    )
    p_reason.add_argument("--out", default=None)
    p_reason.add_argument("--prompt-pack", default=None)
    p_reason.add_argument("--config", default=None)
    _add_backend_flags(p_reason)
    p_reason.set_defaults(func=cmd_reason)

    p_cost = sub.add_parser("cost", help="print the call and token ledger of a run")
    p_cost.add_argument("--run-dir", required=True)
    p_cost.set_defaults(func=cmd_cost)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (DatasetError, PromptPackError, BackendError, ReasoningError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON: {exc}", file=sys.stderr)
    except KeyError as exc:
        print(f"error: missing field {exc}", file=sys.stderr)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
