"""Generation modes: expert debate, its ablations, and the one-shot baselines."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .backends import Backend
from .data import Scenario
from .graph import CausalGraph, GraphError, Pair
from .parsing import NoPairsBlockError, parse_answer, parse_pairs
from .roles import (
    EXPERT_KINDS,
    Message,
    PromptPack,
    RoleKind,
    default_pack,
    render,
    render_pairwise,
)
from .store import atomic_write_json, safe_filename


class Mode(str, Enum):
    DIRECT = "direct"
    PAIRWISE = "pairwise"
    EXPERTS_NO_COLLAB = "experts_no_collab"
    COLLAB_NO_EXPERTS = "collab_no_experts"
    COLLAB_WITH_EXPERTS = "collab_with_experts"


class Aggregation(str, Enum):
    JUDGE = "judge"
    MAJORITY = "majority"


class StopReason(str, Enum):
    CONSENSUS = "consensus"
    MAX_ROUNDS = "max_rounds"
    ALL_MALFORMED = "all_malformed"


DEBATE_MODES = frozenset({Mode.COLLAB_WITH_EXPERTS, Mode.COLLAB_NO_EXPERTS})
BASELINE_MODES = frozenset(
    {Mode.DIRECT, Mode.PAIRWISE, Mode.EXPERTS_NO_COLLAB, Mode.COLLAB_NO_EXPERTS}
)


@dataclass(frozen=True)
class DebateConfig:
    mode: Mode = Mode.COLLAB_WITH_EXPERTS
    max_rounds: int = 3
    n_generic_experts: int = 4
    apply_judge_closure: bool = False
    parallelism: int = 1
    random_seed: int = 0
    aggregation: Aggregation = Aggregation.JUDGE
    direct_role: RoleKind = RoleKind.DIRECT

    def __post_init__(self) -> None:
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.n_generic_experts < 1:
            raise ValueError("n_generic_experts must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "max_rounds": self.max_rounds,
            "n_generic_experts": self.n_generic_experts,
            "apply_judge_closure": self.apply_judge_closure,
            "parallelism": self.parallelism,
            "random_seed": self.random_seed,
            "aggregation": self.aggregation.value,
            "direct_role": self.direct_role.value,
        }


@dataclass(frozen=True)
class RoundEntry:
    message: str
    pairs: tuple[Pair, ...]


@dataclass
class DebateTranscript:
    scenario_id: str
    mode: Mode
    rounds: list[dict[str, RoundEntry]]
    judge_message: str
    final_pairs: tuple[Pair, ...]
    final_graph: CausalGraph
    stop_reason: StopReason
    anomalies: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "mode": self.mode.value,
            "rounds": [
                {
                    label: {"message": entry.message, "pairs": [list(p) for p in entry.pairs]}
                    for label, entry in round_entries.items()
                }
                for round_entries in self.rounds
            ],
            "judge_message": self.judge_message,
            "final_pairs": [list(p) for p in self.final_pairs],
            "final_graph": self.final_graph.to_dict(),
            "stop_reason": self.stop_reason.value,
            "anomalies": list(self.anomalies),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> DebateTranscript:
        return cls(
            scenario_id=payload["scenario_id"],
            mode=Mode(payload["mode"]),
            rounds=[
                {
                    label: RoundEntry(
                        message=entry["message"],
                        pairs=tuple((int(a), int(b)) for a, b in entry["pairs"]),
                    )
                    for label, entry in round_entries.items()
                }
                for round_entries in payload["rounds"]
            ],
            judge_message=payload["judge_message"],
            final_pairs=tuple((int(a), int(b)) for a, b in payload["final_pairs"]),
            final_graph=CausalGraph.from_dict(payload["final_graph"]),
            stop_reason=StopReason(payload["stop_reason"]),
            anomalies=list(payload["anomalies"]),
        )


def expert_roster(config: DebateConfig) -> list[tuple[str, RoleKind]]:
    """(label, kind) per debating expert, in fixed call order."""
    if config.mode == Mode.COLLAB_NO_EXPERTS:
        return [(f"causal_{i}", RoleKind.GENERIC_CAUSAL) for i in range(1, config.n_generic_experts + 1)]
    return [(kind.value, kind) for kind in EXPERT_KINDS]


def _parse_contribution(
    label: str,
    round_index: int,
    response: str,
    n_events: int,
    anomalies: list[str],
) -> tuple[tuple[Pair, ...], bool]:
    """(pairs, malformed); a malformed response contributes nothing but a note."""
    try:
        parsed = parse_pairs(response, n_events)
    except NoPairsBlockError:
        anomalies.append(f"{label} round {round_index}: no pairs block, empty contribution")
        return (), True
    for warning in parsed.warnings:
        anomalies.append(f"{label} round {round_index}: {warning}")
    return tuple(parsed.pairs), False


def _build_graph(
    scenario: Scenario,
    pairs: tuple[Pair, ...] | list[Pair],
    anomalies: list[str],
    source: str,
) -> tuple[CausalGraph, tuple[Pair, ...]]:
    """Insert pairs in order, dropping constraint violations as anomalies."""
    graph = CausalGraph(events=scenario.events)
    accepted: list[Pair] = []
    for pair in pairs:
        try:
            graph = graph.add_edge(pair)
        except GraphError as exc:
            anomalies.append(f"{source} pair {pair}: {exc}")
            continue
        accepted.append(pair)
    return graph, tuple(accepted)


def run_debate(
    scenario: Scenario,
    config: DebateConfig,
    backend: Backend,
    pack: PromptPack | None = None,
) -> DebateTranscript:
    """Round-0 independent responses, synchronous discussion rounds, judge.

    Experts in one round run concurrently and see only strictly earlier
    rounds plus the running union of everything proposed so far. The debate
    stops early when a discussion round ends with all experts proposing the
    same pair set; the judge always finalizes unless round 0 produced no
    usable response at all.
    """
    if config.mode not in DEBATE_MODES:
        raise ValueError(f"run_debate does not handle mode {config.mode.value}")
    pack = pack if pack is not None else default_pack()
    roster = expert_roster(config)
    n_events = len(scenario.events)
    anomalies: list[str] = []
    history: list[Message] = []
    union: set[Pair] = set()
    rounds: list[dict[str, RoundEntry]] = []
    stop_reason = StopReason.MAX_ROUNDS

    with ThreadPoolExecutor(max_workers=len(roster)) as pool:
        for round_index in range(config.max_rounds + 1):
            prompts = [
                render(
                    pack,
                    kind,
                    scenario,
                    history=history,
                    current_pairs=sorted(union),
                    round_index=round_index,
                    speaker=label,
                )
                for label, kind in roster
            ]
            responses = list(pool.map(backend.complete, prompts))
            entries: dict[str, RoundEntry] = {}
            malformed: list[bool] = []
            for (label, _), response in zip(roster, responses):
                pairs, bad = _parse_contribution(label, round_index, response, n_events, anomalies)
                entries[label] = RoundEntry(message=response, pairs=pairs)
                malformed.append(bad)
            rounds.append(entries)
            for (label, _), response in zip(roster, responses):
                history.append(Message(speaker=label, round=round_index, text=response))
            for entry in entries.values():
                union.update(entry.pairs)
            if round_index == 0 and all(malformed):
                stop_reason = StopReason.ALL_MALFORMED
                break
            if round_index >= 1:
                sets = [frozenset(e.pairs) for e in entries.values()]
                if all(s == sets[0] for s in sets):
                    stop_reason = StopReason.CONSENSUS
                    break

    if stop_reason == StopReason.ALL_MALFORMED:
        graph = CausalGraph(events=scenario.events)
        return DebateTranscript(
            scenario_id=scenario.id,
            mode=config.mode,
            rounds=rounds,
            judge_message="",
            final_pairs=(),
            final_graph=graph,
            stop_reason=stop_reason,
            anomalies=anomalies,
        )

    judge_prompt = render(
        pack,
        RoleKind.JUDGE,
        scenario,
        history=history,
        current_pairs=sorted(union),
        round_index=len(rounds),
    )
    judge_message = backend.complete(judge_prompt)
    judge_pairs, _ = _parse_contribution("judge", len(rounds), judge_message, n_events, anomalies)
    graph, final_pairs = _build_graph(scenario, judge_pairs, anomalies, "judge")
    if config.apply_judge_closure:
        graph = graph.transitive_closure()
    return DebateTranscript(
        scenario_id=scenario.id,
        mode=config.mode,
        rounds=rounds,
        judge_message=judge_message,
        final_pairs=final_pairs,
        final_graph=graph,
        stop_reason=stop_reason,
        anomalies=anomalies,
    )


def _run_direct(
    scenario: Scenario, config: DebateConfig, backend: Backend, pack: PromptPack
) -> DebateTranscript:
    prompt = render(pack, config.direct_role, scenario, round_index=0)
    response = backend.complete(prompt)
    anomalies: list[str] = []
    label = config.direct_role.value
    pairs, bad = _parse_contribution(label, 0, response, len(scenario.events), anomalies)
    stop_reason = StopReason.ALL_MALFORMED if bad else StopReason.MAX_ROUNDS
    graph, final_pairs = _build_graph(scenario, pairs, anomalies, label)
    if config.apply_judge_closure:
        graph = graph.transitive_closure()
    return DebateTranscript(
        scenario_id=scenario.id,
        mode=Mode.DIRECT,
        rounds=[{label: RoundEntry(message=response, pairs=pairs)}],
        judge_message="",
        final_pairs=final_pairs,
        final_graph=graph,
        stop_reason=stop_reason,
        anomalies=anomalies,
    )


def _run_pairwise(
    scenario: Scenario, config: DebateConfig, backend: Backend, pack: PromptPack
) -> DebateTranscript:
    n = len(scenario.events)
    anomalies: list[str] = []
    entries: dict[str, RoundEntry] = {}
    yes_pairs: list[Pair] = []
    seq = 0
    for cause in range(1, n + 1):
        for effect in range(1, n + 1):
            if cause == effect:
                continue
            prompt = render_pairwise(pack, scenario, (cause, effect), seq=seq)
            seq += 1
            response = backend.complete(prompt)
            verdict = parse_answer(response)
            if verdict is None:
                anomalies.append(f"pairwise ({cause},{effect}): unparseable answer, counted NO")
                verdict = False
            if verdict:
                yes_pairs.append((cause, effect))
            entries[f"pairwise_{cause}_{effect}"] = RoundEntry(
                message=response, pairs=((cause, effect),) if verdict else ()
            )
    graph, final_pairs = _build_graph(scenario, yes_pairs, anomalies, "pairwise")
    if config.apply_judge_closure:
        graph = graph.transitive_closure()
    return DebateTranscript(
        scenario_id=scenario.id,
        mode=Mode.PAIRWISE,
        rounds=[entries],
        judge_message="",
        final_pairs=final_pairs,
        final_graph=graph,
        stop_reason=StopReason.MAX_ROUNDS,
        anomalies=anomalies,
    )


def _majority_pairs(
    round_entries: dict[str, RoundEntry], roster: list[tuple[str, RoleKind]]
) -> list[Pair]:
    """Pairs backed by at least half the experts, in first-emission order."""
    threshold = (len(roster) + 1) // 2
    votes: dict[Pair, int] = {}
    for label, _ in roster:
        for pair in set(round_entries[label].pairs):
            votes[pair] = votes.get(pair, 0) + 1
    ordered: list[Pair] = []
    for label, _ in roster:
        for pair in round_entries[label].pairs:
            if votes.get(pair, 0) >= threshold and pair not in ordered:
                ordered.append(pair)
    return ordered


def _run_experts_no_collab(
    scenario: Scenario, config: DebateConfig, backend: Backend, pack: PromptPack
) -> DebateTranscript:
    roster = [(kind.value, kind) for kind in EXPERT_KINDS]
    n_events = len(scenario.events)
    anomalies: list[str] = []
    with ThreadPoolExecutor(max_workers=len(roster)) as pool:
        prompts = [
            render(pack, kind, scenario, round_index=0, speaker=label) for label, kind in roster
        ]
        responses = list(pool.map(backend.complete, prompts))
    entries: dict[str, RoundEntry] = {}
    for (label, _), response in zip(roster, responses):
        pairs, _ = _parse_contribution(label, 0, response, n_events, anomalies)
        entries[label] = RoundEntry(message=response, pairs=pairs)
    union: set[Pair] = set()
    for entry in entries.values():
        union.update(entry.pairs)

    judge_message = ""
    if config.aggregation == Aggregation.JUDGE:
        history = [
            Message(speaker=label, round=0, text=entries[label].message) for label, _ in roster
        ]
        judge_prompt = render(
            pack, RoleKind.JUDGE, scenario, history=history, current_pairs=sorted(union), round_index=1
        )
        judge_message = backend.complete(judge_prompt)
        pairs, _ = _parse_contribution("judge", 1, judge_message, n_events, anomalies)
        graph, final_pairs = _build_graph(scenario, pairs, anomalies, "judge")
    else:
        majority = _majority_pairs(entries, roster)
        graph, final_pairs = _build_graph(scenario, majority, anomalies, "majority")
    if config.apply_judge_closure:
        graph = graph.transitive_closure()
    return DebateTranscript(
        scenario_id=scenario.id,
        mode=Mode.EXPERTS_NO_COLLAB,
        rounds=[entries],
        judge_message=judge_message,
        final_pairs=final_pairs,
        final_graph=graph,
        stop_reason=StopReason.MAX_ROUNDS,
        anomalies=anomalies,
    )


def run_baseline(
    scenario: Scenario,
    config: DebateConfig,
    backend: Backend,
    pack: PromptPack | None = None,
) -> DebateTranscript:
    """One of the non-collaborative modes (or the generic-expert debate)."""
    if config.mode not in BASELINE_MODES:
        raise ValueError(f"run_baseline does not handle mode {config.mode.value}")
    pack = pack if pack is not None else default_pack()
    if config.mode == Mode.DIRECT:
        return _run_direct(scenario, config, backend, pack)
    if config.mode == Mode.PAIRWISE:
        return _run_pairwise(scenario, config, backend, pack)
    if config.mode == Mode.EXPERTS_NO_COLLAB:
        return _run_experts_no_collab(scenario, config, backend, pack)
    return run_debate(scenario, config, backend, pack)


def run_scenario(
    scenario: Scenario,
    config: DebateConfig,
    backend: Backend,
    pack: PromptPack | None = None,
) -> DebateTranscript:
    if config.mode == Mode.COLLAB_WITH_EXPERTS:
        return run_debate(scenario, config, backend, pack)
    return run_baseline(scenario, config, backend, pack)


def run_scenarios(
    scenarios: list[Scenario],
    config: DebateConfig,
    backend: Backend,
    pack: PromptPack | None = None,
) -> list[DebateTranscript]:
    """All scenarios, at most config.parallelism in flight, in input order."""
    pack = pack if pack is not None else default_pack()
    if config.parallelism == 1:
        return [run_scenario(s, config, backend, pack) for s in scenarios]
    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        return list(pool.map(lambda s: run_scenario(s, config, backend, pack), scenarios))


def transcript_filenames(scenario_ids: list[str]) -> dict[str, str]:
    """Collision-free file names, stable for a given id list."""
    names: dict[str, str] = {}
    taken: set[str] = set()
    for scenario_id in scenario_ids:
        base = safe_filename(scenario_id)
        name = f"{base}.json"
        suffix = 2
        while name in taken:
            name = f"{base}-{suffix}.json"
            suffix += 1
        taken.add(name)
        names[scenario_id] = name
    return names


def write_run_dir(
    run_dir: str | Path,
    transcripts: list[DebateTranscript],
    config_snapshot: dict,
    ledger_payload: dict,
) -> None:
    """Persist one run: config snapshot, per-scenario transcripts, index, ledger."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    names = transcript_filenames(sorted(t.scenario_id for t in transcripts))
    for transcript in transcripts:
        atomic_write_json(run_dir / names[transcript.scenario_id], transcript.to_dict())
    atomic_write_json(run_dir / "index.json", names)
    atomic_write_json(run_dir / "config.json", config_snapshot)
    atomic_write_json(run_dir / "ledger.json", ledger_payload)


def load_run_transcripts(run_dir: str | Path) -> list[DebateTranscript]:
    run_dir = Path(run_dir)
    index = json.loads((run_dir / "index.json").read_text(encoding="utf-8"))
    transcripts = []
    for scenario_id in sorted(index):
        payload = json.loads((run_dir / index[scenario_id]).read_text(encoding="utf-8"))
        transcripts.append(DebateTranscript.from_dict(payload))
    return transcripts
