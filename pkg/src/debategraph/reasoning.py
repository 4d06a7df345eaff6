"""Event reasoning over causal graphs: placement decisions and explanation chains."""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from .backends import Backend
from .data import LikelihoodItem, Scenario, TaskKind
from .graph import CausalGraph, Event, GraphError, NodeRole
from .parsing import PAIR_BODY_RE, PAIR_RE, parse_answer, parse_numbered_list, render_pairs
from .roles import MissingPlaceholderError, PromptPack, RenderedPrompt, RoleKind, format_events

QUERY_EVENT = "[QUERY EVENT]"
QUERY_ID = "[QUERY ID]"
EVENT_A = "[EVENT A]"
EVENT_B = "[EVENT B]"

CAUSES_RE = re.compile(r"<causes\s*>(.*?)</causes\s*>", re.IGNORECASE | re.DOTALL)
EFFECTS_RE = re.compile(r"<effects\s*>(.*?)</effects\s*>", re.IGNORECASE | re.DOTALL)
CHAIN_RE = re.compile(r"<chain\s*>(.*?)</chain\s*>", re.IGNORECASE | re.DOTALL)


class ReasoningError(Exception):
    pass


class EmptyExtractionError(ReasoningError):
    pass


class NoPathsError(ReasoningError):
    pass


class QNotInChainError(ReasoningError):
    pass


class Heuristic(str, Enum):
    RANDOM = "random"
    LONGEST = "longest"


class ReasonMode(str, Enum):
    GRAPH = "graph"
    ONE_SHOT = "oneshot"
    ONE_SHOT_EVENTS = "oneshot_events"


def _fill(template: str, values: Mapping[str, str], name: str) -> str:
    for token in values:
        if token not in template:
            raise MissingPlaceholderError(f"template {name!r} lacks {token}")
    text = template
    for token, value in values.items():
        text = text.replace(token, value)
    return text


def _prompt(name: str, text: str, scenario_id: str, seq: int = 0) -> RenderedPrompt:
    kind = RoleKind.PAIRWISE if name == "link_judge" else RoleKind.DIRECT
    return RenderedPrompt(kind=kind, speaker=name, text=text, scenario_id=scenario_id, round=seq)


def extract_events(
    document: str,
    backend: Backend,
    pack: PromptPack,
    scenario_id: str = "extraction",
) -> tuple[Event, ...]:
    """Events elicited from a bare document, deduplicated and renumbered."""
    text = _fill(pack.template("extraction"), {"[NEWS]": document}, "extraction")
    response = backend.complete(_prompt("extraction", text, scenario_id))
    items = parse_numbered_list(response)
    if not items:
        raise EmptyExtractionError("extraction response contained no numbered events")
    return tuple(Event(id=i, text=item) for i, item in enumerate(items, start=1))


@dataclass(frozen=True)
class Placement:
    """Outcome of asking where a query event sits in an existing graph."""

    inserted: bool
    causes_of_q: frozenset[int]
    effects_of_q: frozenset[int]
    augmented_graph: CausalGraph
    q_id: int
    anomalies: tuple[str, ...] = ()


def _placement_side(body: str, q_id: int, n_events: int, causes: bool, anomalies: list[str]) -> list[int]:
    found: list[int] = []
    for raw in PAIR_RE.findall(body):
        match = PAIR_BODY_RE.match(raw)
        if match is None:
            anomalies.append(f"placement: malformed pair body {raw!r} dropped")
            continue
        a, b = int(match.group(1)), int(match.group(2))
        other, anchor = (a, b) if causes else (b, a)
        if anchor != q_id:
            anomalies.append(f"placement: pair ({a},{b}) does not anchor the query event, dropped")
            continue
        if not 1 <= other <= n_events:
            anomalies.append(f"placement: pair ({a},{b}) references unknown event, dropped")
            continue
        if other not in found:
            found.append(other)
    return found


def place_event(
    graph: CausalGraph,
    query_text: str,
    document: str,
    backend: Backend,
    pack: PromptPack,
    scenario_id: str = "placement",
    seq: int = 0,
) -> Placement:
    """One placement call: the model names causes and effects of the query event.

    Cause edges are inserted before effect edges; edges that would violate
    the graph constraints are dropped and recorded. The query node is kept
    only when at least one edge survives.
    """
    n_events = len(graph.events)
    q_id = max((e.id for e in graph.events), default=0) + 1
    text = _fill(
        pack.template("placement"),
        {
            "[NEWS]": document,
            "[EVENTS]": format_events(graph.events),
            "[CAUSAL PAIRS]": render_pairs(sorted(graph.edges)),
            QUERY_EVENT: query_text,
            QUERY_ID: str(q_id),
        },
        "placement",
    )
    response = backend.complete(_prompt("placement", text, scenario_id, seq=seq))
    anomalies: list[str] = []
    # like pairs blocks, the last block wins in case the format example is echoed
    cause_blocks = CAUSES_RE.findall(response)
    effect_blocks = EFFECTS_RE.findall(response)
    if not cause_blocks and not effect_blocks:
        anomalies.append("placement: no <causes> or <effects> block, treated as not inserted")
        return Placement(False, frozenset(), frozenset(), graph, q_id, tuple(anomalies))
    causes = _placement_side(cause_blocks[-1], q_id, n_events, True, anomalies) if cause_blocks else []
    effects = _placement_side(effect_blocks[-1], q_id, n_events, False, anomalies) if effect_blocks else []

    augmented = CausalGraph(graph.events + (Event(id=q_id, text=query_text),), graph.edges)
    for cause in causes:
        try:
            augmented = augmented.add_edge((cause, q_id))
        except GraphError as exc:
            anomalies.append(f"placement: cause edge ({cause},{q_id}) dropped: {exc}")
    for effect in effects:
        try:
            augmented = augmented.add_edge((q_id, effect))
        except GraphError as exc:
            anomalies.append(f"placement: effect edge ({q_id},{effect}) dropped: {exc}")
    preds = frozenset(augmented.predecessors()[q_id])
    succs = frozenset(augmented.successors()[q_id])
    if not preds and not succs:
        return Placement(False, frozenset(), frozenset(), graph, q_id, tuple(anomalies))
    return Placement(True, preds, succs, augmented, q_id, tuple(anomalies))


def likelihood(placement: Placement) -> bool:
    """An event is likely iff it could be inserted into the graph."""
    return placement.inserted


def forecast_correct(placement: Placement, gold_yes: bool) -> bool:
    """Forecast scoring: a yes-event must insert as a leaf (nothing after the
    asked future event has happened yet); a no-event must fail to insert.
    A placed non-leaf therefore counts wrong for either gold answer."""
    if gold_yes:
        return placement.inserted and placement.augmented_graph.classify_node(placement.q_id) is NodeRole.LEAF
    return not placement.inserted


def cloze_correct(placements: Mapping[str, Placement], gold_choice: str) -> bool:
    """The gold choice must insert while every distractor fails to."""
    if gold_choice not in placements:
        raise ValueError(f"gold choice {gold_choice!r} missing from placements")
    return placements[gold_choice].inserted and all(
        not p.inserted for choice, p in placements.items() if choice != gold_choice
    )


@dataclass(frozen=True)
class ChainScores:
    causality: float
    informativeness: int
    coherence: int
    vacuous: bool = False

    def to_dict(self) -> dict:
        return {
            "causality": self.causality,
            "informativeness": self.informativeness,
            "coherence": self.coherence,
            "vacuous": self.vacuous,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> ChainScores:
        return cls(
            causality=payload["causality"],
            informativeness=payload["informativeness"],
            coherence=payload["coherence"],
            vacuous=payload.get("vacuous", False),
        )


@dataclass(frozen=True)
class ExplanationChain:
    events: tuple
    link_judgments: tuple[bool, ...]

    def __post_init__(self) -> None:
        if not self.events:
            raise ValueError("chain needs at least one event")
        if len(self.link_judgments) != len(self.events) - 1:
            raise ValueError("chain needs exactly one judgment per consecutive link")


def select_chain(paths: Sequence[Sequence], heuristic: Heuristic, rng: random.Random) -> list:
    """Pick one path: seeded uniform draw, or the longest with lexicographic
    tie-break."""
    if not paths:
        raise NoPathsError("no candidate paths")
    if heuristic is Heuristic.RANDOM:
        return list(paths[rng.randrange(len(paths))])
    longest = max(len(p) for p in paths)
    return list(min(tuple(p) for p in paths if len(p) == longest))


def chain_scores(chain: ExplanationChain, q) -> ChainScores:
    """Score one judged chain around the query event.

    Causality is the fraction of correct links (vacuously 1.0 with no links).
    Informativeness counts correct links reachable from the query event in
    both directions before hitting an incorrect one. Coherence is the longest
    correct-link run anywhere, so informativeness can never exceed it.
    """
    if q not in chain.events:
        raise QNotInChainError(f"query event {q!r} not in chain")
    judgments = chain.link_judgments
    if not judgments:
        return ChainScores(causality=1.0, informativeness=0, coherence=0, vacuous=True)
    causality = sum(judgments) / len(judgments)

    q_index = chain.events.index(q)
    informativeness = 0
    for i in range(q_index - 1, -1, -1):
        if not judgments[i]:
            break
        informativeness += 1
    for i in range(q_index, len(judgments)):
        if not judgments[i]:
            break
        informativeness += 1

    coherence = run = 0
    for verdict in judgments:
        run = run + 1 if verdict else 0
        coherence = max(coherence, run)
    return ChainScores(causality=causality, informativeness=informativeness, coherence=coherence)


LinkOracle = Mapping[tuple[str, str], bool]


def load_link_oracle(path: str | Path) -> dict[tuple[str, str], bool]:
    """Pre-judged links from a JSON list of {cause, effect, causal}."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return {(row["cause"], row["effect"]): bool(row["causal"]) for row in payload}


def judge_link(
    cause_text: str,
    effect_text: str,
    backend: Backend,
    pack: PromptPack,
    scenario_id: str = "links",
    seq: int = 0,
    anomalies: list[str] | None = None,
) -> bool:
    """Ask whether one event can cause another; unparseable answers count NO."""
    text = _fill(
        pack.template("link_judge"), {EVENT_A: cause_text, EVENT_B: effect_text}, "link_judge"
    )
    response = backend.complete(_prompt("link_judge", text, scenario_id, seq=seq))
    verdict = parse_answer(response)
    if verdict is None:
        if anomalies is not None:
            anomalies.append(f"link ({cause_text!r} -> {effect_text!r}): unparseable answer, counted NO")
        return False
    return verdict


def judge_chain_links(
    event_texts: Sequence[str],
    backend: Backend,
    pack: PromptPack,
    scenario_id: str,
    oracle: LinkOracle | None = None,
    anomalies: list[str] | None = None,
) -> tuple[bool, ...]:
    """One judgment per consecutive link, oracle first, model otherwise."""
    judgments: list[bool] = []
    for seq, (cause, effect) in enumerate(zip(event_texts, event_texts[1:])):
        if oracle is not None and (cause, effect) in oracle:
            judgments.append(oracle[(cause, effect)])
            continue
        judgments.append(
            judge_link(cause, effect, backend, pack, scenario_id=scenario_id, seq=seq, anomalies=anomalies)
        )
    return tuple(judgments)


def generate_chains_one_shot(
    document: str,
    query_text: str,
    backend: Backend,
    pack: PromptPack,
    events: Sequence[Event] | None = None,
    scenario_id: str = "chains",
) -> tuple[list[list[str]], list[str]]:
    """Chains straight from the model; chains missing the query event are dropped."""
    anomalies: list[str] = []
    if events is None:
        template_name = "chain_one_shot"
        values = {"[NEWS]": document, QUERY_EVENT: query_text}
    else:
        template_name = "chain_one_shot_events"
        values = {"[NEWS]": document, "[EVENTS]": format_events(events), QUERY_EVENT: query_text}
    text = _fill(pack.template(template_name), values, template_name)
    response = backend.complete(_prompt(template_name, text, scenario_id))
    chains: list[list[str]] = []
    for body in CHAIN_RE.findall(response):
        chain = [part.strip() for part in body.split("->") if part.strip()]
        if not chain:
            anomalies.append("chain: empty <chain> block dropped")
            continue
        if query_text not in chain:
            anomalies.append(f"chain {chain!r} does not contain the query event, dropped")
            continue
        chains.append(chain)
    return chains, anomalies


@dataclass
class ItemResult:
    """Per-item outcome: the task decision plus the judged explanation chain."""

    item_id: str
    task: TaskKind
    decision: bool | None = None
    correct: bool | None = None
    events: list[str] | None = None
    q_index: int | None = None
    judgments: list[bool] | None = None
    scores: ChainScores | None = None
    anomalies: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "task": self.task.value,
            "decision": self.decision,
            "correct": self.correct,
            "events": self.events,
            "q_index": self.q_index,
            "judgments": self.judgments,
            "scores": self.scores.to_dict() if self.scores is not None else None,
            "anomalies": list(self.anomalies),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> ItemResult:
        scores = payload.get("scores")
        return cls(
            item_id=payload["item_id"],
            task=TaskKind(payload["task"]),
            decision=payload.get("decision"),
            correct=payload.get("correct"),
            events=payload.get("events"),
            q_index=payload.get("q_index"),
            judgments=payload.get("judgments"),
            scores=ChainScores.from_dict(scores) if scores is not None else None,
            anomalies=list(payload.get("anomalies", [])),
        )


def _score_graph_chain(
    placement: Placement,
    backend: Backend,
    pack: PromptPack,
    heuristic: Heuristic,
    rng: random.Random,
    scenario_id: str,
    oracle: LinkOracle | None,
    result: ItemResult,
) -> None:
    paths = placement.augmented_graph.maximal_paths_through(placement.q_id)
    chain_ids = select_chain(paths, heuristic, rng)
    texts = [placement.augmented_graph.event_text(i) for i in chain_ids]
    judgments = judge_chain_links(
        texts, backend, pack, scenario_id, oracle=oracle, anomalies=result.anomalies
    )
    chain = ExplanationChain(events=tuple(chain_ids), link_judgments=judgments)
    result.events = texts
    result.q_index = chain_ids.index(placement.q_id)
    result.judgments = list(judgments)
    result.scores = chain_scores(chain, placement.q_id)


def run_item_with_graph(
    item: LikelihoodItem,
    scenario: Scenario,
    graph: CausalGraph,
    backend: Backend,
    pack: PromptPack,
    heuristic: Heuristic = Heuristic.LONGEST,
    rng: random.Random | None = None,
    oracle: LinkOracle | None = None,
) -> ItemResult:
    """Decide one item by placing its query event into the scenario graph."""
    rng = rng if rng is not None else random.Random(0)
    result = ItemResult(item_id=item.id, task=item.task)

    if item.task is TaskKind.CLOZE:
        placements: dict[str, Placement] = {}
        for seq, choice in enumerate(item.choices):
            placement = place_event(
                graph, choice, scenario.document, backend, pack, scenario_id=scenario.id, seq=seq
            )
            result.anomalies.extend(placement.anomalies)
            placements[choice] = placement
        result.correct = cloze_correct(placements, item.choices[item.gold_choice])
        return result

    placement = place_event(
        graph, item.query_event, scenario.document, backend, pack, scenario_id=scenario.id
    )
    result.anomalies.extend(placement.anomalies)

    if item.task is TaskKind.LIKELIHOOD:
        result.decision = likelihood(placement)
        if item.gold is not None:
            result.correct = result.decision == item.gold
        if placement.inserted:
            _score_graph_chain(
                placement, backend, pack, heuristic, rng, scenario.id, oracle, result
            )
        return result

    gold_yes = item.task is TaskKind.FORECAST_YES
    result.decision = placement.inserted and (
        placement.augmented_graph.classify_node(placement.q_id) is NodeRole.LEAF
    )
    result.correct = forecast_correct(placement, gold_yes)
    return result


def run_item_one_shot(
    item: LikelihoodItem,
    scenario: Scenario,
    backend: Backend,
    pack: PromptPack,
    heuristic: Heuristic = Heuristic.LONGEST,
    rng: random.Random | None = None,
    oracle: LinkOracle | None = None,
    with_events: bool = False,
) -> ItemResult:
    """Chains-only baseline: the model writes chains, one is judged and scored."""
    rng = rng if rng is not None else random.Random(0)
    result = ItemResult(item_id=item.id, task=item.task)
    chains, anomalies = generate_chains_one_shot(
        scenario.document,
        item.query_event,
        backend,
        pack,
        events=scenario.events if with_events else None,
        scenario_id=scenario.id,
    )
    result.anomalies.extend(anomalies)
    if not chains:
        result.anomalies.append("no usable chain generated")
        return result
    texts = select_chain(chains, heuristic, rng)
    judgments = judge_chain_links(
        texts, backend, pack, scenario.id, oracle=oracle, anomalies=result.anomalies
    )
    chain = ExplanationChain(events=tuple(texts), link_judgments=judgments)
    result.events = texts
    result.q_index = texts.index(item.query_event)
    result.judgments = list(judgments)
    result.scores = chain_scores(chain, item.query_event)
    return result


CHAIN_METRICS = ("causality", "informativeness", "coherence")


@dataclass(frozen=True)
class ComparisonReport:
    n_compared: int
    n_skipped: int
    metrics: dict[str, dict[str, float]]

    def to_dict(self) -> dict:
        return {
            "n_compared": self.n_compared,
            "n_skipped": self.n_skipped,
            "metrics": self.metrics,
            "notes": {"ties": "exact score equality counts as a tie"},
        }


def compare_results(baseline: list[ItemResult], system: list[ItemResult]) -> ComparisonReport:
    """Win/tie percentages per chain metric over items scored on both sides."""
    base_by_id = {r.item_id: r for r in baseline}
    sys_by_id = {r.item_id: r for r in system}
    shared = [
        item_id
        for item_id in sorted(set(base_by_id) | set(sys_by_id))
        if base_by_id.get(item_id) is not None
        and sys_by_id.get(item_id) is not None
        and base_by_id[item_id].scores is not None
        and sys_by_id[item_id].scores is not None
    ]
    skipped = len(set(base_by_id) | set(sys_by_id)) - len(shared)
    metrics: dict[str, dict[str, float]] = {}
    for metric in CHAIN_METRICS:
        wins_base = wins_sys = ties = 0
        for item_id in shared:
            base_value = getattr(base_by_id[item_id].scores, metric)
            sys_value = getattr(sys_by_id[item_id].scores, metric)
            if base_value > sys_value:
                wins_base += 1
            elif sys_value > base_value:
                wins_sys += 1
            else:
                ties += 1
        total = max(len(shared), 1)
        metrics[metric] = {
            "baseline_wins": wins_base,
            "system_wins": wins_sys,
            "ties": ties,
            "baseline_pct": 100.0 * wins_base / total,
            "system_pct": 100.0 * wins_sys / total,
            "tie_pct": 100.0 * ties / total,
        }
    return ComparisonReport(n_compared=len(shared), n_skipped=skipped, metrics=metrics)


def comparison_text(report: ComparisonReport) -> str:
    lines = [
        f"items compared: {report.n_compared} (skipped {report.n_skipped} without scores on both sides)",
        f"{'metric':<18}{'Baseline':>10}{'System':>10}{'Tie':>10}",
    ]
    for metric in CHAIN_METRICS:
        row = report.metrics[metric]
        lines.append(
            f"{metric:<18}{row['baseline_pct']:>9.1f}%{row['system_pct']:>9.1f}%{row['tie_pct']:>9.1f}%"
        )
    return "\n".join(lines) + "\n"
