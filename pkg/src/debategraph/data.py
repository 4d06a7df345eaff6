"""Scenario and item types, gold-label construction, and file round-trips."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .graph import Event, Pair

CAUSAL_SCORE_THRESHOLD = 50.0

CRAB_COLUMNS = ("article_id", "article_text", "event1", "event2", "score")


class DatasetError(Exception):
    pass


class EmptyInputError(DatasetError):
    pass


class SchemaViolationError(DatasetError):
    pass


class TaskKind(str, Enum):
    LIKELIHOOD = "likelihood"
    FORECAST_YES = "forecast_yes"
    FORECAST_NO = "forecast_no"
    CLOZE = "cloze"


@dataclass(frozen=True)
class RawCrabRecord:
    article_id: str
    article_text: str
    event1_text: str
    event2_text: str
    score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 100.0:
            raise ValueError(f"score must be in [0,100], got {self.score}")


@dataclass(frozen=True)
class Scenario:
    """A document with its numbered events and gold pair labels.

    Labels are direction-sensitive: the reverse of every causal pair is
    non-causal, and a pair never carries both labels.
    """

    id: str
    document: str
    events: tuple[Event, ...]
    gold_causal: frozenset[Pair] = field(default_factory=frozenset)
    gold_noncausal: frozenset[Pair] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        ids = [e.id for e in self.events]
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError(f"scenario {self.id}: event ids must be 1..n in order")
        known = set(ids)
        for name, pairs in (("gold_causal", self.gold_causal), ("gold_noncausal", self.gold_noncausal)):
            for a, b in pairs:
                if a == b:
                    raise ValueError(f"scenario {self.id}: {name} pair ({a},{b}) is a self pair")
                if a not in known or b not in known:
                    raise ValueError(f"scenario {self.id}: {name} pair ({a},{b}) references unknown event")
        if self.gold_causal & self.gold_noncausal:
            raise ValueError(f"scenario {self.id}: gold sets overlap")
        for a, b in self.gold_causal:
            if (b, a) not in self.gold_noncausal:
                raise ValueError(f"scenario {self.id}: reverse of causal pair ({a},{b}) is not labeled non-causal")

    def labeled_pairs(self) -> set[Pair]:
        return set(self.gold_causal) | set(self.gold_noncausal)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "document": self.document,
            "events": [{"id": e.id, "text": e.text} for e in self.events],
            "gold_causal": [list(p) for p in sorted(self.gold_causal)],
            "gold_noncausal": [list(p) for p in sorted(self.gold_noncausal)],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> Scenario:
        events = tuple(Event(id=item["id"], text=item["text"]) for item in payload["events"])
        return cls(
            id=payload["id"],
            document=payload["document"],
            events=events,
            gold_causal=frozenset((int(a), int(b)) for a, b in payload["gold_causal"]),
            gold_noncausal=frozenset((int(a), int(b)) for a, b in payload["gold_noncausal"]),
        )


@dataclass(frozen=True)
class LikelihoodItem:
    id: str
    scenario_id: str
    query_event: str
    task: TaskKind
    choices: tuple[str, ...] = ()
    gold_choice: int | None = None
    gold: bool | None = None

    def __post_init__(self) -> None:
        if self.task is TaskKind.CLOZE:
            if len(self.choices) < 2:
                raise ValueError(f"item {self.id}: cloze needs at least 2 choices")
            if self.gold_choice is None or not 0 <= self.gold_choice < len(self.choices):
                raise ValueError(f"item {self.id}: cloze needs a valid gold_choice index")
        elif self.choices:
            raise ValueError(f"item {self.id}: choices are only valid for cloze items")

    def to_dict(self) -> dict:
        payload: dict = {
            "id": self.id,
            "scenario_id": self.scenario_id,
            "query_event": self.query_event,
            "task": self.task.value,
        }
        if self.task is TaskKind.CLOZE:
            payload["choices"] = list(self.choices)
            payload["gold_choice"] = self.gold_choice
        if self.gold is not None:
            payload["gold"] = self.gold
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> LikelihoodItem:
        raw_task = payload["task"]
        gold = payload.get("gold")
        if raw_task == "forecast":
            # forecast items may carry their gold answer as a boolean
            if gold is None:
                raise ValueError("forecast item needs a boolean gold field")
            task = TaskKind.FORECAST_YES if gold else TaskKind.FORECAST_NO
        else:
            task = TaskKind(raw_task)
        if task is TaskKind.FORECAST_YES:
            gold = True
        elif task is TaskKind.FORECAST_NO:
            gold = False
        return cls(
            id=payload["id"],
            scenario_id=payload["scenario_id"],
            query_event=payload["query_event"],
            task=task,
            choices=tuple(payload.get("choices", ())),
            gold_choice=payload.get("gold_choice"),
            gold=gold,
        )


def build_scenarios(records: list[RawCrabRecord]) -> tuple[list[Scenario], list[str]]:
    """Scenarios grouped by article, with contradictions tolerated as warnings.

    Event texts are deduplicated exactly and numbered by first appearance.
    A pair is causal iff its score is strictly above the threshold; the
    reverse of every causal pair is added to the non-causal set. The first
    label a pair receives wins; contradictory later records are skipped.
    """
    if not records:
        raise EmptyInputError("no records to build scenarios from")
    warnings: list[str] = []
    by_article: dict[str, list[RawCrabRecord]] = {}
    for record in records:
        by_article.setdefault(record.article_id, []).append(record)

    scenarios = []
    for article_id, group in by_article.items():
        document = group[0].article_text
        event_ids: dict[str, int] = {}
        for record in group:
            if record.article_text != document:
                warnings.append(f"article {article_id}: differing article_text, keeping the first")
            for text in (record.event1_text, record.event2_text):
                if text not in event_ids:
                    event_ids[text] = len(event_ids) + 1
        causal: set[Pair] = set()
        noncausal: set[Pair] = set()
        for record in group:
            a, b = event_ids[record.event1_text], event_ids[record.event2_text]
            if a == b:
                warnings.append(f"article {article_id}: pair with identical events skipped")
                continue
            pair = (a, b)
            is_causal = record.score > CAUSAL_SCORE_THRESHOLD
            if pair in causal or pair in noncausal:
                if (pair in causal) != is_causal:
                    warnings.append(f"article {article_id}: contradictory label for {pair}, keeping the first")
                continue
            if is_causal:
                causal.add(pair)
                reverse = (b, a)
                if reverse in causal:
                    # unreachable by construction, kept as a guard for edited inputs
                    warnings.append(f"article {article_id}: reverse of causal {pair} already causal, skipped")
                else:
                    noncausal.add(reverse)
            else:
                noncausal.add(pair)
        events = tuple(Event(id=i, text=text) for text, i in event_ids.items())
        scenarios.append(
            Scenario(
                id=article_id,
                document=document,
                events=events,
                gold_causal=frozenset(causal),
                gold_noncausal=frozenset(noncausal),
            )
        )
    return scenarios, warnings


def load_crab_csv(path: str | Path) -> list[RawCrabRecord]:
    """Raw records from a CSV with the five named columns."""
    path = Path(path)
    records: list[RawCrabRecord] = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [col for col in CRAB_COLUMNS if col not in header]
        if missing:
            raise SchemaViolationError(f"{path}: missing columns {missing}")
        for line_no, row in enumerate(reader, start=2):
            try:
                score = float(row["score"])
            except (TypeError, ValueError):
                raise SchemaViolationError(f"{path}:{line_no}: score {row['score']!r} is not a number") from None
            try:
                records.append(
                    RawCrabRecord(
                        article_id=row["article_id"],
                        article_text=row["article_text"],
                        event1_text=row["event1"],
                        event2_text=row["event2"],
                        score=score,
                    )
                )
            except ValueError as exc:
                raise SchemaViolationError(f"{path}:{line_no}: {exc}") from None
    return records


def _load_jsonl(path: str | Path) -> list[tuple[int, dict]]:
    path = Path(path)
    rows: list[tuple[int, dict]] = []
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                rows.append((line_no, json.loads(line)))
            except json.JSONDecodeError as exc:
                raise SchemaViolationError(f"{path}:{line_no}: invalid JSON ({exc.msg})") from None
    return rows


def load_scenarios(path: str | Path) -> list[Scenario]:
    """Scenarios from a JSON-lines file, ordered by id."""
    scenarios = []
    for line_no, payload in _load_jsonl(path):
        try:
            scenarios.append(Scenario.from_dict(payload))
        except (KeyError, TypeError, ValueError) as exc:
            detail = f"missing field {exc}" if isinstance(exc, KeyError) else str(exc)
            raise SchemaViolationError(f"{path}:{line_no}: {detail}") from None
    return sorted(scenarios, key=lambda s: s.id)


def save_scenarios(scenarios: list[Scenario], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for scenario in scenarios:
            handle.write(json.dumps(scenario.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def load_items(path: str | Path) -> list[LikelihoodItem]:
    """Likelihood items from a JSON-lines file, ordered by id."""
    items = []
    for line_no, payload in _load_jsonl(path):
        try:
            items.append(LikelihoodItem.from_dict(payload))
        except (KeyError, TypeError, ValueError) as exc:
            detail = f"missing field {exc}" if isinstance(exc, KeyError) else str(exc)
            raise SchemaViolationError(f"{path}:{line_no}: {detail}") from None
    return sorted(items, key=lambda i: i.id)


def save_items(items: list[LikelihoodItem], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for item in items:
            handle.write(json.dumps(item.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
