"""Role registry and deterministic prompt rendering from a versioned pack."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .data import Scenario
from .graph import Event, Pair
from .parsing import render_pairs

NEWS = "[NEWS]"
EVENTS = "[EVENTS]"
MESSAGES = "[MESSAGES]"
CAUSAL_PAIRS = "[CAUSAL PAIRS]"
CAUSE_EVENT = "[CAUSE EVENT]"
EFFECT_EVENT = "[EFFECT EVENT]"

KNOWN_PLACEHOLDERS = (NEWS, EVENTS, MESSAGES, CAUSAL_PAIRS, CAUSE_EVENT, EFFECT_EVENT)


class PromptPackError(Exception):
    pass


class MissingTemplateError(PromptPackError):
    pass


class MissingPlaceholderError(PromptPackError):
    pass


class RoleKind(str, Enum):
    TEMPORAL = "temporal"
    DISCOURSE = "discourse"
    PRECONDITION = "precondition"
    COMMONSENSE = "commonsense"
    GENERIC_CAUSAL = "generic_causal"
    JUDGE = "judge"
    SINGLE_TEMPORAL = "single_temporal"
    SINGLE_DISCOURSE = "single_discourse"
    SINGLE_PRECONDITION = "single_precondition"
    SINGLE_COMMONSENSE = "single_commonsense"
    SINGLE_ALL = "single_all"
    DIRECT = "direct"
    PAIRWISE = "pairwise"


DEBATE_KINDS = frozenset(
    {
        RoleKind.TEMPORAL,
        RoleKind.DISCOURSE,
        RoleKind.PRECONDITION,
        RoleKind.COMMONSENSE,
        RoleKind.GENERIC_CAUSAL,
        RoleKind.JUDGE,
    }
)

# the four relation experts, in their fixed debate order
EXPERT_KINDS = (
    RoleKind.TEMPORAL,
    RoleKind.DISCOURSE,
    RoleKind.PRECONDITION,
    RoleKind.COMMONSENSE,
)


def required_placeholders(kind: RoleKind) -> frozenset[str]:
    if kind is RoleKind.PAIRWISE:
        return frozenset({NEWS, EVENTS, CAUSE_EVENT, EFFECT_EVENT})
    if kind in DEBATE_KINDS:
        return frozenset({NEWS, EVENTS, MESSAGES, CAUSAL_PAIRS})
    return frozenset({NEWS, EVENTS})


@dataclass(frozen=True)
class RenderedPrompt:
    kind: RoleKind
    speaker: str
    text: str
    scenario_id: str
    round: int


@dataclass(frozen=True)
class Message:
    """One debate utterance: who said what in which round."""

    speaker: str
    round: int
    text: str


@dataclass(frozen=True)
class PromptPack:
    """Immutable set of named templates loaded from a directory of .txt files."""

    templates: Mapping[str, str]

    @classmethod
    def load(cls, directory: str | Path) -> PromptPack:
        directory = Path(directory)
        templates = {
            path.stem: path.read_text(encoding="utf-8")
            for path in sorted(directory.glob("*.txt"))
        }
        if not templates:
            raise PromptPackError(f"no .txt templates in {directory}")
        return cls(templates=templates)

    @classmethod
    def default(cls) -> PromptPack:
        return cls.load(resources.files("debategraph") / "prompts")

    def template(self, name: str) -> str:
        try:
            return self.templates[name]
        except KeyError:
            raise MissingTemplateError(f"prompt pack has no template {name!r}") from None

    def template_for(self, kind: RoleKind) -> str:
        return self.template(kind.value)

    def digest(self) -> str:
        """Stable hash over template names and bodies."""
        hasher = hashlib.sha256()
        for name in sorted(self.templates):
            hasher.update(name.encode("utf-8"))
            hasher.update(b"\x00")
            hasher.update(self.templates[name].encode("utf-8"))
            hasher.update(b"\x00")
        return hasher.hexdigest()


_default_pack: PromptPack | None = None


def default_pack() -> PromptPack:
    global _default_pack
    if _default_pack is None:
        _default_pack = PromptPack.default()
    return _default_pack


def display_name(speaker: str) -> str:
    """Human-readable attribution for a speaker label."""
    if speaker == RoleKind.JUDGE.value:
        return "Judge"
    if speaker.startswith("causal_"):
        return f"Causal expert {speaker.split('_', 1)[1]}"
    return speaker.capitalize() + " expert"


def format_events(events: Iterable[Event]) -> str:
    return "\n".join(f"{e.id}. {e.text}" for e in events)


def format_messages(history: Iterable[Message]) -> str:
    return "\n\n".join(
        f"«{display_name(m.speaker)}» (round {m.round}): {m.text}" for m in history
    )


def fill(template: str, kind: RoleKind, values: Mapping[str, str]) -> str:
    """Substitute placeholders, insisting the template matches its kind."""
    present = {token for token in KNOWN_PLACEHOLDERS if token in template}
    required = set(values)
    missing = required - present
    if missing:
        raise MissingPlaceholderError(f"template for {kind.value} lacks {sorted(missing)}")
    extra = present - required
    if extra:
        raise MissingPlaceholderError(f"template for {kind.value} must not use {sorted(extra)}")
    text = template
    for token, value in values.items():
        text = text.replace(token, value)
    return text


def render(
    pack: PromptPack,
    kind: RoleKind,
    scenario: Scenario,
    history: Iterable[Message] = (),
    current_pairs: Iterable[Pair] = (),
    round_index: int = 0,
    speaker: str | None = None,
) -> RenderedPrompt:
    """Deterministic prompt for one role at one debate round."""
    values: dict[str, str] = {
        NEWS: scenario.document,
        EVENTS: format_events(scenario.events),
    }
    if kind in DEBATE_KINDS:
        values[MESSAGES] = format_messages(history)
        values[CAUSAL_PAIRS] = render_pairs(sorted(current_pairs))
    text = fill(pack.template_for(kind), kind, values)
    return RenderedPrompt(
        kind=kind,
        speaker=speaker or kind.value,
        text=text,
        scenario_id=scenario.id,
        round=round_index,
    )


def render_pairwise(
    pack: PromptPack,
    scenario: Scenario,
    ordered_pair: Pair,
    seq: int = 0,
) -> RenderedPrompt:
    """Yes/no prompt asking whether the first event causes the second."""
    cause, effect = ordered_pair
    known = {e.id for e in scenario.events}
    if cause == effect or cause not in known or effect not in known:
        raise ValueError(f"invalid ordered pair {ordered_pair}")
    values = {
        NEWS: scenario.document,
        EVENTS: format_events(scenario.events),
        CAUSE_EVENT: f"{cause}. {scenario.events[cause - 1].text}",
        EFFECT_EVENT: f"{effect}. {scenario.events[effect - 1].text}",
    }
    text = fill(pack.template_for(RoleKind.PAIRWISE), RoleKind.PAIRWISE, values)
    return RenderedPrompt(
        kind=RoleKind.PAIRWISE,
        speaker=RoleKind.PAIRWISE.value,
        text=text,
        scenario_id=scenario.id,
        round=seq,
    )
