"""Tolerant parsing of the tagged wire formats used in model responses."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .graph import Pair

PAIRS_BLOCK_RE = re.compile(r"<pairs\s*>(.*?)</pairs\s*>", re.IGNORECASE | re.DOTALL)
PAIR_RE = re.compile(r"<pair\s*>(.*?)</pair\s*>", re.IGNORECASE | re.DOTALL)
PAIR_BODY_RE = re.compile(r"\A\s*(\d+)\s*,\s*(\d+)\s*\Z")
ARGUMENT_RE = re.compile(r"<argument\s*>(.*?)</argument\s*>", re.IGNORECASE | re.DOTALL)
ANSWER_RE = re.compile(r"<answer\s*>(.*?)</answer\s*>", re.IGNORECASE | re.DOTALL)


class NoPairsBlockError(Exception):
    """The response contains no <pairs> block at all."""


@dataclass
class ParsedResponse:
    pairs: list[Pair] = field(default_factory=list)
    argument: str | None = None
    warnings: list[str] = field(default_factory=list)


def extract_pair_items(body: str, max_event_id: int, warnings: list[str]) -> list[Pair]:
    """Pairs from one tag body; anomalies are dropped and recorded, first wins."""
    pairs: list[Pair] = []
    seen: set[Pair] = set()
    for raw in PAIR_RE.findall(body):
        match = PAIR_BODY_RE.match(raw)
        if match is None:
            warnings.append(f"malformed pair body {raw!r} dropped")
            continue
        cause, effect = int(match.group(1)), int(match.group(2))
        if cause == effect:
            warnings.append(f"self pair ({cause},{effect}) dropped")
            continue
        if not (1 <= cause <= max_event_id and 1 <= effect <= max_event_id):
            warnings.append(f"pair ({cause},{effect}) outside [1,{max_event_id}] dropped")
            continue
        if (cause, effect) in seen:
            warnings.append(f"duplicate pair ({cause},{effect}) dropped")
            continue
        if (effect, cause) in seen:
            warnings.append(f"pair ({cause},{effect}) reverses an earlier pair, dropped")
            continue
        seen.add((cause, effect))
        pairs.append((cause, effect))
    return pairs


def parse_pairs(text: str, max_event_id: int) -> ParsedResponse:
    """Pairs from the last <pairs> block of a response.

    Models sometimes repeat the format example before the real answer, so
    only the final block counts. Raises NoPairsBlockError when the response
    has no block anywhere.
    """
    if max_event_id < 1:
        raise ValueError(f"max_event_id must be >= 1, got {max_event_id}")
    blocks = PAIRS_BLOCK_RE.findall(text)
    if not blocks:
        raise NoPairsBlockError("no <pairs> block in response")
    warnings: list[str] = []
    pairs = extract_pair_items(blocks[-1], max_event_id, warnings)
    return ParsedResponse(pairs=pairs, warnings=warnings)


def _extract_argument(text: str) -> tuple[str | None, list[str]]:
    match = ARGUMENT_RE.search(text)
    if match is not None:
        return match.group(1).strip(), []
    if re.search(r"<argument\s*>", text, re.IGNORECASE):
        return None, ["unclosed <argument> tag ignored"]
    return None, []


def parse_argument(text: str) -> str | None:
    """Trimmed content of the first well-formed <argument> block, if any."""
    return _extract_argument(text)[0]


def parse_response(text: str, max_event_id: int) -> ParsedResponse:
    """Pairs plus optional argument from one response, warnings merged."""
    parsed = parse_pairs(text, max_event_id)
    argument, arg_warnings = _extract_argument(text)
    parsed.argument = argument
    parsed.warnings.extend(arg_warnings)
    return parsed


def parse_answer(text: str) -> bool | None:
    """YES/NO from the first <answer> block; None when missing or malformed."""
    match = ANSWER_RE.search(text)
    if match is None:
        return None
    token = match.group(1).strip().lower()
    if token == "yes":
        return True
    if token == "no":
        return False
    return None


def render_pairs(pairs: list[Pair] | tuple[Pair, ...]) -> str:
    """Canonical <pairs> block; parse_pairs(render_pairs(p)) round-trips."""
    lines = "".join(f"<pair>{a},{b}</pair>\n" for a, b in pairs)
    return f"<pairs>\n{lines}</pairs>"


def parse_numbered_list(text: str) -> list[str]:
    """Items of a "1. text" numbered list, deduplicated preserving order."""
    items: list[str] = []
    seen: set[str] = set()
    for line in text.splitlines():
        match = re.match(r"\s*\d+\s*[.)]\s*(.+?)\s*$", line)
        if match is None:
            continue
        item = match.group(1)
        if item in seen:
            continue
        seen.add(item)
        items.append(item)
    return items
