"""Chat-completion backends (live HTTP and scripted mock) with cost accounting."""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import httpx

from .roles import RenderedPrompt


class BackendError(Exception):
    pass


class AuthMissingError(BackendError):
    pass


class BackendUnavailableError(BackendError):
    pass


class ScriptExhaustedError(BackendError):
    pass


@dataclass(frozen=True)
class BackendConfig:
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4"
    temperature: float = 0.0
    max_retries: int = 3
    timeout_s: float = 60.0
    api_key_env: str = "OPENAI_API_KEY"


class Backend(Protocol):
    def complete(self, prompt: RenderedPrompt) -> str: ...


class CostLedger:
    """Append-only per-scenario call and token accounting, safe under threads."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._entries: list[tuple[str, int, int]] = []

    def record(self, scenario_id: str, prompt_tokens: int, completion_tokens: int) -> None:
        with self._lock:
            self._entries.append((scenario_id, prompt_tokens, completion_tokens))

    def calls(self, scenario_id: str | None = None) -> int:
        with self._lock:
            if scenario_id is None:
                return len(self._entries)
            return sum(1 for sid, _, _ in self._entries if sid == scenario_id)

    def per_scenario(self) -> dict[str, dict[str, int]]:
        with self._lock:
            entries = list(self._entries)
        out: dict[str, dict[str, int]] = {}
        for sid, ptok, ctok in entries:
            bucket = out.setdefault(sid, {"calls": 0, "prompt_tokens": 0, "completion_tokens": 0})
            bucket["calls"] += 1
            bucket["prompt_tokens"] += ptok
            bucket["completion_tokens"] += ctok
        return {sid: out[sid] for sid in sorted(out)}

    def totals(self) -> dict[str, int]:
        per = self.per_scenario()
        return {
            "calls": sum(b["calls"] for b in per.values()),
            "prompt_tokens": sum(b["prompt_tokens"] for b in per.values()),
            "completion_tokens": sum(b["completion_tokens"] for b in per.values()),
        }

    def to_dict(self) -> dict:
        return {"scenarios": self.per_scenario(), "totals": self.totals()}


@dataclass(frozen=True)
class MockEntry:
    """One scripted response; role/round constrain which requests may consume it."""

    response: str
    role: str | None = None
    round: int | None = None

    def matches(self, prompt: RenderedPrompt) -> bool:
        if self.role is not None and self.role not in (prompt.kind.value, prompt.speaker):
            return False
        if self.round is not None and self.round != prompt.round:
            return False
        return True


class MockScript:
    """Ordered response script; each entry is consumed at most once per scenario."""

    def __init__(self, entries: list[MockEntry]):
        self.entries = list(entries)

    @classmethod
    def from_file(cls, path: str | Path) -> MockScript:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_payload(payload)

    @classmethod
    def from_payload(cls, payload: list) -> MockScript:
        entries = []
        for item in payload:
            match = item.get("match") or {}
            entries.append(
                MockEntry(
                    response=item["response"],
                    role=match.get("role"),
                    round=match.get("round"),
                )
            )
        return cls(entries)


class MockBackend:
    """Deterministic offline backend replaying a script.

    The script restarts for every scenario id, so a multi-scenario run
    replays the same entries per scenario. Debate rounds call experts
    concurrently; entries keyed by role stay deterministic under that
    concurrency, unkeyed entries suit sequential flows. Token counts are
    character-count/4 estimates.
    """

    estimates_tokens = True

    def __init__(self, script: MockScript, ledger: CostLedger | None = None):
        self.script = script
        self.ledger = ledger if ledger is not None else CostLedger()
        self._lock = threading.Lock()
        self._consumed: dict[str, set[int]] = {}

    def complete(self, prompt: RenderedPrompt) -> str:
        with self._lock:
            used = self._consumed.setdefault(prompt.scenario_id, set())
            for index, entry in enumerate(self.script.entries):
                if index in used or not entry.matches(prompt):
                    continue
                used.add(index)
                response = entry.response
                break
            else:
                raise ScriptExhaustedError(
                    f"no scripted response left for role={prompt.speaker!r} "
                    f"round={prompt.round} scenario={prompt.scenario_id!r}"
                )
        self.ledger.record(prompt.scenario_id, len(prompt.text) // 4, len(response) // 4)
        return response


class LiveBackend:
    """OpenAI-compatible chat-completions client with retry on transient failures."""

    estimates_tokens = False

    def __init__(
        self,
        config: BackendConfig,
        ledger: CostLedger | None = None,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        key = os.environ.get(config.api_key_env)
        if not key:
            raise AuthMissingError(f"environment variable {config.api_key_env} is not set")
        self.config = config
        self.ledger = ledger if ledger is not None else CostLedger()
        self._sleep = sleep
        self._client = httpx.Client(timeout=config.timeout_s, transport=transport)
        self._headers = {"Authorization": f"Bearer {key}"}
        self._url = config.base_url.rstrip("/") + "/chat/completions"

    def close(self) -> None:
        self._client.close()

    def complete(self, prompt: RenderedPrompt) -> str:
        body = {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt.text}],
        }
        retries = 0
        while True:
            failure: str
            try:
                response = self._client.post(self._url, json=body, headers=self._headers)
            except httpx.TransportError as exc:
                failure = f"transport error: {exc}"
            else:
                if response.status_code == 200:
                    data = response.json()
                    content = data["choices"][0]["message"]["content"]
                    usage = data.get("usage", {})
                    self.ledger.record(
                        prompt.scenario_id,
                        int(usage.get("prompt_tokens", 0)),
                        int(usage.get("completion_tokens", 0)),
                    )
                    return content
                if response.status_code == 429 or response.status_code >= 500:
                    failure = f"HTTP {response.status_code}"
                else:
                    raise BackendUnavailableError(
                        f"HTTP {response.status_code}: {response.text[:200]}"
                    )
            if retries >= self.config.max_retries:
                raise BackendUnavailableError(f"giving up after {retries} retries ({failure})")
            self._sleep(min(0.5 * 2**retries, 8.0))
            retries += 1


def expected_calls(mode: str, n_events: int = 0, n_experts: int = 0, n_rounds: int = 0) -> int:
    """Model calls a scenario costs under a generation mode.

    For debate modes, n_rounds counts expert-call rounds including the
    initial independent round; a debate configured with max_rounds
    discussion rounds therefore has n_rounds = max_rounds + 1, plus one
    judge call on top.
    """
    if mode == "direct":
        return 1
    if mode == "pairwise":
        if n_events < 2:
            raise ValueError("pairwise needs at least 2 events")
        return n_events * (n_events - 1)
    if mode in ("experts_no_collab", "collab_no_experts", "collab_with_experts"):
        if n_experts < 1 or n_rounds < 1:
            raise ValueError("debate modes need n_experts >= 1 and n_rounds >= 1")
        return n_experts * n_rounds + 1
    raise ValueError(f"unknown mode {mode!r}")
