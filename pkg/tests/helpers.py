"""Shared fixtures for the test suite: tiny scenarios and scripted backends."""

from __future__ import annotations

from debategraph.backends import CostLedger, MockBackend, MockScript
from debategraph.data import Scenario
from debategraph.graph import numbered_events

EXPERTS = ("temporal", "discourse", "precondition", "commonsense")


def make_scenario(
    texts=None,
    causal=(),
    noncausal=None,
    scenario_id="s1",
    document="Some article text.",
):
    texts = texts if texts is not None else ["event one", "event two", "event three"]
    causal = frozenset(causal)
    if noncausal is None:
        noncausal = frozenset((b, a) for a, b in causal)
    return Scenario(
        id=scenario_id,
        document=document,
        events=numbered_events(list(texts)),
        gold_causal=causal,
        gold_noncausal=frozenset(noncausal),
    )


def pairs_block(*pairs):
    lines = "".join(f"<pair>{a},{b}</pair>\n" for a, b in pairs)
    return f"<pairs>\n{lines}</pairs>"


def keyed(role, round_index, response):
    return {"match": {"role": role, "round": round_index}, "response": response}


def unkeyed(response):
    return {"match": None, "response": response}


def mock_backend(entries, ledger=None):
    return MockBackend(MockScript.from_payload(entries), ledger or CostLedger())


def debate_script(round_responses, judge_response):
    """One keyed entry per expert per round, then the judge.

    round_responses: list per round of either one response for all experts
    or a mapping from expert label to response.
    """
    entries = []
    for round_index, responses in enumerate(round_responses):
        for expert in EXPERTS:
            response = responses[expert] if isinstance(responses, dict) else responses
            entries.append(keyed(expert, round_index, response))
    entries.append(keyed("judge", None, judge_response))
    return entries
