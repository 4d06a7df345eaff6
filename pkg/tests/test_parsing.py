"""Wire format parsing: tolerant extraction with explicit drop warnings."""

from __future__ import annotations

import random

import pytest

from debategraph.parsing import (
    NoPairsBlockError,
    parse_answer,
    parse_argument,
    parse_numbered_list,
    parse_pairs,
    parse_response,
    render_pairs,
)


def test_basic_block():
    parsed = parse_pairs("<pairs><pair>1,2</pair><pair>3,4</pair></pairs>", 4)
    assert parsed.pairs == [(1, 2), (3, 4)]
    assert parsed.warnings == []


def test_empty_block_is_valid_and_silent():
    parsed = parse_pairs("no causal relations found <pairs></pairs>", 4)
    assert parsed.pairs == []
    assert parsed.warnings == []


def test_no_block_raises():
    with pytest.raises(NoPairsBlockError):
        parse_pairs("I think 1 causes 2.", 4)


def test_max_event_id_must_be_positive():
    with pytest.raises(ValueError):
        parse_pairs("<pairs></pairs>", 0)


def test_last_block_wins():
    text = (
        "Example of output format:\n<pairs>\n<pair>1,2</pair>\n<pair>3,4</pair>\n</pairs>\n"
        "My answer:\n<pairs>\n<pair>2,3</pair>\n</pairs>"
    )
    assert parse_pairs(text, 4).pairs == [(2, 3)]


def test_case_and_whitespace_tolerance():
    text = "<PAIRS >\n<Pair> 1 , 2 </pair>\n</pairs >"
    parsed = parse_pairs(text, 4)
    assert parsed.pairs == [(1, 2)]
    assert parsed.warnings == []


def test_drop_reasons_are_warned_in_order():
    text = (
        "chatter before the block "
        "<pairs><pair>2,2</pair><pair>1,9</pair><pair>1,2</pair>"
        "<pair>1,2</pair><pair>2,1</pair><pair>one,two</pair></pairs>"
    )
    parsed = parse_pairs(text, 4)
    assert parsed.pairs == [(1, 2)]
    assert parsed.warnings == [
        "self pair (2,2) dropped",
        "pair (1,9) outside [1,4] dropped",
        "duplicate pair (1,2) dropped",
        "pair (2,1) reverses an earlier pair, dropped",
        "malformed pair body 'one,two' dropped",
    ]


def test_reverse_keeps_first_occurrence():
    parsed = parse_pairs("<pairs><pair>3,1</pair><pair>1,3</pair></pairs>", 4)
    assert parsed.pairs == [(3, 1)]
    assert parsed.warnings == ["pair (1,3) reverses an earlier pair, dropped"]


def test_negative_and_zero_ids_are_malformed_or_out_of_range():
    parsed = parse_pairs("<pairs><pair>0,2</pair><pair>-1,2</pair></pairs>", 4)
    assert parsed.pairs == []
    # "0,2" parses as digits but fails the range check; "-1,2" never matches
    assert parsed.warnings == [
        "pair (0,2) outside [1,4] dropped",
        "malformed pair body '-1,2' dropped",
    ]


def test_render_parse_round_trip_is_identity():
    rng = random.Random(3)
    for _ in range(200):
        n = rng.randint(2, 9)
        order = list(range(1, n + 1))
        rng.shuffle(order)
        pairs = []
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.4:
                    pairs.append((order[i], order[j]))
        rng.shuffle(pairs)
        assert parse_pairs(render_pairs(pairs), n).pairs == pairs


def test_render_pairs_shape():
    assert render_pairs([(1, 2), (3, 4)]) == "<pairs>\n<pair>1,2</pair>\n<pair>3,4</pair>\n</pairs>"
    assert render_pairs([]) == "<pairs>\n</pairs>"


def test_argument_extraction():
    assert parse_argument("<argument>  because storms break lines  </argument>") == (
        "because storms break lines"
    )
    assert parse_argument("no tags here") is None


def test_unclosed_argument_is_ignored_with_warning():
    parsed = parse_response("<argument>never closed <pairs><pair>1,2</pair></pairs>", 4)
    assert parsed.argument is None
    assert parsed.pairs == [(1, 2)]
    assert "unclosed <argument> tag ignored" in parsed.warnings


def test_first_argument_block_wins():
    text = "<argument>first</argument> <argument>second</argument> <pairs></pairs>"
    assert parse_response(text, 3).argument == "first"


def test_parse_answer():
    assert parse_answer("<answer>YES</answer>") is True
    assert parse_answer("<answer> no </answer>") is False
    assert parse_answer("<Answer>Yes</Answer>") is True
    assert parse_answer("<answer>maybe</answer>") is None
    assert parse_answer("yes") is None


def test_parse_numbered_list():
    text = "Here are the events:\n1. storm hits\n 2) lines fall\nnot an item\n3. storm hits\n4. city dark"
    assert parse_numbered_list(text) == ["storm hits", "lines fall", "city dark"]
    assert parse_numbered_list("no items at all") == []
