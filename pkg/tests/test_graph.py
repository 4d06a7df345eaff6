"""Graph constraints checked against brute-force oracles written first."""

from __future__ import annotations

import random

import pytest

from debategraph.graph import (
    CausalGraph,
    CycleIntroducedError,
    Event,
    NodeRole,
    ReverseConflictError,
    SelfLoopError,
    UnknownNodeError,
    edge_set_delta,
    numbered_events,
)

# ---------------------------------------------------------------------------
# oracles, implemented independently of the module under test


def kahn_has_cycle(n: int, edges: set) -> bool:
    indegree = {i: 0 for i in range(1, n + 1)}
    out = {i: [] for i in range(1, n + 1)}
    for a, b in edges:
        out[a].append(b)
        indegree[b] += 1
    queue = [i for i in indegree if indegree[i] == 0]
    seen = 0
    while queue:
        node = queue.pop()
        seen += 1
        for succ in out[node]:
            indegree[succ] -= 1
            if indegree[succ] == 0:
                queue.append(succ)
    return seen != n


def floyd_warshall_closure(n: int, edges: set) -> set:
    reach = [[False] * (n + 1) for _ in range(n + 1)]
    for a, b in edges:
        reach[a][b] = True
    for k in range(1, n + 1):
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                if reach[i][k] and reach[k][j]:
                    reach[i][j] = True
    return {(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if reach[i][j]}


def brute_force_maximal_paths(n: int, edges: set, node: int) -> list:
    preds = {i: sorted(a for a, b in edges if b == i) for i in range(1, n + 1)}
    succs = {i: sorted(b for a, b in edges if a == i) for i in range(1, n + 1)}

    def walks(start):
        if not succs[start]:
            return [[start]]
        return [[start] + rest for nxt in succs[start] for rest in walks(nxt)]

    roots = [i for i in range(1, n + 1) if not preds[i]]
    full = [walk for root in roots for walk in walks(root)]
    return sorted(walk for walk in full if node in walk)


def graph_of(n: int, edges=()) -> CausalGraph:
    return CausalGraph(
        events=numbered_events([f"event {i}" for i in range(1, n + 1)]),
        edges=frozenset(edges),
    )


# ---------------------------------------------------------------------------
# construction and insertion


def test_empty_graph_accepts_first_edge():
    g = graph_of(3).add_edge((1, 2))
    assert g.edges == frozenset({(1, 2)})


def test_duplicate_insert_is_a_no_op():
    g = graph_of(3, {(1, 2)})
    assert g.add_edge((1, 2)).edges == g.edges


def test_reverse_of_existing_edge_is_rejected():
    g = graph_of(3, {(1, 2)})
    with pytest.raises(ReverseConflictError):
        g.add_edge((2, 1))


def test_cycle_closing_edge_is_rejected():
    g = graph_of(3, {(1, 2), (2, 3)})
    with pytest.raises(CycleIntroducedError):
        g.add_edge((3, 1))


def test_self_loop_is_rejected():
    with pytest.raises(SelfLoopError):
        graph_of(3).add_edge((1, 1))


def test_unknown_endpoints_are_rejected():
    with pytest.raises(UnknownNodeError):
        graph_of(3).add_edge((1, 9))
    with pytest.raises(UnknownNodeError):
        graph_of(3).add_edge((0, 2))


def test_constructor_rejects_invalid_state():
    events = numbered_events(["a", "b"])
    with pytest.raises(SelfLoopError):
        CausalGraph(events=events, edges=frozenset({(1, 1)}))
    with pytest.raises(ReverseConflictError):
        CausalGraph(events=events, edges=frozenset({(1, 2), (2, 1)}))
    with pytest.raises(UnknownNodeError):
        CausalGraph(events=events, edges=frozenset({(1, 5)}))
    with pytest.raises(CycleIntroducedError):
        CausalGraph(
            events=numbered_events(["a", "b", "c"]),
            edges=frozenset({(1, 2), (2, 3), (3, 1)}),
        )
    with pytest.raises(ValueError):
        CausalGraph(events=(Event(id=1, text="a"), Event(id=1, text="b")), edges=frozenset())


def test_add_edge_returns_new_graph():
    g = graph_of(3)
    g2 = g.add_edge((1, 2))
    assert g.edges == frozenset()
    assert g2.edges == frozenset({(1, 2)})


# ---------------------------------------------------------------------------
# closure


def test_closure_adds_transitive_edge():
    g = graph_of(3, {(1, 2), (2, 3)})
    assert g.transitive_closure().edges == frozenset({(1, 2), (2, 3), (1, 3)})


def test_closure_of_chain_of_four():
    g = graph_of(4, {(1, 2), (2, 3), (3, 4)})
    assert g.transitive_closure().edges == frozenset(
        {(1, 2), (2, 3), (3, 4), (1, 3), (2, 4), (1, 4)}
    )


def test_closure_is_idempotent():
    g = graph_of(5, {(1, 2), (2, 3), (1, 4), (4, 5)}).transitive_closure()
    assert g.transitive_closure().edges == g.edges


def test_closure_matches_floyd_warshall_on_random_dags():
    rng = random.Random(7)
    for _ in range(200):
        n = rng.randint(2, 8)
        order = list(range(1, n + 1))
        rng.shuffle(order)
        edges = set()
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.35:
                    edges.add((order[i], order[j]))
        got = graph_of(n, edges).transitive_closure().edges
        assert got == floyd_warshall_closure(n, edges)


# ---------------------------------------------------------------------------
# node roles and paths


def test_classify_node_roles():
    g = graph_of(4, {(1, 2), (2, 3)})
    assert g.classify_node(1) is NodeRole.ROOT
    assert g.classify_node(2) is NodeRole.NON_LEAF
    assert g.classify_node(3) is NodeRole.LEAF
    assert g.classify_node(4) is NodeRole.ISOLATED
    with pytest.raises(UnknownNodeError):
        g.classify_node(9)


def test_maximal_paths_through_chain_middle():
    g = graph_of(3, {(1, 2), (2, 3)})
    assert g.maximal_paths_through(2) == [[1, 2, 3]]


def test_maximal_paths_branch_on_predecessors():
    g = graph_of(4, {(1, 3), (2, 3), (3, 4)})
    assert g.maximal_paths_through(3) == [[1, 3, 4], [2, 3, 4]]


def test_maximal_paths_isolated_node():
    assert graph_of(2).maximal_paths_through(1) == [[1]]


def test_maximal_paths_unknown_node():
    with pytest.raises(UnknownNodeError):
        graph_of(2).maximal_paths_through(5)


def test_maximal_paths_match_brute_force_on_random_dags():
    rng = random.Random(11)
    for _ in range(150):
        n = rng.randint(2, 7)
        order = list(range(1, n + 1))
        rng.shuffle(order)
        edges = set()
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.3:
                    edges.add((order[i], order[j]))
        g = graph_of(n, edges)
        node = rng.randint(1, n)
        assert g.maximal_paths_through(node) == brute_force_maximal_paths(n, edges, node)


# ---------------------------------------------------------------------------
# insertion sequences against the oracle decision


def test_insertion_decisions_match_oracle():
    rng = random.Random(23)
    for _ in range(300):
        n = rng.randint(2, 7)
        g = graph_of(n)
        accepted: set = set()
        for _ in range(rng.randint(1, 20)):
            a, b = rng.randint(1, n), rng.randint(1, n)
            if a == b:
                with pytest.raises(SelfLoopError):
                    g.add_edge((a, b))
            elif (b, a) in accepted:
                with pytest.raises(ReverseConflictError):
                    g.add_edge((a, b))
            elif (a, b) not in accepted and kahn_has_cycle(n, accepted | {(a, b)}):
                with pytest.raises(CycleIntroducedError):
                    g.add_edge((a, b))
            else:
                g = g.add_edge((a, b))
                accepted.add((a, b))
        assert g.edges == frozenset(accepted)
        assert not kahn_has_cycle(n, set(g.edges))


# ---------------------------------------------------------------------------
# adjacency, serialization, deltas


def test_adjacency_is_sorted():
    g = graph_of(4, {(3, 1), (2, 1), (3, 4)})
    assert g.predecessors()[1] == [2, 3]
    assert g.successors()[3] == [1, 4]
    assert g.predecessors()[2] == []


def test_event_text_lookup():
    g = graph_of(2)
    assert g.event_text(2) == "event 2"
    with pytest.raises(UnknownNodeError):
        g.event_text(3)


def test_dict_round_trip_and_edge_order():
    g = graph_of(3, {(2, 3), (1, 2)})
    payload = g.to_dict()
    assert payload["edges"] == [[1, 2], [2, 3]]
    assert payload["events"][0] == {"id": 1, "text": "event 1"}
    assert CausalGraph.from_dict(payload) == g


def test_edge_set_delta():
    before = graph_of(3, {(1, 2)})
    after = graph_of(3, {(1, 2), (2, 3)})
    added, removed = edge_set_delta(before, after)
    assert added == {(2, 3)}
    assert removed == set()
    added, removed = edge_set_delta(after, before)
    assert added == set()
    assert removed == {(2, 3)}


def test_numbered_events():
    events = numbered_events(["a", "b"])
    assert events == (Event(id=1, text="a"), Event(id=2, text="b"))
    with pytest.raises(ValueError):
        Event(id=0, text="a")
