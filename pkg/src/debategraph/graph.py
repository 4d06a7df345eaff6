"""Directed acyclic causal event graphs and the operations the pipeline needs."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

Pair = tuple[int, int]


class GraphError(Exception):
    """Base class for causal graph constraint violations."""


class SelfLoopError(GraphError):
    pass


class ReverseConflictError(GraphError):
    pass


class CycleIntroducedError(GraphError):
    pass


class UnknownNodeError(GraphError):
    pass


class NodeRole(str, Enum):
    ROOT = "root"
    NON_LEAF = "non_leaf"
    LEAF = "leaf"
    ISOLATED = "isolated"


@dataclass(frozen=True)
class Event:
    id: int
    text: str

    def __post_init__(self) -> None:
        if self.id < 1:
            raise ValueError(f"event id must be >= 1, got {self.id}")


@dataclass(frozen=True)
class CausalGraph:
    """Immutable graph over numbered events; edges are (cause, effect) pairs.

    Edges are irreflexive and antisymmetric, and the graph is acyclic: a
    cycle would force a reverse conflict once causality is treated as
    transitive, so cycles are rejected at insertion time.
    """

    events: tuple[Event, ...] = ()
    edges: frozenset[Pair] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        ids = [e.id for e in self.events]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate event ids")
        known = set(ids)
        for cause, effect in self.edges:
            if cause not in known or effect not in known:
                raise UnknownNodeError(f"edge ({cause},{effect}) references unknown event")
            if cause == effect:
                raise SelfLoopError(f"self loop on event {cause}")
            if (effect, cause) in self.edges:
                raise ReverseConflictError(f"both ({cause},{effect}) and ({effect},{cause}) present")
        if self._has_cycle():
            raise CycleIntroducedError("edge set contains a cycle")

    def _has_cycle(self) -> bool:
        succs = self.successors()
        visiting: set[int] = set()
        done: set[int] = set()

        def visit(node: int) -> bool:
            if node in done:
                return False
            if node in visiting:
                return True
            visiting.add(node)
            for nxt in succs.get(node, []):
                if visit(nxt):
                    return True
            visiting.discard(node)
            done.add(node)
            return False

        return any(visit(e.id) for e in self.events)

    def event_ids(self) -> set[int]:
        return {e.id for e in self.events}

    def event_text(self, node: int) -> str:
        for e in self.events:
            if e.id == node:
                return e.text
        raise UnknownNodeError(f"unknown event id {node}")

    def predecessors(self) -> dict[int, list[int]]:
        preds: dict[int, list[int]] = {e.id: [] for e in self.events}
        for cause, effect in sorted(self.edges):
            preds[effect].append(cause)
        return preds

    def successors(self) -> dict[int, list[int]]:
        succs: dict[int, list[int]] = {e.id: [] for e in self.events}
        for cause, effect in sorted(self.edges):
            succs[cause].append(effect)
        return succs

    def add_edge(self, edge: Pair) -> CausalGraph:
        """Return a graph with the edge added; inserting an existing edge is a no-op."""
        cause, effect = edge
        known = self.event_ids()
        if cause not in known:
            raise UnknownNodeError(f"unknown event id {cause}")
        if effect not in known:
            raise UnknownNodeError(f"unknown event id {effect}")
        if cause == effect:
            raise SelfLoopError(f"self loop on event {cause}")
        if (cause, effect) in self.edges:
            return self
        if (effect, cause) in self.edges:
            raise ReverseConflictError(f"reverse of ({cause},{effect}) already present")
        if self._reaches(effect, cause):
            raise CycleIntroducedError(f"edge ({cause},{effect}) would close a cycle")
        return CausalGraph(self.events, self.edges | {edge})

    def _reaches(self, start: int, target: int) -> bool:
        succs = self.successors()
        stack = [start]
        seen: set[int] = set()
        while stack:
            node = stack.pop()
            if node == target:
                return True
            if node in seen:
                continue
            seen.add(node)
            stack.extend(succs.get(node, []))
        return False

    def transitive_closure(self) -> CausalGraph:
        """Smallest transitive superset of the edge set."""
        succs = self.successors()
        closed: set[Pair] = set()
        for event in self.events:
            stack = list(succs[event.id])
            seen: set[int] = set()
            while stack:
                node = stack.pop()
                if node in seen:
                    continue
                seen.add(node)
                closed.add((event.id, node))
                stack.extend(succs[node])
        return CausalGraph(self.events, frozenset(closed))

    def classify_node(self, node: int) -> NodeRole:
        if node not in self.event_ids():
            raise UnknownNodeError(f"unknown event id {node}")
        indeg = sum(1 for _, effect in self.edges if effect == node)
        outdeg = sum(1 for cause, _ in self.edges if cause == node)
        if indeg == 0 and outdeg == 0:
            return NodeRole.ISOLATED
        if indeg == 0:
            return NodeRole.ROOT
        if outdeg == 0:
            return NodeRole.LEAF
        return NodeRole.NON_LEAF

    def maximal_paths_through(self, node: int) -> list[list[int]]:
        """All maximal directed paths containing the node, in lexicographic order.

        A path is maximal when its first event has no predecessors and its
        last event has no successors; enumeration branches on every
        predecessor and successor. An isolated node yields [[node]].
        """
        if node not in self.event_ids():
            raise UnknownNodeError(f"unknown event id {node}")
        preds = self.predecessors()
        succs = self.successors()

        def backward(chain: list[int]) -> list[list[int]]:
            options = preds[chain[0]]
            if not options:
                return [chain]
            out: list[list[int]] = []
            for p in options:
                out.extend(backward([p] + chain))
            return out

        def forward(chain: list[int]) -> list[list[int]]:
            options = succs[chain[-1]]
            if not options:
                return [chain]
            out: list[list[int]] = []
            for s in options:
                out.extend(forward(chain + [s]))
            return out

        paths = [
            back + fwd[1:]
            for back in backward([node])
            for fwd in forward([node])
        ]
        return sorted(paths)

    def to_dict(self) -> dict:
        return {
            "events": [{"id": e.id, "text": e.text} for e in sorted(self.events, key=lambda e: e.id)],
            "edges": [list(edge) for edge in sorted(self.edges)],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> CausalGraph:
        events = tuple(Event(id=item["id"], text=item["text"]) for item in payload["events"])
        edges = frozenset((int(a), int(b)) for a, b in payload["edges"])
        return cls(events, edges)


def edge_set_delta(before: CausalGraph, after: CausalGraph) -> tuple[set[Pair], set[Pair]]:
    """(added, removed) edge sets between two graphs."""
    return set(after.edges - before.edges), set(before.edges - after.edges)


def numbered_events(texts: list[str]) -> tuple[Event, ...]:
    """Events numbered 1..n in list order."""
    return tuple(Event(id=i, text=text) for i, text in enumerate(texts, start=1))
