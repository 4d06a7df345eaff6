"""Causal event graphs from news articles via multi-expert model debate.

The package turns a document plus its event list into a directed acyclic
causal graph by letting role-specialized model experts exchange proposals
over a few rounds, with a judge finalizing the result. Baseline extraction
modes (direct, pairwise, no-collaboration variants), graph/pair evaluation
against gold pair labels, and downstream reasoning over the graphs
(event placement, forecast and cloze decisions, judged explanation chains)
live alongside the debate orchestrator.
"""

from .backends import BackendConfig, CostLedger, LiveBackend, MockBackend, MockScript, expected_calls
from .data import LikelihoodItem, Scenario, TaskKind, build_scenarios, load_crab_csv
from .debate import DebateConfig, DebateTranscript, Mode, run_scenario, run_scenarios
from .graph import CausalGraph, Event, GraphError, NodeRole
from .metrics import aggregate, confusion, evaluate_transcripts, trajectory
from .parsing import parse_pairs, parse_response, render_pairs
from .reasoning import Heuristic, Placement, chain_scores, place_event, select_chain
from .roles import PromptPack, RoleKind, default_pack

__version__ = "0.1.0"

__all__ = [
    "BackendConfig",
    "CausalGraph",
    "CostLedger",
    "DebateConfig",
    "DebateTranscript",
    "Event",
    "GraphError",
    "Heuristic",
    "LikelihoodItem",
    "LiveBackend",
    "MockBackend",
    "MockScript",
    "Mode",
    "NodeRole",
    "Placement",
    "PromptPack",
    "RoleKind",
    "Scenario",
    "TaskKind",
    "aggregate",
    "build_scenarios",
    "chain_scores",
    "confusion",
    "default_pack",
    "evaluate_transcripts",
    "expected_calls",
    "load_crab_csv",
    "parse_pairs",
    "parse_response",
    "place_event",
    "render_pairs",
    "run_scenario",
    "run_scenarios",
    "select_chain",
    "trajectory",
    "__version__",
]
