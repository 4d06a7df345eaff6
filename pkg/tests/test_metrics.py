"""Evaluation metrics and trajectory analytics against hand-computed values."""

from __future__ import annotations

import pytest

from debategraph.debate import DebateTranscript, Mode, RoundEntry, StopReason
from debategraph.graph import CausalGraph
from debategraph.metrics import (
    Confusion,
    EvalReport,
    UndefinedMetricError,
    aggregate,
    bacc,
    confusion,
    confusion_from_edges,
    evaluate_transcripts,
    f1_scores,
    raw_accuracy,
    report_text,
    trajectory,
    trajectory_text,
)

from helpers import make_scenario


def transcript(scenario, rounds, final_pairs, stop=StopReason.CONSENSUS):
    graph = CausalGraph(events=scenario.events)
    for pair in final_pairs:
        graph = graph.add_edge(pair)
    return DebateTranscript(
        scenario_id=scenario.id,
        mode=Mode.COLLAB_WITH_EXPERTS,
        rounds=[
            {label: RoundEntry(message="", pairs=tuple(pairs)) for label, pairs in entry.items()}
            for entry in rounds
        ],
        judge_message="final",
        final_pairs=tuple(final_pairs),
        final_graph=graph,
        stop_reason=stop,
    )


# ---------------------------------------------------------------------------
# confusion counting


def test_confusion_is_direction_sensitive():
    scenario = make_scenario(causal={(1, 2)})
    assert confusion_from_edges({(1, 2)}, scenario) == Confusion(tp=1, fp=0, tn=1, fn=0)
    assert confusion_from_edges({(2, 1)}, scenario) == Confusion(tp=0, fp=1, tn=0, fn=1)


def test_confusion_ignores_unlabeled_pairs():
    scenario = make_scenario(causal={(1, 2)})
    # (1,3) carries no gold label, so it contributes nothing
    assert confusion_from_edges({(1, 2), (1, 3)}, scenario) == Confusion(tp=1, fp=0, tn=1, fn=0)


def test_confusion_from_graph():
    scenario = make_scenario(causal={(1, 2)})
    graph = CausalGraph(events=scenario.events, edges=frozenset({(1, 2)}))
    assert confusion(graph, scenario) == Confusion(tp=1, fp=0, tn=1, fn=0)


def test_confusion_addition():
    assert Confusion(1, 2, 3, 4) + Confusion(4, 3, 2, 1) == Confusion(5, 5, 5, 5)
    assert Confusion(1, 2, 3, 4).total() == 10


# ---------------------------------------------------------------------------
# balanced accuracy and f1


def test_bacc_frozen_example():
    assert bacc(Confusion(tp=1, fp=1, tn=3, fn=1)) == pytest.approx(0.625)


def test_bacc_with_one_empty_class_uses_the_other():
    assert bacc(Confusion(tp=0, fp=0, tn=2, fn=0)) == pytest.approx(1.0)
    assert bacc(Confusion(tp=3, fp=0, tn=0, fn=1)) == pytest.approx(0.75)


def test_bacc_undefined_when_no_gold_pairs():
    with pytest.raises(UndefinedMetricError):
        bacc(Confusion())


def test_raw_accuracy():
    assert raw_accuracy(Confusion(tp=1, fp=1, tn=3, fn=1)) == pytest.approx(4 / 6)
    with pytest.raises(UndefinedMetricError):
        raw_accuracy(Confusion())


def test_f1_frozen_example():
    f1_c, f1_nc, macro = f1_scores(Confusion(tp=1, fp=1, tn=3, fn=1))
    assert f1_c == pytest.approx(0.5)
    assert f1_nc == pytest.approx(0.75)
    assert macro == pytest.approx(0.625)


def test_f1_zero_denominators_score_zero():
    f1_c, f1_nc, macro = f1_scores(Confusion(tp=0, fp=0, tn=2, fn=2))
    assert f1_c == 0.0
    assert f1_nc == pytest.approx(2 * 2 / (2 * 2 + 2 + 0))
    assert macro == pytest.approx(f1_nc / 2)
    assert f1_scores(Confusion())[2] == 0.0


# ---------------------------------------------------------------------------
# aggregation levels


def test_graph_level_averages_per_scenario():
    confusions = {
        "a": Confusion(tp=2, fp=0, tn=2, fn=0),  # bacc 1.0
        "b": Confusion(tp=0, fp=0, tn=1, fn=1),  # bacc (0 + 1) / 2 = 0.5
    }
    report = aggregate(confusions, "graph")
    assert report.bacc == pytest.approx(0.75)
    assert report.n_scenarios == 2
    assert report.bacc_defined == 2


def test_pair_level_pools_counts_once():
    confusions = {
        "a": Confusion(tp=2, fp=0, tn=2, fn=0),
        "b": Confusion(tp=0, fp=0, tn=1, fn=1),
    }
    report = aggregate(confusions, "pair")
    # pooled counts: tp=2 fp=0 tn=3 fn=1 -> bacc (2/3 + 3/3) / 2
    assert report.bacc == pytest.approx((2 / 3 + 1.0) / 2)
    # pair level weighs scenarios by their pair counts, so it differs from
    # the graph-level mean on this asymmetric input
    assert report.bacc != pytest.approx(0.75)


def test_graph_level_excludes_undefined_bacc_but_keeps_f1():
    confusions = {
        "a": Confusion(tp=1, fp=0, tn=1, fn=0),
        "b": Confusion(),  # no labeled pairs at all
    }
    report = aggregate(confusions, "graph")
    assert report.bacc == pytest.approx(1.0)
    assert report.bacc_defined == 1
    assert report.n_scenarios == 2
    assert report.f1_causal == pytest.approx((1.0 + 0.0) / 2)


def test_aggregate_validates_inputs():
    with pytest.raises(ValueError):
        aggregate({}, "graph")
    with pytest.raises(ValueError):
        aggregate({"a": Confusion()}, "edge")


def test_aggregate_per_scenario_breakdown():
    confusions = {"a": Confusion(tp=1, fp=0, tn=1, fn=0), "b": Confusion()}
    report = aggregate(confusions, "graph", with_per_scenario=True)
    assert report.per_scenario["a"]["bacc"] == pytest.approx(1.0)
    assert report.per_scenario["b"]["bacc"] is None
    assert "per_scenario" in report.to_dict()


def test_evaluate_transcripts_end_to_end():
    s1 = make_scenario(scenario_id="s1", causal={(1, 2), (2, 3)})
    s2 = make_scenario(scenario_id="s2", causal={(1, 2)})
    t1 = transcript(s1, [{"temporal": [(1, 2)]}], final_pairs=((1, 2), (2, 3)))
    t2 = transcript(s2, [{"temporal": [(2, 1)]}], final_pairs=((2, 1),))
    graph_report, pair_report = evaluate_transcripts([t1, t2], [s1, s2])
    # s1 perfect (bacc 1.0); s2 flipped direction (tp=0 fn=1 fp=1 tn=0, bacc 0)
    assert graph_report.bacc == pytest.approx(0.5)
    assert pair_report.bacc == pytest.approx((2 / 3 + 2 / 3) / 2)
    assert graph_report.level == "graph" and pair_report.level == "pair"


def test_report_text_is_aligned_and_handles_undefined():
    report = EvalReport(
        level="graph",
        bacc=None,
        f1_causal=0.5,
        f1_noncausal=0.25,
        macro_f1=0.375,
        n_scenarios=3,
        bacc_defined=0,
    )
    text = report_text([report])
    assert "n/a" in text
    assert text.splitlines()[0].startswith("level")


# ---------------------------------------------------------------------------
# trajectory analytics, hand-computed fixture


def trajectory_fixture():
    s1 = make_scenario(scenario_id="s1", causal={(1, 2), (2, 3)})
    s2 = make_scenario(scenario_id="s2", causal={(1, 2)})
    t1 = transcript(
        s1,
        rounds=[
            {"temporal": [(1, 2)], "discourse": [(2, 1)]},
            {"temporal": [(1, 2), (2, 3)], "discourse": [(1, 2)]},
        ],
        final_pairs=((1, 2), (2, 3)),
    )
    t2 = transcript(
        s2,
        rounds=[
            {"temporal": [(1, 2)], "discourse": [(1, 2)]},
            {"temporal": [(1, 2)], "discourse": [(1, 2)]},
        ],
        final_pairs=((1, 2),),
    )
    return [t1, t2], [s1, s2]


def test_trajectory_accuracies_and_overlap():
    transcripts, scenarios = trajectory_fixture()
    report = trajectory(transcripts, scenarios)
    temporal = report.experts["temporal"]
    discourse = report.experts["discourse"]

    # s1 temporal: initial {(1,2)} -> bacc (1/2 + 2/2)/2 = 0.75, final 1.0
    # s2 temporal: perfect in both rounds
    assert temporal.initial_accuracy == pytest.approx((0.75 + 1.0) / 2)
    assert temporal.final_accuracy == pytest.approx(1.0)
    assert temporal.initial_accuracy_raw == pytest.approx((0.75 + 1.0) / 2)
    assert temporal.final_accuracy_raw == pytest.approx(1.0)
    # s1 discourse: initial {(2,1)} -> sens 0, spec 1/2 -> 0.25
    assert discourse.initial_accuracy == pytest.approx((0.25 + 1.0) / 2)

    # overlap with the judge set: s1 1/2, s2 1/1 for temporal
    assert temporal.overlap_with_final == pytest.approx((0.5 + 1.0) / 2)
    # s1 discourse shares nothing with the final set
    assert discourse.overlap_with_final == pytest.approx((0.0 + 1.0) / 2)


def test_trajectory_flips_and_additions():
    transcripts, scenarios = trajectory_fixture()
    report = trajectory(transcripts, scenarios)
    temporal = report.experts["temporal"]
    discourse = report.experts["discourse"]

    # temporal gains (2,3) in s1: one correct flip, no incorrect ones
    assert (temporal.correct_flips, temporal.incorrect_flips) == (1, 0)
    assert temporal.additions == 1
    # discourse adds (1,2) and drops (2,1) in s1: two correct flips
    assert (discourse.correct_flips, discourse.incorrect_flips) == (2, 0)
    assert discourse.additions == 1
    assert temporal.per_round_flips == [
        {"round": 1, "correct_flips": 1, "incorrect_flips": 0}
    ]


def test_trajectory_conflicts():
    transcripts, scenarios = trajectory_fixture()
    report = trajectory(transcripts, scenarios)
    # final round of s1: temporal has (2,3), discourse does not; s2 agrees
    assert report.conflict_matrix["temporal"]["discourse"] == 1
    assert report.conflict_matrix["discourse"]["temporal"] == 1
    # equal totals fall back to label order
    assert report.conflict_ordering == ["discourse", "temporal"]
    assert report.n_scenarios == 2


def test_trajectory_incorrect_flip_direction():
    s1 = make_scenario(scenario_id="s1", causal={(1, 2)})
    t = transcript(
        s1,
        rounds=[{"temporal": [(1, 2)]}, {"temporal": [(2, 1)]}],
        final_pairs=(),
    )
    report = trajectory([t], [s1])
    temporal = report.experts["temporal"]
    # dropped the gold causal pair and adopted its reverse: two incorrect flips
    assert (temporal.correct_flips, temporal.incorrect_flips) == (0, 2)
    # the judge kept nothing, so overlap has denominator 0 and scores 0
    assert temporal.overlap_with_final == 0.0


def test_trajectory_requires_matching_transcripts():
    with pytest.raises(ValueError):
        trajectory([], [make_scenario()])


def test_trajectory_text_lists_experts_and_conflicts():
    transcripts, scenarios = trajectory_fixture()
    text = trajectory_text(trajectory(transcripts, scenarios))
    assert "temporal" in text and "discourse" in text
    assert "conflicts" in text


def test_trajectory_report_dict_shape():
    transcripts, scenarios = trajectory_fixture()
    payload = trajectory(transcripts, scenarios).to_dict()
    assert set(payload) == {
        "experts",
        "conflict_matrix",
        "conflict_ordering",
        "n_scenarios",
        "notes",
    }
    assert payload["experts"]["temporal"]["additions"] == 1
