"""Direction-sensitive pair metrics and debate trajectory analytics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .data import Scenario
from .debate import DebateTranscript
from .graph import CausalGraph, Pair


class UndefinedMetricError(Exception):
    """Raised when a metric has no defined value for the given counts."""


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __add__(self, other: Confusion) -> Confusion:
        return Confusion(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            tn=self.tn + other.tn,
            fn=self.fn + other.fn,
        )

    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion_from_edges(edges: Iterable[Pair], scenario: Scenario) -> Confusion:
    """Counts over the gold-labeled pairs only; a pair is predicted causal
    iff that exact direction is present."""
    edge_set = set(edges)
    tp = fp = tn = fn = 0
    for pair in scenario.gold_causal:
        if pair in edge_set:
            tp += 1
        else:
            fn += 1
    for pair in scenario.gold_noncausal:
        if pair in edge_set:
            fp += 1
        else:
            tn += 1
    return Confusion(tp=tp, fp=fp, tn=tn, fn=fn)


def confusion(pred: CausalGraph, scenario: Scenario) -> Confusion:
    return confusion_from_edges(pred.edges, scenario)


def bacc(counts: Confusion) -> float:
    """Mean of sensitivity and specificity; a class with no gold pairs drops
    out of the average rather than polluting it."""
    rates = []
    if counts.tp + counts.fn > 0:
        rates.append(counts.tp / (counts.tp + counts.fn))
    if counts.tn + counts.fp > 0:
        rates.append(counts.tn / (counts.tn + counts.fp))
    if not rates:
        raise UndefinedMetricError("no gold pairs in either class")
    return sum(rates) / len(rates)


def raw_accuracy(counts: Confusion) -> float:
    if counts.total() == 0:
        raise UndefinedMetricError("no gold pairs")
    return (counts.tp + counts.tn) / counts.total()


def _f1(tp: int, fp: int, fn: int) -> float:
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def f1_scores(counts: Confusion) -> tuple[float, float, float]:
    """(f1 with causal positive, f1 with non-causal positive, macro mean)."""
    f1_causal = _f1(counts.tp, counts.fp, counts.fn)
    f1_noncausal = _f1(counts.tn, counts.fn, counts.fp)
    return f1_causal, f1_noncausal, (f1_causal + f1_noncausal) / 2


@dataclass(frozen=True)
class EvalReport:
    level: str
    bacc: float | None
    f1_causal: float
    f1_noncausal: float
    macro_f1: float
    n_scenarios: int
    bacc_defined: int
    per_scenario: dict[str, dict[str, float | None]] | None = None

    def to_dict(self) -> dict:
        payload = {
            "level": self.level,
            "bacc": self.bacc,
            "f1_causal": self.f1_causal,
            "f1_noncausal": self.f1_noncausal,
            "macro_f1": self.macro_f1,
            "n_scenarios": self.n_scenarios,
            "bacc_defined": self.bacc_defined,
        }
        if self.per_scenario is not None:
            payload["per_scenario"] = self.per_scenario
        return payload


def aggregate(
    confusions: Mapping[str, Confusion],
    level: str,
    with_per_scenario: bool = False,
) -> EvalReport:
    """graph level: unweighted mean of per-scenario metrics, undefined values
    excluded per metric; pair level: one computation over pooled counts."""
    if level not in ("graph", "pair"):
        raise ValueError(f"unknown aggregation level {level!r}")
    if not confusions:
        raise ValueError("no scenarios to aggregate")

    if level == "pair":
        pooled = Confusion()
        for counts in confusions.values():
            pooled = pooled + counts
        f1_c, f1_nc, macro = f1_scores(pooled)
        return EvalReport(
            level="pair",
            bacc=bacc(pooled),
            f1_causal=f1_c,
            f1_noncausal=f1_nc,
            macro_f1=macro,
            n_scenarios=len(confusions),
            bacc_defined=1,
        )

    baccs: list[float] = []
    f1_cs: list[float] = []
    f1_ncs: list[float] = []
    macros: list[float] = []
    per_scenario: dict[str, dict[str, float | None]] = {}
    for scenario_id in sorted(confusions):
        counts = confusions[scenario_id]
        try:
            scenario_bacc: float | None = bacc(counts)
            baccs.append(scenario_bacc)
        except UndefinedMetricError:
            scenario_bacc = None
        f1_c, f1_nc, macro = f1_scores(counts)
        f1_cs.append(f1_c)
        f1_ncs.append(f1_nc)
        macros.append(macro)
        per_scenario[scenario_id] = {
            "bacc": scenario_bacc,
            "f1_causal": f1_c,
            "f1_noncausal": f1_nc,
            "macro_f1": macro,
        }
    return EvalReport(
        level="graph",
        bacc=sum(baccs) / len(baccs) if baccs else None,
        f1_causal=sum(f1_cs) / len(f1_cs),
        f1_noncausal=sum(f1_ncs) / len(f1_ncs),
        macro_f1=sum(macros) / len(macros),
        n_scenarios=len(confusions),
        bacc_defined=len(baccs),
        per_scenario=per_scenario if with_per_scenario else None,
    )


def evaluate_transcripts(
    transcripts: list[DebateTranscript],
    scenarios: list[Scenario],
    with_per_scenario: bool = False,
) -> tuple[EvalReport, EvalReport]:
    """(graph-level, pair-level) reports for a run against its gold scenarios."""
    by_id = {s.id: s for s in scenarios}
    confusions = {
        t.scenario_id: confusion(t.final_graph, by_id[t.scenario_id])
        for t in transcripts
        if t.scenario_id in by_id
    }
    return (
        aggregate(confusions, "graph", with_per_scenario=with_per_scenario),
        aggregate(confusions, "pair"),
    )


def report_text(reports: Iterable[EvalReport]) -> str:
    """Aligned text table over both aggregation levels."""
    header = f"{'level':<7}{'n':>4}  {'BAcc':>7}  {'F1:C':>7}  {'F1:NC':>7}  {'MacroF1':>7}"
    lines = [header]
    for report in reports:
        bacc_text = f"{report.bacc:.4f}" if report.bacc is not None else "n/a"
        lines.append(
            f"{report.level:<7}{report.n_scenarios:>4}  {bacc_text:>7}  "
            f"{report.f1_causal:>7.4f}  {report.f1_noncausal:>7.4f}  {report.macro_f1:>7.4f}"
        )
    return "\n".join(lines) + "\n"


@dataclass
class ExpertTrajectory:
    label: str
    initial_accuracy: float | None = None
    initial_accuracy_raw: float | None = None
    final_accuracy: float | None = None
    final_accuracy_raw: float | None = None
    overlap_with_final: float = 0.0
    correct_flips: int = 0
    incorrect_flips: int = 0
    additions: int = 0
    per_round_flips: list[dict[str, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "initial_accuracy": self.initial_accuracy,
            "initial_accuracy_raw": self.initial_accuracy_raw,
            "final_accuracy": self.final_accuracy,
            "final_accuracy_raw": self.final_accuracy_raw,
            "overlap_with_final": self.overlap_with_final,
            "correct_flips": self.correct_flips,
            "incorrect_flips": self.incorrect_flips,
            "additions": self.additions,
            "per_round_flips": self.per_round_flips,
        }


@dataclass
class TrajectoryReport:
    experts: dict[str, ExpertTrajectory]
    conflict_matrix: dict[str, dict[str, int]]
    conflict_ordering: list[str]
    n_scenarios: int

    def to_dict(self) -> dict:
        return {
            "experts": {label: t.to_dict() for label, t in sorted(self.experts.items())},
            "conflict_matrix": self.conflict_matrix,
            "conflict_ordering": self.conflict_ordering,
            "n_scenarios": self.n_scenarios,
            "notes": {
                "accuracy": "initial/final accuracies are balanced; *_raw are plain accuracy",
                "overlap_denominator": "size of the judge-accepted final pair set",
            },
        }


def _flip_counts(
    before: set[Pair], after: set[Pair], scenario: Scenario
) -> tuple[int, int]:
    """(correct_flips, incorrect_flips) over the gold-labeled pairs."""
    correct = incorrect = 0
    for pair in scenario.labeled_pairs():
        gold_label = pair in scenario.gold_causal
        label_before = pair in before
        label_after = pair in after
        if label_before == label_after:
            continue
        if label_after == gold_label:
            correct += 1
        else:
            incorrect += 1
    return correct, incorrect


def trajectory(
    transcripts: list[DebateTranscript],
    scenarios: list[Scenario],
) -> TrajectoryReport:
    """How each expert's proposals moved over the debate, against gold."""
    by_id = {s.id: s for s in scenarios}
    usable = [t for t in transcripts if t.scenario_id in by_id and t.rounds]
    if not usable:
        raise ValueError("no transcripts with matching scenarios")
    labels = sorted({label for t in usable for label in t.rounds[0]})

    experts: dict[str, ExpertTrajectory] = {}
    conflict: dict[str, dict[str, int]] = {
        a: {b: 0 for b in labels} for a in labels
    }
    for label in labels:
        initial_baccs: list[float] = []
        initial_raws: list[float] = []
        final_baccs: list[float] = []
        final_raws: list[float] = []
        overlaps: list[float] = []
        correct_flips = incorrect_flips = additions = 0
        round_flips: dict[int, dict[str, int]] = {}
        for t in usable:
            scenario = by_id[t.scenario_id]
            if label not in t.rounds[0]:
                continue
            initial = set(t.rounds[0][label].pairs)
            final = set(t.rounds[-1][label].pairs)
            for counts_list, raw_list, pair_set in (
                (initial_baccs, initial_raws, initial),
                (final_baccs, final_raws, final),
            ):
                counts = confusion_from_edges(pair_set, scenario)
                try:
                    counts_list.append(bacc(counts))
                except UndefinedMetricError:
                    pass
                try:
                    raw_list.append(raw_accuracy(counts))
                except UndefinedMetricError:
                    pass
            judge_final = set(t.final_pairs)
            overlaps.append(len(initial & judge_final) / len(judge_final) if judge_final else 0.0)
            correct, incorrect = _flip_counts(initial, final, scenario)
            correct_flips += correct
            incorrect_flips += incorrect
            additions += len(final - initial)
            for round_index in range(1, len(t.rounds)):
                if label not in t.rounds[round_index]:
                    continue
                before = set(t.rounds[round_index - 1][label].pairs)
                after = set(t.rounds[round_index][label].pairs)
                step_correct, step_incorrect = _flip_counts(before, after, scenario)
                bucket = round_flips.setdefault(
                    round_index, {"round": round_index, "correct_flips": 0, "incorrect_flips": 0}
                )
                bucket["correct_flips"] += step_correct
                bucket["incorrect_flips"] += step_incorrect
        experts[label] = ExpertTrajectory(
            label=label,
            initial_accuracy=sum(initial_baccs) / len(initial_baccs) if initial_baccs else None,
            initial_accuracy_raw=sum(initial_raws) / len(initial_raws) if initial_raws else None,
            final_accuracy=sum(final_baccs) / len(final_baccs) if final_baccs else None,
            final_accuracy_raw=sum(final_raws) / len(final_raws) if final_raws else None,
            overlap_with_final=sum(overlaps) / len(overlaps) if overlaps else 0.0,
            correct_flips=correct_flips,
            incorrect_flips=incorrect_flips,
            additions=additions,
            per_round_flips=[round_flips[r] for r in sorted(round_flips)],
        )

    for t in usable:
        scenario = by_id[t.scenario_id]
        finals = {
            label: set(t.rounds[-1][label].pairs) for label in labels if label in t.rounds[-1]
        }
        for i, a in enumerate(labels):
            for b in labels[i + 1 :]:
                if a not in finals or b not in finals:
                    continue
                disagreements = sum(
                    1
                    for pair in scenario.labeled_pairs()
                    if (pair in finals[a]) != (pair in finals[b])
                )
                conflict[a][b] += disagreements
                conflict[b][a] += disagreements

    ordering = sorted(labels, key=lambda lab: (-sum(conflict[lab].values()), lab))
    return TrajectoryReport(
        experts=experts,
        conflict_matrix=conflict,
        conflict_ordering=ordering,
        n_scenarios=len(usable),
    )


def trajectory_text(report: TrajectoryReport) -> str:
    def fmt(value: float | None) -> str:
        return f"{value:.4f}" if value is not None else "n/a"

    lines = [
        f"{'expert':<16}{'initBAcc':>9}{'finBAcc':>9}{'overlap':>9}"
        f"{'flips+':>8}{'flips-':>8}{'added':>7}"
    ]
    for label in sorted(report.experts):
        t = report.experts[label]
        lines.append(
            f"{label:<16}{fmt(t.initial_accuracy):>9}{fmt(t.final_accuracy):>9}"
            f"{t.overlap_with_final:>9.4f}{t.correct_flips:>8}{t.incorrect_flips:>8}{t.additions:>7}"
        )
    lines.append("")
    lines.append("conflicts (labeled pairs where final proposals disagree):")
    for label in report.conflict_ordering:
        total = sum(report.conflict_matrix[label].values())
        lines.append(f"  {label:<16}{total}")
    return "\n".join(lines) + "\n"
