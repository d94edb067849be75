"""Pairwise precision / recall / F1 of match sets against a ground truth."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .kb import GroundTruth, KnowledgeBase
from .matching import RULES, MatcherConfig, MatchSet, build_stage, match_graph


def f1_score(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass
class EvalReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    per_rule: dict[str, dict] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def precision(self) -> float:
        found = self.true_positives + self.false_positives
        return 100.0 * self.true_positives / found if found else 0.0

    @property
    def recall(self) -> float:
        truth = self.true_positives + self.false_negatives
        return 100.0 * self.true_positives / truth if truth else 0.0

    @property
    def f1(self) -> float:
        return f1_score(self.precision, self.recall)

    def as_dict(self) -> dict:
        return {
            "precision": round(self.precision, 2),
            "recall": round(self.recall, 2),
            "f1": round(self.f1, 2),
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "per_rule": self.per_rule,
            "timings": {k: round(v, 4) for k, v in self.timings.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    def table(self, title: str = "") -> str:
        lines = [title] if title else []
        lines.append(f"  precision {self.precision:7.2f}   recall {self.recall:7.2f}   F1 {self.f1:7.2f}")
        lines.append(f"  TP {self.true_positives}  FP {self.false_positives}  FN {self.false_negatives}")
        for rule, d in self.per_rule.items():
            lines.append(f"  {rule}: {d['matches']} matches, {d['true_positives']} correct, "
                         f"recall share {d['recall_share']:.2f}")
        return "\n".join(lines)


def score_matches(matches: MatchSet, ground_truth: GroundTruth, timings: dict | None = None,
                  partial_truth: bool = False) -> EvalReport:
    """Score ``matches`` pairwise.

    With ``partial_truth`` the ground truth is taken to cover only some entity
    types, so a match whose two ends are both absent from it is ignored
    instead of being counted as a false positive.
    """
    truth = ground_truth.pairs
    found = matches.pairs()
    by_rule = matches.by_rule()
    if partial_truth:
        left = {a for a, _ in truth}
        right = {b for _, b in truth}
        found = {(a, b) for a, b in found if a in left or b in right}
        by_rule = {r: [m for m in ms if m.id1 in left or m.id2 in right] for r, ms in by_rule.items()}
    tp = len(found & truth)
    per_rule = {}
    for rule, ms in by_rule.items():
        correct = sum(1 for m in ms if (m.id1, m.id2) in truth)
        per_rule[rule] = {
            "matches": len(ms),
            "true_positives": correct,
            "recall_share": round(100.0 * correct / len(truth), 2) if truth else 0.0,
        }
    return EvalReport(tp, len(found) - tp, len(truth) - tp, per_rule, dict(timings or {}))


ABLATIONS = {
    "full": (RULES, True),
    "R1": (("R1",), True),
    "R2": (("R2",), True),
    "R3": (("R3",), True),
    "no_R4": (RULES, False),
    "no_neighbors": (("R1", "R2"), True),
}


def rule_ablation(kb1: KnowledgeBase, kb2: KnowledgeBase, config: MatcherConfig, ground_truth: GroundTruth,
                  workers: int = 1, partial_truth: bool = False) -> dict[str, EvalReport]:
    """Each rule alone, the pipeline without R4 and the pipeline without R3.

    The graph is built once and shared by every variant.
    """
    timings: dict[str, float] = {}
    _, _, _, graph = build_stage(kb1, kb2, config, workers, timings)
    out = {}
    for name, (rules, recip) in ABLATIONS.items():
        t = dict(timings)
        ms = match_graph(graph, kb1, kb2, config.theta, rules, recip, workers, t)
        out[name] = score_matches(ms, ground_truth, t, partial_truth)
    return out
