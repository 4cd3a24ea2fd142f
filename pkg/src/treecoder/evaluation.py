"""Micro/macro precision, recall and F1, overall and per ontology level.

Predictions and gold labels are mappings ``doc_id -> set of codes``; a
document missing from either side counts as an empty set. Every ratio with a
zero denominator is 0.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Mapping, Set

from treecoder.ontology import Ontology, level_name

Labels = Mapping[str, Set[str]]

CLASS_SET_POLICIES = ("gold", "union")


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class Triple:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class Support:
    n_docs: int
    n_gold_pairs: int
    n_pred_pairs: int
    n_classes: int


@dataclass(frozen=True)
class MetricsReport:
    micro: Triple
    macro: Triple
    support: Support

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LevelRow:
    level: int
    level_name: str
    micro: Triple
    macro: Triple
    dropped_gold: int
    support: Support


@dataclass(frozen=True)
class LevelReport:
    rows: list[LevelRow] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows]}


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


def _triple(tp: int, fp: int, fn: int) -> Triple:
    p = _ratio(tp, tp + fp)
    r = _ratio(tp, tp + fn)
    return Triple(p, r, _f1(p, r))


def micro_metrics(gold: Labels, pred: Labels) -> Triple:
    tp = fp = fn = 0
    for doc in set(gold) | set(pred):
        g = gold.get(doc, frozenset())
        p = pred.get(doc, frozenset())
        hits = len(g & p)
        tp += hits
        fp += len(p) - hits
        fn += len(g) - hits
    return _triple(tp, fp, fn)


def class_set(gold: Labels, pred: Labels, policy: str = "gold") -> set[str]:
    if policy not in CLASS_SET_POLICIES:
        raise MetricsError(f"class_set policy must be one of {CLASS_SET_POLICIES}, got {policy!r}")
    classes = set().union(*gold.values()) if gold else set()
    if policy == "union" and pred:
        classes |= set().union(*pred.values())
    return classes


def per_class_metrics(gold: Labels, pred: Labels, classes: Set[str]) -> dict[str, Triple]:
    counts = {c: [0, 0, 0] for c in classes}
    for doc in set(gold) | set(pred):
        g = gold.get(doc, frozenset())
        p = pred.get(doc, frozenset())
        for c in g & p:
            if c in counts:
                counts[c][0] += 1
        for c in p - g:
            if c in counts:
                counts[c][1] += 1
        for c in g - p:
            if c in counts:
                counts[c][2] += 1
    return {c: _triple(*counts[c]) for c in sorted(classes)}


def macro_metrics(gold: Labels, pred: Labels, policy: str = "gold") -> Triple:
    """Unweighted mean of per-class precision, recall and F1."""
    classes = class_set(gold, pred, policy)
    if not classes:
        raise MetricsError("macro metrics need a non-empty class set")
    per_class = per_class_metrics(gold, pred, classes).values()
    n = len(classes)
    return Triple(
        sum(t.precision for t in per_class) / n,
        sum(t.recall for t in per_class) / n,
        sum(t.f1 for t in per_class) / n,
    )


def _support(gold: Labels, pred: Labels, n_classes: int) -> Support:
    return Support(
        n_docs=len(set(gold) | set(pred)),
        n_gold_pairs=sum(len(v) for v in gold.values()),
        n_pred_pairs=sum(len(v) for v in pred.values()),
        n_classes=n_classes,
    )


def evaluate(gold: Labels, pred: Labels, policy: str = "gold") -> MetricsReport:
    return MetricsReport(
        micro=micro_metrics(gold, pred),
        macro=macro_metrics(gold, pred, policy),
        support=_support(gold, pred, len(class_set(gold, pred, policy))),
    )


def project_to_level(labels: Set[str], level: int, ontology: Ontology) -> set[str]:
    """Map codes to their ancestor at ``level``; codes above that level are dropped."""
    out = set()
    for code in labels:
        anc = ontology.ancestor_at_level(code, level)
        if anc is not None:
            out.add(anc)
    return out


def level_analysis(
    gold: Labels,
    traces: Mapping[str, Mapping[int, Set[str]]],
    ontology: Ontology,
    policy: str = "gold",
    levels: range | None = None,
) -> LevelReport:
    """Cumulative per-level metrics from search traces.

    At level L the prediction for a document is the set of level-L codes its
    search judged relevant, and gold is the gold codes projected to level L.
    A level with no gold classes gets macro scores of 0.
    """
    missing = set(gold) ^ set(traces)
    if missing:
        raise MetricsError(f"trace/gold document mismatch: {sorted(missing)[:5]} ...")
    rows = []
    for level in levels or range(1, ontology.max_level + 1):
        g = {doc: project_to_level(codes, level, ontology) for doc, codes in gold.items()}
        p = {doc: set(trace.get(level, ())) for doc, trace in traces.items()}
        dropped = sum(1 for codes in gold.values() for c in codes if ontology.level(c) < level)
        classes = class_set(g, p, policy)
        macro = macro_metrics(g, p, policy) if classes else Triple(0.0, 0.0, 0.0)
        rows.append(
            LevelRow(
                level=level,
                level_name=level_name(level),
                micro=micro_metrics(g, p),
                macro=macro,
                dropped_gold=dropped,
                support=_support(g, p, len(classes)),
            )
        )
    return LevelReport(rows)
