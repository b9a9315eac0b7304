"""Per-cluster confusion metrics, inter-cluster purity / NMI / Rand index, and task reports."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .attribute import ClusterAttribution, merge_by_label
from .corpus import Corpus
from .dbscan import ClusteringResult

CONVENTIONS = ("paper", "standard")

CONVENTION_NOTE = {
    "paper": "precision = TP/(TP+FN), recall = TP/(TP+FP); swapped relative to the "
    "standard definitions, F-measure unaffected",
    "standard": "precision = TP/(TP+FP), recall = TP/(TP+FN)",
}


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError(f"negative count in {self}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ClusterMetrics:
    accuracy: float
    precision: float
    recall: float
    f_measure: float
    convention: str = "paper"

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f_measure": self.f_measure,
        }


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def f_measure(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall, 0 when both are 0."""
    s = precision + recall
    return 2.0 * precision * recall / s if s else 0.0


def confusion_counts(
    cluster: Iterable[str], label: str, task: str, universe: Iterable[str], corpus: Corpus
) -> ConfusionCounts:
    """TP/FP/TN/FN of one cluster against the faces carrying ``label`` in ``universe``."""
    if not label:
        raise ValueError("label must be non-empty")
    universe = set(universe)
    members = set(cluster)
    outside = members - universe
    if outside:
        raise ValueError(f"{len(outside)} cluster member(s) not in the universe, e.g. {sorted(outside)[0]!r}")
    carriers = {f for f in universe if corpus.face_label(f, task) == label}
    tp = len(members & carriers)
    fp = len(members) - tp
    fn = len(carriers) - tp
    tn = len(universe) - tp - fp - fn
    return ConfusionCounts(tp, fp, tn, fn)


def cluster_metrics(c: ConfusionCounts, convention: str = "paper") -> ClusterMetrics:
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")
    accuracy = _ratio(c.tp + c.tn, c.total)
    of_cluster = _ratio(c.tp, c.tp + c.fp)
    of_label = _ratio(c.tp, c.tp + c.fn)
    if convention == "paper":
        precision, recall = of_label, of_cluster
    else:
        precision, recall = of_cluster, of_label
    return ClusterMetrics(accuracy, precision, recall, f_measure(precision, recall), convention)


def contingency(
    clusters: Sequence[Iterable[Hashable]], labels: Mapping[Hashable, Hashable]
) -> np.ndarray:
    """Cluster-by-class count matrix over all clustered ids.

    Classes are columns in order of first appearance.
    """
    classes: dict = {}
    rows = []
    seen = set()
    for members in clusters:
        row: dict = {}
        for item in members:
            if item in seen:
                raise ValueError(f"id {item!r} appears in more than one cluster")
            seen.add(item)
            try:
                lab = labels[item]
            except KeyError:
                raise ValueError(f"id {item!r} has no label") from None
            j = classes.setdefault(lab, len(classes))
            row[j] = row.get(j, 0) + 1
        rows.append(row)
    table = np.zeros((len(rows), len(classes)), dtype=np.int64)
    for k, row in enumerate(rows):
        for j, n in row.items():
            table[k, j] = n
    if table.sum() == 0:
        raise ValueError("no clustered ids")
    return table


def purity(clusters, labels) -> float:
    table = contingency(clusters, labels)
    return int(table.max(axis=1, initial=0).sum()) / int(table.sum())


def _entropy(sizes: np.ndarray, n: int) -> float:
    p = sizes[sizes > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(clusters, labels) -> float:
    """Mutual information over the mean of the two entropies (natural log)."""
    table = contingency(clusters, labels)
    n = int(table.sum())
    a = table.sum(axis=1)
    b = table.sum(axis=0)
    nz = table > 0
    # identical partitions, including the zero-entropy single-block case
    if np.all(nz.sum(axis=1)[a > 0] == 1) and np.all(nz.sum(axis=0) == 1):
        return 1.0
    h_omega = _entropy(a, n)
    h_phi = _entropy(b, n)
    if h_omega + h_phi == 0:
        return 1.0
    k_idx, j_idx = np.nonzero(nz)
    nkj = table[k_idx, j_idx].astype(np.float64)
    mi = float(np.sum((nkj / n) * np.log(n * nkj / (a[k_idx] * b[j_idx]))))
    return min(1.0, max(0.0, mi / ((h_omega + h_phi) / 2.0)))


def _pairs(x) -> int:
    return int(sum(int(v) * (int(v) - 1) // 2 for v in np.ravel(x)))


def pair_counts(clusters, labels) -> tuple[int, int, int, int]:
    """``(tp, fp, tn, fn)`` over unordered id pairs (same cluster vs. same label)."""
    table = contingency(clusters, labels)
    n = int(table.sum())
    tp = _pairs(table)
    fp = _pairs(table.sum(axis=1)) - tp
    fn = _pairs(table.sum(axis=0)) - tp
    tn = n * (n - 1) // 2 - tp - fp - fn
    return tp, fp, tn, fn


def rand_index(clusters, labels) -> float:
    tp, fp, tn, fn = pair_counts(clusters, labels)
    total = tp + fp + tn + fn
    if total == 0:
        raise ValueError("rand index needs at least two clustered ids")
    return (tp + tn) / total


@dataclass(frozen=True)
class ReportRow:
    cluster_id: int
    label: str
    size: int
    counts: ConfusionCounts
    metrics: ClusterMetrics


@dataclass(frozen=True)
class TaskReport:
    task: str
    convention: str
    rows: tuple[ReportRow, ...]
    n_clusters_total: int
    n_clusters_attributed: int
    n_label_groups: int
    accuracy: Optional[float]
    purity: Optional[float]
    nmi: Optional[float]
    rand_index: Optional[float]
    n_faces: int
    n_faces_evaluated: int

    @property
    def averages(self) -> Optional[dict]:
        if not self.rows:
            return None
        cols = ("accuracy", "precision", "recall", "f_measure")
        return {c: float(np.mean([getattr(r.metrics, c) for r in self.rows])) for c in cols}

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "convention": self.convention,
            "convention_note": CONVENTION_NOTE[self.convention],
            "n_clusters_total": self.n_clusters_total,
            "n_clusters_attributed": self.n_clusters_attributed,
            "n_label_groups": self.n_label_groups,
            "n_faces": self.n_faces,
            "n_faces_evaluated": self.n_faces_evaluated,
            "rows": [
                {
                    "cluster_id": r.cluster_id,
                    "label": r.label,
                    "size": r.size,
                    "tp": r.counts.tp,
                    "fp": r.counts.fp,
                    "tn": r.counts.tn,
                    "fn": r.counts.fn,
                    **r.metrics.to_dict(),
                }
                for r in self.rows
            ],
            "averages": self.averages,
            "summary": {
                "n_clusters": self.n_clusters_attributed,
                "accuracy": self.accuracy,
                "purity": self.purity,
                "nmi": self.nmi,
                "rand_index": self.rand_index,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def to_csv(self) -> str:
        def fmt(x):
            return "" if x is None else f"{x:.6f}"

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "accuracy", "precision", "recall", "f_measure"])
        for r in self.rows:
            m = r.metrics
            w.writerow([r.label, fmt(m.accuracy), fmt(m.precision), fmt(m.recall), fmt(m.f_measure)])
        avg = self.averages
        if avg:
            w.writerow(["average"] + [fmt(avg[c]) for c in ("accuracy", "precision", "recall", "f_measure")])
        w.writerow([])
        w.writerow(["task", "n_clusters", "n_clusters_total", "accuracy", "purity", "nmi", "rand_index"])
        w.writerow([
            self.task, self.n_clusters_attributed, self.n_clusters_total,
            fmt(self.accuracy), fmt(self.purity), fmt(self.nmi), fmt(self.rand_index),
        ])
        return buf.getvalue()


def build_task_report(
    clustering: ClusteringResult,
    attributions: Sequence[ClusterAttribution],
    corpus: Corpus,
    task: str,
    convention: str = "paper",
    universe: Optional[Iterable[str]] = None,
    include_noise: bool = False,
) -> TaskReport:
    """Assemble per-cluster rows and task-level scores for one task.

    ``universe`` (the population for TN and FN) defaults to every face in
    the clustering, noise included. Task accuracy is the mean confusion
    accuracy over label groups after pooling same-label clusters.
    Purity, NMI and Rand index are computed over clustered faces that carry
    a label for the task; ``include_noise`` adds each noise face as its own
    singleton cluster.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    universe = list(clustering.ids if universe is None else universe)
    uni_set = set(universe)
    clusters = clustering.clusters

    rows = []
    for att in attributions:
        if att.task != task:
            raise ValueError(f"attribution for task {att.task!r} in a {task!r} report")
        members = clusters[att.cluster_id]
        counts = confusion_counts(members, att.label, task, uni_set, corpus)
        rows.append(ReportRow(att.cluster_id, att.label, len(members), counts, cluster_metrics(counts, convention)))

    groups = merge_by_label(attributions, clusters)
    group_acc = [
        cluster_metrics(confusion_counts(members, label, task, uni_set, corpus), convention).accuracy
        for label, members in groups.items()
    ]
    accuracy = float(np.mean(group_acc)) if group_acc else None

    eval_clusters = [list(c) for c in clusters]
    if include_noise:
        eval_clusters += [[f] for f in clustering.noise]
    labels = corpus.label_map((f for c in eval_clusters for f in c), task)
    eval_clusters = [[f for f in c if f in labels] for c in eval_clusters]
    eval_clusters = [c for c in eval_clusters if c]
    n_eval = sum(len(c) for c in eval_clusters)
    pur = nm = ri = None
    if n_eval:
        pur = purity(eval_clusters, labels)
        nm = nmi(eval_clusters, labels)
        if n_eval >= 2:
            ri = rand_index(eval_clusters, labels)

    return TaskReport(
        task=task,
        convention=convention,
        rows=tuple(rows),
        n_clusters_total=len(clusters),
        n_clusters_attributed=len(rows),
        n_label_groups=len(groups),
        accuracy=accuracy,
        purity=pur,
        nmi=nm,
        rand_index=ri,
        n_faces=len(universe),
        n_faces_evaluated=n_eval,
    )
