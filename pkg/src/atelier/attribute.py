"""Naming clusters by their majority artist, style or 50-year period."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .corpus import TASKS, Corpus

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class ClusterAttribution:
    cluster_id: int
    task: str
    label: str
    majority_fraction: float
    labeled_count: int
    size: int

    def to_dict(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "task": self.task,
            "label": self.label,
            "fraction": self.majority_fraction,
            "labeled": self.labeled_count,
            "size": self.size,
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "ClusterAttribution":
        return cls(
            cluster_id=int(obj["cluster_id"]),
            task=str(obj["task"]),
            label=str(obj["label"]),
            majority_fraction=float(obj["fraction"]),
            labeled_count=int(obj.get("labeled", obj["size"])),
            size=int(obj["size"]),
        )


def _check_task(task: str) -> None:
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")


def label_distribution(
    cluster: Iterable[str], task: str, corpus: Corpus, dedupe_paintings: bool = False
) -> Counter:
    """Count task labels over the cluster's faces.

    Faces are the counting unit unless ``dedupe_paintings`` is set, in
    which case each painting counts once however many of its faces the
    cluster holds. Undated paintings are skipped for the year task.
    """
    _check_task(task)
    counts: Counter = Counter()
    seen = set()
    for face_id in cluster:
        rec = corpus.record_for_face(face_id)
        if dedupe_paintings:
            if rec.painting_id in seen:
                continue
            seen.add(rec.painting_id)
        label = corpus.face_label(face_id, task)
        if label is not None:
            counts[label] += 1
    return counts


def attribute_cluster(
    cluster: Sequence[str],
    task: str,
    corpus: Corpus,
    threshold: float = DEFAULT_THRESHOLD,
    cluster_id: int = 0,
    dedupe_paintings: bool = False,
) -> Optional[ClusterAttribution]:
    """Strict-majority label of a cluster, or ``None`` when there is none.

    The winning label needs a share of the labeled members strictly above
    ``threshold`` and must beat every other label outright.
    """
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    counts = label_distribution(cluster, task, corpus, dedupe_paintings)
    labeled = sum(counts.values())
    if labeled == 0:
        return None
    ranked = counts.most_common(2)
    label, top = ranked[0]
    if len(ranked) > 1 and ranked[1][1] == top:
        return None
    fraction = top / labeled
    if not fraction > threshold:
        return None
    size = len(cluster)
    if dedupe_paintings:
        size = len({corpus.record_for_face(f).painting_id for f in cluster})
    return ClusterAttribution(cluster_id, task, label, fraction, labeled, size)


def attribute_clusters(
    clusters: Sequence[Sequence[str]],
    task: str,
    corpus: Corpus,
    threshold: float = DEFAULT_THRESHOLD,
    dedupe_paintings: bool = False,
) -> list[ClusterAttribution]:
    out = []
    for k, members in enumerate(clusters):
        att = attribute_cluster(members, task, corpus, threshold, k, dedupe_paintings)
        if att is not None:
            out.append(att)
    return out


def merge_by_label(
    attributions: Iterable[ClusterAttribution], clusters: Sequence[Sequence[str]]
) -> dict[str, list[str]]:
    """Pool the members of clusters that received the same label.

    Groups keep the order of first appearance; members keep cluster order.
    """
    merged: dict[str, list[str]] = {}
    task = None
    for att in attributions:
        if task is None:
            task = att.task
        elif att.task != task:
            raise ValueError(f"cannot merge attributions across tasks ({task!r} and {att.task!r})")
        merged.setdefault(att.label, []).extend(clusters[att.cluster_id])
    return merged
