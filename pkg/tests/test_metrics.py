import math

import pytest
from hypothesis import given, settings, strategies as st

from atelier.attribute import ClusterAttribution, attribute_clusters
from atelier.corpus import Corpus, PaintingRecord
from atelier.dbscan import ClusteringResult
from atelier.metrics import (
    ConfusionCounts,
    build_task_report,
    cluster_metrics,
    confusion_counts,
    f_measure,
    nmi,
    pair_counts,
    purity,
    rand_index,
)
from oracles import oracle_nmi, oracle_pair_counts, oracle_purity, oracle_rand


def artist_corpus(artists):
    return Corpus(PaintingRecord(f"p{i}", a, "t", "s", None, "x") for i, a in enumerate(artists))


def test_confusion_counts_example():
    # universe of 10 faces, 5 carry "r"; the cluster holds 4 faces, 3 of them "r"
    artists = ["r", "r", "r", "x", "r", "r", "y", "y", "y", "y"]
    c = artist_corpus(artists)
    universe = [f"p{i}__0" for i in range(10)]
    counts = confusion_counts(universe[:4], "r", "artist", universe, c)
    assert counts == ConfusionCounts(tp=3, fp=1, tn=4, fn=2)
    assert counts.tp + counts.fp == 4 and counts.tp + counts.fn == 5


def test_confusion_counts_perfect_and_disjoint():
    c = artist_corpus(["r"] * 6)
    u = [f"p{i}__0" for i in range(6)]
    assert confusion_counts(u, "r", "artist", u, c) == ConfusionCounts(6, 0, 0, 0)
    assert confusion_counts(u[:2], "q", "artist", u, c).tp == 0
    with pytest.raises(ValueError):
        confusion_counts(["p9__0"], "r", "artist", u, c)


def test_cluster_metrics_paper_convention():
    m = cluster_metrics(ConfusionCounts(tp=3, fp=1, tn=4, fn=2), "paper")
    assert m.accuracy == pytest.approx(0.7)
    assert m.precision == pytest.approx(0.6)
    assert m.recall == pytest.approx(0.75)
    assert m.f_measure == pytest.approx(2 / 3)


def test_cluster_metrics_standard_convention_swaps():
    c = ConfusionCounts(tp=3, fp=1, tn=4, fn=2)
    p, s = cluster_metrics(c, "paper"), cluster_metrics(c, "standard")
    assert (s.precision, s.recall) == (p.recall, p.precision)
    assert s.f_measure == p.f_measure and s.accuracy == p.accuracy
    with pytest.raises(ValueError):
        cluster_metrics(c, "other")


def test_zero_overlap():
    m = cluster_metrics(ConfusionCounts(0, 4, 3, 3))
    assert m.precision == m.recall == m.f_measure == 0.0
    assert f_measure(0.0, 0.0) == 0.0


def test_f_from_table_row():
    assert f_measure(0.949, 0.691) == pytest.approx(0.800, abs=1e-3)


@given(st.floats(0, 1), st.floats(0, 1))
def test_f_measure_symmetric_and_bounded(p, r):
    f = f_measure(p, r)
    assert f == f_measure(r, p)
    assert 0 <= f <= max(p, r) + 1e-12
    if p > 0 and r > 0:
        assert f == pytest.approx(2 / (1 / p + 1 / r))


LAB = {"a1": "a", "a2": "a", "b1": "b", "b2": "b", "b3": "b"}


def test_purity_examples():
    assert purity([["a1", "a2", "b1"], ["b2", "b3"]], LAB) == pytest.approx(0.8)
    assert purity([["a1", "a2"], ["b1", "b2", "b3"]], LAB) == 1.0
    assert purity([[k] for k in LAB], LAB) == 1.0
    with pytest.raises(ValueError):
        purity([], LAB)


def test_nmi_examples():
    assert nmi([["a1", "a2"], ["b1", "b2", "b3"]], LAB) == 1.0
    assert nmi([list(LAB)], LAB) == 0.0
    v = nmi([["a1", "a2", "b1"], ["b2", "b3"]], LAB)
    assert 0 < v < 1
    assert v == pytest.approx(oracle_nmi([["a1", "a2", "b1"], ["b2", "b3"]], LAB), abs=1e-12)
    assert nmi([["a1", "a2"]], LAB) == 1.0


def test_rand_index_example():
    labels = {1: "a", 2: "a", 3: "b", 4: "b", 5: "b"}
    clusters = [[1, 2, 3], [4, 5]]
    assert pair_counts(clusters, labels) == (2, 2, 4, 2)
    assert rand_index(clusters, labels) == pytest.approx(0.6)
    assert rand_index([[1, 2], [3, 4, 5]], labels) == 1.0
    distinct = {i: str(i) for i in range(6)}
    assert rand_index([[i] for i in range(6)], distinct) == 1.0
    with pytest.raises(ValueError):
        rand_index([[1]], labels)


def test_unlabeled_or_repeated_ids_rejected():
    with pytest.raises(ValueError):
        purity([["a1", "zz"]], LAB)
    with pytest.raises(ValueError):
        nmi([["a1"], ["a1"]], LAB)


@st.composite
def partitions(draw, max_n=60):
    n = draw(st.integers(1, max_n))
    k = draw(st.integers(1, n))
    n_labels = draw(st.integers(1, 6))
    assign = draw(st.lists(st.integers(0, k - 1), min_size=n, max_size=n))
    labs = draw(st.lists(st.integers(0, n_labels - 1), min_size=n, max_size=n))
    clusters = [[i for i in range(n) if assign[i] == c] for c in range(k)]
    clusters = [c for c in clusters if c]
    return clusters, {i: f"L{labs[i]}" for i in range(n)}


@settings(max_examples=150, deadline=None)
@given(partitions())
def test_metrics_match_oracles(part):
    clusters, labels = part
    assert purity(clusters, labels) == pytest.approx(oracle_purity(clusters, labels), abs=1e-12)
    assert nmi(clusters, labels) == pytest.approx(oracle_nmi(clusters, labels), abs=1e-9)
    if len(labels) >= 2:
        assert pair_counts(clusters, labels) == oracle_pair_counts(clusters, labels)
        assert rand_index(clusters, labels) == pytest.approx(oracle_rand(clusters, labels), abs=1e-12)
    for v in (purity(clusters, labels), nmi(clusters, labels)):
        assert 0 <= v <= 1


def _swap(clusters, labels):
    """Exchange the roles of the two partitions."""
    by_label = {}
    for i, lab in labels.items():
        by_label.setdefault(lab, []).append(i)
    cluster_of = {i: f"C{k}" for k, c in enumerate(clusters) for i in c}
    return list(by_label.values()), cluster_of


@settings(max_examples=100, deadline=None)
@given(partitions())
def test_nmi_and_ri_symmetric(part):
    clusters, labels = part
    c2, l2 = _swap(clusters, labels)
    assert nmi(clusters, labels) == pytest.approx(nmi(c2, l2), abs=1e-12)
    if len(labels) >= 2:
        assert rand_index(clusters, labels) == pytest.approx(rand_index(c2, l2), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(partitions(), st.randoms())
def test_relabeling_invariance(part, rnd):
    clusters, labels = part
    names = sorted(set(labels.values()))
    perm = names[:]
    rnd.shuffle(perm)
    renamed = {i: "X" + perm[names.index(lab)] for i, lab in labels.items()}
    assert purity(clusters, renamed) == purity(clusters, labels)
    assert nmi(clusters, renamed) == pytest.approx(nmi(clusters, labels), abs=1e-12)
    if len(labels) >= 2:
        assert rand_index(clusters, renamed) == rand_index(clusters, labels)


@settings(max_examples=100, deadline=None)
@given(partitions(), st.data())
def test_purity_monotone_under_refinement(part, data):
    clusters, labels = part
    k = data.draw(st.integers(0, len(clusters) - 1))
    if len(clusters[k]) < 2:
        return
    cut = data.draw(st.integers(1, len(clusters[k]) - 1))
    refined = clusters[:k] + [clusters[k][:cut], clusters[k][cut:]] + clusters[k + 1:]
    assert purity(refined, labels) >= purity(clusters, labels)


# --- task reports ---------------------------------------------------------


def _toy():
    artists = ["r"] * 8 + ["v"] * 6 + ["x"] * 4
    corpus = artist_corpus(artists)
    ids = [f"p{i}__0" for i in range(len(artists))]
    # cluster 0: 7 r + 1 v; cluster 1: 5 v + 1 r; cluster 2: 2 x; two x faces left as noise
    clusters = (tuple(ids[:7] + [ids[8]]), tuple(ids[9:14] + [ids[7]]), tuple(ids[14:16]))
    noise = tuple(ids[16:])
    return corpus, ClusteringResult(clusters, noise), ids


def test_report_rows_and_averages():
    corpus, res, ids = _toy()
    atts = attribute_clusters(res.clusters, "artist", corpus)
    rep = build_task_report(res, atts, corpus, "artist")
    assert [r.label for r in rep.rows] == ["r", "v", "x"]
    assert rep.n_clusters_total == 3 and rep.n_clusters_attributed == 3
    assert rep.n_faces == 18 and rep.n_faces_evaluated == 16
    r0 = rep.rows[0]
    assert (r0.counts.tp, r0.counts.fp, r0.counts.fn, r0.counts.tn) == (7, 1, 1, 9)
    for col in ("accuracy", "precision", "recall", "f_measure"):
        assert rep.averages[col] == pytest.approx(sum(getattr(r.metrics, col) for r in rep.rows) / 3)
    clusters = [list(c) for c in res.clusters]
    labels = {f: corpus.face_label(f, "artist") for c in clusters for f in c}
    assert rep.purity == pytest.approx(oracle_purity(clusters, labels))
    assert rep.nmi == pytest.approx(oracle_nmi(clusters, labels))
    assert rep.rand_index == pytest.approx(oracle_rand(clusters, labels))


def test_report_include_noise_adds_singletons():
    corpus, res, _ = _toy()
    rep = build_task_report(res, [], corpus, "artist", include_noise=True)
    assert rep.n_faces_evaluated == 18
    assert rep.rows == () and rep.averages is None and rep.accuracy is None
    assert rep.purity is not None


def test_report_merges_same_label_for_accuracy():
    corpus = artist_corpus(["b"] * 10 + ["c"] * 10)
    ids = [f"p{i}__0" for i in range(20)]
    res = ClusteringResult((tuple(ids[:6]), tuple(ids[6:10]), tuple(ids[10:])), ())
    atts = attribute_clusters(res.clusters, "artist", corpus)
    rep = build_task_report(res, atts, corpus, "artist")
    assert rep.n_clusters_attributed == 3 and rep.n_label_groups == 2
    assert rep.accuracy == 1.0
    assert rep.rows[0].metrics.accuracy < 1.0


def test_report_perfect_single_cluster():
    corpus = artist_corpus(["r"] * 5)
    ids = tuple(f"p{i}__0" for i in range(5))
    res = ClusteringResult((ids,), ())
    rep = build_task_report(res, attribute_clusters(res.clusters, "artist", corpus), corpus, "artist")
    m = rep.rows[0].metrics
    assert (m.accuracy, m.precision, m.recall, m.f_measure) == (1.0, 1.0, 1.0, 1.0)
    assert (rep.accuracy, rep.purity, rep.nmi, rep.rand_index) == (1.0, 1.0, 1.0, 1.0)


def test_report_year_task_skips_undated_in_intercluster():
    recs = [PaintingRecord(f"p{i}", "a", "t", "s", 1510 if i < 4 else None, "x") for i in range(6)]
    corpus = Corpus(recs)
    ids = tuple(f"p{i}__0" for i in range(6))
    res = ClusteringResult((ids,), ())
    rep = build_task_report(res, attribute_clusters(res.clusters, "year", corpus), corpus, "year")
    assert rep.rows[0].label == "1500-1550"
    assert rep.n_faces_evaluated == 4
    assert rep.purity == 1.0
    # TN/FP count undated faces as not carrying the label
    assert rep.rows[0].counts.fp == 2


def test_report_serialization():
    corpus, res, _ = _toy()
    rep = build_task_report(res, attribute_clusters(res.clusters, "artist", corpus), corpus, "artist",
                            convention="standard")
    d = rep.to_dict()
    assert d["convention"] == "standard"
    assert d["summary"]["n_clusters"] == 3
    lines = rep.to_csv().splitlines()
    assert lines[0] == "label,accuracy,precision,recall,f_measure"
    assert lines[4].startswith("average,")
    assert lines[6] == "task,n_clusters,n_clusters_total,accuracy,purity,nmi,rand_index"
    assert rep.to_json() == rep.to_json()
    with pytest.raises(ValueError):
        build_task_report(res, [ClusterAttribution(0, "style", "s", 1.0, 8, 8)], corpus, "artist")
    assert not math.isnan(d["summary"]["nmi"])
