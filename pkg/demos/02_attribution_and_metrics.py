# %% [markdown]
# Naming clusters and scoring them
#
# A toy corpus of eight paintings, one face each, clustered by hand.

# %%
from atelier import (
    ClusteringResult, Corpus, attribute_clusters, build_task_report, nmi, parse_manifest, purity, rand_index,
)

rows = [
    ("p1", "rembrandt", "baroque", 1642), ("p2", "rembrandt", "baroque", 1655),
    ("p3", "rembrandt", "baroque", 1661), ("p4", "rubens", "baroque", 1615),
    ("p5", "durer", "northern-renaissance", 1500), ("p6", "durer", "northern-renaissance", 1511),
    ("p7", "bosch", "northern-renaissance", 1490), ("p8", "goya", "romanticism", None),
]
lines = [
    '{"id": "%s", "artist": "%s", "title": "t", "style": "%s", %s"path": "%s.jpg"}'
    % (pid, a, s, "" if y is None else f'"year": {y}, ', pid)
    for pid, a, s, y in rows
]
corpus = Corpus(parse_manifest(lines))

ids = [f"{pid}__0" for pid, *_ in rows]
labels = [0, 0, 0, 0, 1, 1, 1, -1]
clustering = ClusteringResult.from_labels(ids, labels)

# %% majority attribution per task; a tie or a weak majority leaves a cluster unnamed
for task in ("artist", "style", "year"):
    atts = attribute_clusters(clustering.clusters, task, corpus)
    print(task, [(a.cluster_id, a.label, round(a.majority_fraction, 2)) for a in atts])

# %% per-cluster report under both precision/recall conventions
atts = attribute_clusters(clustering.clusters, "artist", corpus)
for conv in ("paper", "standard"):
    rep = build_task_report(clustering, atts, corpus, "artist", convention=conv)
    r = rep.rows[0]
    print(conv, r.label, r.counts, {k: round(v, 3) for k, v in r.metrics.to_dict().items()})
print(rep.to_csv())

# %% the inter-cluster scores on their own
truth = {f: corpus.face_label(f, "style") for f in ids[:7]}
clusters = [list(c) for c in clustering.clusters]
print("purity", purity(clusters, truth), "nmi", round(nmi(clusters, truth), 4), "rand", rand_index(clusters, truth))
