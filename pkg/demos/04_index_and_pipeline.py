# %% [markdown]
# Exact neighbor search and the file-based pipeline
#
# The vantage-point tree answers the same radius queries as a full scan.
# The pipeline then writes every intermediate artifact to disk.

# %%
import json
import tempfile
import time
from pathlib import Path

import numpy as np

from atelier.index import BruteForceIndex, VPTree
from atelier.pipeline import PipelineConfig, TaskParams, run_pipeline
from atelier.synth import SynthSpec, generate

rng = np.random.default_rng(5)


def timed(idx, queries, eps):
    t0 = time.perf_counter()
    hits = [idx.query_radius(q, eps) for q in queries]
    return hits, 1e3 * (time.perf_counter() - t0) / len(queries)


# %% [markdown]
# Pruning pays off when the data has low intrinsic dimension, here a
# 4-D subspace embedded in 128-D, and not when the points fill the sphere.

# %%
basis = np.linalg.qr(rng.standard_normal((128, 4)))[0].T
for name, x in (
    ("4-D subspace", rng.standard_normal((20000, 4)) @ basis),
    ("full 128-D", rng.standard_normal((5000, 128))),
):
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    queries = x[::500]
    tree_hits, tree_ms = timed(VPTree(x), queries, 0.2)
    brute_hits, brute_ms = timed(BruteForceIndex(x), queries, 0.2)
    same = all(np.array_equal(a, b) for a, b in zip(tree_hits, brute_hits))
    print(f"{name}: tree {tree_ms:.2f} ms, brute {brute_ms:.2f} ms per query, identical results: {same}")

# %% one-shot run over a synthetic corpus
with tempfile.TemporaryDirectory() as d:
    d = Path(d)
    data = generate(SynthSpec(n_identities=4, faces_per_identity=60, seed=9))
    (d / "manifest.jsonl").write_text(data.manifest_text())
    (d / "embeddings.femb").write_bytes(data.store_bytes())
    cfg = PipelineConfig(
        manifest=d / "manifest.jsonl",
        embeddings=d / "embeddings.femb",
        output_dir=d / "out",
        tasks={"artist": TaskParams("auto", 25), "style": TaskParams("auto", 25), "year": TaskParams(0.9, 25)},
    )
    reports = run_pipeline(cfg)
    print(sorted(p.name for p in (d / "out").iterdir()))
    for task, rep in reports.items():
        print(task, json.dumps(rep.to_dict()["summary"]))
