"""Clustering paintings by the faces in them.

Face crops are embedded as 128-D unit vectors, grouped with DBSCAN, and
each cluster is named by its majority artist, style or 50-year period.
The clusters are then scored with per-cluster confusion metrics and
purity, NMI and Rand index.
"""

from .align import BBox, Detection, FaceInstance, crop_resize, expand_and_clamp
from .attribute import ClusterAttribution, attribute_cluster, attribute_clusters, label_distribution, merge_by_label
from .corpus import Corpus, PaintingRecord, YearBin, parse_filename, parse_manifest, scan_directory, year_bin
from .dbscan import ClusteringResult, ClusterParams, dbscan, dbscan_labels, elbow_eps, kdistance_profile, region_query
from .embed import Embeddings, euclidean, load_embeddings, mock_embed, normalize, read_store, write_store
from .index import BruteForceIndex, VPTree, build_index
from .metrics import (
    ClusterMetrics,
    ConfusionCounts,
    TaskReport,
    build_task_report,
    cluster_metrics,
    confusion_counts,
    f_measure,
    nmi,
    pair_counts,
    purity,
    rand_index,
)
from .synth import SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "dbscan",
    "BBox",
    "Detection",
    "FaceInstance",
    "crop_resize",
    "expand_and_clamp",
    "ClusterAttribution",
    "attribute_cluster",
    "attribute_clusters",
    "label_distribution",
    "merge_by_label",
    "Corpus",
    "PaintingRecord",
    "YearBin",
    "parse_filename",
    "parse_manifest",
    "scan_directory",
    "year_bin",
    "ClusteringResult",
    "ClusterParams",
    "dbscan_labels",
    "elbow_eps",
    "kdistance_profile",
    "region_query",
    "Embeddings",
    "euclidean",
    "load_embeddings",
    "mock_embed",
    "normalize",
    "read_store",
    "write_store",
    "BruteForceIndex",
    "VPTree",
    "build_index",
    "ClusterMetrics",
    "ConfusionCounts",
    "TaskReport",
    "build_task_report",
    "cluster_metrics",
    "confusion_counts",
    "f_measure",
    "nmi",
    "pair_counts",
    "purity",
    "rand_index",
    "SynthSpec",
    "generate",
]
