"""Pipeline configuration, intermediate file formats and the one-shot runner.

Every stage reads and writes plain files so each can be re-run alone:

* clusters: one ``{"face_id", "cluster_id"}`` JSON line per face, with
  ``"noise"`` as the cluster id for unclustered faces;
* attributions: one JSON line per named cluster;
* reports: ``report_<task>.json`` and ``report_<task>.csv``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

from .attribute import DEFAULT_THRESHOLD, ClusterAttribution, attribute_clusters
from .corpus import TASKS, Corpus, read_manifest
from .dbscan import ClusteringResult, ClusterParams, DEFAULT_EPS, DEFAULT_MIN_PTS, dbscan, elbow_eps
from .embed import Embeddings, load_embeddings
from .metrics import CONVENTIONS, TaskReport, build_task_report

log = logging.getLogger(__name__)

AUTO = "auto"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TaskParams:
    """Clustering parameters for one task; ``eps`` may be ``"auto"`` (k-distance elbow)."""

    eps: Union[float, str] = DEFAULT_EPS
    min_pts: int = DEFAULT_MIN_PTS
    min_cluster_size: Optional[int] = None

    def __post_init__(self):
        if self.eps != AUTO:
            ClusterParams(self.eps, self.min_pts, self.min_cluster_size)
        elif int(self.min_pts) != self.min_pts or self.min_pts < 1:
            raise ValueError(f"min_pts must be a positive integer, got {self.min_pts}")

    def resolve(self, emb: Embeddings) -> ClusterParams:
        eps = self.eps
        if eps == AUTO:
            eps = elbow_eps(emb.vectors, max(1, self.min_pts - 1))
        return ClusterParams(float(eps), int(self.min_pts), self.min_cluster_size)


@dataclass(frozen=True)
class PipelineConfig:
    manifest: Path
    embeddings: Path
    output_dir: Path
    tasks: dict = field(default_factory=lambda: {t: TaskParams() for t in TASKS})
    threshold: float = DEFAULT_THRESHOLD
    convention: str = "paper"
    index: str = "auto"
    include_noise: bool = False
    dedupe_paintings: bool = False
    formats: tuple = ("json", "csv")

    def validate(self) -> "PipelineConfig":
        if not 0 < self.threshold < 1:
            raise ConfigError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.convention not in CONVENTIONS:
            raise ConfigError(f"convention must be one of {CONVENTIONS}, got {self.convention!r}")
        if self.index not in ("auto", "brute", "tree"):
            raise ConfigError(f"index must be auto, brute or tree, got {self.index!r}")
        unknown = set(self.tasks) - set(TASKS)
        if unknown:
            raise ConfigError(f"unknown task(s): {sorted(unknown)}")
        bad = set(self.formats) - {"json", "csv"}
        if bad:
            raise ConfigError(f"unknown report format(s): {sorted(bad)}")
        return self

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Path = Path(".")) -> "PipelineConfig":
        """Build a config from a parsed JSON document.

        Relative paths are resolved against ``base_dir``. Each entry of
        ``tasks`` overrides ``defaults`` field by field.
        """
        def path(key):
            if key not in doc:
                raise ConfigError(f"config is missing {key!r}")
            p = Path(doc[key])
            return p if p.is_absolute() else base_dir / p

        defaults = dict(doc.get("defaults", {}))
        task_docs = doc.get("tasks", {t: {} for t in TASKS})
        tasks = {}
        for name, override in task_docs.items():
            merged = {**defaults, **(override or {})}
            try:
                tasks[name] = TaskParams(**merged)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"task {name!r}: {exc}") from None
        known = {"manifest", "embeddings", "output_dir", "defaults", "tasks", "threshold",
                 "convention", "index", "include_noise", "dedupe_paintings", "formats"}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config key(s): {sorted(extra)}")
        return cls(
            manifest=path("manifest"),
            embeddings=path("embeddings"),
            output_dir=path("output_dir"),
            tasks=tasks,
            threshold=float(doc.get("threshold", DEFAULT_THRESHOLD)),
            convention=doc.get("convention", "paper"),
            index=doc.get("index", "auto"),
            include_noise=bool(doc.get("include_noise", False)),
            dedupe_paintings=bool(doc.get("dedupe_paintings", False)),
            formats=tuple(doc.get("formats", ("json", "csv"))),
        ).validate()

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(doc, path.parent)

    def with_overrides(self, **kw) -> "PipelineConfig":
        """Replace fields whose override is not ``None``; task params may be patched via ``task_params``."""
        task_patch = kw.pop("task_params", None) or {}
        fields = {k: v for k, v in kw.items() if v is not None}
        cfg = replace(self, **fields)
        if task_patch:
            tasks = {}
            for name, tp in cfg.tasks.items():
                patch = {k: v for k, v in task_patch.items() if v is not None}
                try:
                    tasks[name] = replace(tp, **patch)
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"task {name!r}: {exc}") from None
            cfg = replace(cfg, tasks=tasks)
        return cfg.validate()


def write_clusters(path, emb_ids, result: ClusteringResult) -> None:
    labels = result.labels()
    with open(path, "w", encoding="utf-8") as fh:
        for face_id in emb_ids:
            k = labels[face_id]
            fh.write(json.dumps({"face_id": face_id, "cluster_id": "noise" if k < 0 else k}) + "\n")


def read_clusters(path) -> ClusteringResult:
    ids = []
    labs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                cid = obj["cluster_id"]
                ids.append(str(obj["face_id"]))
                labs.append(-1 if cid == "noise" else int(cid))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path} line {lineno}: {exc}") from None
    present = sorted({k for k in labs if k >= 0})
    if present != list(range(len(present))):
        raise ValueError(f"{path}: cluster ids must be 0..K-1, got {present[:10]}")
    return ClusteringResult.from_labels(ids, labs)


def write_attributions(path, attributions) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for att in attributions:
            fh.write(json.dumps(att.to_dict()) + "\n")


def read_attributions(path) -> list[ClusterAttribution]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip():
                try:
                    out.append(ClusterAttribution.from_dict(json.loads(line)))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise ValueError(f"{path} line {lineno}: {exc}") from None
    return out


def write_report(report: TaskReport, json_path=None, csv_path=None) -> None:
    if json_path is not None:
        Path(json_path).write_text(report.to_json(), encoding="utf-8")
    if csv_path is not None:
        Path(csv_path).write_text(report.to_csv(), encoding="utf-8")


def _require(path: Path, what: str) -> None:
    if not path.exists():
        raise FileNotFoundError(f"{what} not found: {path}")


def run_pipeline(config: PipelineConfig) -> dict[str, TaskReport]:
    """Cluster, attribute and report every configured task, writing all artifacts.

    Each task gets its own clustering run with its own parameters.
    """
    config.validate()
    _require(config.manifest, "manifest")
    _require(config.embeddings, "embeddings")
    corpus = Corpus(read_manifest(config.manifest))
    emb = load_embeddings(config.embeddings)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    reports = {}
    params_used = {}
    for task, tparams in config.tasks.items():
        params = tparams.resolve(emb)
        log.info("task %s: clustering %d faces with %s", task, len(emb), params)
        result = dbscan(emb, params, backend=config.index)
        attributions = attribute_clusters(
            result.clusters, task, corpus, config.threshold, config.dedupe_paintings
        )
        clusters_path = out / f"clusters_{task}.jsonl"
        write_clusters(clusters_path, emb.ids, result)
        write_attributions(out / f"attributions_{task}.jsonl", attributions)
        # reports are built from the written files so `run` and the chained subcommands agree
        report = build_task_report(
            read_clusters(clusters_path), attributions, corpus, task,
            config.convention, include_noise=config.include_noise,
        )
        write_report(
            report,
            out / f"report_{task}.json" if "json" in config.formats else None,
            out / f"report_{task}.csv" if "csv" in config.formats else None,
        )
        reports[task] = report
        params_used[task] = params.to_dict()
        log.info(
            "task %s: %d clusters, %d attributed, purity %s",
            task, report.n_clusters_total, report.n_clusters_attributed, report.purity,
        )

    bundle = {
        "params": params_used,
        "reports": {t: r.to_dict() for t, r in reports.items()},
    }
    (out / "bundle.json").write_text(json.dumps(bundle, indent=2) + "\n", encoding="utf-8")
    return reports
