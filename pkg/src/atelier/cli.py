"""``atelier`` command line: one subcommand per pipeline stage plus ``run``.

Exit codes: 0 success, 2 input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .align import DEFAULT_MARGIN, align_face, parse_detections
from .attribute import DEFAULT_THRESHOLD, attribute_clusters
from .corpus import TASKS, Corpus, IntegrityError, ManifestError, format_manifest, read_manifest, scan_directory
from .dbscan import DEFAULT_MIN_PTS, dbscan
from .embed import Embeddings, StoreFormatError, load_embeddings, mock_embed, save_embeddings
from .metrics import CONVENTIONS, build_task_report
from .pipeline import (
    AUTO,
    ConfigError,
    PipelineConfig,
    TaskParams,
    read_attributions,
    read_clusters,
    run_pipeline,
    write_attributions,
    write_clusters,
    write_report,
)
from .synth import SynthSpec, generate

log = logging.getLogger("atelier")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INTERNAL = 3


class InputError(Exception):
    pass


def _existing(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise InputError(f"input not found: {p}")
    return p


def _eps_arg(value: str):
    if value == AUTO:
        return AUTO
    try:
        return float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"eps must be a number or 'auto', got {value!r}") from None


def _load_corpus(path) -> Corpus:
    return Corpus(read_manifest(_existing(path)))


def _read_image(path: Path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        return np.asarray(im)


def _write_image(path: Path, crop: np.ndarray) -> None:
    from PIL import Image

    path.parent.mkdir(parents=True, exist_ok=True)
    arr = crop[..., 0] if crop.ndim == 3 and crop.shape[2] == 1 else crop
    Image.fromarray(arr).save(path, format="PNG")


def cmd_ingest(args) -> int:
    if args.manifest:
        records = read_manifest(_existing(args.manifest))
    else:
        records = scan_directory(_existing(args.scan))
    text = format_manifest(records)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    log.info("ingested %d paintings", len(records))
    return EXIT_OK


def cmd_align(args) -> int:
    manifest = _existing(args.manifest)
    corpus = _load_corpus(manifest)
    with open(_existing(args.detections), encoding="utf-8") as fh:
        detections = parse_detections(fh)
    root = Path(args.images_root) if args.images_root else manifest.parent
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for det in detections:
        if det.painting_id not in corpus:
            raise InputError(f"detection for unknown painting {det.painting_id!r}")
        image = _read_image(_existing(root / corpus[det.painting_id].source_path))
        face = align_face(image, det, args.margin)
        _write_image(out / f"{face.face_id}.png", face.crop)
    log.info("wrote %d crops to %s", len(detections), out)
    return EXIT_OK


def cmd_embed(args) -> int:
    if args.import_path:
        emb = load_embeddings(_existing(args.import_path))
    else:
        if not args.mock:
            raise InputError("no embedding model available; pass --mock or --import FILE")
        crops = _existing(args.crops)
        paths = sorted(p for p in crops.rglob("*.png") if p.is_file())
        ids = [p.relative_to(crops).as_posix()[: -len(".png")] for p in paths]
        rows = [mock_embed(_read_image(p)) for p in paths]
        emb = Embeddings(tuple(ids), np.array(rows).reshape(len(rows), 128)) if rows else Embeddings.empty()
    save_embeddings(args.out, emb)
    log.info("wrote %d embeddings to %s", len(emb), args.out)
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = SynthSpec(
        n_identities=args.identities,
        faces_per_identity=args.faces,
        dim=args.dim,
        intra_sigma=args.sigma,
        min_center_separation=args.sep,
        seed=args.seed,
    )
    corpus = generate(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.jsonl").write_text(corpus.manifest_text(), encoding="utf-8")
    (out / "embeddings.femb").write_bytes(corpus.store_bytes())
    (out / "truth.json").write_text(corpus.truth_json(), encoding="utf-8")
    log.info("generated %d faces in %s", len(corpus.embeddings), out)
    return EXIT_OK


def cmd_cluster(args) -> int:
    emb = load_embeddings(_existing(args.embeddings))
    try:
        params = TaskParams(args.eps, args.min_pts, args.min_cluster_size).resolve(emb)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    result = dbscan(emb, params, backend=args.index)
    write_clusters(args.out, emb.ids, result)
    log.info("eps=%g min_pts=%d: %d clusters, %d noise", params.eps, params.min_pts,
             len(result.clusters), len(result.noise))
    return EXIT_OK


def cmd_attribute(args) -> int:
    corpus = _load_corpus(args.manifest)
    result = read_clusters(_existing(args.clusters))
    atts = attribute_clusters(result.clusters, args.task, corpus, args.threshold, args.dedupe_paintings)
    write_attributions(args.out, atts)
    log.info("%d of %d clusters attributed for %s", len(atts), len(result.clusters), args.task)
    return EXIT_OK


def cmd_report(args) -> int:
    corpus = _load_corpus(args.manifest)
    result = read_clusters(_existing(args.clusters))
    atts = read_attributions(_existing(args.attributions))
    report = build_task_report(result, atts, corpus, args.task, args.convention,
                               include_noise=args.include_noise)
    write_report(report, args.out, args.csv)
    return EXIT_OK


def cmd_run(args) -> int:
    if args.config:
        config = PipelineConfig.load(_existing(args.config))
    else:
        missing = [f for f in ("manifest", "embeddings", "out_dir") if getattr(args, f) is None]
        if missing:
            raise InputError(f"without --config, pass --{' --'.join(m.replace('_', '-') for m in missing)}")
        config = PipelineConfig(Path(args.manifest), Path(args.embeddings), Path(args.out_dir))
    config = config.with_overrides(
        manifest=Path(args.manifest) if args.manifest else None,
        embeddings=Path(args.embeddings) if args.embeddings else None,
        output_dir=Path(args.out_dir) if args.out_dir else None,
        threshold=args.threshold,
        convention=args.convention,
        index=args.index,
        task_params={"eps": args.eps, "min_pts": args.min_pts, "min_cluster_size": args.min_cluster_size},
    )
    _existing(config.manifest)
    _existing(config.embeddings)
    reports = run_pipeline(config)
    for task, rep in reports.items():
        log.info("%s: %d/%d clusters attributed, accuracy=%s purity=%s nmi=%s ri=%s", task,
                 rep.n_clusters_attributed, rep.n_clusters_total, rep.accuracy, rep.purity,
                 rep.nmi, rep.rand_index)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atelier", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize painting metadata into a manifest")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest")
    src.add_argument("--scan", metavar="DIR", help="import <style>/<artist>_<title>[_<year>].<ext> files")
    p.add_argument("--out", help="output manifest (default: stdout)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("align", help="cut 160x160 face crops from detector boxes")
    p.add_argument("--manifest", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--images-root", help="directory painting paths are relative to (default: manifest's)")
    p.add_argument("--margin", type=int, default=DEFAULT_MARGIN)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("embed", help="build an embedding store")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--crops", metavar="DIR")
    src.add_argument("--import", dest="import_path", metavar="FILE",
                     help="binary or text store computed elsewhere")
    p.add_argument("--mock", action="store_true", help="use the deterministic intensity-layout embedder")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("synth", help="generate a planted-partition corpus")
    p.add_argument("--identities", type=int, default=6)
    p.add_argument("--faces", type=int, default=200)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--sep", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("cluster", help="DBSCAN over an embedding store")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--eps", type=_eps_arg, required=True, help="radius, or 'auto' for the k-distance elbow")
    p.add_argument("--min-pts", type=int, default=DEFAULT_MIN_PTS)
    p.add_argument("--min-cluster-size", type=int)
    p.add_argument("--index", choices=("auto", "brute", "tree"), default="auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("attribute", help="name clusters by majority label")
    p.add_argument("--clusters", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--task", choices=TASKS, required=True)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--dedupe-paintings", action="store_true", help="count each painting once per cluster")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_attribute)

    p = sub.add_parser("report", help="per-cluster and inter-cluster metrics")
    p.add_argument("--clusters", required=True)
    p.add_argument("--attributions", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--task", choices=TASKS, required=True)
    p.add_argument("--convention", choices=CONVENTIONS, default="paper")
    p.add_argument("--include-noise", action="store_true", help="score noise faces as singleton clusters")
    p.add_argument("--out", help="JSON report path")
    p.add_argument("--csv", help="CSV report path")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="cluster, attribute and report all three tasks")
    p.add_argument("--config", help="JSON pipeline config; flags below override it")
    p.add_argument("--manifest")
    p.add_argument("--embeddings")
    p.add_argument("--out-dir")
    p.add_argument("--eps", type=_eps_arg, help="override eps for every task")
    p.add_argument("--min-pts", type=int)
    p.add_argument("--min-cluster-size", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--convention", choices=CONVENTIONS)
    p.add_argument("--index", choices=("auto", "brute", "tree"))
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (InputError, FileNotFoundError, ConfigError, ManifestError, StoreFormatError) as exc:
        print(f"atelier: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except IntegrityError as exc:
        print(f"atelier: integrity error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        print(f"atelier: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"atelier: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
