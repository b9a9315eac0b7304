"""Planted-partition embedding corpora with known artist/style/year labels.

Randomness comes from numpy's PCG64 bit generator seeded with
``SynthSpec.seed``, consumed in this fixed order:

1. identity centers, one at a time: ``standard_normal(dim)`` normalized,
   redrawn until it is at least ``min_center_separation`` from every
   accepted center;
2. faces, identity-major: for each face ``standard_normal(dim)`` (noise
   direction, scaled by ``intra_sigma``), then ``integers(lo, hi + 1)``
   for its year.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .corpus import YEAR_MAX, YEAR_MIN, PaintingRecord, format_manifest, render_filename, year_bin
from .embed import Embeddings, write_store

DEFAULT_STYLES = (
    "early-renaissance",
    "high-renaissance",
    "mannerism-late-renaissance",
    "northern-renaissance",
    "baroque",
    "rococo",
)
MAX_CENTER_DRAWS = 10_000


class GenerationError(RuntimeError):
    pass


def artist_name(identity: int) -> str:
    return f"artist-{identity:02d}"


@dataclass(frozen=True)
class SynthSpec:
    n_identities: int = 6
    faces_per_identity: int = 200
    dim: int = 128
    intra_sigma: float = 0.05
    min_center_separation: float = 0.8
    style_of_identity: Optional[dict] = None
    year_range_of_identity: Optional[dict] = None
    seed: int = 42

    def __post_init__(self):
        if self.n_identities < 1 or self.faces_per_identity < 1 or self.dim < 1:
            raise ValueError("n_identities, faces_per_identity and dim must be positive")
        if self.intra_sigma < 0:
            raise ValueError(f"intra_sigma must be >= 0, got {self.intra_sigma}")
        if not self.min_center_separation > 0:
            raise ValueError("min_center_separation must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        for i in range(self.n_identities):
            lo, hi = self.year_range(i)
            if not (YEAR_MIN <= lo <= hi <= YEAR_MAX):
                raise ValueError(f"identity {i}: bad year range ({lo}, {hi})")

    def style(self, identity: int) -> str:
        if self.style_of_identity is not None:
            return self.style_of_identity[identity]
        return DEFAULT_STYLES[identity % len(DEFAULT_STYLES)]

    def year_range(self, identity: int) -> tuple[int, int]:
        if self.year_range_of_identity is not None:
            lo, hi = self.year_range_of_identity[identity]
            return int(lo), int(hi)
        # one whole 50-year bin per identity, starting at 1400
        start = 1400 + 50 * (identity % 14)
        return start, start + 49


@dataclass(frozen=True)
class IdentityTruth:
    identity: int
    artist: str
    style: str
    year_bins: tuple[str, ...]
    face_ids: tuple[str, ...] = field(repr=False)


@dataclass(frozen=True, eq=False)
class SynthCorpus:
    spec: SynthSpec
    records: tuple[PaintingRecord, ...]
    embeddings: Embeddings
    truth: tuple[IdentityTruth, ...]
    centers: np.ndarray

    def manifest_text(self) -> str:
        return format_manifest(self.records)

    def store_bytes(self) -> bytes:
        return write_store(self.embeddings)

    def truth_json(self) -> str:
        doc = {
            "seed": self.spec.seed,
            "identities": [
                {
                    "identity": t.identity,
                    "artist": t.artist,
                    "style": t.style,
                    "year_bins": list(t.year_bins),
                    "faces": list(t.face_ids),
                }
                for t in self.truth
            ],
        }
        return json.dumps(doc, indent=2) + "\n"


def _draw_centers(rng: np.random.Generator, spec: SynthSpec) -> np.ndarray:
    centers = []
    draws = 0
    while len(centers) < spec.n_identities:
        if draws >= MAX_CENTER_DRAWS:
            raise GenerationError(
                f"could not place {spec.n_identities} centers {spec.min_center_separation} apart "
                f"in {spec.dim} dimensions within {MAX_CENTER_DRAWS} draws"
            )
        draws += 1
        c = rng.standard_normal(spec.dim)
        norm = np.linalg.norm(c)
        if norm == 0:
            continue
        c = c / norm
        if all(np.linalg.norm(c - other) >= spec.min_center_separation for other in centers):
            centers.append(c)
    return np.array(centers)


def generate(spec: SynthSpec) -> SynthCorpus:
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    centers = _draw_centers(rng, spec)

    records = []
    ids = []
    rows = []
    truth = []
    for i in range(spec.n_identities):
        artist = artist_name(i)
        style = spec.style(i)
        lo, hi = spec.year_range(i)
        face_ids = []
        for j in range(spec.faces_per_identity):
            v = centers[i] + spec.intra_sigma * rng.standard_normal(spec.dim)
            norm = np.linalg.norm(v)
            if norm == 0:
                raise GenerationError(f"identity {i} face {j}: noise cancelled the center")
            year = int(rng.integers(lo, hi + 1))
            pid = f"synth-{i:02d}-{j:04d}"
            title = f"face-{j:04d}"
            records.append(
                PaintingRecord(
                    painting_id=pid,
                    artist=artist,
                    title=title,
                    style=style,
                    year=year,
                    source_path=render_filename(artist, title, style, year, ".png"),
                )
            )
            fid = f"{pid}__0"
            ids.append(fid)
            face_ids.append(fid)
            rows.append(v / norm)
        bins = sorted({year_bin(y).label for y in range(lo, hi + 1)})
        truth.append(IdentityTruth(i, artist, style, tuple(bins), tuple(face_ids)))

    emb = Embeddings(tuple(ids), np.array(rows).reshape(len(rows), spec.dim))
    return SynthCorpus(spec, tuple(records), emb, tuple(truth), centers)
