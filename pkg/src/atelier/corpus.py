"""Painting metadata: manifest parsing, filename import and 50-year binning."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path, PurePosixPath
from typing import Iterable, Iterator, Optional

YEAR_MIN = 1000
YEAR_MAX = 2100
BIN_WIDTH = 50

IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png", ".bmp", ".tif", ".tiff", ".gif", ".webp")


class ManifestError(ValueError):
    """Raised for malformed or inconsistent manifest input."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FilenameError(ValueError):
    pass


@dataclass(frozen=True)
class PaintingRecord:
    painting_id: str
    artist: str
    title: str
    style: str
    year: Optional[int]
    source_path: str

    def __post_init__(self):
        if not self.painting_id:
            raise ValueError("painting_id must be non-empty")
        for name in ("artist", "style"):
            value = getattr(self, name)
            if not value:
                raise ValueError(f"{name} must be non-empty")
            if "/" in value or "\\" in value:
                raise ValueError(f"{name} {value!r} contains a path separator")
        if self.year is not None and not (YEAR_MIN <= self.year <= YEAR_MAX):
            raise ValueError(f"year {self.year} outside [{YEAR_MIN}, {YEAR_MAX}]")

    def to_json(self) -> str:
        obj = {
            "id": self.painting_id,
            "artist": self.artist,
            "title": self.title,
            "style": self.style,
        }
        if self.year is not None:
            obj["year"] = self.year
        obj["path"] = self.source_path
        return json.dumps(obj, ensure_ascii=False)


@dataclass(frozen=True)
class YearBin:
    start: int

    def __post_init__(self):
        if self.start % BIN_WIDTH:
            raise ValueError(f"bin start {self.start} is not a multiple of {BIN_WIDTH}")

    @property
    def end(self) -> int:
        return self.start + BIN_WIDTH

    @property
    def label(self) -> str:
        return f"{self.start}-{self.end}"

    def __contains__(self, year: int) -> bool:
        return self.start <= year < self.end


def year_bin(year: int) -> YearBin:
    """Half-open 50-year bin containing ``year``; 1550 falls in 1550-1600."""
    if isinstance(year, bool) or not isinstance(year, int):
        raise TypeError(f"year must be an int, got {type(year).__name__}")
    if not (YEAR_MIN <= year <= YEAR_MAX):
        raise ValueError(f"year {year} outside [{YEAR_MIN}, {YEAR_MAX}]")
    return YearBin((year // BIN_WIDTH) * BIN_WIDTH)


def _record_from_obj(obj, lineno: int) -> PaintingRecord:
    if not isinstance(obj, dict):
        raise ManifestError("record is not an object", lineno)
    missing = [k for k in ("id", "artist", "title", "style", "path") if k not in obj]
    if missing:
        raise ManifestError(f"missing key(s) {', '.join(missing)}", lineno)
    for key in ("id", "artist", "title", "style", "path"):
        if not isinstance(obj[key], str):
            raise ManifestError(f"{key!r} must be a string", lineno)
    year = obj.get("year")
    if year is not None and (isinstance(year, bool) or not isinstance(year, int)):
        raise ManifestError(f"'year' must be an integer, got {year!r}", lineno)
    try:
        return PaintingRecord(
            painting_id=obj["id"],
            artist=obj["artist"].strip().lower(),
            title=obj["title"],
            style=obj["style"].strip().lower(),
            year=year,
            source_path=obj["path"],
        )
    except ValueError as exc:
        raise ManifestError(str(exc), lineno) from None


def parse_manifest(lines: Iterable[str]) -> list[PaintingRecord]:
    """Parse a line-delimited JSON manifest into records, preserving order.

    Blank lines are skipped. Artist and style are lowercased; a missing or
    null ``year`` gives ``year=None``.
    """
    records = []
    seen = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"invalid JSON ({exc.msg})", lineno) from None
        rec = _record_from_obj(obj, lineno)
        if rec.painting_id in seen:
            raise ManifestError(
                f"duplicate painting id {rec.painting_id!r} (first seen on line {seen[rec.painting_id]})",
                lineno,
            )
        seen[rec.painting_id] = lineno
        records.append(rec)
    return records


def read_manifest(path) -> list[PaintingRecord]:
    with open(path, encoding="utf-8") as fh:
        return parse_manifest(fh)


def format_manifest(records: Iterable[PaintingRecord]) -> str:
    return "".join(rec.to_json() + "\n" for rec in records)


def parse_filename(path: str) -> tuple[str, str, str, Optional[int]]:
    """Split ``<style>/<artist>_<title>[_<year>].<ext>`` into its fields.

    Returns ``(artist, title, style, year)``, all strings lowercased. A
    trailing field is taken as the year only when it is 3-4 digits and lies
    in the accepted year range; otherwise it stays part of the title.
    """
    p = PurePosixPath(str(path).replace("\\", "/"))
    if len(p.parts) < 2 or not p.parent.name:
        raise FilenameError(f"{path!r}: no style directory")
    style = p.parent.name.lower()
    fields = p.stem.split("_")
    if len(fields) < 2 or not fields[0] or not fields[1]:
        raise FilenameError(f"{path!r}: expected <artist>_<title>[_<year>]")
    artist = fields[0].lower()
    year = None
    rest = fields[1:]
    if len(rest) >= 2 and rest[-1].isdigit() and 3 <= len(rest[-1]) <= 4:
        candidate = int(rest[-1])
        if YEAR_MIN <= candidate <= YEAR_MAX:
            year = candidate
            rest = rest[:-1]
    title = "_".join(rest).lower()
    return artist, title, style, year


def render_filename(artist: str, title: str, style: str, year: Optional[int], ext: str = ".jpg") -> str:
    """Inverse of :func:`parse_filename` for well-formed fields."""
    stem = f"{artist}_{title}" if year is None else f"{artist}_{title}_{year}"
    return f"{style}/{stem}{ext}"


def _iter_images(root: Path) -> Iterator[Path]:
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in sorted(filenames):
            if name.lower().endswith(IMAGE_SUFFIXES):
                yield Path(dirpath) / name


def scan_directory(root) -> list[PaintingRecord]:
    """Build records from a ``<style>/<artist>_<title>[_<year>].<ext>`` tree.

    The painting id is the path relative to ``root`` without its extension.
    Traversal is sorted so the result is deterministic.
    """
    root = Path(root)
    records = []
    for img in _iter_images(root):
        rel = img.relative_to(root).as_posix()
        artist, title, style, year = parse_filename(rel)
        records.append(
            PaintingRecord(
                painting_id=rel.rsplit(".", 1)[0],
                artist=artist,
                title=title,
                style=style,
                year=year,
                source_path=rel,
            )
        )
    return records


TASKS = ("artist", "style", "year")


class IntegrityError(LookupError):
    pass


def task_label(record: PaintingRecord, task: str) -> Optional[str]:
    """The record's label for ``task``; ``None`` for the year task when undated."""
    if task == "artist":
        return record.artist
    if task == "style":
        return record.style
    if task == "year":
        return None if record.year is None else year_bin(record.year).label
    raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")


class Corpus:
    """Immutable lookup from painting ids, and face ids, to painting records.

    A face id resolves to a painting either directly or through the
    ``<painting_id>__<face_index>`` naming used by the aligner.
    """

    def __init__(self, records: Iterable[PaintingRecord]):
        self._records: dict[str, PaintingRecord] = {}
        for rec in records:
            if rec.painting_id in self._records:
                raise ManifestError(f"duplicate painting id {rec.painting_id!r}")
            self._records[rec.painting_id] = rec

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[PaintingRecord]:
        return iter(self._records.values())

    def __contains__(self, painting_id: str) -> bool:
        return painting_id in self._records

    def __getitem__(self, painting_id: str) -> PaintingRecord:
        return self._records[painting_id]

    def record_for_face(self, face_id: str) -> PaintingRecord:
        rec = self._records.get(face_id)
        if rec is None and "__" in face_id:
            rec = self._records.get(face_id.rsplit("__", 1)[0])
        if rec is None:
            raise IntegrityError(f"face {face_id!r} does not resolve to a painting in the corpus")
        return rec

    def face_label(self, face_id: str, task: str) -> Optional[str]:
        return task_label(self.record_for_face(face_id), task)

    def label_map(self, face_ids: Iterable[str], task: str) -> dict[str, str]:
        """Face id -> task label, skipping faces without a label for the task."""
        out = {}
        for f in face_ids:
            lab = self.face_label(f, task)
            if lab is not None:
                out[f] = lab
        return out
