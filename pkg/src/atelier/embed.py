"""Face embeddings: unit-vector representation, distance and storage.

Binary store layout (all integers little-endian)::

    b"FEMB" | u32 version (=1) | u32 dimension
    then per record: u16 id length | id bytes (UTF-8) | dimension x f64

A plain-text variant with one ``face_id v1 v2 ...`` line per record is
also readable.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

DEFAULT_DIM = 128
MAGIC = b"FEMB"
VERSION = 1
_HEADER = struct.Struct("<4sII")
_IDLEN = struct.Struct("<H")


class ZeroVectorError(ValueError):
    pass


class StoreFormatError(ValueError):
    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"offset {offset}: {message}")


@dataclass(frozen=True, eq=False)
class Embeddings:
    """Ordered face ids with one row of ``vectors`` per id."""

    ids: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vectors, dtype=np.float64)
        if vec.ndim != 2:
            raise ValueError(f"vectors must be 2-D, got shape {vec.shape}")
        if len(self.ids) != vec.shape[0]:
            raise ValueError(f"{len(self.ids)} ids for {vec.shape[0]} vectors")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("duplicate face ids")
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "vectors", vec)

    @classmethod
    def empty(cls, dim: int = DEFAULT_DIM) -> "Embeddings":
        return cls((), np.zeros((0, dim)))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    def normalized(self) -> "Embeddings":
        return Embeddings(self.ids, normalize_rows(self.vectors))


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a non-empty 1-D vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite components")
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ZeroVectorError("cannot normalize the zero vector")
    return v / norm


def normalize_rows(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("embeddings contain non-finite values")
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    if np.any(norms == 0):
        bad = int(np.flatnonzero(norms[:, 0] == 0)[0])
        raise ZeroVectorError(f"row {bad} is the zero vector")
    return x / norms


def euclidean(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def mock_embed(crop: np.ndarray) -> np.ndarray:
    """Deterministic intensity-layout embedding of a 160x160 crop.

    The grayscale crop is cut into 16 columns by 8 rows of 10x20 pixel
    blocks. Each component is a block mean minus the image mean, blocks
    ordered column by column (top to bottom within a column). A constant
    crop has no layout and maps to the first basis vector.
    """
    img = np.asarray(crop, dtype=np.float64)
    if img.ndim == 3:
        img = img.mean(axis=2)
    if img.shape != (160, 160):
        raise ValueError(f"crop must be 160x160, got {img.shape}")
    blocks = img.reshape(8, 20, 16, 10).mean(axis=(1, 3))  # (row, col)
    feat = (blocks - img.mean()).T.reshape(-1)
    if not np.any(feat):
        e1 = np.zeros(DEFAULT_DIM)
        e1[0] = 1.0
        return e1
    return feat / np.linalg.norm(feat)


def write_store(emb: Embeddings) -> bytes:
    dim = emb.dim
    parts = [_HEADER.pack(MAGIC, VERSION, dim)]
    for face_id, row in zip(emb.ids, emb.vectors):
        raw = face_id.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ValueError(f"face id too long: {face_id[:40]}...")
        parts.append(_IDLEN.pack(len(raw)))
        parts.append(raw)
        parts.append(np.ascontiguousarray(row, dtype="<f8").tobytes())
    return b"".join(parts)


def read_store(data: bytes) -> Embeddings:
    """Decode :func:`write_store` output bit-exactly (no renormalization)."""
    if len(data) < _HEADER.size:
        if not MAGIC.startswith(data[:4]):
            raise StoreFormatError("bad magic", 0)
        raise StoreFormatError("truncated header", len(data))
    magic, version, dim = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise StoreFormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise StoreFormatError(f"unsupported version {version}", 4)
    if dim == 0:
        raise StoreFormatError("dimension is zero", 8)
    payload = 8 * dim
    ids = []
    rows = []
    off = _HEADER.size
    while off < len(data):
        if off + _IDLEN.size > len(data):
            raise StoreFormatError("truncated id length", off)
        (n,) = _IDLEN.unpack_from(data, off)
        off += _IDLEN.size
        if off + n > len(data):
            raise StoreFormatError("truncated id", off)
        try:
            ids.append(data[off:off + n].decode("utf-8"))
        except UnicodeDecodeError:
            raise StoreFormatError("id is not valid UTF-8", off) from None
        off += n
        if off + payload > len(data):
            raise StoreFormatError(f"truncated vector (need {payload} bytes, have {len(data) - off})", off)
        rows.append(np.frombuffer(data, dtype="<f8", count=dim, offset=off))
        off += payload
    vectors = np.vstack(rows).astype(np.float64) if rows else np.zeros((0, dim))
    try:
        return Embeddings(tuple(ids), vectors)
    except ValueError as exc:
        raise StoreFormatError(str(exc), _HEADER.size) from None


def parse_text_store(lines: Sequence[str]) -> Embeddings:
    ids = []
    rows = []
    dim = None
    for lineno, line in enumerate(lines, start=1):
        fields = line.split()
        if not fields:
            continue
        try:
            values = [float(x) for x in fields[1:]]
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if dim is None:
            dim = len(values)
        if len(values) != dim or dim == 0:
            raise ValueError(f"line {lineno}: expected {dim} components, got {len(values)}")
        ids.append(fields[0])
        rows.append(values)
    if not rows:
        return Embeddings.empty()
    return Embeddings(tuple(ids), np.array(rows, dtype=np.float64))


def format_text_store(emb: Embeddings) -> str:
    return "".join(
        face_id + " " + " ".join(repr(float(x)) for x in row) + "\n"
        for face_id, row in zip(emb.ids, emb.vectors)
    )


def load_embeddings(path, renormalize: bool = True) -> Embeddings:
    """Read a binary or text store from disk, renormalizing rows by default."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] == MAGIC:
        emb = read_store(data)
    else:
        emb = parse_text_store(data.decode("utf-8").splitlines())
    return emb.normalized() if renormalize and len(emb) else emb


def save_embeddings(path, emb: Embeddings) -> None:
    with open(path, "wb") as fh:
        fh.write(write_store(emb))
