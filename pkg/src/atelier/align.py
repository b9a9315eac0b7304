"""Face crop geometry: margin expansion, clamping and bilinear resize.

Images are numpy ``uint8`` arrays of shape ``(height, width)`` or
``(height, width, channels)`` with 1 or 3 channels, row-major.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

DEFAULT_MARGIN = 32
DEFAULT_OUTPUT_SIZE = 160


@dataclass(frozen=True)
class BBox:
    x1: int
    y1: int
    x2: int
    y2: int

    def __post_init__(self):
        if min(self.x1, self.y1) < 0:
            raise ValueError(f"negative coordinate in {self}")
        if self.x2 <= self.x1 or self.y2 <= self.y1:
            raise ValueError(f"degenerate box {self}")

    @property
    def width(self) -> int:
        return self.x2 - self.x1

    @property
    def height(self) -> int:
        return self.y2 - self.y1

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class Detection:
    painting_id: str
    face_index: int
    bbox: BBox

    @property
    def face_id(self) -> str:
        return face_id_for(self.painting_id, self.face_index)


@dataclass(frozen=True)
class FaceInstance:
    face_id: str
    painting_id: str
    bbox: BBox
    crop: np.ndarray

    def __post_init__(self):
        if self.crop.shape[:2] != (DEFAULT_OUTPUT_SIZE, DEFAULT_OUTPUT_SIZE):
            raise ValueError(f"crop must be {DEFAULT_OUTPUT_SIZE}x{DEFAULT_OUTPUT_SIZE}, got {self.crop.shape[:2]}")


def face_id_for(painting_id: str, face_index: int) -> str:
    return f"{painting_id}__{face_index}"


def expand_and_clamp(bbox: BBox, margin: int = DEFAULT_MARGIN, *, img_w: int, img_h: int) -> BBox:
    """Grow ``bbox`` by ``margin // 2`` on each side and clip it to the image.

    The margin is the total added to width and height, split evenly
    between opposite sides.
    """
    if margin < 0 or margin % 2:
        raise ValueError(f"margin must be a non-negative even integer, got {margin}")
    if img_w <= 0 or img_h <= 0:
        raise ValueError(f"invalid image size {img_w}x{img_h}")
    half = margin // 2
    x1 = max(bbox.x1 - half, 0)
    y1 = max(bbox.y1 - half, 0)
    x2 = min(bbox.x2 + half, img_w)
    y2 = min(bbox.y2 + half, img_h)
    if x2 <= x1 or y2 <= y1:
        raise ValueError(f"{bbox} lies outside the {img_w}x{img_h} image")
    return BBox(x1, y1, x2, y2)


def _axis_coords(n_in: int, n_out: int) -> np.ndarray:
    # corner-aligned: first and last output samples land on first and last input samples
    if n_out == 1:
        return np.array([(n_in - 1) / 2.0])
    return np.arange(n_out, dtype=np.float64) * ((n_in - 1) / (n_out - 1))


def _split(coords: np.ndarray, n_in: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lo = np.floor(coords).astype(np.intp)
    lo = np.clip(lo, 0, n_in - 1)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = coords - lo
    return lo, hi, frac


def crop_resize(image: np.ndarray, bbox: BBox, out_size: int = DEFAULT_OUTPUT_SIZE) -> np.ndarray:
    """Cut ``bbox`` out of ``image`` and resample it to ``out_size`` square.

    Bilinear interpolation with corner-aligned sampling; results are rounded
    half-to-even back to ``uint8``. When the region already has the output
    size the samples are copied unchanged.
    """
    if out_size < 1:
        raise ValueError(f"out_size must be >= 1, got {out_size}")
    img = np.asarray(image)
    if img.ndim not in (2, 3) or (img.ndim == 3 and img.shape[2] not in (1, 3)):
        raise ValueError(f"expected (H, W) or (H, W, 1|3) image, got shape {img.shape}")
    h, w = img.shape[:2]
    if bbox.x2 > w or bbox.y2 > h:
        raise ValueError(f"{bbox} exceeds image bounds {w}x{h}")

    region = img[bbox.y1:bbox.y2, bbox.x1:bbox.x2].astype(np.float64)
    rh, rw = region.shape[:2]
    if rh == out_size and rw == out_size:
        return img[bbox.y1:bbox.y2, bbox.x1:bbox.x2].astype(np.uint8, copy=True)

    y0, y1, fy = _split(_axis_coords(rh, out_size), rh)
    x0, x1, fx = _split(_axis_coords(rw, out_size), rw)
    if region.ndim == 3:
        fy = fy[:, None, None]
        fx = fx[None, :, None]
    else:
        fy = fy[:, None]
        fx = fx[None, :]

    top = region[y0][:, x0] * (1 - fx) + region[y0][:, x1] * fx
    bottom = region[y1][:, x0] * (1 - fx) + region[y1][:, x1] * fx
    out = top * (1 - fy) + bottom * fy
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def align_face(
    image: np.ndarray,
    detection: Detection,
    margin: int = DEFAULT_MARGIN,
) -> FaceInstance:
    h, w = np.asarray(image).shape[:2]
    box = expand_and_clamp(detection.bbox, margin, img_w=w, img_h=h)
    crop = crop_resize(image, box, DEFAULT_OUTPUT_SIZE)
    return FaceInstance(detection.face_id, detection.painting_id, box, crop)


def parse_detections(lines: Iterable[str]) -> list[Detection]:
    """Read the detections sidecar: one ``{painting_id, face_index, x1, y1, x2, y2}`` per line."""
    out = []
    seen = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            det = Detection(
                painting_id=str(obj["painting_id"]),
                face_index=int(obj["face_index"]),
                bbox=BBox(int(obj["x1"]), int(obj["y1"]), int(obj["x2"]), int(obj["y2"])),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"detections line {lineno}: {exc}") from None
        if det.face_id in seen:
            raise ValueError(f"detections line {lineno}: duplicate face {det.face_id!r}")
        seen.add(det.face_id)
        out.append(det)
    return out
