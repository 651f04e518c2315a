"""Manifests, image loading and the preprocessing applied before the transform."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, DuplicatePath, ParseError, UnsupportedFormat
from .reconstruction import equalize_histogram

SUPPORTED_FORMATS = {"PNG", "PPM"}  # Pillow reports PGM files as PPM


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    label: str


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def labels(self) -> list[str]:
        return [e.label for e in self.entries]


@dataclass(eq=False)
class LabeledImage:
    label: str
    pixels: np.ndarray  # (I, J, C) float64 in [0, 255]


def load_manifest(path) -> Manifest:
    """Read a ``path,label`` CSV; relative paths resolve against the manifest's folder."""
    path = Path(path)
    base = path.parent
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty file, expected header 'path,label'", 1)
    if [c.strip() for c in rows[0]] != ["path", "label"]:
        raise ParseError(f"expected header 'path,label', got {rows[0]!r}", 1)
    entries = []
    seen = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", lineno)
        p, label = row[0].strip(), row[1].strip()
        if not p or not label:
            raise ParseError("empty path or label", lineno)
        full = Path(p) if Path(p).is_absolute() else base / p
        key = full.resolve()
        if key in seen:
            raise DuplicatePath(f"{p!r} already listed on line {seen[key]}", lineno)
        seen[key] = lineno
        entries.append(ManifestEntry(full, label))
    return Manifest(tuple(entries))


def write_manifest(path, entries) -> None:
    """Write ``(path, label)`` pairs as a manifest CSV."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "label"])
        for p, label in entries:
            w.writerow([str(p), label])


def load_image(path, target_dims: tuple[int, int], channels: int = 3) -> np.ndarray:
    """Decode a PNG/PGM/PPM file, resize bilinearly to ``target_dims`` and split planes.

    Returns ``(I, J, channels)`` float64 with values in [0, 255]. An image that
    already has the target size is not resampled.
    """
    try:
        with Image.open(path) as im:
            if im.format not in SUPPORTED_FORMATS:
                raise UnsupportedFormat(f"{path}: format {im.format} is not PNG/PGM/PPM")
            im = im.convert("RGB" if channels == 3 else "L")
            I, J = target_dims
            if im.size != (J, I):
                im = im.resize((J, I), Image.BILINEAR)
            arr = np.asarray(im, dtype=np.float64)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DecodeError(f"{path}: {exc}") from None
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return np.clip(arr, 0.0, 255.0)


def save_image(path, pixels) -> None:
    """Write an ``(I, J, C)`` array as an 8-bit image (rounded and clipped)."""
    arr = np.clip(np.rint(np.asarray(pixels, dtype=np.float64)), 0, 255).astype(np.uint8)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    Image.fromarray(arr).save(path)


def preprocess(img):
    """Equalize every colour plane independently.

    Accepts an ``(..., I, J, C)`` array or a :class:`LabeledImage`.
    """
    if isinstance(img, LabeledImage):
        return LabeledImage(img.label, preprocess(img.pixels))
    arr = np.asarray(img, dtype=np.float64)
    out = np.empty_like(arr)
    for idx in np.ndindex(*arr.shape[:-3]):
        for c in range(arr.shape[-1]):
            out[idx + (..., c)] = equalize_histogram(arr[idx + (..., c)])
    return out


def augment_flips(images: list[LabeledImage]) -> list[LabeledImage]:
    """Originals followed by their horizontal mirrors, labels kept."""
    mirrored = [LabeledImage(im.label, im.pixels[:, ::-1].copy()) for im in images]
    return list(images) + mirrored


def load_dataset(manifest: Manifest, target_dims, channels: int = 3, equalize: bool = True) -> list[LabeledImage]:
    out = []
    for e in manifest:
        px = load_image(e.path, target_dims, channels)
        out.append(LabeledImage(e.label, preprocess(px) if equalize else px))
    return out


def stack(images: list[LabeledImage]) -> tuple[np.ndarray, list[str]]:
    """``(N, I, J, C)`` pixel stack and the matching label list."""
    if not images:
        raise ValueError("no images")
    return np.stack([im.pixels for im in images]), [im.label for im in images]
