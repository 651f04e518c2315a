"""Turning raw inverse-transform output into a viewable image, plus loss metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import pipeline
from .errors import DimMismatch


def brightness_gap(original, raw_recon) -> float:
    """Mean of ``original - raw_recon`` over every pixel."""
    a = np.asarray(original, dtype=np.float64)
    b = np.asarray(raw_recon, dtype=np.float64)
    if a.shape != b.shape:
        raise DimMismatch(f"shape {a.shape} vs {b.shape}")
    return float(np.mean(a - b))


def equalize_histogram(img, levels: int = 256) -> np.ndarray:
    """Histogram equalization onto [0, 255].

    Values are clamped to [0, 255] and binned into ``levels`` equal-width bins;
    every pixel in bin ``b`` maps to ``255 * CDF(b)``, the fraction of pixels
    in bins ``<= b``. Equal inputs give equal outputs and the map is monotone.
    """
    x = np.clip(np.asarray(img, dtype=np.float64), 0.0, 255.0)
    bins = np.minimum(np.floor(x * (levels / 256.0)).astype(np.int64), levels - 1)
    counts = np.bincount(bins.ravel(), minlength=levels)
    cdf = np.cumsum(counts) / bins.size
    return 255.0 * cdf[bins]


def finalize_reconstruction(raw, h: float, levels: int = 256) -> np.ndarray:
    """Brightness-compensate a single plane by ``h``, then equalize."""
    shifted = np.clip(np.asarray(raw, dtype=np.float64) + h, 0.0, 255.0)
    return np.clip(equalize_histogram(shifted, levels), 0.0, 255.0)


def percent_deviation(original, recovered, scale: float = 255.0) -> float:
    """Root of summed squared error over the element count, as a percentage.

    Intensities are divided by ``scale`` first so the figure is dimensionless.
    """
    a = np.asarray(original, dtype=np.float64) / scale
    b = np.asarray(recovered, dtype=np.float64) / scale
    if a.shape != b.shape:
        raise DimMismatch(f"shape {a.shape} vs {b.shape}")
    return float(100.0 * np.sqrt(np.sum((b - a) ** 2)) / a.size)


def compression_ratio(spec: pipeline.PipelineSpec) -> float:
    I, J = spec.input_dims
    return I * J / spec.final_dim


@dataclass(eq=False)
class CompressedRecord:
    """Stored form of one image: per-plane coefficients and brightness gaps."""

    coefficients: np.ndarray  # (C, K^P)
    brightness: np.ndarray  # (C,)

    @property
    def channels(self) -> int:
        return self.coefficients.shape[0]

    @property
    def final_dim(self) -> int:
        return self.coefficients.shape[1]

    def features(self) -> np.ndarray:
        return self.coefficients.reshape(-1)


def compress(model: pipeline.TransformModel, image) -> CompressedRecord:
    """Forward-transform one ``(I, J, C)`` image and record each plane's brightness gap."""
    image = np.asarray(image, dtype=np.float64)
    x = pipeline.forward(model, image)
    if image.ndim == 2:
        image = image[..., None]
    raw = pipeline.inverse(model, x)
    C = model.spec.channels
    h = np.array([brightness_gap(image[..., c], raw[..., c]) for c in range(C)])
    return CompressedRecord(x.reshape(C, -1), h)


def decompress(model: pipeline.TransformModel, record: CompressedRecord, postprocess: bool = True) -> np.ndarray:
    """Rebuild an ``(I, J, C)`` image from a record.

    With ``postprocess`` each plane is brightness-compensated and equalized;
    without it only the brightness gap is added back.
    """
    spec = model.spec
    if record.channels != spec.channels or record.final_dim != spec.final_dim:
        raise DimMismatch(
            f"record has {record.channels}x{record.final_dim} coefficients, "
            f"model expects {spec.channels}x{spec.final_dim}"
        )
    raw = pipeline.inverse(model, record.features())
    out = np.empty_like(raw)
    for c in range(spec.channels):
        if postprocess:
            out[..., c] = finalize_reconstruction(raw[..., c], record.brightness[c])
        else:
            out[..., c] = raw[..., c] + record.brightness[c]
    return out
