"""Procedural labelled image sets for demos and tests.

Each class is an oval "face" with a few class-specific Gaussian blobs
(position, width and colour fixed per class); samples jitter the blobs and add
pixel noise.
"""
from __future__ import annotations

import numpy as np


def _class_templates(n_classes, rng, n_blobs):
    templates = []
    for _ in range(n_classes):
        centers = rng.uniform(0.2, 0.8, size=(n_blobs, 2))
        widths = rng.uniform(0.05, 0.12, size=n_blobs)
        colours = rng.uniform(-90, 90, size=(n_blobs, 3))
        templates.append((centers, widths, colours))
    return templates


def face_like_images(
    n_classes: int = 10,
    per_class: int = 70,
    size: int = 64,
    channels: int = 3,
    noise: float = 12.0,
    jitter: float = 0.02,
    n_blobs: int = 4,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(images (N, size, size, channels), labels (N,))`` with values in [0, 255].

    Samples are grouped by class: the first ``per_class`` rows are class 0, and so on.
    """
    rng = np.random.default_rng(seed)
    templates = _class_templates(n_classes, rng, n_blobs)
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
    face = np.exp(-(((yy - 0.5) / 0.42) ** 2 + ((xx - 0.5) / 0.33) ** 2) ** 2)
    base = 40 + 120 * face[..., None] * np.array([1.0, 0.85, 0.7])[:channels]

    images = np.empty((n_classes * per_class, size, size, channels))
    labels = np.repeat(np.arange(n_classes), per_class)
    for n, m in enumerate(labels):
        centers, widths, colours = templates[m]
        img = base.copy()
        shift = rng.normal(0, jitter, size=centers.shape)
        for (cy, cx), w, col in zip(centers + shift, widths, colours):
            blob = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * w * w))
            img += blob[..., None] * col[:channels]
        img *= rng.uniform(0.9, 1.1)
        img += rng.normal(0, noise, size=img.shape)
        images[n] = img
    return np.clip(images, 0, 255), labels


def split_per_class(labels: np.ndarray, n_train: int) -> tuple[np.ndarray, np.ndarray]:
    """Boolean train/test masks taking the first ``n_train`` samples of every class."""
    train = np.zeros(len(labels), dtype=bool)
    for m in np.unique(labels):
        train[np.flatnonzero(labels == m)[:n_train]] = True
    return train, ~train
