"""Cuboid reshapes the multi-stage transform is assembled from.

A cuboid is a float64 ndarray of shape ``(I, J, K)``: two spatial axes and one
spectral axis. A block grid is a 5-D array ``(rows, cols, l_i, l_j, l_k)``.
Every function also accepts leading batch axes, so a stack of ``N`` cuboids
``(N, I, J, K)`` goes through unchanged.

All linearizations are row-major over ``(i, j, k)``. Nothing here does
arithmetic on the values, so every roundtrip is bit-exact.
"""
from __future__ import annotations

import numpy as np

from .errors import DimMismatch, InconsistentBlockDims, LengthMismatch, NonDivisibleSideLength, RaggedGrid


def as_cuboid(data) -> np.ndarray:
    """Return ``data`` as a float64 ``(I, J, K)`` array, promoting 2-D input to ``K=1``."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise DimMismatch(f"a cuboid needs 3 axes, got shape {arr.shape}")
    if min(arr.shape) <= 0:
        raise DimMismatch(f"cuboid dims must be positive, got {arr.shape}")
    return arr


def partition(g: np.ndarray, l_i: int, l_j: int) -> np.ndarray:
    """Cut ``(..., I, J, K)`` into non-overlapping ``l_i x l_j x K`` blocks.

    Returns ``(..., I/l_i, J/l_j, l_i, l_j, K)``; block ``(a, b)`` covers rows
    ``a*l_i:(a+1)*l_i`` and columns ``b*l_j:(b+1)*l_j`` at full spectral depth.
    """
    g = np.asarray(g)
    if g.ndim < 3:
        raise DimMismatch(f"expected (..., I, J, K), got shape {g.shape}")
    *lead, I, J, K = g.shape
    if l_i <= 0 or l_j <= 0 or I % l_i or J % l_j:
        raise NonDivisibleSideLength(f"block ({l_i}, {l_j}) does not tile a {I}x{J} cuboid")
    n = len(lead)
    blocks = g.reshape(*lead, I // l_i, l_i, J // l_j, l_j, K)
    # (..., rows, l_i, cols, l_j, K) -> (..., rows, cols, l_i, l_j, K)
    return blocks.transpose(*range(n), n, n + 2, n + 1, n + 3, n + 4)


def assemble(grid: np.ndarray) -> np.ndarray:
    """Inverse of :func:`partition`."""
    try:
        grid = np.asarray(grid)
    except ValueError as exc:
        raise InconsistentBlockDims(str(exc)) from None
    if grid.ndim < 5 or grid.dtype == object:
        raise InconsistentBlockDims(f"expected (..., rows, cols, l_i, l_j, l_k), got shape {grid.shape}")
    *lead, rows, cols, l_i, l_j, K = grid.shape
    n = len(lead)
    g = grid.transpose(*range(n), n, n + 2, n + 1, n + 3, n + 4)
    return g.reshape(*lead, rows * l_i, cols * l_j, K)


def flatten(local: np.ndarray) -> np.ndarray:
    """Linearize the trailing ``(l_i, l_j, l_k)`` axes into one vector axis."""
    local = np.asarray(local)
    if local.ndim < 3:
        raise DimMismatch(f"expected (..., l_i, l_j, l_k), got shape {local.shape}")
    return local.reshape(*local.shape[:-3], -1)


def unflatten(v: np.ndarray, dims: tuple[int, int, int]) -> np.ndarray:
    v = np.asarray(v)
    l_i, l_j, l_k = dims
    if v.ndim < 1 or v.shape[-1] != l_i * l_j * l_k:
        raise LengthMismatch(f"vector length {v.shape[-1:]} does not match dims {tuple(dims)}")
    return v.reshape(*v.shape[:-1], l_i, l_j, l_k)


def spectral_stack(coeffs) -> np.ndarray:
    """Place a rows x cols grid of K-vectors along the spectral axis.

    With numpy the grid is already ``(rows, cols, K)``; this validates that the
    grid is rectangular and every vector has the same length.
    """
    try:
        arr = np.asarray(coeffs, dtype=np.float64)
    except ValueError as exc:
        raise RaggedGrid(str(exc)) from None
    if arr.ndim < 3:
        raise RaggedGrid(f"expected a rows x cols grid of vectors, got shape {arr.shape}")
    return arr


def spectral_unstack(g: np.ndarray) -> np.ndarray:
    """Inverse of :func:`spectral_stack`: ``out[i, j]`` is the K-vector at ``(i, j)``."""
    g = np.asarray(g)
    if g.ndim < 3:
        raise DimMismatch(f"expected (..., I, J, K), got shape {g.shape}")
    return g
