"""Per-block PCA kernels: covariance, eigendecomposition, truncation, projection."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimMismatch, EigenFailure, KTooLarge, TooFewSamples

SIGN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class KernelBlock:
    """Truncated PCA basis for one local-cuboid position.

    ``basis`` is ``(V, K)`` with orthonormal columns ordered by descending
    eigenvalue. ``selected_indices`` locate the kept eigenpairs in the full
    spectrum listed in ascending order (the symmetric-solver convention).
    ``total_variance`` is the covariance trace when known; it is not
    serialized, so kernels loaded from disk carry ``None``.
    """

    mean: np.ndarray
    eigenvalues: np.ndarray
    basis: np.ndarray
    selected_indices: np.ndarray
    total_variance: float | None = None

    @property
    def input_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def retained_dim(self) -> int:
        return self.basis.shape[1]


def fit_block(samples, K: int) -> KernelBlock:
    """Fit a block from an ``(N, V)`` array of flattened local cuboids."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2:
        raise DimMismatch(f"samples must be (N, V), got shape {samples.shape}")
    stacked = fit_blocks(samples[None], K)
    return KernelBlock(
        mean=stacked["mean"][0],
        eigenvalues=stacked["eigenvalues"][0],
        basis=stacked["basis"][0],
        selected_indices=stacked["selected_indices"][0],
        total_variance=float(stacked["total_variance"][0]),
    )


def fit_blocks(samples: np.ndarray, K: int) -> dict[str, np.ndarray]:
    """Fit ``B`` independent blocks at once from ``(B, N, V)`` samples.

    Returns stacked arrays ``mean (B, V)``, ``eigenvalues (B, K)``,
    ``basis (B, V, K)``, ``selected_indices (B, K)`` and ``total_variance (B,)``.
    """
    samples = np.asarray(samples, dtype=np.float64)
    B, N, V = samples.shape
    if N < 2:
        raise TooFewSamples(f"need at least 2 samples per block, got {N}")
    if K < 1 or K > V:
        raise KTooLarge(f"retained dimension {K} must lie in [1, {V}]")

    mean = samples.mean(axis=1)
    centered = samples - mean[:, None, :]
    total = np.square(centered).sum(axis=(1, 2)) / N

    if N >= V:
        vals, vecs, idx = _eigh_route(centered, K)
    else:
        vals, vecs, idx = _svd_route(centered, K)

    return {
        "mean": mean,
        "eigenvalues": vals,
        "basis": _fix_signs(vecs),
        "selected_indices": idx,
        "total_variance": total,
    }


def _eigh_route(centered, K):
    B, N, V = centered.shape
    cov = np.matmul(centered.transpose(0, 2, 1), centered) / N
    cov = 0.5 * (cov + cov.transpose(0, 2, 1))
    try:
        w, A = np.linalg.eigh(cov)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from None
    # stable sort on -w: equal eigenvalues keep ascending solver index
    order = np.argsort(-w, axis=1, kind="stable")[:, :K]
    vals = np.take_along_axis(w, order, axis=1)
    vecs = np.take_along_axis(A, order[:, None, :], axis=2)
    return np.maximum(vals, 0.0), vecs, order


def _svd_route(centered, K):
    # Rank-deficient case (N < V): the nonzero spectrum comes from a thin SVD of
    # the centered data; the remaining eigenvalues are exactly zero and any
    # orthonormal basis of the null space is a valid set of eigenvectors.
    B, N, V = centered.shape
    try:
        _, s, vt = np.linalg.svd(centered, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from None
    lam = s**2 / N
    r = vt.shape[1]
    vals = np.zeros((B, K))
    vecs = np.empty((B, V, K))
    take = min(K, r)
    vals[:, :take] = lam[:, :take]
    vecs[:, :, :take] = vt[:, :take, :].transpose(0, 2, 1)
    if K > r:
        for b in range(B):
            vecs[b, :, r:] = _orthonormal_complement(vt[b].T, K - r)
    # descending rank q sits at position V-1-q of the ascending full spectrum
    idx = np.broadcast_to(V - 1 - np.arange(K), (B, K)).copy()
    return vals, vecs, idx


def _orthonormal_complement(U: np.ndarray, count: int) -> np.ndarray:
    """First ``count`` columns of an orthonormal basis for span(U)^perp.

    Uses the compact WY form ``Q = I - Y T Y^T`` of the Householder QR of
    ``U``; columns ``r:`` of ``Q`` are orthogonal to ``U``. Building only the
    needed columns keeps this O(V r count) instead of O(V^2 r).
    """
    V, r = U.shape
    (qr, tau), _ = scipy.linalg.qr(U, mode="raw")
    Y = np.tril(qr[:, :r], -1)
    Y[np.arange(r), np.arange(r)] = 1.0
    T = np.zeros((r, r))
    for i in range(r):
        T[i, i] = tau[i]
        if i:
            T[:i, i] = -tau[i] * (T[:i, :i] @ (Y[:, :i].T @ Y[:, i]))
    cols = np.arange(r, r + count)
    Q = -(Y @ (T @ Y[cols].T))
    Q[cols, np.arange(count)] += 1.0
    return Q


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Flip each column so its first component above ``SIGN_TOL`` is positive."""
    mask = np.abs(vecs) > SIGN_TOL
    first = np.argmax(mask, axis=-2)
    lead = np.take_along_axis(vecs, first[..., None, :], axis=-2)[..., 0, :]
    signs = np.where(lead < 0, -1.0, 1.0)
    return vecs * signs[..., None, :]


def project(block: KernelBlock, f) -> np.ndarray:
    """Coefficients ``B^T f``; the raw vector is projected without mean removal."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape[-1] != block.input_dim:
        raise DimMismatch(f"expected length {block.input_dim}, got {f.shape[-1]}")
    return f @ block.basis


def backproject(block: KernelBlock, g) -> np.ndarray:
    # pinv(B^T) == B for orthonormal columns
    g = np.asarray(g, dtype=np.float64)
    if g.shape[-1] != block.retained_dim:
        raise DimMismatch(f"expected length {block.retained_dim}, got {g.shape[-1]}")
    return g @ block.basis.T


def retained_variance(block: KernelBlock) -> float:
    return float(block.eigenvalues.sum())
