"""Checks on extracted features: decorrelation, Gaussianity, eigen-spectra."""
from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DimMismatch, GroupTooSmall, TooFewSamples, ZeroVarianceFeature
from .pipeline import TransformModel

HIST_BINS = 64
MIN_GROUP = 8


def correlation_matrix(fm) -> np.ndarray:
    """Pearson correlation between the columns of an ``(N, D)`` feature matrix.

    Rows and columns of zero-variance features are NaN (a
    :class:`ZeroVarianceFeature` warning names them).
    """
    X = np.asarray(fm, dtype=np.float64)
    if X.ndim != 2:
        raise DimMismatch(f"feature matrix must be (N, D), got shape {X.shape}")
    if X.shape[0] < 2:
        raise TooFewSamples("correlation needs at least 2 samples")
    Z = X - X.mean(axis=0)
    cross = Z.T @ Z
    ss = np.diag(cross).copy()
    dead = ss <= 0
    if dead.any():
        warnings.warn(ZeroVarianceFeature(np.flatnonzero(dead)))
    norm = np.sqrt(np.where(dead, np.nan, ss))
    rho = cross / np.outer(norm, norm)
    np.fill_diagonal(rho, np.where(dead, np.nan, 1.0))
    return np.clip(rho, -1.0, 1.0)


def max_offdiagonal(rho: np.ndarray) -> float:
    """Largest ``|rho_ij|`` with ``i != j``, ignoring NaN entries."""
    off = np.abs(rho[~np.eye(rho.shape[0], dtype=bool)])
    off = off[~np.isnan(off)]
    return float(off.max()) if off.size else 0.0


def channel_blocks(rho: np.ndarray, channels: int) -> list[np.ndarray]:
    """Per-plane diagonal blocks of a correlation matrix over concatenated features."""
    k = rho.shape[0] // channels
    return [rho[c * k : (c + 1) * k, c * k : (c + 1) * k] for c in range(channels)]


@dataclass
class FeatureMoments:
    group: object
    feature: int
    n: int
    mean: float
    std: float
    skewness: float
    excess_kurtosis: float
    skew_se: float
    kurtosis_se: float
    degenerate: bool
    hist_counts: np.ndarray
    hist_edges: np.ndarray

    @property
    def within_bands(self) -> bool:
        """Both moments inside four standard errors of their Gaussian values."""
        if self.degenerate:
            return False
        return abs(self.skewness) <= 4 * self.skew_se and abs(self.excess_kurtosis) <= 4 * self.kurtosis_se


def skew_se(n: int) -> float:
    return float(np.sqrt(6.0 * n * (n - 1) / ((n - 2) * (n + 1) * (n + 3))))


def kurtosis_se(n: int) -> float:
    return float(2 * skew_se(n) * np.sqrt((n * n - 1.0) / ((n - 3) * (n + 5))))


def gaussianity_report(fm, labels=None) -> list[FeatureMoments]:
    """Sample skewness, excess kurtosis and a 64-bin histogram per feature.

    With ``labels`` the statistics are computed separately for each class.
    Moments use the bias-corrected estimators (G1, G2); the standard errors
    are the matching exact small-sample formulas.
    """
    X = np.asarray(fm, dtype=np.float64)
    if X.ndim != 2:
        raise DimMismatch(f"feature matrix must be (N, D), got shape {X.shape}")
    if labels is None:
        groups = [(None, X)]
    else:
        labels = np.asarray(labels)
        groups = [(g, X[labels == g]) for g in sorted(set(labels.tolist()))]
    out = []
    for g, Xg in groups:
        n = Xg.shape[0]
        if n < MIN_GROUP:
            raise GroupTooSmall(f"group {g!r} has {n} samples, need {MIN_GROUP}")
        for d in range(X.shape[1]):
            col = Xg[:, d]
            counts, edges = np.histogram(col, bins=HIST_BINS)
            sd = float(col.std(ddof=1))
            degenerate = not sd > 1e-12 * max(1.0, abs(float(col.mean())))
            if degenerate:
                sk = ku = float("nan")
            else:
                sk = float(stats.skew(col, bias=False))
                ku = float(stats.kurtosis(col, bias=False))
            out.append(
                FeatureMoments(g, d, n, float(col.mean()), sd, sk, ku, skew_se(n), kurtosis_se(n), degenerate, counts, edges)
            )
    return out


@dataclass
class BlockSpectrum:
    channel: int
    stage: int  # 1-based
    row: int
    col: int
    eigenvalues: np.ndarray
    fraction: float | None  # retained / total variance, None when the total is unknown


def eigenspectrum_report(model: TransformModel) -> list[BlockSpectrum]:
    out = []
    for c, chain in enumerate(model.kernels):
        for p, st in enumerate(chain, start=1):
            for (i, j), blk in st.blocks():
                kept = float(blk.eigenvalues.sum())
                if blk.total_variance is not None:
                    total = blk.total_variance
                elif blk.retained_dim == blk.input_dim:
                    total = kept
                else:
                    total = None
                if total is None:
                    frac = None
                elif total > 0:
                    frac = min(kept / total, 1.0)
                else:
                    frac = 1.0  # no variance at all: nothing was discarded
                out.append(BlockSpectrum(c, p, i, j, blk.eigenvalues, frac))
    return out


def eigenspectrum_csv(report: list[BlockSpectrum]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["channel", "stage", "row", "col", "retained", "fraction", "eigenvalues"])
    for r in report:
        frac = "" if r.fraction is None else repr(r.fraction)
        w.writerow([r.channel, r.stage, r.row, r.col, len(r.eigenvalues), frac, " ".join(map(repr, r.eigenvalues.tolist()))])
    return buf.getvalue()


def gaussianity_csv(report: list[FeatureMoments]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["group", "feature", "n", "mean", "std", "skewness", "excess_kurtosis", "within_bands", "degenerate", "hist_lo", "hist_hi", "hist_counts"])
    for r in report:
        w.writerow([
            "" if r.group is None else r.group, r.feature, r.n, repr(r.mean), repr(r.std),
            repr(r.skewness), repr(r.excess_kurtosis), int(r.within_bands), int(r.degenerate),
            repr(float(r.hist_edges[0])), repr(float(r.hist_edges[-1])), " ".join(map(str, r.hist_counts.tolist())),
        ])
    return buf.getvalue()


def correlation_csv(rho: np.ndarray, channels: int = 1) -> str:
    """``metric,value`` summary: overall and per-plane maximum off-diagonal correlation."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "value"])
    w.writerow(["max_offdiag_all", repr(max_offdiagonal(rho))])
    for c, blk in enumerate(channel_blocks(rho, channels)):
        w.writerow([f"max_offdiag_channel{c}", repr(max_offdiagonal(blk))])
    return buf.getvalue()
