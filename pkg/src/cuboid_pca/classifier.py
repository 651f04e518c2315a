"""Gaussian MAP classifier with a pooled (shared) covariance.

With one covariance shared by every class the log-joint
``ln p(x | C_m) + ln P(C_m)`` differs between classes only by the linear
score ``w_m . x + b_m``, so prediction, ranking and posteriors all come from
those scores.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimMismatch, EmptyClass, IllConditioned, KOutOfRange, SingleClass

RIDGE = 1e-6
COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class LdaModel:
    labels: tuple
    counts: np.ndarray  # (M,) training samples per class
    means: np.ndarray  # (M, D)
    pooled_cov: np.ndarray  # (D, D), before the ridge
    weights: np.ndarray  # (M, D)
    biases: np.ndarray  # (M,)

    @property
    def n_total(self) -> int:
        return int(self.counts.sum())

    @property
    def priors(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    @property
    def feature_dim(self) -> int:
        return self.means.shape[1]

    @property
    def ridge(self) -> float:
        return ridge_for(self.pooled_cov)

    def effective_cov(self) -> np.ndarray:
        """The covariance actually inverted: pooled plus ridge on the diagonal."""
        D = self.feature_dim
        return self.pooled_cov + self.ridge * np.eye(D)


def ridge_for(cov: np.ndarray) -> float:
    D = cov.shape[0]
    return RIDGE * float(np.trace(cov)) / D


def class_stats(features, labels):
    """Per-class ``(labels, counts, means, covariances)`` with 1/n_m covariances."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise DimMismatch(f"features must be (N, D), got shape {X.shape}")
    labels = list(labels)
    if len(labels) != X.shape[0]:
        raise DimMismatch(f"{len(labels)} labels for {X.shape[0]} feature rows")
    classes = tuple(sorted(set(labels)))
    lab = np.empty(len(labels), dtype=np.int64)
    index = {c: m for m, c in enumerate(classes)}
    for n, c in enumerate(labels):
        lab[n] = index[c]
    counts = np.bincount(lab, minlength=len(classes))
    means = np.zeros((len(classes), X.shape[1]))
    covs = np.zeros((len(classes), X.shape[1], X.shape[1]))
    for m in range(len(classes)):
        Xm = X[lab == m]
        if len(Xm) == 0:
            raise EmptyClass(f"class {classes[m]!r} has no samples")
        means[m] = Xm.mean(axis=0)
        Z = Xm - means[m]
        covs[m] = Z.T @ Z / len(Xm)
    return classes, counts, means, covs


def fit_lda(features, labels) -> LdaModel:
    classes, counts, means, covs = class_stats(features, labels)
    if len(classes) < 2:
        raise SingleClass(f"need at least 2 classes, got {len(classes)}")
    priors = counts / counts.sum()
    pooled = np.einsum("m,mij->ij", priors, covs)
    pooled = 0.5 * (pooled + pooled.T)
    D = pooled.shape[0]
    reg = pooled + ridge_for(pooled) * np.eye(D)
    try:
        cho = scipy.linalg.cho_factor(reg)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"pooled covariance is not positive definite: {exc}") from None
    w = np.linalg.eigvalsh(reg)
    if w[0] <= 0 or w[-1] / w[0] > COND_LIMIT:
        warnings.warn(f"pooled covariance condition number {w[-1] / w[0]:.3g} exceeds {COND_LIMIT:g}", IllConditioned)
    weights = scipy.linalg.cho_solve(cho, means.T).T
    biases = -0.5 * np.einsum("md,md->m", weights, means) + np.log(priors)
    return LdaModel(classes, counts, means, pooled, weights, biases)


def _check(model: LdaModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.feature_dim or x.ndim > 2:
        raise DimMismatch(f"expected feature length {model.feature_dim}, got shape {x.shape}")
    return x


def score(model: LdaModel, x) -> np.ndarray:
    """Linear scores ``w_m . x + b_m``; ``(M,)`` for one vector, ``(N, M)`` for a batch."""
    x = _check(model, x)
    return x @ model.weights.T + model.biases


def predict(model: LdaModel, x):
    """Highest-scoring label; ties go to the earliest class in ``model.labels``."""
    s = score(model, x)
    idx = np.argmax(s, axis=-1)
    if s.ndim == 1:
        return model.labels[int(idx)]
    return [model.labels[i] for i in idx]


def posterior(model: LdaModel, x) -> np.ndarray:
    s = score(model, x)
    s = s - s.max(axis=-1, keepdims=True)
    p = np.exp(s)
    return p / p.sum(axis=-1, keepdims=True)


def rank(model: LdaModel, x) -> np.ndarray:
    """Class indices by descending score, ties in label order. Shape matches ``score``."""
    s = score(model, x)
    return np.argsort(-s, axis=-1, kind="stable")


def top_k(model: LdaModel, x, k: int) -> list[tuple]:
    """The ``k`` best ``(label, probability)`` pairs for one feature vector."""
    M = len(model.labels)
    if not 1 <= k <= M:
        raise KOutOfRange(f"k={k} outside [1, {M}]")
    x = _check(model, x)
    if x.ndim != 1:
        raise DimMismatch("top_k takes a single feature vector")
    order = rank(model, x)[:k]
    p = posterior(model, x)
    return [(model.labels[i], float(p[i])) for i in order]


def topk_accuracy(model: LdaModel, features, labels, ks=(1, 3, 5)) -> dict[int, float]:
    """Fraction of rows whose true label is among the ``k`` best, for each ``k``."""
    order = rank(model, np.atleast_2d(features))
    index = {c: m for m, c in enumerate(model.labels)}
    truth = np.array([index.get(c, -1) for c in labels])
    hit_rank = np.full(len(truth), np.inf)
    rows, pos = np.nonzero(order == truth[:, None])
    hit_rank[rows] = pos
    return {k: float(np.mean(hit_rank < k)) for k in ks}
