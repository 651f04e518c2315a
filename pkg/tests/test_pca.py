import itertools

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from cuboid_pca.errors import DimMismatch, KTooLarge, TooFewSamples
from cuboid_pca.pca import backproject, fit_block, fit_blocks, project, retained_variance

TOY = np.array([[3.0, 1.0], [1.0, 3.0], [-3.0, -1.0], [-1.0, -3.0]])


def explicit_cov(samples):
    mu = samples.mean(axis=0)
    return sum(np.outer(x - mu, x - mu) for x in samples) / len(samples)


def test_toy_worked_example():
    # hand: mean 0, R = [[5,3],[3,5]], eigenpairs 8 -> (1,1)/sqrt2, 2 -> (1,-1)/sqrt2
    np.testing.assert_allclose(explicit_cov(TOY), [[5, 3], [3, 5]])
    blk = fit_block(TOY, 1)
    np.testing.assert_allclose(blk.mean, [0, 0], atol=1e-15)
    np.testing.assert_allclose(blk.eigenvalues, [8.0], rtol=1e-12)
    np.testing.assert_allclose(blk.basis[:, 0], [2**-0.5, 2**-0.5], rtol=1e-12)
    assert blk.total_variance == pytest.approx(10.0)
    assert retained_variance(blk) == pytest.approx(8.0)
    full = fit_block(TOY, 2)
    np.testing.assert_allclose(full.eigenvalues, [8.0, 2.0], rtol=1e-12)
    np.testing.assert_allclose(full.basis[:, 1], [2**-0.5, -(2**-0.5)], rtol=1e-12)


def test_project_examples(rng):
    blk = fit_block(TOY, 1)
    assert project(blk, [3.0, 1.0])[0] == pytest.approx(4 / np.sqrt(2), rel=1e-12)
    assert project(blk, [3.0, 1.0])[0] == pytest.approx(2.8284, abs=1e-4)
    np.testing.assert_array_equal(project(blk, np.zeros(2)), [0.0])
    samples = rng.normal(size=(40, 6))
    full = fit_block(samples, 6)
    f = rng.normal(size=6)
    assert np.linalg.norm(project(full, f)) == pytest.approx(np.linalg.norm(f), abs=1e-10)


def test_projection_skips_mean():
    shifted = TOY + np.array([10.0, -4.0])
    blk = fit_block(shifted, 1)
    f = np.array([1.0, 2.0])
    np.testing.assert_allclose(project(blk, f), blk.basis.T @ f)


def test_backproject_examples(rng):
    samples = rng.normal(size=(30, 5))
    full = fit_block(samples, 5)
    np.testing.assert_array_equal(backproject(full, np.zeros(5)), np.zeros(5))
    f = rng.normal(size=5)
    np.testing.assert_allclose(backproject(full, project(full, f)), f, atol=1e-10)

    part = fit_block(samples, 2)
    g = project(part, f)
    fhat = backproject(part, g)
    np.testing.assert_allclose(fhat, np.linalg.pinv(part.basis.T) @ g, atol=1e-12)
    resid = f - fhat
    assert np.abs(part.basis.T @ resid).max() <= 1e-9


def test_retained_variance_examples(rng):
    samples = rng.normal(size=(25, 4)) * [3, 2, 1, 0.5]
    vals = [retained_variance(fit_block(samples, k)) for k in range(1, 5)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(np.trace(explicit_cov(samples)), abs=1e-9)


def test_identical_samples_degenerate():
    samples = np.tile(np.array([1.0, 2.0, 3.0]), (4, 1))
    a = fit_block(samples, 2)
    b = fit_block(samples, 2)
    np.testing.assert_array_equal(a.eigenvalues, [0.0, 0.0])
    np.testing.assert_array_equal(a.basis, b.basis)
    # zero covariance: eigenvectors are the unit axes, ties by ascending index
    np.testing.assert_array_equal(a.basis, np.eye(3)[:, :2])
    np.testing.assert_array_equal(a.selected_indices, [0, 1])


def test_errors():
    with pytest.raises(TooFewSamples):
        fit_block(np.zeros((1, 3)), 1)
    with pytest.raises(KTooLarge):
        fit_block(np.zeros((5, 3)), 4)
    with pytest.raises(KTooLarge):
        fit_block(np.zeros((5, 3)), 0)
    blk = fit_block(TOY, 1)
    with pytest.raises(DimMismatch):
        project(blk, np.zeros(3))
    with pytest.raises(DimMismatch):
        backproject(blk, np.zeros(2))


def test_sign_convention(rng):
    blk = fit_block(rng.normal(size=(50, 8)), 8)
    for col in blk.basis.T:
        first = col[np.abs(col) > 1e-12][0]
        assert first > 0


def test_selected_indices_ascending_convention(rng):
    samples = rng.normal(size=(50, 4)) * [1, 4, 2, 3]
    blk = fit_block(samples, 4)
    full = np.sort(np.linalg.eigvalsh(explicit_cov(samples)))
    np.testing.assert_allclose(full[blk.selected_indices], blk.eigenvalues, rtol=1e-10)


def check_block_invariants(samples, blk):
    V, K = blk.basis.shape
    assert np.abs(blk.basis.T @ blk.basis - np.eye(K)).max() <= 1e-10
    assert np.all(blk.eigenvalues >= 0)
    assert np.all(np.diff(blk.eigenvalues) <= 0)
    R = explicit_cov(samples)
    for lam, b in zip(blk.eigenvalues, blk.basis.T):
        assert np.linalg.norm(R @ b - lam * b) <= 1e-8 * max(1.0, lam)


@pytest.mark.parametrize("N,V,K", [(40, 6, 3), (40, 6, 6), (5, 12, 3), (5, 12, 12), (3, 50, 20), (200, 16, 16)])
def test_invariants_both_solver_routes(rng, N, V, K):
    samples = rng.normal(size=(N, V)) * rng.uniform(0.1, 10, size=V) + 100
    blk = fit_block(samples, K)
    check_block_invariants(samples, blk)
    ref = np.sort(scipy.linalg.eigvalsh(explicit_cov(samples)))[::-1][:K]
    np.testing.assert_allclose(blk.eigenvalues, ref, atol=1e-9 * max(1, ref[0]))


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 30), st.integers(1, 6), st.integers(0, 2**31))
def test_truncation_optimal_by_subset_enumeration(N, V, seed):
    rng = np.random.default_rng(seed)
    samples = rng.normal(size=(N, V)) * rng.uniform(0.1, 5, size=V)
    spectrum = scipy.linalg.eigvalsh(explicit_cov(samples))
    for K in range(1, V + 1):
        best = max(sum(c) for c in itertools.combinations(spectrum, K))
        assert retained_variance(fit_block(samples, K)) == pytest.approx(best, rel=1e-9, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 60), st.integers(1, 10), st.integers(0, 2**31))
def test_projection_decorrelates(N, V, seed):
    rng = np.random.default_rng(seed)
    mix = rng.normal(size=(V, V))
    samples = rng.normal(size=(N, V)) @ mix + rng.normal(size=V) * 20
    K = min(V, N - 1)
    blk = fit_block(samples, K)
    check_block_invariants(samples, blk)
    g = project(blk, samples)
    C = np.cov(g.T, bias=True).reshape(K, K)
    scale = np.abs(np.diag(C)).max()
    off = C - np.diag(np.diag(C))
    assert np.abs(off).max() <= 1e-8 * max(scale, 1e-300) + 1e-12


def test_fit_blocks_matches_fit_block(rng):
    samples = rng.normal(size=(3, 20, 6))
    res = fit_blocks(samples, 4)
    for b in range(3):
        blk = fit_block(samples[b], 4)
        np.testing.assert_array_equal(res["basis"][b], blk.basis)
        np.testing.assert_array_equal(res["eigenvalues"][b], blk.eigenvalues)
