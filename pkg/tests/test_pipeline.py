import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuboid_pca import pipeline as pl
from cuboid_pca.errors import DimMismatch, ParseError, SpecInvalid, TooFewSamples

SMALL = pl.PipelineSpec((16, 16), 1, ((4, 4, 8), (2, 2, 16), (2, 2, 16)))


def kinds(violations):
    return [(v.stage, v.kind) for v in violations]


def test_setting3_valid():
    spec = pl.setting3()
    assert pl.validate_spec(spec) == []
    assert len(spec.stages) == 3
    assert spec.feature_dim == 270


def test_setting2_valid():
    spec = pl.PipelineSpec((64, 64), 3, ((4, 4, 16), (16, 16, 90)))
    assert pl.validate_spec(spec) == []


def test_non_divisible_side_length():
    spec = pl.PipelineSpec((64, 64), 1, ((3, 3, 1),))
    found = kinds(pl.validate_spec(spec))
    assert (1, "NonDivisible") in found


def test_other_violations():
    assert ("ProductMismatch" in [v.kind for v in pl.validate_spec(pl.PipelineSpec((64, 64), 1, ((8, 8, 4),)))])
    assert (1, "RetainedTooLarge") in kinds(pl.validate_spec(pl.PipelineSpec((8, 8), 1, ((8, 8, 65),))))
    assert (2, "RetainedTooLarge") in kinds(pl.validate_spec(pl.PipelineSpec((8, 8), 1, ((4, 4, 2), (2, 2, 9)))))
    assert (None, "BadChannels") in kinds(pl.validate_spec(pl.PipelineSpec((8, 8), 2, ((8, 8, 4),))))
    # every violation is reported, not just the first
    assert len(pl.validate_spec(pl.PipelineSpec((64, 64), 2, ((3, 3, 10),)))) >= 4


def test_spec_text_roundtrip():
    text = "# setting 3\ndims 64 64 channels 3\n8 8 16\n\n# middle\n4 4 64\n2 2 90\n"
    spec = pl.parse_spec(text)
    assert spec == pl.setting3()
    assert pl.parse_spec(pl.format_spec(spec)) == spec


@pytest.mark.parametrize(
    "text,line",
    [
        ("8 8 16\n", 1),
        ("dims 64 64 channels 3\n8 8\n", 2),
        ("dims 64 64 chans 3\n", 1),
        ("dims 64 64 channels 3\n8 x 16\n", 2),
        ("# nothing\n", None),
    ],
)
def test_spec_parse_errors(text, line):
    with pytest.raises(ParseError) as ei:
        pl.parse_spec(text)
    assert ei.value.line == line


def test_degenerate_identical_images():
    img = np.arange(64.0).reshape(8, 8)
    spec = pl.PipelineSpec((8, 8), 1, ((8, 8, 1),))
    m1 = pl.fit(np.stack([img, img]), spec)
    m2 = pl.fit(np.stack([img, img]), spec)
    blk = m1.kernels[0][0].block(0, 0)
    np.testing.assert_array_equal(blk.eigenvalues, [0.0])
    np.testing.assert_array_equal(blk.basis, m2.kernels[0][0].block(0, 0).basis)
    assert abs(np.linalg.norm(blk.basis) - 1) < 1e-12


def test_random_fit_orthonormal_blocks(rng):
    X = rng.uniform(0, 255, size=(50, 16, 16))
    model = pl.fit(X, SMALL)
    expected_grids = [(4, 4), (2, 2), (1, 1)]
    expected_v = [16, 32, 64]
    for p, st_ in enumerate(model.kernels[0]):
        assert st_.grid_dims == expected_grids[p]
        for _, blk in st_.blocks():
            assert blk.input_dim == expected_v[p]
            assert blk.retained_dim == SMALL.stages[p].retained
            assert np.abs(blk.basis.T @ blk.basis - np.eye(blk.retained_dim)).max() <= 1e-10


def test_fit_is_deterministic(rng):
    X = rng.uniform(0, 255, size=(20, 16, 16, 3))
    spec = pl.PipelineSpec((16, 16), 3, SMALL.stages)
    a, b = pl.fit(X, spec), pl.fit(X, spec)
    for ca, cb in zip(a.kernels, b.kernels):
        for sa, sb in zip(ca, cb):
            np.testing.assert_array_equal(sa.basis, sb.basis)


def test_channels_are_independent(rng):
    X = rng.uniform(0, 255, size=(20, 16, 16, 3))
    spec3 = pl.PipelineSpec((16, 16), 3, SMALL.stages)
    model = pl.fit(X, spec3)
    single = pl.fit(X[..., 1], SMALL)
    np.testing.assert_array_equal(model.kernels[1][2].basis, single.kernels[0][2].basis)
    x = pl.forward(model, X[0])
    np.testing.assert_array_equal(x[16:32], pl.forward(single, X[0, :, :, 1]))


def test_one_stage_full_rank_isometry(rng):
    spec = pl.PipelineSpec((4, 4), 1, ((4, 4, 16),))
    X = rng.uniform(0, 255, size=(30, 4, 4))
    model = pl.fit(X, spec)
    img = rng.uniform(0, 255, size=(4, 4))
    assert np.linalg.norm(pl.forward(model, img)) == pytest.approx(np.linalg.norm(img), abs=1e-9)


def test_zero_image_and_zero_features(rng):
    model = pl.fit(rng.uniform(0, 255, size=(20, 16, 16)), SMALL)
    np.testing.assert_array_equal(pl.forward(model, np.zeros((16, 16))), np.zeros(16))
    np.testing.assert_array_equal(pl.inverse(model, np.zeros(16)), np.zeros((16, 16, 1)))


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31))
def test_forward_and_inverse_linear(a, b, seed):
    rng = np.random.default_rng(seed)
    model = pl.fit(rng.uniform(0, 255, size=(12, 16, 16)), SMALL)
    P, Q = rng.uniform(0, 255, size=(2, 16, 16))
    lhs = pl.forward(model, a * P + b * Q)
    rhs = a * pl.forward(model, P) + b * pl.forward(model, Q)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9 * max(1.0, np.abs(rhs).max()))
    x, y = rng.normal(size=(2, 16))
    np.testing.assert_allclose(
        pl.inverse(model, a * x + b * y), a * pl.inverse(model, x) + b * pl.inverse(model, y), atol=1e-9
    )


def test_full_rank_perfect_reconstruction(rng):
    spec = pl.full_rank(SMALL)
    assert [s.retained for s in spec.stages] == [16, 64, 256]
    X = rng.uniform(0, 255, size=(30, 16, 16))
    model = pl.fit(X, spec)
    test = rng.uniform(0, 255, size=(5, 16, 16))
    rec = pl.inverse(model, pl.forward(model, test))
    assert np.abs(rec[..., 0] - test).max() <= 1e-8


def test_error_nonincreasing_in_final_dim(rng):
    # 4x4 toy: stage 1 full rank (2x2 blocks keep 4), stage 2 keeps K of 16
    X = rng.uniform(0, 255, size=(40, 4, 4))
    test = rng.uniform(0, 255, size=(10, 4, 4))
    errs = []
    for K in range(1, 17):
        model = pl.fit(X, pl.PipelineSpec((4, 4), 1, ((2, 2, 4), (2, 2, K))))
        rec = pl.inverse(model, pl.forward(model, test))[..., 0]
        errs.append(np.sum((rec - test) ** 2))
    assert all(b <= a * (1 + 1e-12) + 1e-9 for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-15 * errs[0] + 1e-12


def test_dimension_bookkeeping_and_space(rng):
    spec = pl.setting3(channels=1)
    X = rng.uniform(0, 255, size=(8, 64, 64))
    model = pl.fit(X, spec)
    cubes = pl.stage_cuboids(model, X)
    assert [c.shape[1:] for c in cubes] == [(64, 64, 1), (8, 8, 16), (2, 2, 64), (1, 1, 90)]
    assert spec.global_dims() == [(64, 64, 1), (8, 8, 16), (2, 2, 64), (1, 1, 90)]
    for I, J, K in spec.global_dims():
        assert I * J * K <= 64 * 64


def test_forward_shapes(rng):
    spec = pl.PipelineSpec((16, 16), 3, SMALL.stages)
    model = pl.fit(rng.uniform(0, 255, size=(10, 16, 16, 3)), spec)
    assert pl.forward(model, np.zeros((16, 16, 3))).shape == (48,)
    assert pl.forward(model, np.zeros((4, 16, 16, 3))).shape == (4, 48)
    assert pl.inverse(model, np.zeros(48)).shape == (16, 16, 3)
    assert pl.inverse(model, np.zeros((2, 48))).shape == (2, 16, 16, 3)


def test_errors(rng):
    with pytest.raises(SpecInvalid):
        pl.fit(rng.uniform(size=(5, 64, 64)), pl.PipelineSpec((64, 64), 1, ((3, 3, 1),)))
    with pytest.raises(TooFewSamples):
        pl.fit(rng.uniform(size=(1, 16, 16)), SMALL)
    with pytest.raises(DimMismatch):
        pl.fit(rng.uniform(size=(5, 8, 8)), SMALL)
    model = pl.fit(rng.uniform(size=(5, 16, 16)), SMALL)
    with pytest.raises(DimMismatch):
        pl.forward(model, np.zeros((16, 8)))
    with pytest.raises(DimMismatch):
        pl.inverse(model, np.zeros(15))
