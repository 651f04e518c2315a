"""Multi-stage forward transform, its inverse, and stage-spec handling.

Images are ``(I, J, C)`` float arrays (``C`` colour planes) or stacks
``(N, I, J, C)``. Each colour plane runs through its own independent chain of
stages; the final ``1 x 1 x K^P`` coefficients of the planes are concatenated
in plane order (R, G, B for colour input).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cuboid
from .errors import DimMismatch, ParseError, SpecInvalid, TooFewSamples
from .pca import KernelBlock, fit_blocks


@dataclass(frozen=True)
class StageSpec:
    l_i: int
    l_j: int
    retained: int


@dataclass(frozen=True)
class PipelineSpec:
    input_dims: tuple[int, int]
    channels: int
    stages: tuple[StageSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "input_dims", tuple(int(d) for d in self.input_dims))
        object.__setattr__(
            self, "stages", tuple(s if isinstance(s, StageSpec) else StageSpec(*s) for s in self.stages)
        )

    @property
    def final_dim(self) -> int:
        return self.stages[-1].retained

    @property
    def feature_dim(self) -> int:
        return self.channels * self.final_dim

    def global_dims(self) -> list[tuple[int, int, int]]:
        """Global cuboid dims ``(I^p, J^p, K^p)`` for p = 0..P. Assumes a valid spec."""
        I, J = self.input_dims
        dims = [(I, J, 1)]
        for s in self.stages:
            I, J = I // s.l_i, J // s.l_j
            dims.append((I, J, s.retained))
        return dims


def setting3(channels: int = 3, final: int = 90) -> PipelineSpec:
    """Three-stage 64x64 layout: 8x8, then 4x4, then 2x2 blocks, keeping 16, 64, ``final``."""
    return PipelineSpec((64, 64), channels, ((8, 8, 16), (4, 4, 64), (2, 2, final)))


def full_rank(spec: PipelineSpec) -> PipelineSpec:
    """Same tiling as ``spec`` but every stage keeps its whole block volume."""
    k = 1
    stages = []
    for s in spec.stages:
        k = s.l_i * s.l_j * k
        stages.append(StageSpec(s.l_i, s.l_j, k))
    return PipelineSpec(spec.input_dims, spec.channels, tuple(stages))


@dataclass(frozen=True)
class Violation:
    stage: int | None  # 1-based; None for pipeline-wide problems
    kind: str
    message: str

    def __str__(self):
        where = "pipeline" if self.stage is None else f"stage {self.stage}"
        return f"{where}: {self.kind}: {self.message}"


def validate_spec(spec: PipelineSpec) -> list[Violation]:
    """Every constraint violation in ``spec``; an empty list means the spec is usable."""
    out = []
    if spec.channels not in (1, 3):
        out.append(Violation(None, "BadChannels", f"channels must be 1 or 3, got {spec.channels}"))
    if not spec.stages:
        out.append(Violation(None, "NoStages", "at least one stage is required"))
        return out
    I, J = spec.input_dims
    if I <= 0 or J <= 0:
        out.append(Violation(None, "BadDims", f"input dims must be positive, got {spec.input_dims}"))
        return out
    k = 1
    for p, s in enumerate(spec.stages, start=1):
        if min(s.l_i, s.l_j, s.retained) <= 0:
            out.append(Violation(p, "NonPositive", f"fields must be positive, got {s}"))
            return out
        if I % s.l_i:
            out.append(Violation(p, "NonDivisible", f"l_i={s.l_i} does not divide I={I}"))
        if J % s.l_j:
            out.append(Violation(p, "NonDivisible", f"l_j={s.l_j} does not divide J={J}"))
        volume = s.l_i * s.l_j * k
        if s.retained > volume:
            out.append(Violation(p, "RetainedTooLarge", f"retained={s.retained} exceeds block volume {volume}"))
        I, J, k = I // s.l_i, J // s.l_j, s.retained
    li = int(np.prod([s.l_i for s in spec.stages]))
    lj = int(np.prod([s.l_j for s in spec.stages]))
    if li != spec.input_dims[0] or lj != spec.input_dims[1]:
        out.append(
            Violation(
                None,
                "ProductMismatch",
                f"side-length products ({li}, {lj}) must equal input dims {spec.input_dims}",
            )
        )
    return out


def parse_spec(text: str) -> PipelineSpec:
    """Parse the stage-spec text format.

    ``dims I J channels C`` header, then one ``l_i l_j retained`` line per
    stage; ``#`` starts a comment line.
    """
    dims = channels = None
    stages = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "dims":
            if dims is not None:
                raise ParseError("duplicate dims header", lineno)
            if len(parts) != 5 or parts[3] != "channels":
                raise ParseError("expected 'dims I J channels C'", lineno)
            try:
                dims = (int(parts[1]), int(parts[2]))
                channels = int(parts[4])
            except ValueError:
                raise ParseError("non-integer value in dims header", lineno) from None
            continue
        if dims is None:
            raise ParseError("stage line before the dims header", lineno)
        if len(parts) != 3:
            raise ParseError("expected 'l_i l_j retained'", lineno)
        try:
            stages.append(StageSpec(*(int(x) for x in parts)))
        except ValueError:
            raise ParseError("non-integer value in stage line", lineno) from None
    if dims is None:
        raise ParseError("missing 'dims I J channels C' header")
    return PipelineSpec(dims, channels, tuple(stages))


def read_spec(path) -> PipelineSpec:
    return parse_spec(Path(path).read_text(encoding="utf-8"))


def format_spec(spec: PipelineSpec) -> str:
    lines = [f"dims {spec.input_dims[0]} {spec.input_dims[1]} channels {spec.channels}"]
    lines += [f"{s.l_i} {s.l_j} {s.retained}" for s in spec.stages]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class StageKernels:
    """All kernels of one stage for one colour plane, stacked over the block grid.

    Shapes: ``mean (I^p, J^p, V)``, ``eigenvalues (I^p, J^p, K)``,
    ``basis (I^p, J^p, V, K)``, ``selected_indices (I^p, J^p, K)``.
    """

    block_dims: tuple[int, int, int]
    mean: np.ndarray
    eigenvalues: np.ndarray
    basis: np.ndarray
    selected_indices: np.ndarray
    total_variance: np.ndarray | None = None

    @property
    def grid_dims(self) -> tuple[int, int]:
        return self.basis.shape[:2]

    def block(self, i: int, j: int) -> KernelBlock:
        tv = None if self.total_variance is None else float(self.total_variance[i, j])
        return KernelBlock(
            self.mean[i, j], self.eigenvalues[i, j], self.basis[i, j], self.selected_indices[i, j], tv
        )

    def blocks(self):
        rows, cols = self.grid_dims
        for i in range(rows):
            for j in range(cols):
                yield (i, j), self.block(i, j)


@dataclass(frozen=True, eq=False)
class TransformModel:
    spec: PipelineSpec
    kernels: list[list[StageKernels]] = field(repr=False)  # [channel][stage]


def _as_batch(images, spec: PipelineSpec) -> tuple[np.ndarray, bool]:
    """Coerce to ``(N, I, J, C)``; the flag says whether a single image came in."""
    arr = np.asarray(images, dtype=np.float64)
    I, J = spec.input_dims
    C = spec.channels
    if arr.ndim == 2 and C == 1:
        return arr[None, :, :, None], True
    if arr.ndim == 3:
        if arr.shape == (I, J, C):
            return arr[None], True
        if C == 1 and arr.shape[1:] == (I, J):
            return arr[..., None], False
    if arr.ndim == 4 and arr.shape[1:] == (I, J, C):
        return arr, False
    raise DimMismatch(f"images of shape {arr.shape} do not match spec dims {(I, J)} with {C} channel(s)")


def fit(images, spec: PipelineSpec) -> TransformModel:
    """Learn every stage's kernels from a training stack.

    Stages are fitted in order; each stage's blocks are fitted on the
    coefficients produced by the already-fitted earlier stages.
    """
    problems = validate_spec(spec)
    if problems:
        raise SpecInvalid(problems)
    X, _ = _as_batch(images, spec)
    N = X.shape[0]
    if N < 2:
        raise TooFewSamples(f"fitting needs at least 2 images, got {N}")
    kernels = []
    for c in range(spec.channels):
        G = X[..., c : c + 1]
        chain = []
        for s in spec.stages:
            f = cuboid.flatten(cuboid.partition(G, s.l_i, s.l_j))  # (N, Ip, Jp, V)
            _, Ip, Jp, V = f.shape
            samples = f.transpose(1, 2, 0, 3).reshape(Ip * Jp, N, V)
            res = fit_blocks(samples, s.retained)
            st = StageKernels(
                block_dims=(s.l_i, s.l_j, G.shape[-1]),
                mean=res["mean"].reshape(Ip, Jp, V),
                eigenvalues=res["eigenvalues"].reshape(Ip, Jp, -1),
                basis=res["basis"].reshape(Ip, Jp, V, -1),
                selected_indices=res["selected_indices"].reshape(Ip, Jp, -1),
                total_variance=res["total_variance"].reshape(Ip, Jp),
            )
            chain.append(st)
            G = _project(st, f)
        kernels.append(chain)
    return TransformModel(spec, kernels)


def _project(st: StageKernels, f: np.ndarray) -> np.ndarray:
    # (Ip, Jp, N, V) @ (Ip, Jp, V, K) -> (N, Ip, Jp, K): the next global cuboids
    g = np.matmul(f.transpose(1, 2, 0, 3), st.basis)
    return cuboid.spectral_stack(g.transpose(2, 0, 1, 3))


def stage_cuboids(model: TransformModel, images, channel: int = 0) -> list[np.ndarray]:
    """Global cuboids ``G^0 .. G^P`` of one colour plane, each ``(N, I^p, J^p, K^p)``."""
    X, _ = _as_batch(images, model.spec)
    G = X[..., channel : channel + 1]
    out = [G]
    for s, st in zip(model.spec.stages, model.kernels[channel]):
        G = _project(st, cuboid.flatten(cuboid.partition(G, s.l_i, s.l_j)))
        out.append(G)
    return out


def forward(model: TransformModel, images) -> np.ndarray:
    """Feature vectors: ``(C*K^P,)`` for one image, ``(N, C*K^P)`` for a stack."""
    X, single = _as_batch(images, model.spec)
    feats = []
    for c in range(model.spec.channels):
        G = stage_cuboids(model, X, c)[-1]
        feats.append(G.reshape(X.shape[0], -1))
    x = np.concatenate(feats, axis=1)
    return x[0] if single else x


def inverse(model: TransformModel, features) -> np.ndarray:
    """Raw reconstruction from features, before any brightness or contrast fix-up.

    Returns ``(I, J, C)`` for one feature vector, ``(N, I, J, C)`` for a stack.
    """
    spec = model.spec
    x = np.asarray(features, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    KP = spec.final_dim
    if x.ndim != 2 or x.shape[1] != spec.channels * KP:
        raise DimMismatch(f"expected {spec.channels * KP} features, got shape {np.shape(features)}")
    N = x.shape[0]
    planes = []
    for c in range(spec.channels):
        G = x[:, c * KP : (c + 1) * KP].reshape(N, 1, 1, KP)
        for st in reversed(model.kernels[c]):
            g = cuboid.spectral_unstack(G)
            f = np.matmul(g.transpose(1, 2, 0, 3), st.basis.transpose(0, 1, 3, 2)).transpose(2, 0, 1, 3)
            G = cuboid.assemble(cuboid.unflatten(f, st.block_dims))
        planes.append(G[..., 0])
    out = np.stack(planes, axis=-1)
    return out[0] if single else out
