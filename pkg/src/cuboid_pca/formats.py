"""ICCM (model) and ICCF (compressed image) binary formats.

All integers and floats are little-endian.

ICCM v1::

    b"ICCM" | u16 version | u32 CRC-32 of payload | payload
    payload:
      u8 channels | u32 stage count | per stage: u32 l_i, u32 l_j, u32 retained
      per channel, per stage, per block (row-major over the block grid):
        u32 V | u32 K | K x u32 selected indices
        V x f64 mean | K x f64 eigenvalues | V*K x f64 basis (column-major)
      classifier:
        u32 D | u32 M | M x (u32 byte length, UTF-8 label) | u32 N
        per class: u32 n_m, D x f64 mean
        D*D x f64 pooled covariance | M*D x f64 weights | M x f64 biases

    A model without a classifier stores D = M = N = 0 and nothing after.

ICCF v1::

    b"ICCF" | u16 version | u8 channels | u32 K^P
    per channel: f64 brightness gap, K^P x f64 coefficients
"""
from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .classifier import LdaModel
from .errors import BadMagic, ChecksumMismatch, FormatError, TruncatedFile, VersionUnsupported
from .pipeline import PipelineSpec, StageKernels, StageSpec, TransformModel, validate_spec
from .reconstruction import CompressedRecord

MODEL_MAGIC = b"ICCM"
RECORD_MAGIC = b"ICCF"
VERSION = 1


class _Reader:
    def __init__(self, buf: bytes, pos: int = 0):
        self.buf = buf
        self.pos = pos

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise TruncatedFile(f"needed {n} bytes at offset {self.pos}, file has {len(self.buf)}")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        size = struct.calcsize(fmt)
        return struct.unpack(fmt, self.take(size))

    def u8(self) -> int:
        return self.unpack("<B")[0]

    def u16(self) -> int:
        return self.unpack("<H")[0]

    def u32(self) -> int:
        return self.unpack("<I")[0]

    def f64(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)

    def u32s(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(4 * count), dtype="<u4").astype(np.int64)

    def done(self):
        if self.pos != len(self.buf):
            raise FormatError(f"{len(self.buf) - self.pos} trailing bytes")


def _f64(a) -> bytes:
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


def _u32(*vals) -> bytes:
    return struct.pack(f"<{len(vals)}I", *vals)


def encode_model(model: TransformModel, lda: LdaModel | None = None) -> bytes:
    spec = model.spec
    parts = [struct.pack("<B", spec.channels), _u32(len(spec.stages))]
    for s in spec.stages:
        parts.append(_u32(s.l_i, s.l_j, s.retained))
    for chain in model.kernels:
        for st in chain:
            for _, blk in st.blocks():
                V, K = blk.basis.shape
                parts.append(_u32(V, K))
                parts.append(np.ascontiguousarray(blk.selected_indices, dtype="<u4").tobytes())
                parts.append(_f64(blk.mean))
                parts.append(_f64(blk.eigenvalues))
                parts.append(_f64(blk.basis.T))
    if lda is None:
        parts.append(_u32(0, 0, 0))
    else:
        M, D = lda.means.shape
        parts.append(_u32(D, M))
        for label in lda.labels:
            raw = str(label).encode("utf-8")
            parts.append(_u32(len(raw)) + raw)
        parts.append(_u32(lda.n_total))
        for m in range(M):
            parts.append(_u32(int(lda.counts[m])) + _f64(lda.means[m]))
        parts += [_f64(lda.pooled_cov), _f64(lda.weights), _f64(lda.biases)]
    payload = b"".join(parts)
    return MODEL_MAGIC + struct.pack("<HI", VERSION, zlib.crc32(payload)) + payload


def _read_header(buf: bytes, magic: bytes) -> _Reader:
    r = _Reader(buf)
    if r.take(4) != magic:
        raise BadMagic(f"expected magic {magic!r}")
    version = r.u16()
    if version != VERSION:
        raise VersionUnsupported(f"version {version} (supported: {VERSION})")
    return r


def decode_model(buf: bytes) -> tuple[TransformModel, LdaModel | None]:
    r = _read_header(buf, MODEL_MAGIC)
    crc = r.u32()
    if zlib.crc32(buf[r.pos :]) != crc:
        # a short file is reported as truncation rather than as corruption
        _parse_model(_Reader(buf, r.pos))
        raise ChecksumMismatch("payload CRC-32 does not match header")
    return _parse_model(r)


def _parse_model(r: _Reader):
    channels = r.u8()
    stages = tuple(StageSpec(*r.unpack("<3I")) for _ in range(r.u32()))
    if not stages or any(min(s.l_i, s.l_j) == 0 for s in stages):
        raise FormatError("stored pipeline spec has no stages or a zero side length")
    I = int(np.prod([s.l_i for s in stages]))
    J = int(np.prod([s.l_j for s in stages]))
    spec = PipelineSpec((I, J), channels, stages)
    problems = validate_spec(spec)
    if problems:
        raise FormatError(f"stored pipeline spec is invalid: {problems[0]}")
    kernels = []
    for _ in range(channels):
        chain = []
        Ip, Jp, k = I, J, 1
        for s in stages:
            Ip, Jp = Ip // s.l_i, Jp // s.l_j
            V, K = s.l_i * s.l_j * k, s.retained
            nb = Ip * Jp
            if nb * (8 + 12 * K + 8 * V * (K + 1)) > len(r.buf) - r.pos:
                raise TruncatedFile("file too short for the kernels its spec declares")
            idx = np.empty((nb, K), dtype=np.int64)
            mean = np.empty((nb, V))
            eig = np.empty((nb, K))
            basis = np.empty((nb, V, K))
            for b in range(nb):
                if (r.u32(), r.u32()) != (V, K):
                    raise FormatError("block dims disagree with the stored pipeline spec")
                idx[b] = r.u32s(K)
                mean[b] = r.f64(V)
                eig[b] = r.f64(K)
                basis[b] = r.f64(V * K).reshape(K, V).T
            chain.append(
                StageKernels(
                    (s.l_i, s.l_j, k),
                    mean.reshape(Ip, Jp, V),
                    eig.reshape(Ip, Jp, K),
                    basis.reshape(Ip, Jp, V, K),
                    idx.reshape(Ip, Jp, K),
                )
            )
            k = K
        kernels.append(chain)
    model = TransformModel(spec, kernels)

    D, M = r.u32(), r.u32()
    labels = []
    for _ in range(M):
        try:
            labels.append(r.take(r.u32()).decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise FormatError(f"label is not UTF-8: {exc}") from None
    N = r.u32()
    if M == 0:
        r.done()
        return model, None
    counts = np.empty(M, dtype=np.int64)
    means = np.empty((M, D))
    for m in range(M):
        counts[m] = r.u32()
        means[m] = r.f64(D)
    pooled = r.f64(D * D).reshape(D, D)
    weights = r.f64(M * D).reshape(M, D)
    biases = r.f64(M)
    r.done()
    if counts.sum() != N:
        raise FormatError(f"class counts sum to {counts.sum()}, header says {N}")
    return model, LdaModel(tuple(labels), counts, means, pooled, weights, biases)


def save_model(path, model: TransformModel, lda: LdaModel | None = None) -> None:
    Path(path).write_bytes(encode_model(model, lda))


def load_model(path) -> tuple[TransformModel, LdaModel | None]:
    return decode_model(Path(path).read_bytes())


def encode_record(rec: CompressedRecord) -> bytes:
    C, K = rec.coefficients.shape
    parts = [RECORD_MAGIC, struct.pack("<HBI", VERSION, C, K)]
    for c in range(C):
        parts.append(_f64([rec.brightness[c]]))
        parts.append(_f64(rec.coefficients[c]))
    return b"".join(parts)


def decode_record(buf: bytes) -> CompressedRecord:
    r = _read_header(buf, RECORD_MAGIC)
    C = r.u8()
    K = r.u32()
    coeffs = np.empty((C, K))
    h = np.empty(C)
    for c in range(C):
        h[c] = r.f64(1)[0]
        coeffs[c] = r.f64(K)
    r.done()
    return CompressedRecord(coeffs, h)


def save_features(path, rec: CompressedRecord) -> None:
    Path(path).write_bytes(encode_record(rec))


def load_features(path) -> CompressedRecord:
    return decode_record(Path(path).read_bytes())
