"""Invertible multi-stage PCA features with a pooled-covariance MAP classifier."""
from .classifier import LdaModel, fit_lda, posterior, predict, score, top_k, topk_accuracy
from .pipeline import PipelineSpec, StageSpec, TransformModel, fit, forward, inverse, setting3, validate_spec
from .reconstruction import CompressedRecord, compress, compression_ratio, decompress, percent_deviation

__version__ = "0.1.0"
