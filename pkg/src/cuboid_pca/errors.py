"""Exception types raised across the package."""


class CuboidPCAError(Exception):
    """Base class for every error raised by this package."""


class DimMismatch(CuboidPCAError, ValueError):
    pass


class NonDivisibleSideLength(DimMismatch):
    pass


class InconsistentBlockDims(DimMismatch):
    pass


class LengthMismatch(DimMismatch):
    pass


class RaggedGrid(DimMismatch):
    pass


class TooFewSamples(CuboidPCAError, ValueError):
    pass


class KTooLarge(CuboidPCAError, ValueError):
    pass


class EigenFailure(CuboidPCAError, ArithmeticError):
    pass


class SpecInvalid(CuboidPCAError, ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class SingleClass(CuboidPCAError, ValueError):
    pass


class EmptyClass(CuboidPCAError, ValueError):
    pass


class KOutOfRange(CuboidPCAError, ValueError):
    pass


class GroupTooSmall(CuboidPCAError, ValueError):
    pass


class ManifestError(CuboidPCAError, ValueError):
    pass


class ParseError(ManifestError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicatePath(ParseError):
    pass


class DecodeError(CuboidPCAError, ValueError):
    pass


class UnsupportedFormat(DecodeError):
    pass


class FormatError(CuboidPCAError, ValueError):
    """Problems decoding an ICCM / ICCF binary file."""


class BadMagic(FormatError):
    pass


class VersionUnsupported(FormatError):
    pass


class ChecksumMismatch(FormatError):
    pass


class TruncatedFile(FormatError):
    pass


class IllConditioned(UserWarning):
    pass


class ZeroVarianceFeature(UserWarning):
    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"zero-variance feature columns: {self.columns}")
