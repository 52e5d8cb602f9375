"""Exception hierarchy for the fusion engine.

Every error carries a stable machine-readable ``code`` (what went wrong)
and, once it has crossed a pipeline boundary, the ``stage`` that raised
it. The HTTP facade and the CLI map these onto wire errors and exit codes
without string-matching messages.
"""
from __future__ import annotations


class ImgAnyError(Exception):
    """Base class for all engine errors."""

    code = "Internal"

    def __init__(self, message: str = "", *, code: str | None = None, stage: str | None = None):
        super().__init__(message or code or type(self).code)
        if code is not None:
            self.code = code
        self.stage = stage


class ValidationError(ImgAnyError):
    """Malformed request-level input: bad names, bad shapes, bad config."""

    code = "Validation"


# -- vector numerics ---------------------------------------------------------

class ZeroVectorError(ImgAnyError):
    code = "ZeroVector"


class NonFiniteError(ImgAnyError):
    code = "NonFinite"


class EmptyInputError(ImgAnyError):
    code = "EmptyInput"


class DimMismatchError(ImgAnyError):
    code = "DimMismatch"


# -- lexica and banks --------------------------------------------------------

class DuplicateWordError(ImgAnyError):
    code = "DuplicateWord"


class EmptyLexiconError(ImgAnyError):
    code = "EmptyLexicon"


class WrongKindError(ImgAnyError):
    code = "WrongKind"


class ParseError(ImgAnyError):
    """An input line or document could not be parsed; ``line`` is 1-based."""

    code = "ParseError"

    def __init__(self, message: str = "", *, line: int | None = None, stage: str | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, stage=stage)
        self.line = line


class BadMagicError(ImgAnyError):
    code = "BadMagic"


class TruncatedFileError(ImgAnyError):
    code = "TruncatedFile"


class VersionUnsupportedError(ImgAnyError):
    code = "VersionUnsupported"


class ChecksumMismatchError(ImgAnyError):
    code = "ChecksumMismatch"


# -- retrieval and fusion ----------------------------------------------------

class EmptyBankError(ImgAnyError):
    code = "EmptyBank"


class EmptyEntitySetError(ImgAnyError):
    code = "EmptyEntitySet"


class EmptyAttributeSetError(ImgAnyError):
    code = "EmptyAttributeSet"


class TagMismatchError(ImgAnyError):
    code = "TagMismatch"


class DuplicateModalityError(ImgAnyError):
    code = "DuplicateModality"


class NoBranchesError(ImgAnyError):
    code = "NoBranches"


# -- remote backends ---------------------------------------------------------

class TransportError(ImgAnyError):
    code = "Transport"


class BadStatusError(ImgAnyError):
    code = "BadStatus"

    def __init__(self, message: str = "", *, status: int | None = None, stage: str | None = None):
        super().__init__(message, stage=stage)
        self.status = status


class NotPngError(ImgAnyError):
    code = "NotPng"
