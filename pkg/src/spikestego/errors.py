"""Exception hierarchy.

Every error carries an ``exit_code`` so the command-line front end can map
failures to distinct process exit statuses without a lookup table.
"""


class SpikeStegoError(Exception):
    exit_code = 1


class InvalidParamsError(SpikeStegoError, ValueError):
    exit_code = 2


class CharacterizationError(SpikeStegoError):
    """The current sweep did not produce the requested spike-count levels."""

    exit_code = 3


class PayloadTooLargeError(SpikeStegoError):
    exit_code = 4

    def __init__(self, message, required=None, available=None):
        super().__init__(message)
        self.required = required
        self.available = available


class CodebookMismatchError(SpikeStegoError):
    exit_code = 5


class CodebookError(SpikeStegoError):
    exit_code = 6


class InfeasibleCodebookError(CodebookError):
    def __init__(self, digit, used_remainders):
        used = sorted(used_remainders)
        super().__init__(
            f"digit {digit} has no spike with an unused nonzero remainder "
            f"(already used: {used})"
        )
        self.digit = digit
        self.used_remainders = used


class CodebookParseError(CodebookError):
    pass


class CodebookInvariantError(CodebookError):
    def __init__(self, violations):
        super().__init__("codebook violates invariants: " + "; ".join(violations))
        self.violations = list(violations)


class FormatError(SpikeStegoError):
    """Malformed or unsupported media/sidecar file."""

    exit_code = 7


class PNGDecodeError(FormatError):
    pass


class MissingAlphaError(FormatError):
    pass


class UnsupportedBitDepthError(FormatError):
    pass


class UnsupportedFormatError(FormatError):
    pass


class MalformedRiffError(FormatError):
    pass


class SidecarError(FormatError):
    pass


class CipherError(SpikeStegoError):
    exit_code = 8


class OutOfRangeError(CipherError, ValueError):
    pass


class LengthMismatchError(CipherError, ValueError):
    pass


class NoMatchError(CipherError):
    def __init__(self, message, sample_index=None):
        super().__init__(message)
        self.sample_index = sample_index


class CrossCheckError(CipherError):
    def __init__(self, message, sample_index=None):
        super().__init__(message)
        self.sample_index = sample_index


class VerificationError(SpikeStegoError):
    """Written output failed read-back verification."""

    exit_code = 9


class MetricsError(SpikeStegoError, ValueError):
    exit_code = 10


class DimensionMismatchError(MetricsError):
    pass


class ImageTooSmallError(MetricsError):
    pass
